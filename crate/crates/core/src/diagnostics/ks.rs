use crate::error::{Error, Result};

/// Kolmogorov survival function `P(K > λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a KS distance `d` at effective sample size `n`
/// (Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// `sup_x |F_n(x) − F(x)|`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    Ok(s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max))
}

/// `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Two-sample KS test on possibly autocorrelated samples: the sample sizes
/// in the p-value are replaced by effective sample sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub effective_n: f64,
    pub pvalue: f64,
}

impl KsTest {
    pub fn passes(&self, level: f64) -> bool {
        self.pvalue >= level
    }
}

pub fn ks_two_sample_test(a: &[f64], b: &[f64], ess_a: f64, ess_b: f64) -> Result<KsTest> {
    let statistic = ks_two_sample(a, b)?;
    let ea = ess_a.min(a.len() as f64);
    let eb = ess_b.min(b.len() as f64);
    if !(ea > 0.0 && eb > 0.0) {
        return Err(Error::invalid("effective sample sizes must be positive"));
    }
    let effective_n = ea * eb / (ea + eb);
    Ok(KsTest { statistic, effective_n, pvalue: ks_pvalue(statistic, effective_n) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_values() {
        // standard critical values of the Kolmogorov distribution
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn statistics() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[0.0, 1.0, 2.0, 3.0], &[0.5, 1.5]).unwrap() - 0.5).abs() < 1e-15);
        let d = ks_one_sample(&[0.5], |x| x).unwrap();
        assert_eq!(d, 0.5);
    }
}
