use crate::error::{Error, Result};

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Empirical quantile `Q(u) = s[⌊u n⌋]` of sorted data.
fn quantile(s: &[f64], u: f64) -> f64 {
    let i = ((u * s.len() as f64) as usize).min(s.len() - 1);
    s[i]
}

/// `W₁` between two empirical marginals: mean absolute difference of their
/// quantiles at the midpoints of `max(|a|, |b|)` equal cells of `(0, 1)`.
/// Exact when the sizes are equal.
pub fn wasserstein1_marginal(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    if sa.len() == sb.len() {
        return Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / sa.len() as f64);
    }
    let k = sa.len().max(sb.len());
    let total: f64 = (0..k)
        .map(|i| {
            let u = (i as f64 + 0.5) / k as f64;
            (quantile(&sa, u) - quantile(&sb, u)).abs()
        })
        .sum();
    Ok(total / k as f64)
}
