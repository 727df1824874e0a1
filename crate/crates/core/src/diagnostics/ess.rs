use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why an ESS value needs a second look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EssFlag {
    /// The series is constant; the reported ESS is 0.
    Constant,
    /// Negative autocorrelation pushed the estimate above `2n`.
    Antithetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssEstimate {
    pub ess: f64,
    /// Integrated autocorrelation time `n / ess`.
    pub tau: f64,
    pub flag: Option<EssFlag>,
}

/// Effective sample size with Geyer's initial positive sequence, made
/// monotone. The autocorrelation time is floored at `1 / log10(n)` so an
/// alternating series gives a large but finite value.
pub fn ess(samples: &[f64]) -> Result<EssEstimate> {
    let n = samples.len();
    if n < 10 {
        return Err(Error::invalid(format!("ESS needs at least 10 samples, got {n}")));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = samples.iter().map(|&s| s - mean).collect();
    let var = centered.iter().map(|c| c * c).sum::<f64>() / nf;
    if !(var > 0.0) {
        return Ok(EssEstimate { ess: 0.0, tau: f64::INFINITY, flag: Some(EssFlag::Constant) });
    }
    let rho = |lag: usize| -> f64 {
        let s: f64 = centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum();
        s / nf / var
    };

    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = if k == 0 { 1.0 + rho(1) } else { rho(2 * k) + rho(2 * k + 1) };
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / nf.log10());
    let ess = nf / tau;
    let flag = (ess > 2.0 * nf).then_some(EssFlag::Antithetic);
    Ok(EssEstimate { ess, tau, flag })
}
