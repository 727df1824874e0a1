//! Run diagnostics: switching rate, effective sample size, marginal
//! Wasserstein distances, KS tests and a reference Metropolis sampler.

mod ess;
mod ks;
mod reference;
mod survival;
mod wasserstein;

use serde::{Deserialize, Serialize};

pub use ess::{ess, EssEstimate, EssFlag};
pub use ks::{kolmogorov_survival, ks_one_sample, ks_pvalue, ks_two_sample, ks_two_sample_test, KsTest};
pub use reference::{reference_mh_sample, MhChain, MhConfig};
pub use survival::{event_time_ks, IntegratedRate};
pub use wasserstein::wasserstein1_marginal;

use crate::error::{Error, Result};
use crate::federated::{EvalCounts, FederatedRun};
use crate::pdmp::{PhaseState, Skeleton};
use crate::scalar::{to_f64, Real};

/// Velocity events per unit of process time. Redistribution epochs are not
/// in the skeleton, so they never count.
pub fn effective_switching_rate<T: Real>(skeleton: &Skeleton<T>) -> Result<f64> {
    let h = to_f64(skeleton.horizon);
    if !(h > 0.0) {
        return Err(Error::invalid("switching rate needs a positive horizon"));
    }
    Ok(skeleton.event_count() as f64 / h)
}

pub fn gradient_eval_counter<T: Real>(run: &FederatedRun<T>) -> EvalCounts {
    run.evals
}

/// Column `k` of discretized states, as `f64`.
pub fn marginals<T: Real>(states: &[PhaseState<T>]) -> Vec<Vec<f64>> {
    let d = states.first().map_or(0, |s| s.x.len());
    (0..d).map(|k| states.iter().map(|s| to_f64(s.x[k])).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssPerEval {
    pub sequential: Vec<f64>,
    pub parallel: Vec<f64>,
}

/// Per-run summary written to `diagnostics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub event_rate: f64,
    pub ess_per_coordinate: Vec<f64>,
    /// ESS per full-gradient equivalent, where one full gradient costs
    /// `N · d` per-datum partial derivatives.
    pub ess_per_gradient_eval: EssPerEval,
    /// Empty when no reference sample was given.
    pub w1_per_coordinate: Vec<f64>,
    pub gradient_evals_total: u64,
    pub wall_metadata: serde_json::Value,
}

impl DiagnosticsReport {
    /// `samples[k]` is the discretized marginal `k`. ESS values above the
    /// sample count are capped at it.
    pub fn build<T: Real>(
        skeleton: &Skeleton<T>,
        samples: &[Vec<f64>],
        evals: EvalCounts,
        full_gradient_cost: u64,
        reference: Option<&[Vec<f64>]>,
        wall_metadata: serde_json::Value,
    ) -> Result<Self> {
        let event_rate = effective_switching_rate(skeleton)?;
        let mut ess_k = Vec::with_capacity(samples.len());
        for col in samples {
            ess_k.push(ess(col)?.ess.min(col.len() as f64));
        }
        let per = |count: u64| -> Vec<f64> {
            let grads = count as f64 / full_gradient_cost.max(1) as f64;
            ess_k.iter().map(|&e| if grads > 0.0 { e / grads } else { 0.0 }).collect()
        };
        let ess_per_gradient_eval = EssPerEval { sequential: per(evals.sequential), parallel: per(evals.parallel) };
        let w1_per_coordinate = match reference {
            Some(r) => {
                if r.len() != samples.len() {
                    return Err(Error::DimensionMismatch { expected: samples.len(), got: r.len() });
                }
                samples.iter().zip(r).map(|(a, b)| wasserstein1_marginal(a, b)).collect::<Result<_>>()?
            }
            None => Vec::new(),
        };
        Ok(Self {
            event_rate,
            ess_per_coordinate: ess_k,
            ess_per_gradient_eval,
            w1_per_coordinate,
            gradient_evals_total: evals.sequential,
            wall_metadata,
        })
    }
}
