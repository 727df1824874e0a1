use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federated::{ModelWorker, Worker};
use crate::models::GaussianModel;
use crate::potential::{Potential, PriorShare};
use crate::rng::{exp1, server_stream, worker_stream};
use crate::samplers::SamplerSpec;
use crate::scalar::{from_usize, Real};

/// Prior shares `α_m` on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorWeights<T> {
    pub alpha: Vec<T>,
}

impl<T: Real> PriorWeights<T> {
    pub fn new(alpha: Vec<T>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::EmptyInput("prior weights"));
        }
        if alpha.iter().any(|&a| !(a >= T::zero())) {
            return Err(Error::invalid("prior weights must be nonnegative"));
        }
        let s: T = alpha.iter().copied().sum();
        if (s - T::one()).abs() > T::epsilon() * from_usize(4 * alpha.len()) {
            return Err(Error::invalid("prior weights must sum to one"));
        }
        Ok(Self { alpha })
    }
}

/// Symmetric Dirichlet(1) draw: normalised independent `Exp(1)` variables.
pub fn resample_prior_weights<T: Real, R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<PriorWeights<T>> {
    if m == 0 {
        return Err(Error::invalid("M must be ≥ 1"));
    }
    if m == 1 {
        return Ok(PriorWeights { alpha: vec![T::one()] });
    }
    let e: Vec<T> = (0..m).map(|_| exp1(rng)).collect();
    let s: T = e.iter().copied().sum();
    let mut alpha: Vec<T> = e.into_iter().map(|x| x / s).collect();
    // absorb rounding so the weights sum to one
    let rest: T = alpha[1..].iter().copied().sum();
    alpha[0] = (T::one() - rest).max(T::zero());
    Ok(PriorWeights { alpha })
}

/// Where the prior potential `U₀` lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode<T> {
    /// The coordinator proposes prior events itself (proposer id 0).
    ServerHeld,
    /// Worker `m` adds `(n_m/N) U₀` to its slice.
    ProportionalSplit,
    /// A dedicated worker `M + 1` holds `U₀`.
    ExtraWorker,
    /// Workers hold `α_m U₀` with `α` resampled at rate `lambda_redist`.
    DynamicRedistribution { lambda_redist: T },
}

impl<T: Real> PriorMode<T> {
    pub fn redistribution_rate(&self) -> Option<T> {
        match *self {
            PriorMode::DynamicRedistribution { lambda_redist } => Some(lambda_redist),
            _ => None,
        }
    }
}

/// Run-level settings shared by the coordinator and the worker builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig<T> {
    pub workers: usize,
    pub prior_mode: PriorMode<T>,
    /// Constant refreshment rate `ρ` added by every data-holding worker.
    pub refresh_rate: T,
    pub horizon: T,
    pub seed: u64,
}

impl<T: Real> FederationConfig<T> {
    pub fn new(workers: usize, horizon: T, seed: u64) -> Self {
        Self { workers, prior_mode: PriorMode::ServerHeld, refresh_rate: T::zero(), horizon, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::invalid("M must be ≥ 1"));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive and finite"));
        }
        if !(self.refresh_rate >= T::zero()) {
            return Err(Error::invalid("refresh rate must be nonnegative"));
        }
        if let PriorMode::DynamicRedistribution { lambda_redist } = self.prior_mode {
            if !(lambda_redist > T::zero()) {
                return Err(Error::invalid("lambda_redist must be positive"));
            }
        }
        Ok(())
    }
}

/// Builds the proposers for `M` likelihood slices (worker ids `1..=M`) and
/// an optional Gaussian prior placed according to `config.prior_mode`.
///
/// `sizes[m]` is the number of observations of slice `m`, used for the
/// proportional split. Prior-only proposers do not add refreshment.
pub fn assemble_workers<T, L>(
    likelihoods: Vec<L>,
    sizes: &[usize],
    prior: Option<Arc<GaussianModel<T>>>,
    config: &FederationConfig<T>,
    spec: &SamplerSpec<T>,
) -> Result<Vec<Box<dyn Worker<T>>>>
where
    T: Real,
    L: Potential<T> + 'static,
{
    config.validate()?;
    let m = likelihoods.len();
    if m != config.workers || sizes.len() != m {
        return Err(Error::invalid(format!("expected {} worker slices, got {m}", config.workers)));
    }
    let total: usize = sizes.iter().sum();
    let worker_spec = spec.clone().with_refresh(config.refresh_rate);
    let prior_spec = spec.clone().with_refresh(T::zero());
    let mut out: Vec<Box<dyn Worker<T>>> = Vec::with_capacity(m + 1);

    let share = |l: L, w: T| match &prior {
        Some(p) => PriorShare::new(l, p.clone(), w),
        None => PriorShare::without_prior(l),
    };
    let one_over_m = T::one() / from_usize(m);
    for (i, l) in likelihoods.into_iter().enumerate() {
        let id = i + 1;
        let potential = match config.prior_mode {
            PriorMode::ServerHeld | PriorMode::ExtraWorker => PriorShare::without_prior(l),
            PriorMode::ProportionalSplit => {
                if total == 0 {
                    return Err(Error::invalid("proportional split needs observations"));
                }
                share(l, from_usize::<T>(sizes[i]) / from_usize(total))
            }
            PriorMode::DynamicRedistribution { .. } => share(l, one_over_m),
        };
        out.push(Box::new(ModelWorker::new(id, potential, worker_spec.clone(), config.seed)));
    }
    if let Some(p) = prior {
        match config.prior_mode {
            PriorMode::ServerHeld => {
                out.insert(0, Box::new(ModelWorker::with_rng(0, p, prior_spec, server_stream(config.seed))));
            }
            PriorMode::ExtraWorker => {
                let id = m + 1;
                out.push(Box::new(ModelWorker::with_rng(id, p, prior_spec, worker_stream(config.seed, id))));
            }
            PriorMode::ProportionalSplit | PriorMode::DynamicRedistribution { .. } => {}
        }
    }
    Ok(out)
}
