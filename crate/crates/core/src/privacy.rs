//! Differential-privacy budget arithmetic for the refreshment floor.
//!
//! A worker whose event rate is bounded below by `ρ` releases a proposed
//! switching time that is `(ε, δ)`-indistinguishable between adjacent
//! datasets whose rates differ by at most `K`. This module only computes
//! the numbers; the floor itself is the per-worker refreshment rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub sensitivity: f64,
    pub rho: f64,
}

impl PrivacyBudget {
    /// The smallest floor meeting `(ε, δ)` for sensitivity `K`.
    pub fn for_target(epsilon: f64, delta: f64, sensitivity: f64) -> Result<Self> {
        let rho = min_refreshment_rate(epsilon, delta, sensitivity)?;
        Ok(Self { epsilon, delta, sensitivity, rho })
    }

    /// `ε > log(1 + K/ρ)`, or trivially true when `K = 0`.
    pub fn is_feasible(&self) -> bool {
        self.sensitivity == 0.0 || (self.rho > 0.0 && self.epsilon > (self.sensitivity / self.rho).ln_1p())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon must be positive"));
    }
    Ok(())
}

fn check_sensitivity(k: f64) -> Result<()> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid("sensitivity K must be nonnegative"));
    }
    Ok(())
}

/// `ρ = K (1 + log(1/δ)) / ε`.
pub fn min_refreshment_rate(epsilon: f64, delta: f64, sensitivity: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_sensitivity(sensitivity)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    Ok(sensitivity * (1.0 - delta.ln()) / epsilon)
}

/// `δ = exp(−(ρ/K)(ε − log(1 + K/ρ)))`; `0` when `K = 0`.
pub fn achieved_delta(rho: f64, sensitivity: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_sensitivity(sensitivity)?;
    if sensitivity == 0.0 {
        return Ok(0.0);
    }
    if !(rho > 0.0) {
        return Err(Error::invalid("rho must be positive when K > 0"));
    }
    let threshold = (sensitivity / rho).ln_1p();
    if epsilon <= threshold {
        return Err(Error::InfeasibleEpsilon { epsilon, threshold });
    }
    Ok((-(rho / sensitivity) * (epsilon - threshold)).exp())
}

/// `K = K_ξ ‖v‖`: flipping one label changes a logistic Zig-Zag rate by at
/// most `|⟨ξ, v⟩|`.
pub fn logistic_sensitivity(covariate_bound: f64, velocity_norm: f64) -> Result<f64> {
    if !(covariate_bound >= 0.0) {
        return Err(Error::invalid("covariate bound must be nonnegative"));
    }
    if !(velocity_norm > 0.0) {
        return Err(Error::invalid("velocity norm must be positive"));
    }
    Ok(covariate_bound * velocity_norm)
}

/// Largest density ratio, in either direction, between first arrivals of
/// the constant rates `ρ` and `ρ + K` at time `t`.
pub fn constant_rate_density_ratio(rho: f64, sensitivity: f64, t: f64) -> f64 {
    let up = (rho + sensitivity) / rho * (-sensitivity * t).exp();
    let down = rho / (rho + sensitivity) * (sensitivity * t).exp();
    up.max(down)
}

/// `γ e^{K t}` with `γ = 1 + K/ρ`, which dominates the ratio above.
pub fn density_ratio_bound(rho: f64, sensitivity: f64, t: f64) -> f64 {
    (1.0 + sensitivity / rho) * (sensitivity * t).exp()
}

/// `t₀ = (ε − log(1 + K/ρ))/K`, the window on which the ratio stays below `e^ε`.
pub fn indistinguishability_window(rho: f64, sensitivity: f64, epsilon: f64) -> f64 {
    (epsilon - (sensitivity / rho).ln_1p()) / sensitivity
}
