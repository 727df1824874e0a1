use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, is_symmetric, lower_mul, mat_vec};
use crate::rng::{sign, std_normal};
use crate::scalar::{dot, lit, Real};

/// Negates coordinate `i` (zero-based) of `v`.
pub fn zigzag_flip<T: Real>(v: &[T], i: usize) -> Result<Vec<T>> {
    if i >= v.len() {
        return Err(Error::IndexOutOfRange { index: i, dim: v.len() });
    }
    let mut out = v.to_vec();
    out[i] = -out[i];
    Ok(out)
}

/// Reflects `v` off the level set of `U`: `v − 2⟨v,g⟩/(gᵀΣg) Σg`.
///
/// `sigma` is a row-major `d × d` matrix; `None` means the identity.
pub fn bps_reflect<T: Real>(v: &[T], grad: &[T], sigma: Option<&[T]>) -> Result<Vec<T>> {
    let d = v.len();
    if grad.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: grad.len() });
    }
    if let Some(s) = sigma {
        if s.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: s.len() });
        }
    }
    if grad.iter().all(|&g| g == T::zero()) {
        return Err(Error::ZeroGradient);
    }
    let sg = match sigma {
        Some(s) => mat_vec(s, grad),
        None => grad.to_vec(),
    };
    let denom = dot(grad, &sg);
    if !(denom > T::zero()) {
        return Err(Error::ZeroGradient);
    }
    let coef = lit::<T>(2.0) * dot(v, grad) / denom;
    Ok(v.iter().zip(&sg).map(|(&vi, &si)| vi - coef * si).collect())
}

/// The velocity distribution `ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VelocityDist<T> {
    /// Uniform on `{−1, +1}^d`.
    UniformSigns { dim: usize },
    /// `N(0, Σ)`, stored through the lower Cholesky factor of `Σ`.
    Gaussian { dim: usize, chol: Option<Vec<T>> },
}

impl<T: Real> VelocityDist<T> {
    pub fn standard_gaussian(dim: usize) -> Self {
        VelocityDist::Gaussian { dim, chol: None }
    }

    pub fn gaussian(sigma: &[T], dim: usize) -> Result<Self> {
        if sigma.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: sigma.len() });
        }
        if !is_symmetric(sigma, dim, lit(1e-12)) {
            return Err(Error::invalid("velocity covariance must be symmetric"));
        }
        Ok(VelocityDist::Gaussian { dim, chol: Some(cholesky(sigma, dim)?) })
    }

    pub fn dim(&self) -> usize {
        match self {
            VelocityDist::UniformSigns { dim } | VelocityDist::Gaussian { dim, .. } => *dim,
        }
    }
}

/// Independent draw from `ν`.
pub fn refresh_velocity<T: Real, R: Rng + ?Sized>(nu: &VelocityDist<T>, rng: &mut R) -> Vec<T> {
    match nu {
        VelocityDist::UniformSigns { dim } => (0..*dim).map(|_| sign(rng)).collect(),
        VelocityDist::Gaussian { dim, chol } => {
            let z: Vec<T> = (0..*dim).map(|_| std_normal(rng)).collect();
            match chol {
                Some(l) => lower_mul(l, &z),
                None => z,
            }
        }
    }
}
