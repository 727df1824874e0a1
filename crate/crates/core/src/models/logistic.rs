use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::GaussianModel;
use crate::potential::{MatrixNorm, Potential, PriorShare};
use crate::scalar::{from_usize, lit, norm1, norm_inf, Real};

#[inline]
pub(crate) fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn log1p_exp<T: Real>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// One worker's observations: covariates `ξ_i` (first entry 1) and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticData<T> {
    pub dim: usize,
    /// Row-major `n × d`.
    pub xi: Vec<T>,
    pub eta: Vec<T>,
}

impl<T: Real> LogisticData<T> {
    pub fn new(dim: usize, xi: Vec<T>, eta: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("covariate dimension must be positive"));
        }
        if xi.len() != eta.len() * dim {
            return Err(Error::DimensionMismatch { expected: eta.len() * dim, got: xi.len() });
        }
        if eta.iter().any(|&e| e != T::zero() && e != T::one()) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        Ok(Self { dim, xi, eta })
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.xi[i * self.dim..(i + 1) * self.dim]
    }
}

/// Negative log-likelihood of one worker's observations, without prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticLikelihood<T> {
    pub data: LogisticData<T>,
    h_spectral: T,
    h_inf: T,
}

impl<T: Real> LogisticLikelihood<T> {
    pub fn new(data: LogisticData<T>) -> Self {
        let quarter = lit::<T>(0.25);
        let mut h_spectral = T::zero();
        let mut h_inf = T::zero();
        for i in 0..data.len() {
            let r = data.row(i);
            // ‖ξξᵀ‖₂ = ‖ξ‖², ‖ξξᵀ‖_∞ = ‖ξ‖_∞ ‖ξ‖₁
            h_spectral += quarter * r.iter().map(|&c| c * c).sum::<T>();
            h_inf += quarter * norm_inf(r) * norm1(r);
        }
        Self { data, h_spectral, h_inf }
    }

    #[inline]
    fn residual(&self, x: &[T], i: usize) -> T {
        let z: T = self.data.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum();
        sigmoid(z) - self.data.eta[i]
    }
}

impl<T: Real> Potential<T> for LogisticLikelihood<T> {
    fn dim(&self) -> usize {
        self.data.dim
    }

    fn value(&self, x: &[T]) -> T {
        (0..self.data.len())
            .map(|i| {
                let z: T = self.data.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum();
                log1p_exp(z) - self.data.eta[i] * z
            })
            .sum()
    }

    fn partial(&self, x: &[T], k: usize) -> T {
        (0..self.data.len()).map(|i| self.data.xi[i * self.data.dim + k] * self.residual(x, i)).sum()
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|g| *g = T::zero());
        for i in 0..self.data.len() {
            let r = self.residual(x, i);
            for (g, &c) in out.iter_mut().zip(self.data.row(i)) {
                *g += c * r;
            }
        }
    }

    fn partial_cost(&self) -> u64 {
        self.data.len() as u64
    }

    fn depends_on(&self, k: usize) -> bool {
        (0..self.data.len()).any(|i| self.data.xi[i * self.data.dim + k] != T::zero())
    }

    fn hessian_bound(&self, norm: MatrixNorm) -> Option<T> {
        Some(match norm {
            MatrixNorm::Spectral => self.h_spectral,
            MatrixNorm::Inf => self.h_inf,
        })
    }
}

/// Bayesian logistic regression with a standard normal prior, data split
/// across workers.
#[derive(Debug, Clone)]
pub struct LogisticModel<T> {
    pub slices: Vec<Arc<LogisticLikelihood<T>>>,
    pub prior: Arc<GaussianModel<T>>,
}

impl<T: Real> LogisticModel<T> {
    pub fn new(slices: Vec<LogisticData<T>>) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::EmptyInput("worker slices"));
        };
        let d = first.dim;
        if slices.iter().any(|s| s.dim != d) {
            return Err(Error::Data("covariate dimension differs between workers".into()));
        }
        Ok(Self {
            slices: slices.into_iter().map(|s| Arc::new(LogisticLikelihood::new(s))).collect(),
            prior: Arc::new(GaussianModel::standard(d)),
        })
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn workers(&self) -> usize {
        self.slices.len()
    }

    pub fn total_observations(&self) -> usize {
        self.slices.iter().map(|s| s.data.len()).sum()
    }

    /// `n_m / N` for slice `m` (zero-based).
    pub fn fraction(&self, m: usize) -> T {
        from_usize::<T>(self.slices[m].data.len()) / from_usize(self.total_observations())
    }

    /// `U_m = (n_m/N) U₀ + likelihood of slice m`.
    pub fn worker_potential(&self, m: usize) -> PriorShare<T, Arc<LogisticLikelihood<T>>> {
        PriorShare::new(self.slices[m].clone(), self.prior.clone(), self.fraction(m))
    }

    /// Likelihood slice with a prior share of weight `w`.
    pub fn worker_potential_weighted(&self, m: usize, w: T) -> PriorShare<T, Arc<LogisticLikelihood<T>>> {
        PriorShare::new(self.slices[m].clone(), self.prior.clone(), w)
    }

    /// The full posterior potential.
    pub fn full_potential(&self) -> crate::potential::SumPotential<T> {
        let mut parts: Vec<Arc<dyn Potential<T>>> = vec![self.prior.clone()];
        for s in &self.slices {
            parts.push(s.clone());
        }
        crate::potential::SumPotential::new(parts)
    }
}

/// `∂_k U_m(x)` including the worker's prior fraction.
pub fn logistic_partial<T: Real>(model: &LogisticModel<T>, m: usize, x: &[T], k: usize) -> Result<T> {
    check_slice(model, m)?;
    check_coordinate(model.dim(), k)?;
    Ok(model.worker_potential(m).partial(x, k))
}

/// `n_m/N ‖∇²U₀‖_p + ¼ Σ ‖ξ_i ξ_iᵀ‖_p`.
pub fn logistic_hessian_bound<T: Real>(model: &LogisticModel<T>, m: usize, norm: MatrixNorm) -> Result<T> {
    check_slice(model, m)?;
    Ok(model.worker_potential(m).hessian_bound(norm).expect("logistic slices carry Hessian bounds"))
}

fn check_slice<T: Real>(model: &LogisticModel<T>, m: usize) -> Result<()> {
    if m >= model.workers() {
        return Err(Error::IndexOutOfRange { index: m, dim: model.workers() });
    }
    Ok(())
}

fn check_coordinate(d: usize, k: usize) -> Result<()> {
    if k >= d {
        return Err(Error::IndexOutOfRange { index: k, dim: d });
    }
    Ok(())
}
