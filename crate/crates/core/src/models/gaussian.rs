use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, is_symmetric, norm_inf};
use crate::potential::{MatrixNorm, Potential};
use crate::scalar::{from_usize, lit, Real};

/// `U(x) = ½(x − μ)ᵀP(x − μ)`.
///
/// Used for the Gaussian benchmark slices, for standard normal priors and
/// for the Cox prior. `cost` is the number of data points a partial
/// derivative stands for (1 for a prior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel<T> {
    pub mu: Vec<T>,
    /// Row-major `d × d`.
    pub precision: Vec<T>,
    cost: u64,
    /// `‖P‖₂` (upper bound) and `‖P‖_∞`.
    norms: (T, T),
}

impl<T: Real> GaussianModel<T> {
    pub fn new(mu: Vec<T>, precision: Vec<T>) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::EmptyInput("mean vector"));
        }
        if precision.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: precision.len() });
        }
        if !is_symmetric(&precision, d, lit(1e-12)) {
            return Err(Error::invalid("precision matrix must be symmetric"));
        }
        cholesky(&precision, d)?;
        let inf = norm_inf(&precision, d);
        let frob = precision.iter().map(|&p| p * p).sum::<T>().sqrt();
        Ok(Self { mu, precision, cost: 1, norms: (inf.min(frob), inf) })
    }

    /// `N(0, I)` prior.
    pub fn standard(d: usize) -> Self {
        Self::isotropic(vec![T::zero(); d], T::one())
    }

    /// `P = p I`.
    pub fn isotropic(mu: Vec<T>, p: T) -> Self {
        let d = mu.len();
        let mut precision = vec![T::zero(); d * d];
        for i in 0..d {
            precision[i * d + i] = p;
        }
        Self { mu, precision, cost: 1, norms: (p.abs(), p.abs()) }
    }

    /// Likelihood slice of `n` observations `y_i ~ N(x, α² I)` under a flat
    /// prior: `μ = ȳ`, `P = n/α² · I`.
    pub fn from_observations(ys: &[Vec<T>], noise_scale: T) -> Result<Self> {
        let Some(first) = ys.first() else {
            return Err(Error::EmptyInput("observations"));
        };
        let d = first.len();
        let mut mean = vec![T::zero(); d];
        for y in ys {
            if y.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: y.len() });
            }
            for (m, &v) in mean.iter_mut().zip(y) {
                *m += v;
            }
        }
        let n = from_usize::<T>(ys.len());
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(Self::isotropic(mean, n / (noise_scale * noise_scale)).with_cost(ys.len() as u64))
    }

    pub fn with_cost(mut self, cost: u64) -> Self {
        self.cost = cost;
        self
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    fn row(&self, k: usize) -> &[T] {
        let d = self.dim();
        &self.precision[k * d..(k + 1) * d]
    }
}

/// `(b, a)` with `λ_k(x + tv, v) = (b + a t)_+` exactly.
pub fn gaussian_rate_coeffs<T: Real>(model: &GaussianModel<T>, x: &[T], v: &[T], k: usize) -> (T, T) {
    let (g, s) = model.affine_partial(x, v, k).expect("Gaussian partials are affine");
    (v[k] * g, v[k] * s)
}

impl<T: Real> Potential<T> for GaussianModel<T> {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn value(&self, x: &[T]) -> T {
        let d = self.dim();
        let r: Vec<T> = x.iter().zip(&self.mu).map(|(&a, &b)| a - b).collect();
        let mut u = T::zero();
        for i in 0..d {
            let row = self.row(i);
            u += r[i] * row.iter().zip(&r).map(|(&p, &ri)| p * ri).sum::<T>();
        }
        u * lit(0.5)
    }

    fn partial(&self, x: &[T], k: usize) -> T {
        self.row(k).iter().zip(x.iter().zip(&self.mu)).map(|(&p, (&xi, &mi))| p * (xi - mi)).sum()
    }

    fn partial_cost(&self) -> u64 {
        self.cost
    }

    fn depends_on(&self, k: usize) -> bool {
        self.row(k).iter().any(|&p| p != T::zero())
    }

    fn hessian_bound(&self, norm: MatrixNorm) -> Option<T> {
        Some(match norm {
            MatrixNorm::Spectral => self.norms.0,
            MatrixNorm::Inf => self.norms.1,
        })
    }

    fn affine_partial(&self, x: &[T], v: &[T], k: usize) -> Option<(T, T)> {
        let row = self.row(k);
        let mut g = T::zero();
        let mut s = T::zero();
        for i in 0..row.len() {
            g += row[i] * (x[i] - self.mu[i]);
            s += row[i] * v[i];
        }
        Some((g, s))
    }
}
