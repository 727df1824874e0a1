use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{MatrixNorm, Potential};
use crate::scalar::{lit, Real};

/// `h(z) = ((ν+1)/2) log(1 + z²/ν)`, the Student-t negative log density up
/// to a constant.
pub fn student_h<T: Real>(z: T, nu: T) -> T {
    (nu + T::one()) * lit(0.5) * (z * z / nu).ln_1p()
}

pub fn student_h1<T: Real>(z: T, nu: T) -> T {
    (nu + T::one()) * z / (nu + z * z)
}

pub fn student_h2<T: Real>(z: T, nu: T) -> T {
    let s = nu + z * z;
    (nu + T::one()) * (nu - z * z) / (s * s)
}

/// `sup |h″| = (ν+1)/ν`, attained at `z = 0`.
pub fn student_h2_bound<T: Real>(nu: T) -> T {
    (nu + T::one()) / nu
}

/// `sup |h′| = (ν+1)/(2√ν)`, attained at `z = ±√ν`.
pub fn student_h1_bound<T: Real>(nu: T) -> T {
    (nu + T::one()) / (lit::<T>(2.0) * nu.sqrt())
}

/// AR(1) with Student-t innovations, `Y_k = c + x Y_{k−1} + ε_k`, flat
/// prior, parameter vector `(x, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar1Model<T> {
    /// Each trajectory is `y_0, …, y_K`.
    pub trajectories: Vec<Vec<T>>,
    pub nu: T,
    h_spectral: T,
    h_inf: T,
    terms: u64,
}

impl<T: Real> Ar1Model<T> {
    pub fn new(trajectories: Vec<Vec<T>>, nu: T) -> Result<Self> {
        if !(nu > T::zero()) {
            return Err(Error::invalid("degrees of freedom must be positive"));
        }
        if trajectories.iter().any(|y| y.len() < 2) {
            return Err(Error::Data("each trajectory needs y_0 and at least one step".into()));
        }
        let c = student_h2_bound(nu);
        let mut h_spectral = T::zero();
        let mut h_inf = T::zero();
        let mut terms = 0u64;
        for y in &trajectories {
            for &prev in &y[..y.len() - 1] {
                // [[y², y], [y, 1]] has spectral norm 1 + y² and row sums y² + |y|, |y| + 1
                h_spectral += c * (T::one() + prev * prev);
                h_inf += c * (prev.abs() + T::one()) * prev.abs().max(T::one());
                terms += 1;
            }
        }
        Ok(Self { trajectories, nu, h_spectral, h_inf, terms })
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    fn for_each_residual(&self, p: &[T], mut f: impl FnMut(T, T)) {
        for y in &self.trajectories {
            for w in y.windows(2) {
                f(p[0] * w[0] + p[1] - w[1], w[0]);
            }
        }
    }
}

/// `(∂U/∂x, ∂U/∂c)` summed over the model's terms.
pub fn ar1_partials<T: Real>(model: &Ar1Model<T>, x: T, c: T) -> (T, T) {
    let mut g = (T::zero(), T::zero());
    model.for_each_residual(&[x, c], |z, prev| {
        let h1 = student_h1(z, model.nu);
        g.0 += h1 * prev;
        g.1 += h1;
    });
    g
}

/// `((ν+1)/ν) Σ (1 + y_{k−1}²)`.
pub fn ar1_hessian_bound<T: Real>(model: &Ar1Model<T>) -> T {
    model.h_spectral
}

impl<T: Real> Potential<T> for Ar1Model<T> {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, p: &[T]) -> T {
        let mut u = T::zero();
        self.for_each_residual(p, |z, _| u += student_h(z, self.nu));
        u
    }

    fn partial(&self, p: &[T], k: usize) -> T {
        let mut g = T::zero();
        self.for_each_residual(p, |z, prev| {
            let h1 = student_h1(z, self.nu);
            g += if k == 0 { h1 * prev } else { h1 };
        });
        g
    }

    fn gradient(&self, p: &[T], out: &mut [T]) {
        let (gx, gc) = ar1_partials(self, p[0], p[1]);
        out[0] = gx;
        out[1] = gc;
    }

    fn partial_cost(&self) -> u64 {
        self.terms
    }

    fn depends_on(&self, _k: usize) -> bool {
        self.terms > 0
    }

    fn hessian_bound(&self, norm: MatrixNorm) -> Option<T> {
        Some(match norm {
            MatrixNorm::Spectral => self.h_spectral,
            MatrixNorm::Inf => self.h_inf,
        })
    }
}
