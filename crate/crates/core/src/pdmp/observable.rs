use std::fmt;
use std::sync::Arc;

use crate::scalar::Real;

/// A test function `h(x)` integrated along a trajectory.
///
/// Polynomials of degree ≤ 2 are integrated exactly along linear segments;
/// everything else (and any observable under the harmonic flow) goes through
/// five-point Gauss–Legendre quadrature per segment.
#[derive(Clone)]
pub enum Observable<T> {
    /// `c + Σ aᵢ xᵢ + Σ q · x_i x_j`
    Quadratic {
        constant: T,
        linear: Vec<(usize, T)>,
        quadratic: Vec<(usize, usize, T)>,
    },
    Function(Arc<dyn Fn(&[T]) -> T + Send + Sync>),
}

impl<T: Real> Observable<T> {
    pub fn constant(c: T) -> Self {
        Observable::Quadratic { constant: c, linear: vec![], quadratic: vec![] }
    }

    pub fn coordinate(k: usize) -> Self {
        Observable::Quadratic { constant: T::zero(), linear: vec![(k, T::one())], quadratic: vec![] }
    }

    pub fn square(k: usize) -> Self {
        Observable::Quadratic { constant: T::zero(), linear: vec![], quadratic: vec![(k, k, T::one())] }
    }

    pub fn function(f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Observable::Function(Arc::new(f))
    }

    pub fn eval(&self, x: &[T]) -> T {
        match self {
            Observable::Quadratic { constant, linear, quadratic } => {
                let mut s = *constant;
                for &(i, a) in linear {
                    s += a * x[i];
                }
                for &(i, j, q) in quadratic {
                    s += q * x[i] * x[j];
                }
                s
            }
            Observable::Function(f) => f(x),
        }
    }

    /// Exact `∫₀ᴸ h(x + v s) ds` when `h` is a quadratic polynomial.
    pub(crate) fn linear_segment_integral(&self, x: &[T], v: &[T], len: T) -> Option<T> {
        let Observable::Quadratic { constant, linear, quadratic } = self else {
            return None;
        };
        let two = T::one() + T::one();
        let three = two + T::one();
        let l2 = len * len / two;
        let l3 = len * len * len / three;
        let mut s = *constant * len;
        for &(i, a) in linear {
            s += a * (x[i] * len + v[i] * l2);
        }
        for &(i, j, q) in quadratic {
            s += q * (x[i] * x[j] * len + (x[i] * v[j] + x[j] * v[i]) * l2 + v[i] * v[j] * l3);
        }
        Some(s)
    }
}

impl<T: fmt::Debug> fmt::Debug for Observable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Quadratic { constant, linear, quadratic } => f
                .debug_struct("Quadratic")
                .field("constant", constant)
                .field("linear", linear)
                .field("quadratic", quadratic)
                .finish(),
            Observable::Function(_) => f.write_str("Function(..)"),
        }
    }
}
