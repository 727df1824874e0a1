use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pdmp::PhaseState;
use crate::scalar::Real;

/// Deterministic dynamics between events.
///
/// `Linear` moves along straight lines, `(x + vt, v)`. `Harmonic` solves
/// `x' = v, v' = -x` in closed form; `sigma_inv` (row-major) is kept for
/// energy checks and for the Boomerang reference measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Flow<T> {
    Linear,
    Harmonic { sigma_inv: Vec<T> },
}

impl<T: Real> Flow<T> {
    pub fn is_linear(&self) -> bool {
        matches!(self, Flow::Linear)
    }

    /// Advances `(x, v)` in place by `dt`.
    pub fn advance(&self, x: &mut [T], v: &mut [T], dt: T) {
        match self {
            Flow::Linear => {
                for (xi, &vi) in x.iter_mut().zip(v.iter()) {
                    *xi += vi * dt;
                }
            }
            Flow::Harmonic { .. } => {
                let (s, c) = dt.sin_cos();
                for (xi, vi) in x.iter_mut().zip(v.iter_mut()) {
                    let (x0, v0) = (*xi, *vi);
                    *xi = x0 * c + v0 * s;
                    *vi = v0 * c - x0 * s;
                }
            }
        }
    }

    /// Position at `dt` without touching the inputs.
    pub fn position(&self, x: &[T], v: &[T], dt: T) -> Vec<T> {
        match self {
            Flow::Linear => x.iter().zip(v).map(|(&a, &b)| a + b * dt).collect(),
            Flow::Harmonic { .. } => {
                let (s, c) = dt.sin_cos();
                x.iter().zip(v).map(|(&a, &b)| a * c + b * s).collect()
            }
        }
    }

    /// `xᵀΣ⁻¹x + vᵀΣ⁻¹v` for the harmonic flow, `None` for the linear flow.
    pub fn energy(&self, x: &[T], v: &[T]) -> Option<T> {
        match self {
            Flow::Linear => None,
            Flow::Harmonic { sigma_inv } => {
                let d = x.len();
                let quad = |z: &[T]| -> T {
                    (0..d)
                        .map(|i| (0..d).map(|j| z[i] * sigma_inv[i * d + j] * z[j]).sum::<T>())
                        .sum()
                };
                Some(quad(x) + quad(v))
            }
        }
    }
}

/// `φ(dt; x, v)` with the process time advanced by `dt`.
pub fn flow_evaluate<T: Real>(flow: &Flow<T>, state: &PhaseState<T>, dt: T) -> Result<PhaseState<T>> {
    if state.x.len() != state.v.len() {
        return Err(Error::DimensionMismatch {
            expected: state.x.len(),
            got: state.v.len(),
        });
    }
    if dt < T::zero() || dt.is_nan() {
        return Err(Error::invalid("flow time must be nonnegative"));
    }
    let mut next = state.clone();
    flow.advance(&mut next.x, &mut next.v, dt);
    next.t = state.t + dt;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_straight_line() {
        let s = PhaseState::new(vec![0.0, 0.0], vec![1.0, -1.0]).unwrap();
        let n = flow_evaluate(&Flow::Linear, &s, 2.0).unwrap();
        assert_eq!(n.x, vec![2.0, -2.0]);
        assert_eq!(n.v, vec![1.0, -1.0]);
        assert_eq!(n.t, 2.0);
    }

    #[test]
    fn harmonic_quarter_period() {
        let flow = Flow::Harmonic { sigma_inv: vec![1.0] };
        let s = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let n = flow_evaluate(&flow, &s, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(n.x[0].abs() < 1e-15);
        assert!((n.v[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        let flow = Flow::Harmonic { sigma_inv: vec![1.0, 0.0, 0.0, 1.0] };
        let s = PhaseState::new(vec![0.3, -1.2], vec![0.7, 2.0]).unwrap();
        assert_eq!(flow_evaluate(&flow, &s, 0.0).unwrap(), s);
        assert_eq!(flow_evaluate(&Flow::Linear, &s, 0.0).unwrap(), s);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let s = PhaseState { x: vec![0.0, 1.0], v: vec![1.0], t: 0.0 };
        assert!(matches!(
            flow_evaluate(&Flow::Linear, &s, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let s = PhaseState::new(vec![0.0], vec![1.0]).unwrap();
        assert!(flow_evaluate(&Flow::Linear, &s, -1.0).is_err());
    }
}
