//! Rate envelopes, integrated-rate inversion and Poisson thinning.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{exp1, uniform};
use crate::scalar::{lit, positive_part, Real};

/// Proposals whose acceptance ratio exceeds `1 + ACCEPT_TOLERANCE` abort the run.
pub const ACCEPT_TOLERANCE: f64 = 1e-9;

/// Upper envelope `t ↦ λ̄(t)` of an event intensity along the flow.
///
/// Every kind is clamped at zero, and its integral `Λ̄(t)` is available in
/// closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateBound<T> {
    Constant(T),
    /// `(b + a t)_+`
    Affine { b: T, a: T },
    /// `(c · e^{x0 + v0 t})_+`
    ExpLinear { c: T, x0: T, v0: T },
    Sum(Vec<RateBound<T>>),
}

/// Whether the envelope is recomputed at the advanced state after a rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BoundRefresh {
    #[default]
    Refresh,
    Keep,
}

/// Result of one event-time simulation. `tau` is `+∞` when nothing happened
/// before the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOutcome<T> {
    pub tau: T,
    pub proposals_used: usize,
}

impl<T: Real> EventOutcome<T> {
    pub fn never(proposals_used: usize) -> Self {
        Self { tau: T::infinity(), proposals_used }
    }

    pub fn is_finite(&self) -> bool {
        self.tau.is_finite()
    }
}

impl<T: Real> RateBound<T> {
    pub fn zero() -> Self {
        RateBound::Constant(T::zero())
    }

    pub fn value(&self, t: T) -> T {
        match *self {
            RateBound::Constant(c) => positive_part(c),
            RateBound::Affine { b, a } => positive_part(b + a * t),
            RateBound::ExpLinear { c, x0, v0 } => positive_part(c * (x0 + v0 * t).exp()),
            RateBound::Sum(ref parts) => parts.iter().map(|p| p.value(t)).sum(),
        }
    }

    /// `Λ̄(t) = ∫₀ᵗ λ̄(s) ds`.
    pub fn integrated(&self, t: T) -> T {
        let zero = T::zero();
        let half = lit::<T>(0.5);
        if t <= zero {
            return zero;
        }
        match *self {
            RateBound::Constant(c) => positive_part(c) * t,
            RateBound::Affine { b, a } => {
                if a == zero {
                    positive_part(b) * t
                } else if a > zero {
                    if b >= zero {
                        b * t + half * a * t * t
                    } else {
                        let t0 = -b / a;
                        if t <= t0 {
                            zero
                        } else {
                            half * a * (t - t0) * (t - t0)
                        }
                    }
                } else if b <= zero {
                    zero
                } else {
                    let t1 = t.min(-b / a);
                    b * t1 + half * a * t1 * t1
                }
            }
            RateBound::ExpLinear { c, x0, v0 } => {
                if c <= zero {
                    zero
                } else if v0 == zero {
                    c * x0.exp() * t
                } else {
                    c * x0.exp() * (v0 * t).exp_m1() / v0
                }
            }
            RateBound::Sum(ref parts) => parts.iter().map(|p| p.integrated(t)).sum(),
        }
    }

    /// `Λ̄(∞)`, possibly infinite.
    pub fn total_mass(&self) -> T {
        let zero = T::zero();
        match *self {
            RateBound::Constant(c) => {
                if c > zero {
                    T::infinity()
                } else {
                    zero
                }
            }
            RateBound::Affine { b, a } => {
                if a > zero || (a == zero && b > zero) {
                    T::infinity()
                } else if b <= zero {
                    zero
                } else {
                    -b * b / (lit::<T>(2.0) * a)
                }
            }
            RateBound::ExpLinear { c, x0, v0 } => {
                if c <= zero {
                    zero
                } else if v0 >= zero {
                    T::infinity()
                } else {
                    c * x0.exp() / -v0
                }
            }
            RateBound::Sum(ref parts) => parts.iter().map(|p| p.total_mass()).sum(),
        }
    }

    /// The envelope seen from time `s` onwards: `t ↦ λ̄(s + t)`.
    pub fn shifted(&self, s: T) -> Self {
        match *self {
            RateBound::Constant(c) => RateBound::Constant(c),
            RateBound::Affine { b, a } => RateBound::Affine { b: b + a * s, a },
            RateBound::ExpLinear { c, x0, v0 } => RateBound::ExpLinear { c, x0: x0 + v0 * s, v0 },
            RateBound::Sum(ref parts) => RateBound::Sum(parts.iter().map(|p| p.shifted(s)).collect()),
        }
    }

    /// First arrival of a Poisson process with this intensity.
    ///
    /// Sums are simulated component-wise and the earliest arrival is kept,
    /// which avoids numerical inversion.
    pub fn sample_first_arrival<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            RateBound::Sum(parts) => parts
                .iter()
                .map(|p| p.sample_first_arrival(rng))
                .fold(T::infinity(), T::min),
            other => {
                let y: T = exp1(rng);
                // simple kinds always invert in closed form
                bound_invert(other, y).unwrap_or_else(|_| T::infinity())
            }
        }
    }
}

/// `H(y) = inf{t ≥ 0 : Λ̄(t) ≥ y}`; `+∞` when the total mass is below `y`.
pub fn bound_invert<T: Real>(bound: &RateBound<T>, y: T) -> Result<T> {
    let zero = T::zero();
    if y < zero || y.is_nan() {
        return Err(Error::invalid("bound_invert requires y >= 0"));
    }
    if y == zero {
        return Ok(zero);
    }
    let two = lit::<T>(2.0);
    let inf = T::infinity();
    let t = match *bound {
        RateBound::Constant(c) => {
            if c > zero {
                y / c
            } else {
                inf
            }
        }
        RateBound::Affine { b, a } => {
            if a == zero {
                if b > zero {
                    y / b
                } else {
                    inf
                }
            } else if a > zero {
                if b >= zero {
                    two * y / (b + (b * b + two * a * y).sqrt())
                } else {
                    -b / a + (two * y / a).sqrt()
                }
            } else if b <= zero || y > -b * b / (two * a) {
                inf
            } else {
                let disc = positive_part(b * b + two * a * y);
                two * y / (b + disc.sqrt())
            }
        }
        RateBound::ExpLinear { c, x0, v0 } => {
            if c <= zero {
                inf
            } else if v0 == zero {
                y / (c * x0.exp())
            } else {
                let arg = y * v0 * (-x0).exp() / c;
                if arg <= -T::one() {
                    inf
                } else {
                    arg.ln_1p() / v0
                }
            }
        }
        RateBound::Sum(_) => invert_numerically(bound, y),
    };
    Ok(t)
}

fn invert_numerically<T: Real>(bound: &RateBound<T>, y: T) -> T {
    if bound.total_mass() < y {
        return T::infinity();
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    let mut guard = 0;
    while bound.integrated(hi) < y {
        lo = hi;
        hi = hi * lit(2.0);
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return T::infinity();
        }
    }
    for _ in 0..200 {
        let mid = lo + (hi - lo) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if bound.integrated(mid) >= y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `Affine(λ₀, ‖∇²U‖ ‖v‖²)`, or a constant when the slope vanishes.
pub fn affine_bound_from_hessian<T: Real>(lambda0: T, hessian_norm: T, v: &[T]) -> RateBound<T> {
    let v_sq: T = v.iter().map(|&c| c * c).sum();
    affine_bound_with_slope(lambda0, hessian_norm * v_sq)
}

/// Coordinate-wise variant: slope `‖∇²U‖_p ‖v‖_p |v_i|`.
pub fn coordinate_affine_bound<T: Real>(lambda0: T, hessian_norm_p: T, v_norm_p: T, v_i: T) -> RateBound<T> {
    affine_bound_with_slope(lambda0, hessian_norm_p * v_norm_p * v_i.abs())
}

fn affine_bound_with_slope<T: Real>(lambda0: T, a: T) -> RateBound<T> {
    if a == T::zero() {
        RateBound::Constant(lambda0)
    } else {
        RateBound::Affine { b: lambda0, a }
    }
}

/// Poisson thinning.
///
/// `rate(t)` is the true intensity at offset `t` from the start of the
/// segment; `bound_at(s)` returns an envelope valid from offset `s` onwards,
/// as a function of the time elapsed since `s`. With [`BoundRefresh::Keep`]
/// the envelope built at offset zero is reused for the whole simulation.
pub fn simulate_event_time<T, R, F, B>(
    mut rate: F,
    mut bound_at: B,
    rng: &mut R,
    horizon: T,
    refresh: BoundRefresh,
) -> Result<EventOutcome<T>>
where
    T: Real,
    R: Rng + ?Sized,
    F: FnMut(T) -> T,
    B: FnMut(T) -> RateBound<T>,
{
    let tol = T::one() + lit(ACCEPT_TOLERANCE);
    let original = bound_at(T::zero());
    let mut current = original.clone();
    let mut tau = T::zero();
    let mut proposals = 0;
    loop {
        let sigma = current.sample_first_arrival(rng);
        if !sigma.is_finite() || tau + sigma > horizon {
            return Ok(EventOutcome::never(proposals));
        }
        proposals += 1;
        let envelope = current.value(sigma);
        let lambda = rate(tau + sigma);
        tau += sigma;
        let ratio = if envelope > T::zero() {
            lambda / envelope
        } else if lambda > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        if ratio > tol {
            return Err(Error::AcceptRatioExceeded { ratio: ratio.to_f64().unwrap_or(f64::INFINITY), worker: None });
        }
        let u: T = uniform(rng);
        if u < ratio {
            return Ok(EventOutcome { tau, proposals_used: proposals });
        }
        current = match refresh {
            BoundRefresh::Refresh => bound_at(tau),
            BoundRefresh::Keep => original.shifted(tau),
        };
    }
}

/// Exact simulation from an envelope that equals the true rate.
pub fn simulate_exact<T: Real, R: Rng + ?Sized>(bound: &RateBound<T>, rng: &mut R, horizon: T) -> EventOutcome<T> {
    let tau = bound.sample_first_arrival(rng);
    if tau.is_finite() && tau <= horizon {
        EventOutcome { tau, proposals_used: 1 }
    } else {
        EventOutcome::never(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn invert_constant_and_affine() {
        assert_eq!(bound_invert(&RateBound::Constant(2.0), 1.0).unwrap(), 0.5);
        let t: f64 = bound_invert(&RateBound::Affine { b: 0.0, a: 2.0 }, 1.0).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        let t: f64 = bound_invert(&RateBound::Affine { b: -1.0, a: 1.0 }, 0.5).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!(bound_invert(&RateBound::Constant(1.0), -0.1).is_err());
        assert_eq!(bound_invert(&RateBound::Constant(0.0), 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn decreasing_affine_has_finite_mass() {
        let b = RateBound::Affine { b: 2.0, a: -1.0 };
        assert_eq!(b.total_mass(), 2.0);
        assert_eq!(bound_invert(&b, 2.5).unwrap(), f64::INFINITY);
        let t = bound_invert(&b, 1.5).unwrap();
        assert!((b.integrated(t) - 1.5).abs() < 1e-12);
        assert_eq!(b.integrated(10.0), 2.0);
    }

    #[test]
    fn exp_linear_matches_closed_form() {
        // ∫₀ᵗ e^{x+s} ds = y  ⇒  t = log(e^x + y) - x
        let x = 0.3;
        let b = RateBound::ExpLinear { c: 1.0, x0: x, v0: 1.0 };
        let y = 0.8;
        let t = bound_invert(&b, y).unwrap();
        assert!((t - ((x as f64).exp() + y).ln() + x).abs() < 1e-14);
        let falling = RateBound::ExpLinear { c: 1.0, x0: 0.0, v0: -1.0 };
        assert_eq!(falling.total_mass(), 1.0);
        assert_eq!(bound_invert(&falling, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(RateBound::ExpLinear { c: -1.0, x0: 0.0, v0: 1.0 }.value(1.0), 0.0);
    }

    #[test]
    fn shifted_matches_value() {
        let b: RateBound<f64> = RateBound::Sum(vec![
            RateBound::Affine { b: -0.5, a: 1.5 },
            RateBound::ExpLinear { c: 0.5, x0: -0.2, v0: 1.0 },
            RateBound::Constant(0.25),
        ]);
        for s in [0.0, 0.3, 1.7] {
            for t in [0.0, 0.1, 2.0] {
                assert!((b.shifted(s).value(t) - b.value(s + t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hessian_bounds() {
        assert_eq!(affine_bound_from_hessian(0.0, 0.0, &[1.0, -1.0]), RateBound::Constant(0.0));
        assert_eq!(affine_bound_from_hessian(3.0, 2.0, &[1.0]), RateBound::Affine { b: 3.0, a: 2.0 });
        assert_eq!(coordinate_affine_bound(1.0, 2.0, 3.0, -1.0), RateBound::Affine { b: 1.0, a: 6.0 });
    }

    #[test]
    fn zero_rate_never_fires() {
        let mut rng = stream(1, 1);
        for _ in 0..100 {
            let out = simulate_event_time(|_| 0.0, |_| RateBound::Constant(1.0), &mut rng, 10.0, BoundRefresh::Refresh)
                .unwrap();
            assert!(!out.is_finite());
        }
    }

    #[test]
    fn invalid_bound_trips() {
        let mut rng = stream(1, 1);
        let err = simulate_event_time(|_| 2.0, |_| RateBound::Constant(1.0), &mut rng, 10.0, BoundRefresh::Refresh);
        assert!(matches!(err, Err(Error::AcceptRatioExceeded { .. })));
    }
}
