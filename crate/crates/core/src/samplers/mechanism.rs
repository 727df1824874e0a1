use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::pdmp::Flow;
use crate::rates::BoundRefresh;
use crate::samplers::VelocityDist;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpKind {
    /// Flip the sign of one velocity coordinate (zero-based).
    ZigZagFlip(usize),
    BpsReflect,
    /// Redraw the velocity from `ν`.
    Refresh,
}

/// One competing event mechanism.
///
/// `rate` is an additive constant intensity: the excess `γ_i` for flips and
/// reflections, `ρ` for refreshment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpMechanism<T> {
    pub kind: JumpKind,
    pub rate: T,
}

impl<T: Real> JumpMechanism<T> {
    pub fn flip(i: usize) -> Self {
        Self { kind: JumpKind::ZigZagFlip(i), rate: T::zero() }
    }

    pub fn reflect() -> Self {
        Self { kind: JumpKind::BpsReflect, rate: T::zero() }
    }

    pub fn refresh(rho: T) -> Self {
        Self { kind: JumpKind::Refresh, rate: rho }
    }
}

/// Everything that defines a sampler apart from the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec<T> {
    pub flow: Flow<T>,
    pub mechanisms: Vec<JumpMechanism<T>>,
    pub velocity: VelocityDist<T>,
    /// Metric of the reflection; `None` is the identity.
    pub sigma: Option<Vec<T>>,
    pub bound_refresh: BoundRefresh,
}

/// Default BPS refreshment rate.
pub const DEFAULT_BPS_REFRESH: f64 = 1.0;

impl<T: Real> SamplerSpec<T> {
    /// Zig-Zag with canonical rates and velocities in `{−1, +1}^d`.
    pub fn zigzag(d: usize) -> Self {
        Self {
            flow: Flow::Linear,
            mechanisms: (0..d).map(JumpMechanism::flip).collect(),
            velocity: VelocityDist::UniformSigns { dim: d },
            sigma: None,
            bound_refresh: BoundRefresh::Refresh,
        }
    }

    /// Bouncy particle sampler with `N(0, I)` velocities.
    pub fn bps(d: usize, rho: T) -> Self {
        Self {
            flow: Flow::Linear,
            mechanisms: vec![JumpMechanism::reflect()],
            velocity: VelocityDist::standard_gaussian(d),
            sigma: None,
            bound_refresh: BoundRefresh::Refresh,
        }
        .with_refresh(rho)
    }

    /// Boomerang sampler with reference measure `N(0, Σ)`. The potential
    /// passed to the sampler is then the remainder `U(x) − ½xᵀΣ⁻¹x`.
    pub fn boomerang(sigma: &[T], d: usize, rho: T) -> Result<Self> {
        let sigma_inv = spd_inverse(sigma, d)?;
        Ok(Self {
            flow: Flow::Harmonic { sigma_inv },
            mechanisms: vec![JumpMechanism::reflect()],
            velocity: VelocityDist::gaussian(sigma, d)?,
            sigma: Some(sigma.to_vec()),
            bound_refresh: BoundRefresh::Refresh,
        }
        .with_refresh(rho))
    }

    /// Sets the refreshment rate, adding or removing the mechanism.
    pub fn with_refresh(mut self, rho: T) -> Self {
        self.mechanisms.retain(|m| m.kind != JumpKind::Refresh);
        if rho > T::zero() {
            self.mechanisms.push(JumpMechanism::refresh(rho));
        }
        self
    }

    /// Adds a constant excess rate to every flip and reflection.
    pub fn with_excess(mut self, gamma: T) -> Self {
        for m in &mut self.mechanisms {
            if m.kind != JumpKind::Refresh {
                m.rate = gamma;
            }
        }
        self
    }

    pub fn with_bound_refresh(mut self, refresh: BoundRefresh) -> Self {
        self.bound_refresh = refresh;
        self
    }

    pub fn dim(&self) -> usize {
        self.velocity.dim()
    }

    pub fn refresh_rate(&self) -> T {
        self.mechanisms
            .iter()
            .filter(|m| m.kind == JumpKind::Refresh)
            .map(|m| m.rate)
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.velocity.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.velocity.dim() });
        }
        if let Some(s) = &self.sigma {
            if s.len() != d * d {
                return Err(Error::DimensionMismatch { expected: d * d, got: s.len() });
            }
        }
        for m in &self.mechanisms {
            if !(m.rate >= T::zero()) || !m.rate.is_finite() {
                return Err(Error::invalid("mechanism rates must be finite and nonnegative"));
            }
            match m.kind {
                JumpKind::ZigZagFlip(i) => {
                    if i >= d {
                        return Err(Error::IndexOutOfRange { index: i, dim: d });
                    }
                    if !self.flow.is_linear() {
                        return Err(Error::invalid("Zig-Zag flips require the linear flow"));
                    }
                }
                JumpKind::BpsReflect | JumpKind::Refresh => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boomerang_inverse() {
        let s = [4.0f64, 1.0, 1.0, 2.0];
        let spec = SamplerSpec::boomerang(&s, 2, 1.0).unwrap();
        let Flow::Harmonic { sigma_inv } = &spec.flow else { panic!() };
        let det = 7.0;
        let want = [2.0 / det, -1.0 / det, -1.0 / det, 4.0 / det];
        for (a, b) in sigma_inv.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn refresh_toggles() {
        let s = SamplerSpec::<f64>::zigzag(3).with_refresh(0.5);
        assert_eq!(s.mechanisms.len(), 4);
        assert_eq!(s.refresh_rate(), 0.5);
        let s = s.with_refresh(0.0);
        assert_eq!(s.mechanisms.len(), 3);
        assert!(SamplerSpec::<f64>::bps(2, 1.0).validate(2).is_ok());
        assert!(SamplerSpec::<f64>::zigzag(2).validate(3).is_err());
    }
}
