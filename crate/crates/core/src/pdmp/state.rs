use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Position, velocity and process time of a PDMP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState<T> {
    pub x: Vec<T>,
    pub v: Vec<T>,
    pub t: T,
}

impl<T: Real> PhaseState<T> {
    pub fn new(x: Vec<T>, v: Vec<T>) -> Result<Self> {
        Self::at(x, v, T::zero())
    }

    pub fn at(x: Vec<T>, v: Vec<T>, t: T) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("state dimension must be at least 1"));
        }
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        if t < T::zero() {
            return Err(Error::invalid("process time must be nonnegative"));
        }
        Ok(Self { x, v, t })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// True when every velocity component is ±1.
    pub fn has_sign_velocity(&self) -> bool {
        self.v.iter().all(|&c| c == T::one() || c == -T::one())
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.x.len() != d || self.v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.x.len().max(self.v.len()),
            });
        }
        Ok(())
    }
}
