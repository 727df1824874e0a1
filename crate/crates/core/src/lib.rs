//! Federated piecewise deterministic Monte Carlo.
//!
//! Zig-Zag, bouncy particle and Boomerang samplers whose event times can be
//! proposed by independent workers, each holding a private slice of the
//! potential, and adjudicated by a coordinator. Event times are simulated
//! exactly by Poisson thinning.
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod diagnostics;
pub mod error;
pub mod federated;
pub mod io;
pub mod linalg;
pub mod models;
pub mod pdmp;
pub mod potential;
pub mod privacy;
pub mod rates;
pub mod rng;
pub mod samplers;
pub mod scalar;

pub use error::{Error, Result};
pub use pdmp::{flow_evaluate, trajectory_discretize, trajectory_integrate, Flow, Observable, PhaseState, Skeleton};
pub use potential::{MatrixNorm, Potential, PriorShare, SumPotential};
pub use rates::{bound_invert, simulate_event_time, BoundRefresh, EventOutcome, RateBound};
pub use samplers::{run_pdmc, JumpKind, JumpMechanism, SamplerSpec, VelocityDist};
pub use scalar::Real;

pub type PhaseState64 = PhaseState<f64>;
pub type Skeleton64 = Skeleton<f64>;
pub type Flow64 = Flow<f64>;
pub type RateBound64 = RateBound<f64>;
pub type SamplerSpec64 = SamplerSpec<f64>;
