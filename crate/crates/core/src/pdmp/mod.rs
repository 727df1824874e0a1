//! Phase-space types, deterministic flows and trajectory post-processing.

mod flow;
mod observable;
mod skeleton;
mod state;

pub use flow::{flow_evaluate, Flow};
pub use observable::Observable;
pub use skeleton::{trajectory_discretize, trajectory_integrate, Skeleton, SkeletonPoint};
pub use state::PhaseState;
