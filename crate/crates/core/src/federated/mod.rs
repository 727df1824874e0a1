//! Worker/coordinator federation.
//!
//! Each worker holds a slice `U_m` of the potential and proposes an event
//! time with its own rate. The coordinator keeps the earliest proposal,
//! which yields the sampler whose rate is the sum of the worker rates.
//! Only `(τ_m, v_m)` pairs leave a worker.

mod coordinator;
mod prior;
mod proposal;
mod transport;
mod worker;

pub use coordinator::{
    coordinate, run_federated, run_federated_redistribution, write_run_log, EvalCounts, FederatedRun, RoundRecord,
};
pub use prior::{assemble_workers, resample_prior_weights, FederationConfig, PriorMode, PriorWeights};
pub use proposal::{server_select, EventProposal, WireMessage};
pub use transport::{serve_worker, InProcess, SocketCoordinator, Transport};
pub use worker::{worker_propose, ModelWorker, Worker};
