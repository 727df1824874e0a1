//! Jump kernels and the single-machine PDMC loop.

mod kernels;
mod mechanism;
mod pdmc;

pub use kernels::{bps_reflect, refresh_velocity, zigzag_flip, VelocityDist};
pub use mechanism::{JumpKind, JumpMechanism, SamplerSpec, DEFAULT_BPS_REFRESH};
pub use pdmc::{
    apply_kernel, default_init, propose_event, run_pdmc, run_pdmc_with_stats, total_event_rate, PdmcStats, Proposal,
    ProposalStats, PROPOSAL_HORIZON,
};
