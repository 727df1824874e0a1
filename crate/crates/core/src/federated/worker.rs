use crate::error::Result;
use crate::federated::EventProposal;
use crate::pdmp::PhaseState;
use crate::potential::Potential;
use crate::rng::{worker_stream, StreamRng};
use crate::samplers::{propose_event, ProposalStats, SamplerSpec, PROPOSAL_HORIZON};
use crate::scalar::{lit, Real};

/// A federation participant that can propose the next event from a shared state.
pub trait Worker<T: Real>: Send {
    fn id(&self) -> usize;

    /// Proposes from `(x, v)`; `+∞` when the worker has no event within
    /// `horizon`.
    fn propose(&mut self, x: &[T], v: &[T], horizon: T) -> Result<EventProposal<T>>;

    /// Returns false when the worker holds no prior share.
    fn set_prior_weight(&mut self, _w: T) -> bool {
        false
    }

    /// Cumulative per-datum partial derivative evaluations.
    fn partial_evals(&self) -> u64;
}

/// A worker built from a private potential slice and a sampler spec, with
/// its own random stream.
pub struct ModelWorker<T, P> {
    id: usize,
    pub potential: P,
    pub spec: SamplerSpec<T>,
    rng: StreamRng,
    stats: ProposalStats,
}

impl<T: Real, P: Potential<T>> ModelWorker<T, P> {
    /// Worker `id` draws from stream `id` of `seed`.
    pub fn new(id: usize, potential: P, spec: SamplerSpec<T>, seed: u64) -> Self {
        Self::with_rng(id, potential, spec, worker_stream(seed, id))
    }

    pub fn with_rng(id: usize, potential: P, spec: SamplerSpec<T>, rng: StreamRng) -> Self {
        Self { id, potential, spec, rng, stats: ProposalStats::default() }
    }

    pub fn stats(&self) -> ProposalStats {
        self.stats
    }
}

/// Simulates `τ_m` from the worker's own rate along the flow from `state`
/// and draws the velocity its kernel would produce there.
pub fn worker_propose<T: Real, P: Potential<T>>(
    worker: &mut ModelWorker<T, P>,
    state: &PhaseState<T>,
) -> Result<EventProposal<T>> {
    state.check_dim(worker.potential.dim())?;
    worker.propose(&state.x, &state.v, lit(PROPOSAL_HORIZON))
}

impl<T: Real, P: Potential<T>> Worker<T> for ModelWorker<T, P> {
    fn id(&self) -> usize {
        self.id
    }

    fn propose(&mut self, x: &[T], v: &[T], horizon: T) -> Result<EventProposal<T>> {
        let p = propose_event(&self.potential, &self.spec, x, v, horizon, &mut self.rng, &mut self.stats)
            .map_err(|e| e.with_worker(self.id))?;
        Ok(EventProposal { worker_id: self.id, tau: p.tau, new_velocity: p.new_velocity })
    }

    fn set_prior_weight(&mut self, w: T) -> bool {
        self.potential.set_prior_weight(w)
    }

    fn partial_evals(&self) -> u64 {
        self.stats.partial_evals
    }
}
