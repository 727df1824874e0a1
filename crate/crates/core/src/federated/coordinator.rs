use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federated::{resample_prior_weights, server_select, FederationConfig, InProcess, Transport, Worker};
use crate::pdmp::{Flow, PhaseState, Skeleton};
use crate::rng::{exp1, server_stream};
use crate::scalar::{to_f64, Real};

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    /// `None` for a redistribution epoch.
    pub selected_worker: Option<usize>,
    pub tau: f64,
    pub event_time: f64,
    pub redistribution: bool,
}

/// Per-datum partial derivative evaluations: summed over workers, and
/// summed over rounds of the per-round maximum over workers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub sequential: u64,
    pub parallel: u64,
}

#[derive(Debug, Clone)]
pub struct FederatedRun<T> {
    pub skeleton: Skeleton<T>,
    pub records: Vec<RoundRecord>,
    /// Process times of the prior redistribution epochs.
    pub epochs: Vec<T>,
    pub evals: EvalCounts,
}

impl<T: Real> FederatedRun<T> {
    pub fn rounds(&self) -> usize {
        self.records.len()
    }

    pub fn write_log<W: Write>(&self, w: W) -> Result<()> {
        write_run_log(&self.records, w)
    }
}

pub fn write_run_log<W: Write>(records: &[RoundRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the federated sampler with in-process workers.
///
/// With a `DynamicRedistribution` prior mode this is the redistribution
/// variant; every other mode keeps the prior placement fixed.
pub fn run_federated<T: Real>(
    config: &FederationConfig<T>,
    flow: Flow<T>,
    workers: Vec<Box<dyn Worker<T>>>,
    init: &PhaseState<T>,
) -> Result<FederatedRun<T>> {
    let mut transport = InProcess::new(workers);
    coordinate(config, flow, &mut transport, init)
}

/// The prior-redistribution variant; rejects configs without a
/// redistribution rate.
pub fn run_federated_redistribution<T: Real>(
    config: &FederationConfig<T>,
    flow: Flow<T>,
    workers: Vec<Box<dyn Worker<T>>>,
    init: &PhaseState<T>,
) -> Result<FederatedRun<T>> {
    if config.prior_mode.redistribution_rate().is_none() {
        return Err(Error::invalid("redistribution needs prior_mode DynamicRedistribution"));
    }
    run_federated(config, flow, workers, init)
}

/// The coordinator loop over any transport.
///
/// Each round every proposer simulates its next event time from the current
/// state; the earliest one is applied and all proposers restart from the
/// new state. A redistribution clock, when present, competes with the
/// proposals and resamples the prior shares without touching the velocity.
/// Proposals are only searched up to the time left in the run, so a round
/// in which no proposer has an event before the horizon ends the run.
pub fn coordinate<T, X>(
    config: &FederationConfig<T>,
    flow: Flow<T>,
    transport: &mut X,
    init: &PhaseState<T>,
) -> Result<FederatedRun<T>>
where
    T: Real,
    X: Transport<T> + ?Sized,
{
    config.validate()?;
    if transport.proposers() == 0 {
        return Err(Error::EmptyInput("workers"));
    }
    let horizon = config.horizon;
    let lambda = config.prior_mode.redistribution_rate();
    let mut server = server_stream(config.seed);
    if lambda.is_some() {
        transport.reweight(&resample_prior_weights(config.workers, &mut server)?)?;
    }

    let mut skeleton = Skeleton::start(flow.clone(), init);
    let mut records = Vec::new();
    let mut epochs = Vec::new();
    let mut evals = EvalCounts::default();
    let mut last = transport.partial_evals();
    let (mut x, mut v) = (init.x.clone(), init.v.clone());
    let mut t = T::zero();
    let mut round = 0u64;
    loop {
        let proposals = transport.collect(round, &x, &v, horizon - t)?;
        if let (Some(prev), Some(now)) = (&last, transport.partial_evals()) {
            let deltas = now.iter().zip(prev).map(|(a, b)| a - b);
            evals.sequential += deltas.clone().sum::<u64>();
            evals.parallel += deltas.max().unwrap_or(0);
            last = Some(now);
        }
        let tau_redist = match lambda {
            Some(l) => exp1::<T, _>(&mut server) / l,
            None => T::infinity(),
        };
        // every proposer is silent until the horizon: only an epoch can
        // still happen
        let selected = match server_select(&proposals, round) {
            Ok(p) => Some(p),
            Err(Error::AllInfinite { .. }) => None,
            Err(e) => return Err(e),
        };
        let tau_event = selected.map_or(T::infinity(), |p| p.tau);

        if tau_redist < tau_event {
            if t + tau_redist > horizon {
                break;
            }
            flow.advance(&mut x, &mut v, tau_redist);
            t += tau_redist;
            transport.reweight(&resample_prior_weights(config.workers, &mut server)?)?;
            epochs.push(t);
            records.push(RoundRecord {
                round,
                selected_worker: None,
                tau: to_f64(tau_redist),
                event_time: to_f64(t),
                redistribution: true,
            });
        } else {
            let Some(p) = selected.filter(|p| t + p.tau <= horizon) else {
                break;
            };
            flow.advance(&mut x, &mut v, p.tau);
            t += p.tau;
            v.clone_from(&p.new_velocity);
            skeleton.push(t, x.clone(), v.clone());
            transport.announce(round, p)?;
            records.push(RoundRecord {
                round,
                selected_worker: Some(p.worker_id),
                tau: to_f64(p.tau),
                event_time: to_f64(t),
                redistribution: false,
            });
        }
        round += 1;
    }
    skeleton.finish(horizon);
    Ok(FederatedRun { skeleton, records, epochs, evals })
}

