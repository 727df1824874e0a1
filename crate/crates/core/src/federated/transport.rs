use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::federated::{EventProposal, PriorWeights, WireMessage, Worker};
use crate::pdmp::{Flow, PhaseState};
use crate::scalar::{lit, Real};

/// How the coordinator reaches its proposers.
///
/// One round is `collect` (every proposer answers from the same state)
/// followed by `announce` of the selected event.
pub trait Transport<T: Real> {
    fn proposers(&self) -> usize;

    /// Proposals from every worker; `horizon` is the process time left in
    /// the run, beyond which no event is needed.
    fn collect(&mut self, round: u64, x: &[T], v: &[T], horizon: T) -> Result<Vec<EventProposal<T>>>;

    fn announce(&mut self, round: u64, selected: &EventProposal<T>) -> Result<()>;

    /// Hands worker `m` (ids `1..=M`) the prior share `alpha[m - 1]`.
    fn reweight(&mut self, alpha: &PriorWeights<T>) -> Result<()>;

    /// Cumulative partial-derivative evaluations per proposer, or `None`
    /// when the transport cannot observe them.
    fn partial_evals(&self) -> Option<Vec<u64>>;
}

/// All workers live in this process. Proposals are computed sequentially or
/// on the rayon pool; the result order is the worker order either way.
pub struct InProcess<T> {
    workers: Vec<Box<dyn Worker<T>>>,
    parallel: bool,
}

impl<T: Real> InProcess<T> {
    pub fn new(workers: Vec<Box<dyn Worker<T>>>) -> Self {
        Self { workers, parallel: false }
    }

    pub fn parallel(mut self, yes: bool) -> Self {
        self.parallel = yes;
        self
    }

    pub fn into_workers(self) -> Vec<Box<dyn Worker<T>>> {
        self.workers
    }
}

impl<T: Real> Transport<T> for InProcess<T> {
    fn proposers(&self) -> usize {
        self.workers.len()
    }

    fn collect(&mut self, _round: u64, x: &[T], v: &[T], horizon: T) -> Result<Vec<EventProposal<T>>> {
        if self.parallel && self.workers.len() > 1 {
            self.workers.par_iter_mut().map(|w| w.propose(x, v, horizon)).collect()
        } else {
            self.workers.iter_mut().map(|w| w.propose(x, v, horizon)).collect()
        }
    }

    fn announce(&mut self, _round: u64, _selected: &EventProposal<T>) -> Result<()> {
        Ok(())
    }

    fn reweight(&mut self, alpha: &PriorWeights<T>) -> Result<()> {
        for w in &mut self.workers {
            let id = w.id();
            if (1..=alpha.alpha.len()).contains(&id) {
                w.set_prior_weight(alpha.alpha[id - 1]);
            }
        }
        Ok(())
    }

    fn partial_evals(&self) -> Option<Vec<u64>> {
        Some(self.workers.iter().map(|w| w.partial_evals()).collect())
    }
}

fn read_message<R: BufRead>(r: &mut R, buf: &mut String) -> Result<Option<WireMessage>> {
    buf.clear();
    if r.read_line(buf)? == 0 {
        return Ok(None);
    }
    serde_json::from_str(buf.trim_end())
        .map(Some)
        .map_err(|e| Error::Transport(format!("malformed message: {e}")))
}

fn write_message<W: Write>(w: &mut W, msg: &WireMessage) -> Result<()> {
    let mut line = serde_json::to_vec(msg)?;
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()?;
    Ok(())
}

/// Coordinator end of the newline-delimited JSON protocol: one stream per
/// worker. Each round every worker sends its proposal, then the coordinator
/// sends the selected proposal back to all of them. Closing the streams ends
/// the run.
///
/// Workers start from an initial state agreed out of band and track the
/// state themselves from the broadcast events, so only `(τ, v)` pairs cross
/// the connection.
pub struct SocketCoordinator<S> {
    peers: Vec<(usize, BufReader<S>)>,
    buf: String,
}

impl<S: Read + Write> SocketCoordinator<S> {
    /// `peers` pairs each expected worker id with its connection.
    pub fn new(peers: Vec<(usize, S)>) -> Self {
        Self { peers: peers.into_iter().map(|(id, s)| (id, BufReader::new(s))).collect(), buf: String::new() }
    }
}

impl<T: Real, S: Read + Write> Transport<T> for SocketCoordinator<S> {
    fn proposers(&self) -> usize {
        self.peers.len()
    }

    fn collect(&mut self, round: u64, x: &[T], _v: &[T], _horizon: T) -> Result<Vec<EventProposal<T>>> {
        let mut out = Vec::with_capacity(self.peers.len());
        for (id, r) in &mut self.peers {
            let msg = read_message(r, &mut self.buf)?
                .ok_or_else(|| Error::Transport(format!("worker {id} closed the connection")))?;
            if msg.round != round || msg.worker != *id {
                return Err(Error::Transport(format!(
                    "expected round {round} from worker {id}, got round {} from worker {}",
                    msg.round, msg.worker
                )));
            }
            if msg.velocity.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: x.len(), got: msg.velocity.len() });
            }
            if matches!(msg.tau, Some(t) if !(t > 0.0)) {
                return Err(Error::Transport(format!("worker {id} sent a nonpositive tau")));
            }
            out.push(EventProposal::from_wire(&msg));
        }
        Ok(out)
    }

    fn announce(&mut self, round: u64, selected: &EventProposal<T>) -> Result<()> {
        let msg = selected.to_wire(round);
        for (_, r) in &mut self.peers {
            write_message(r.get_mut(), &msg)?;
        }
        Ok(())
    }

    fn reweight(&mut self, _alpha: &PriorWeights<T>) -> Result<()> {
        Err(Error::Transport("prior redistribution is not supported over sockets".into()))
    }

    fn partial_evals(&self) -> Option<Vec<u64>> {
        None
    }
}

/// Worker end of the socket protocol. Returns the number of rounds served
/// once the coordinator closes the connection. `horizon` is the run length,
/// agreed out of band like `init`.
pub fn serve_worker<T, W, S>(worker: &mut W, flow: &Flow<T>, init: &PhaseState<T>, horizon: T, stream: S) -> Result<u64>
where
    T: Real,
    W: Worker<T> + ?Sized,
    S: Read + Write,
{
    let mut conn = BufReader::new(stream);
    let mut buf = String::new();
    let (mut x, mut v) = (init.x.clone(), init.v.clone());
    let mut t = T::zero();
    let mut round = 0u64;
    loop {
        let p = worker.propose(&x, &v, horizon - t)?;
        // the coordinator may already have hung up after the last round
        if write_message(conn.get_mut(), &p.to_wire(round)).is_err() {
            return Ok(round);
        }
        let Some(msg) = read_message(&mut conn, &mut buf)? else {
            return Ok(round);
        };
        if msg.round != round {
            return Err(Error::Transport(format!("expected broadcast for round {round}, got {}", msg.round)));
        }
        let tau = msg.tau.ok_or_else(|| Error::Transport("broadcast without event time".into()))?;
        if msg.velocity.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), got: msg.velocity.len() });
        }
        flow.advance(&mut x, &mut v, lit(tau));
        t += lit(tau);
        v = msg.velocity.iter().map(|&c| lit(c)).collect();
        round += 1;
    }
}
