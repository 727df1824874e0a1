use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// What a worker sends to the coordinator each round. There is no field for
/// gradients, data or potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct EventProposal<T> {
    pub worker_id: usize,
    /// `+∞` when the worker has no event before the proposal horizon.
    pub tau: T,
    pub new_velocity: Vec<T>,
}

impl<T: Real> EventProposal<T> {
    pub fn is_finite(&self) -> bool {
        self.tau.is_finite()
    }

    pub fn to_wire(&self, round: u64) -> WireMessage {
        WireMessage {
            round,
            worker: self.worker_id,
            tau: self.tau.is_finite().then(|| to_f64(self.tau)),
            velocity: self.new_velocity.iter().map(|&c| to_f64(c)).collect(),
        }
    }

    pub fn from_wire(msg: &WireMessage) -> Self {
        Self {
            worker_id: msg.worker,
            tau: msg.tau.map(lit).unwrap_or_else(T::infinity),
            new_velocity: msg.velocity.iter().map(|&c| lit(c)).collect(),
        }
    }
}

/// One line of the socket protocol: `{"round":k,"worker":m,"tau":…,"velocity":[…]}`.
/// `tau` is `null` for the infinity sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireMessage {
    pub round: u64,
    pub worker: usize,
    pub tau: Option<f64>,
    pub velocity: Vec<f64>,
}

/// The proposal with the smallest `tau`; ties go to the smallest worker id.
pub fn server_select<T: Real>(proposals: &[EventProposal<T>], round: u64) -> Result<&EventProposal<T>> {
    if proposals.is_empty() {
        return Err(Error::EmptyInput("proposals"));
    }
    proposals
        .iter()
        .filter(|p| p.is_finite())
        .min_by(|a, b| a.tau.partial_cmp(&b.tau).expect("finite").then(a.worker_id.cmp(&b.worker_id)))
        .ok_or(Error::AllInfinite { round })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: usize, tau: f64) -> EventProposal<f64> {
        EventProposal { worker_id: id, tau, new_velocity: vec![id as f64] }
    }

    #[test]
    fn select_examples() {
        assert_eq!(server_select(&[p(1, 0.5), p(2, 0.3)], 0).unwrap().worker_id, 2);
        assert_eq!(server_select(&[p(2, 0.4), p(1, 0.4)], 0).unwrap().worker_id, 1);
        assert_eq!(server_select(&[p(1, f64::INFINITY), p(2, 1.7)], 0).unwrap().worker_id, 2);
        assert!(matches!(server_select(&[p(1, f64::INFINITY)], 7), Err(Error::AllInfinite { round: 7 })));
        assert!(server_select::<f64>(&[], 0).is_err());
    }

    #[test]
    fn wire_round_trip() {
        let q = EventProposal { worker_id: 3, tau: 0.1 + 0.2, new_velocity: vec![1.0, -1.0] };
        let line = serde_json::to_string(&q.to_wire(4)).unwrap();
        assert_eq!(line, r#"{"round":4,"worker":3,"tau":0.30000000000000004,"velocity":[1.0,-1.0]}"#);
        let back: WireMessage = serde_json::from_str(&line).unwrap();
        assert_eq!(EventProposal::<f64>::from_wire(&back), q);
        let inf = p(1, f64::INFINITY).to_wire(0);
        assert!(serde_json::to_string(&inf).unwrap().contains(r#""tau":null"#));
        assert!(serde_json::from_str::<WireMessage>(r#"{"round":0,"worker":1,"tau":1.0,"velocity":[],"grad":[1]}"#).is_err());
    }
}
