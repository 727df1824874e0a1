use rand::Rng;

use crate::error::{Error, Result};
use crate::diagnostics::ks_one_sample;
use crate::potential::Potential;
use crate::samplers::{propose_event, total_event_rate, ProposalStats, SamplerSpec, PROPOSAL_HORIZON};

/// `Λ(t) = ∫₀ᵗ λ(s) ds` tabulated by the trapezoid rule on a uniform grid,
/// giving the first-arrival law `P(τ ≤ t) = 1 − e^{−Λ(t)}`.
#[derive(Debug, Clone)]
pub struct IntegratedRate {
    step: f64,
    cumulative: Vec<f64>,
}

impl IntegratedRate {
    pub fn new(rate: impl Fn(f64) -> f64, t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0) || steps == 0 {
            return Err(Error::invalid("integration range must be positive"));
        }
        let step = t_max / steps as f64;
        let mut cumulative = Vec::with_capacity(steps + 1);
        cumulative.push(0.0);
        let mut prev = rate(0.0);
        for i in 1..=steps {
            let next = rate(i as f64 * step);
            let last = *cumulative.last().expect("nonempty");
            cumulative.push(last + 0.5 * step * (prev + next));
            prev = next;
        }
        Ok(Self { step, cumulative })
    }

    /// `Λ(t)`, linear between grid points and flat beyond the range.
    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let pos = t / self.step;
        let i = pos.floor() as usize;
        if i + 1 >= self.cumulative.len() {
            return *self.cumulative.last().expect("nonempty");
        }
        let w = pos - i as f64;
        self.cumulative[i] * (1.0 - w) + self.cumulative[i + 1] * w
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - (-self.at(t)).exp()
    }
}

/// KS distance between `n` simulated next-event times from `(x, v)` and the
/// law obtained by integrating the exact total rate along the flow.
pub fn event_time_ks<P, R>(potential: &P, spec: &SamplerSpec<f64>, x: &[f64], v: &[f64], n: usize, rng: &mut R) -> Result<f64>
where
    P: Potential<f64> + ?Sized,
    R: Rng + ?Sized,
{
    let mut stats = ProposalStats::default();
    let mut taus = Vec::with_capacity(n);
    for _ in 0..n {
        let tau = propose_event(potential, spec, x, v, PROPOSAL_HORIZON, rng, &mut stats)?.tau;
        if !tau.is_finite() {
            return Err(Error::invalid("event time beyond the proposal horizon"));
        }
        taus.push(tau);
    }
    let t_max = taus.iter().copied().fold(0.0, f64::max) * 1.001;
    let law = IntegratedRate::new(
        |t| {
            let (mut y, mut w) = (x.to_vec(), v.to_vec());
            spec.flow.advance(&mut y, &mut w, t);
            total_event_rate(potential, spec, &y, &w)
        },
        t_max,
        20_000,
    )?;
    ks_one_sample(&taus, |t| law.cdf(t))
}
