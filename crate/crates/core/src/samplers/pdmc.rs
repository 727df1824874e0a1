use std::cell::Cell;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pdmp::{PhaseState, Skeleton};
use crate::potential::{bps_rate, zigzag_rate, MatrixNorm, Potential};
use crate::rates::{coordinate_affine_bound, simulate_event_time, simulate_exact, EventOutcome, RateBound};
use crate::rng::exp1;
use crate::samplers::{bps_reflect, refresh_velocity, zigzag_flip, JumpKind, JumpMechanism, SamplerSpec};
use crate::scalar::{dot, lit, norm2, norm_inf, positive_part, Real};

/// Horizon for a proposal made outside a run. Large enough that a finite
/// proposal is never cut off in practice; a proposer with no event before it
/// reports `+∞`. Runs cap each proposal at the time they have left instead.
pub const PROPOSAL_HORIZON: f64 = 1e6;

/// Work done while proposing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalStats {
    /// Per-datum partial derivative evaluations.
    pub partial_evals: u64,
    pub thinning_proposals: u64,
}

impl ProposalStats {
    pub fn add(&mut self, other: &ProposalStats) {
        self.partial_evals += other.partial_evals;
        self.thinning_proposals += other.thinning_proposals;
    }
}

/// The earliest event among the mechanisms of a spec and the velocity it
/// would produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<T> {
    pub tau: T,
    pub mechanism: Option<usize>,
    pub new_velocity: Vec<T>,
}

impl<T: Real> Proposal<T> {
    pub fn never(v: &[T]) -> Self {
        Self { tau: T::infinity(), mechanism: None, new_velocity: v.to_vec() }
    }
}

/// Simulates the first event of the superposition of `spec.mechanisms`
/// from `(x, v)`.
///
/// Each mechanism is simulated independently and the earliest time is kept.
/// Mechanisms after the current best are simulated only up to that time.
pub fn propose_event<T, P, R>(
    potential: &P,
    spec: &SamplerSpec<T>,
    x: &[T],
    v: &[T],
    horizon: T,
    rng: &mut R,
    stats: &mut ProposalStats,
) -> Result<Proposal<T>>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    let mut best = T::infinity();
    let mut which = None;
    let mut slopes = None;
    for (j, mech) in spec.mechanisms.iter().enumerate() {
        let cap = horizon.min(best);
        let tau = mechanism_time(potential, spec, mech, x, v, cap, rng, stats, &mut slopes)?;
        if tau < best {
            best = tau;
            which = Some(j);
        }
    }
    let Some(j) = which else {
        return Ok(Proposal::never(v));
    };
    let mut xn = x.to_vec();
    let mut vn = v.to_vec();
    spec.flow.advance(&mut xn, &mut vn, best);
    let new_velocity = apply_kernel(potential, spec, spec.mechanisms[j].kind, &xn, &vn, rng, stats)?;
    Ok(Proposal { tau: best, mechanism: Some(j), new_velocity })
}

/// Velocity after a jump of the given kind at `(x, v)`.
pub fn apply_kernel<T, P, R>(
    potential: &P,
    spec: &SamplerSpec<T>,
    kind: JumpKind,
    x: &[T],
    v: &[T],
    rng: &mut R,
    stats: &mut ProposalStats,
) -> Result<Vec<T>>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    match kind {
        JumpKind::ZigZagFlip(i) => zigzag_flip(v, i),
        JumpKind::BpsReflect => {
            let mut g = vec![T::zero(); x.len()];
            potential.gradient(x, &mut g);
            stats.partial_evals += x.len() as u64 * potential.partial_cost();
            bps_reflect(v, &g, spec.sigma.as_deref())
        }
        JumpKind::Refresh => Ok(refresh_velocity(&spec.velocity, rng)),
    }
}

#[allow(clippy::too_many_arguments)]
fn mechanism_time<T, P, R>(
    potential: &P,
    spec: &SamplerSpec<T>,
    mech: &JumpMechanism<T>,
    x: &[T],
    v: &[T],
    cap: T,
    rng: &mut R,
    stats: &mut ProposalStats,
    slopes: &mut Option<HessianSlopes<T>>,
) -> Result<T>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    let mut tau = match mech.kind {
        JumpKind::ZigZagFlip(k) => {
            if potential.depends_on(k) {
                let out = zigzag_time(potential, spec, x, v, k, cap, rng, stats, slopes)?;
                stats.thinning_proposals += out.proposals_used as u64;
                out.tau
            } else {
                T::infinity()
            }
        }
        JumpKind::BpsReflect => {
            let out = if spec.flow.is_linear() {
                bps_linear_time(potential, spec, x, v, cap, rng, stats)?
            } else {
                boomerang_time(potential, spec, x, v, cap, rng, stats)?
            };
            stats.thinning_proposals += out.proposals_used as u64;
            out.tau
        }
        JumpKind::Refresh => return Ok(simulate_exact(&RateBound::Constant(mech.rate), rng, cap).tau),
    };
    if mech.rate > T::zero() {
        // the constant part is an independent exponential clock with the same kernel
        let e = exp1::<T, _>(rng) / mech.rate;
        if e <= cap && e < tau {
            tau = e;
        }
    }
    Ok(tau)
}

struct HessianSlopes<T> {
    spectral: Option<T>,
    inf: Option<T>,
}

impl<T: Real> HessianSlopes<T> {
    fn new<P: Potential<T> + ?Sized>(potential: &P, v: &[T]) -> Self {
        Self {
            spectral: potential.hessian_bound(MatrixNorm::Spectral).map(|h| h * norm2(v)),
            inf: potential.hessian_bound(MatrixNorm::Inf).map(|h| h * norm_inf(v)),
        }
    }

    /// Smallest available `‖∇²U‖_p ‖v‖_p`.
    fn best(&self) -> Option<T> {
        match (self.spectral, self.inf) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn zigzag_time<T, P, R>(
    potential: &P,
    spec: &SamplerSpec<T>,
    x: &[T],
    v: &[T],
    k: usize,
    cap: T,
    rng: &mut R,
    stats: &mut ProposalStats,
    slopes: &mut Option<HessianSlopes<T>>,
) -> Result<EventOutcome<T>>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    let cost = potential.partial_cost();
    if let Some((g, s)) = potential.affine_partial(x, v, k) {
        stats.partial_evals += cost;
        let bound = RateBound::Affine { b: v[k] * g, a: v[k] * s };
        return Ok(simulate_exact(&bound, rng, cap));
    }
    if !spec.flow.is_linear() {
        return Err(Error::invalid("Zig-Zag flips require the linear flow"));
    }

    let evals = Cell::new(0u64);
    let last = Cell::new((T::nan(), T::zero()));
    let rate_at = |t: T| -> T {
        let (lt, lr) = last.get();
        if lt == t {
            return lr;
        }
        let y = spec.flow.position(x, v, t);
        let r = positive_part(v[k] * potential.partial(&y, k));
        evals.set(evals.get() + cost);
        last.set((t, r));
        r
    };

    let out = if potential.zigzag_envelope(x, v, k).is_some() {
        simulate_event_time(
            |t| rate_at(t),
            |s| {
                let y = spec.flow.position(x, v, s);
                potential.zigzag_envelope(&y, v, k).unwrap_or_else(|| RateBound::Constant(T::infinity()))
            },
            rng,
            cap,
            spec.bound_refresh,
        )?
    } else {
        let h = slopes.get_or_insert_with(|| HessianSlopes::new(potential, v));
        let Some(hv) = h.best() else {
            return Err(Error::invalid(format!("potential provides no rate bound for coordinate {k}")));
        };
        simulate_event_time(
            |t| rate_at(t),
            |s| coordinate_affine_bound(rate_at(s), hv, T::one(), v[k]),
            rng,
            cap,
            spec.bound_refresh,
        )?
    };
    stats.partial_evals += evals.get();
    Ok(out)
}

fn bps_linear_time<T, P, R>(
    potential: &P,
    spec: &SamplerSpec<T>,
    x: &[T],
    v: &[T],
    cap: T,
    rng: &mut R,
    stats: &mut ProposalStats,
) -> Result<EventOutcome<T>>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    let d = x.len();
    let cost = potential.partial_cost();
    let mut exact = Some((T::zero(), T::zero()));
    for k in 0..d {
        match potential.affine_partial(x, v, k) {
            Some((g, s)) => {
                if let Some((b, a)) = exact.as_mut() {
                    *b += v[k] * g;
                    *a += v[k] * s;
                }
            }
            None => {
                exact = None;
                break;
            }
        }
    }
    if let Some((b, a)) = exact {
        stats.partial_evals += d as u64 * cost;
        return Ok(simulate_exact(&RateBound::Affine { b, a }, rng, cap));
    }
    let h = potential
        .hessian_bound(MatrixNorm::Spectral)
        .or_else(|| potential.hessian_bound(MatrixNorm::Inf))
        .ok_or_else(|| Error::invalid("potential provides no Hessian bound for BPS"))?;
    let slope = h * dot(v, v);

    let evals = Cell::new(0u64);
    let last = Cell::new((T::nan(), T::zero()));
    let rate_at = |t: T| -> T {
        let (lt, lr) = last.get();
        if lt == t {
            return lr;
        }
        let y = spec.flow.position(x, v, t);
        let mut g = vec![T::zero(); d];
        potential.gradient(&y, &mut g);
        evals.set(evals.get() + d as u64 * cost);
        let r = positive_part(dot(v, &g));
        last.set((t, r));
        r
    };
    let out = simulate_event_time(
        |t| rate_at(t),
        |s| if slope == T::zero() { RateBound::Constant(rate_at(s)) } else { RateBound::Affine { b: rate_at(s), a: slope } },
        rng,
        cap,
        spec.bound_refresh,
    )?;
    stats.partial_evals += evals.get();
    Ok(out)
}

fn boomerang_time<T, P, R>(
    potential: &P,
    spec: &SamplerSpec<T>,
    x: &[T],
    v: &[T],
    cap: T,
    rng: &mut R,
    stats: &mut ProposalStats,
) -> Result<EventOutcome<T>>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    let d = x.len();
    let cost = potential.partial_cost();
    let h = potential
        .hessian_bound(MatrixNorm::Spectral)
        .or_else(|| potential.hessian_bound(MatrixNorm::Inf))
        .ok_or_else(|| Error::invalid("potential provides no Hessian bound for the Boomerang"))?;
    let evals = Cell::new(0u64);
    // (t, rate, |∇U|, radius)
    let last = Cell::new((T::nan(), T::zero(), T::zero(), T::zero()));
    let eval_at = |t: T| {
        let l = last.get();
        if l.0 == t {
            return l;
        }
        let (mut y, mut w) = (x.to_vec(), v.to_vec());
        spec.flow.advance(&mut y, &mut w, t);
        let mut g = vec![T::zero(); d];
        potential.gradient(&y, &mut g);
        evals.set(evals.get() + d as u64 * cost);
        let l = (t, positive_part(dot(&w, &g)), norm2(&g), norm2(&y) + norm2(&w));
        last.set(l);
        l
    };
    // |x(t)|, |v(t)| ≤ R along the rotation, hence
    // ⟨v(t), ∇U(x(t))⟩ ≤ R (|∇U(x_s)| + 2 H R)
    let two = lit::<T>(2.0);
    let out = simulate_event_time(
        |t| eval_at(t).1,
        |s| {
            let (_, _, gn, r) = eval_at(s);
            RateBound::Constant(r * (gn + two * h * r))
        },
        rng,
        cap,
        spec.bound_refresh,
    )?;
    stats.partial_evals += evals.get();
    Ok(out)
}

/// Counters for one chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdmcStats {
    pub events: u64,
    pub proposals: ProposalStats,
}

/// Single-machine PDMC: repeatedly proposes the next event, moves along the
/// flow and applies the jump, until `horizon`.
pub fn run_pdmc<T, P, R>(potential: &P, spec: &SamplerSpec<T>, init: &PhaseState<T>, horizon: T, rng: &mut R) -> Result<Skeleton<T>>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    run_pdmc_with_stats(potential, spec, init, horizon, rng).map(|(s, _)| s)
}

pub fn run_pdmc_with_stats<T, P, R>(
    potential: &P,
    spec: &SamplerSpec<T>,
    init: &PhaseState<T>,
    horizon: T,
    rng: &mut R,
) -> Result<(Skeleton<T>, PdmcStats)>
where
    T: Real,
    P: Potential<T> + ?Sized,
    R: Rng + ?Sized,
{
    let d = potential.dim();
    init.check_dim(d)?;
    spec.validate(d)?;
    if !(horizon > T::zero()) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let mut skeleton = Skeleton::start(spec.flow.clone(), init);
    let mut stats = PdmcStats::default();
    let (mut x, mut v) = (init.x.clone(), init.v.clone());
    let mut t = T::zero();
    loop {
        let p = propose_event(potential, spec, &x, &v, horizon - t, rng, &mut stats.proposals)?;
        if !p.tau.is_finite() || t + p.tau > horizon {
            break;
        }
        spec.flow.advance(&mut x, &mut v, p.tau);
        t += p.tau;
        v = p.new_velocity;
        skeleton.push(t, x.clone(), v.clone());
        stats.events += 1;
    }
    skeleton.finish(horizon);
    Ok((skeleton, stats))
}

/// `λ(x, v)`: the sum of all mechanism intensities at one state.
pub fn total_event_rate<T: Real, P: Potential<T> + ?Sized>(potential: &P, spec: &SamplerSpec<T>, x: &[T], v: &[T]) -> T {
    spec.mechanisms
        .iter()
        .map(|m| {
            m.rate
                + match m.kind {
                    JumpKind::ZigZagFlip(k) => zigzag_rate(potential, x, v, k),
                    JumpKind::BpsReflect => bps_rate(potential, x, v),
                    JumpKind::Refresh => T::zero(),
                }
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Default initial state: `x = 0`, `v ~ ν`.
pub fn default_init<T: Real, R: Rng + ?Sized>(spec: &SamplerSpec<T>, rng: &mut R) -> PhaseState<T> {
    let d = spec.dim();
    PhaseState { x: vec![T::zero(); d], v: refresh_velocity(&spec.velocity, rng), t: T::zero() }
}
