use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::io::format_decimal;
use crate::pdmp::{Flow, Observable, PhaseState};
use crate::scalar::{lit, to_f64, Real};

/// One event point `(T_k, X_k, V_k)`; `v` is the velocity after the jump.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPoint<T> {
    pub t: T,
    pub x: Vec<T>,
    pub v: Vec<T>,
}

/// The ordered event points of a trajectory up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton<T> {
    pub points: Vec<SkeletonPoint<T>>,
    pub flow: Flow<T>,
    pub horizon: T,
}

impl<T: Real> Skeleton<T> {
    /// Starts a skeleton at `T_0 = 0` from `init`.
    pub fn start(flow: Flow<T>, init: &PhaseState<T>) -> Self {
        Self {
            points: vec![SkeletonPoint { t: T::zero(), x: init.x.clone(), v: init.v.clone() }],
            flow,
            horizon: T::zero(),
        }
    }

    pub fn from_points(flow: Flow<T>, points: Vec<SkeletonPoint<T>>, horizon: T) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptyInput("skeleton"));
        };
        if first.t != T::zero() {
            return Err(Error::invalid("skeleton must start at time 0"));
        }
        let d = first.x.len();
        for w in points.windows(2) {
            if w[1].t <= w[0].t {
                return Err(Error::invalid("skeleton times must be strictly increasing"));
            }
        }
        for p in &points {
            if p.x.len() != d || p.v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.x.len().max(p.v.len()) });
            }
        }
        let last = points.last().map(|p| p.t).unwrap_or_else(T::zero);
        if horizon < last {
            return Err(Error::invalid("horizon precedes the last event"));
        }
        Ok(Self { points, flow, horizon })
    }

    pub fn dim(&self) -> usize {
        self.points[0].x.len()
    }

    /// Number of velocity events (points after the initial one).
    pub fn event_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub(crate) fn push(&mut self, t: T, x: Vec<T>, v: Vec<T>) {
        debug_assert!(t > self.points.last().map(|p| p.t).unwrap_or_else(T::zero));
        self.points.push(SkeletonPoint { t, x, v });
    }

    pub(crate) fn finish(&mut self, horizon: T) {
        self.horizon = horizon;
    }

    /// State of the continuous trajectory at `time` (clamped to the horizon).
    pub fn state_at(&self, time: T) -> PhaseState<T> {
        let time = time.min(self.horizon).max(T::zero());
        let k = self.points.partition_point(|p| p.t <= time).saturating_sub(1);
        let p = &self.points[k];
        let mut x = p.x.clone();
        let mut v = p.v.clone();
        self.flow.advance(&mut x, &mut v, time - p.t);
        PhaseState { x, v, t: time }
    }

    /// Writes the `t,x1..xd,v1..vd` CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.dim();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.extend((1..=d).map(|i| format!("v{i}")));
        out.write_record(&header)?;
        for p in &self.points {
            let row = std::iter::once(p.t)
                .chain(p.x.iter().copied())
                .chain(p.v.iter().copied())
                .map(|z| format_decimal(to_f64(z)));
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a skeleton CSV. When `horizon` is `None` the last event time is used.
    pub fn read_csv<R: Read>(r: R, flow: Flow<T>, horizon: Option<T>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || header.len() % 2 == 0 || &header[0] != "t" {
            return Err(Error::Data(format!("unexpected skeleton header {header:?}")));
        }
        let d = (header.len() - 1) / 2;
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map(lit::<T>))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| Error::Data(format!("bad number in skeleton row: {e}")))?;
            if vals.len() != 2 * d + 1 {
                return Err(Error::DimensionMismatch { expected: 2 * d + 1, got: vals.len() });
            }
            points.push(SkeletonPoint { t: vals[0], x: vals[1..=d].to_vec(), v: vals[d + 1..].to_vec() });
        }
        let last = points.last().map(|p| p.t).unwrap_or_else(T::zero);
        Self::from_points(flow, points, horizon.unwrap_or(last))
    }
}

// Five-point Gauss–Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn segment_integral<T: Real>(flow: &Flow<T>, h: &Observable<T>, x: &[T], v: &[T], len: T) -> T {
    if flow.is_linear() {
        if let Some(exact) = h.linear_segment_integral(x, v, len) {
            return exact;
        }
    }
    let half = len / lit(2.0);
    GL5.iter()
        .map(|&(node, w)| {
            let s = half * (T::one() + lit(node));
            lit::<T>(w) * h.eval(&flow.position(x, v, s))
        })
        .sum::<T>()
        * half
}

/// `(1/T) ∫₀ᵀ h(X(s)) ds`, segment by segment.
pub fn trajectory_integrate<T: Real>(skeleton: &Skeleton<T>, h: &Observable<T>) -> Result<T> {
    if skeleton.points.is_empty() {
        return Err(Error::EmptyInput("skeleton"));
    }
    if skeleton.horizon <= T::zero() {
        return Err(Error::invalid("skeleton horizon must be positive"));
    }
    let n = skeleton.points.len();
    let mut total = T::zero();
    for (k, p) in skeleton.points.iter().enumerate() {
        let end = if k + 1 < n { skeleton.points[k + 1].t } else { skeleton.horizon };
        let len = end - p.t;
        if len > T::zero() {
            total += segment_integral(&skeleton.flow, h, &p.x, &p.v, len);
        }
    }
    Ok(total / skeleton.horizon)
}

/// States at `0, δ, 2δ, … ≤ T`, each flowed from the latest preceding event.
pub fn trajectory_discretize<T: Real>(skeleton: &Skeleton<T>, delta: T) -> Result<Vec<PhaseState<T>>> {
    if !(delta > T::zero()) {
        return Err(Error::invalid("discretization step must be positive"));
    }
    if skeleton.points.is_empty() {
        return Err(Error::EmptyInput("skeleton"));
    }
    let steps = (skeleton.horizon / delta + lit(1e-9)).floor().to_usize().unwrap_or(0);
    let mut out = Vec::with_capacity(steps + 1);
    let mut k = 0;
    for j in 0..=steps {
        let time = delta * T::from_usize(j).unwrap();
        while k + 1 < skeleton.points.len() && skeleton.points[k + 1].t <= time {
            k += 1;
        }
        let p = &skeleton.points[k];
        let mut x = p.x.clone();
        let mut v = p.v.clone();
        skeleton.flow.advance(&mut x, &mut v, time - p.t);
        out.push(PhaseState { x, v, t: time });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(horizon: f64) -> Skeleton<f64> {
        let init = PhaseState::new(vec![0.0], vec![1.0]).unwrap();
        let mut s = Skeleton::start(Flow::Linear, &init);
        s.finish(horizon);
        s
    }

    #[test]
    fn integrate_constant_linear_and_square() {
        let s = ramp(2.0);
        assert_eq!(trajectory_integrate(&s, &Observable::constant(1.0)).unwrap(), 1.0);
        assert!((trajectory_integrate(&s, &Observable::coordinate(0)).unwrap() - 1.0).abs() < 1e-15);
        let sq = trajectory_integrate(&s, &Observable::square(0)).unwrap();
        assert!((sq - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_closed_form_on_cubic() {
        let s = ramp(2.0);
        let cube = Observable::function(|x: &[f64]| x[0].powi(3));
        // (1/2) ∫₀² s³ ds = 2
        assert!((trajectory_integrate(&s, &cube).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn discretize_grid() {
        let s = ramp(1.0);
        let pts = trajectory_discretize(&s, 0.25).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.x[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let only = trajectory_discretize(&s, 3.0).unwrap();
        assert_eq!(only.len(), 1);
        assert_eq!(only[0].x, vec![0.0]);
        assert!(trajectory_discretize(&s, 0.0).is_err());
        assert!(trajectory_discretize(&s, -1.0).is_err());
    }

    #[test]
    fn discretize_across_event() {
        let init = PhaseState::new(vec![0.0], vec![1.0]).unwrap();
        let mut s = Skeleton::start(Flow::Linear, &init);
        s.push(0.5, vec![0.5], vec![-1.0]);
        s.finish(1.0);
        let pts = trajectory_discretize(&s, 0.25).unwrap();
        let direct = |t: f64| if t <= 0.5 { t } else { 0.5 - (t - 0.5) };
        for p in &pts {
            assert!((p.x[0] - direct(p.t)).abs() < 1e-15, "t={}", p.t);
        }
        assert_eq!(pts[3].v, vec![-1.0]);
    }

    #[test]
    fn from_points_validates() {
        let p = |t: f64| SkeletonPoint { t, x: vec![0.0], v: vec![1.0] };
        assert!(Skeleton::from_points(Flow::Linear, vec![p(0.0), p(1.0)], 2.0).is_ok());
        assert!(Skeleton::from_points(Flow::Linear, vec![p(0.0), p(1.0), p(1.0)], 2.0).is_err());
        assert!(Skeleton::from_points(Flow::Linear, vec![p(0.5)], 2.0).is_err());
        assert!(Skeleton::from_points(Flow::Linear, vec![p(0.0), p(3.0)], 2.0).is_err());
        assert!(Skeleton::<f64>::from_points(Flow::Linear, vec![], 2.0).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let init = PhaseState::new(vec![0.1, -2.0 / 3.0], vec![1.0, -1.0]).unwrap();
        let mut s = Skeleton::start(Flow::Linear, &init);
        s.push(0.123456789012345678, vec![1e-7, 12345.678901234567], vec![-1.0, -1.0]);
        s.finish(0.5);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2,v1,v2\n"));
        assert!(!text.contains('e'), "positional notation only: {text}");
        let back = Skeleton::read_csv(&buf[..], Flow::Linear, Some(0.5)).unwrap();
        assert_eq!(back, s);
    }
}
