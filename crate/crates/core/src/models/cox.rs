use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::GaussianModel;
use crate::potential::Potential;
use crate::rates::RateBound;
use crate::rng::{exp1, uniform};
use crate::scalar::{positive_part, Real};

/// 4-neighbour adjacency of a `side × side` grid, nodes flattened row-major.
pub fn grid_adjacency<T: Real>(side: usize) -> Vec<T> {
    let n = side * side;
    let mut a = vec![T::zero(); n * n];
    for i in 0..side {
        for j in 0..side {
            let u = i * side + j;
            if i + 1 < side {
                let w = u + side;
                a[u * n + w] = T::one();
                a[w * n + u] = T::one();
            }
            if j + 1 < side {
                let w = u + 1;
                a[u * n + w] = T::one();
                a[w * n + u] = T::one();
            }
        }
    }
    a
}

/// `P = β(I − αA)`.
pub fn cox_precision<T: Real>(side: usize, alpha: T, beta: T) -> Vec<T> {
    let n = side * side;
    let a = grid_adjacency::<T>(side);
    (0..n * n)
        .map(|idx| {
            let diag = if idx / n == idx % n { T::one() } else { T::zero() };
            beta * (diag - alpha * a[idx])
        })
        .collect()
}

/// Spatial partition of the grid: quadrants for four workers on an even
/// grid, contiguous row-major blocks otherwise.
pub fn grid_partition(side: usize, workers: usize) -> Result<Vec<Vec<usize>>> {
    let n = side * side;
    if workers == 0 || workers > n {
        return Err(Error::invalid(format!("cannot split {n} nodes across {workers} workers")));
    }
    if workers == 4 && side % 2 == 0 {
        let h = side / 2;
        let mut parts = vec![Vec::new(); 4];
        for i in 0..side {
            for j in 0..side {
                parts[(i / h) * 2 + j / h].push(i * side + j);
            }
        }
        return Ok(parts);
    }
    Ok(split_ranges(n, workers).into_iter().map(|r| r.collect()).collect())
}

/// Near-equal contiguous ranges; the first `n % m` get one extra element.
pub fn split_ranges(n: usize, m: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / m;
    let extra = n % m;
    let mut start = 0;
    (0..m)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Log-Gaussian Cox model on a square grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel<T> {
    pub side: usize,
    pub counts: Vec<T>,
    pub alpha: T,
    pub beta: T,
    pub partition: Vec<Vec<usize>>,
}

impl<T: Real> CoxModel<T> {
    pub fn new(side: usize, counts: Vec<T>, alpha: T, beta: T, partition: Vec<Vec<usize>>) -> Result<Self> {
        let n = side * side;
        if side == 0 {
            return Err(Error::invalid("grid side must be positive"));
        }
        if counts.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: counts.len() });
        }
        if counts.iter().any(|&c| c < T::zero() || c.fract() != T::zero()) {
            return Err(Error::Data("counts must be nonnegative integers".into()));
        }
        let mut seen = vec![false; n];
        for part in &partition {
            for &k in part {
                if k >= n || seen[k] {
                    return Err(Error::invalid("partition must cover every node exactly once"));
                }
                seen[k] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("partition must cover every node exactly once"));
        }
        check_prior(side, alpha, beta)?;
        Ok(Self { side, counts, alpha, beta, partition })
    }

    pub fn nodes(&self) -> usize {
        self.side * self.side
    }

    pub fn workers(&self) -> usize {
        self.partition.len()
    }

    /// Server-held prior `U₀(x) = ½ β xᵀ(I − αA)x`.
    pub fn prior(&self) -> GaussianModel<T> {
        GaussianModel::new(vec![T::zero(); self.nodes()], cox_precision(self.side, self.alpha, self.beta))
            .expect("checked at construction")
    }

    /// Likelihood slice of worker `m` (zero-based).
    pub fn worker_potential(&self, m: usize) -> CoxLikelihood<T> {
        let mut owned = vec![false; self.nodes()];
        for &k in &self.partition[m] {
            owned[k] = true;
        }
        CoxLikelihood { counts: self.counts.clone(), owned }
    }
}

/// Errors when `β(I − αA)` is not positive definite on the grid.
pub fn check_prior<T: Real>(side: usize, alpha: T, beta: T) -> Result<()> {
    if !(beta > T::zero()) {
        return Err(Error::invalid("beta must be positive"));
    }
    let p = cox_precision(side, alpha, beta);
    crate::linalg::cholesky(&p, side * side).map(|_| ()).map_err(|e| match e {
        Error::NotPositiveDefinite(msg) => Error::NotPositiveDefinite(format!(
            "Cox prior precision beta(I - alpha A) with alpha={} on a {side}x{side} grid: {msg}",
            alpha
        )),
        other => other,
    })
}

/// `U_m(x) = Σ_{k ∈ V_m} e^{x_k} − y_k x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxLikelihood<T> {
    counts: Vec<T>,
    owned: Vec<bool>,
}

impl<T: Real> CoxLikelihood<T> {
    pub fn owns(&self, k: usize) -> bool {
        self.owned.get(k).copied().unwrap_or(false)
    }

    pub fn owned_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.owned.iter().enumerate().filter(|(_, &o)| o).map(|(k, _)| k)
    }

    pub fn count(&self, k: usize) -> T {
        self.counts[k]
    }
}

/// `e^{x_k} − y_k` for an owned node.
pub fn cox_partial<T: Real>(worker: &CoxLikelihood<T>, worker_id: usize, x: &[T], k: usize) -> Result<T> {
    if !worker.owns(k) {
        return Err(Error::NodeNotOwned { node: k, worker: worker_id });
    }
    Ok(x[k].exp() - worker.counts[k])
}

impl<T: Real> Potential<T> for CoxLikelihood<T> {
    fn dim(&self) -> usize {
        self.owned.len()
    }

    fn value(&self, x: &[T]) -> T {
        self.owned_nodes().map(|k| x[k].exp() - self.counts[k] * x[k]).sum()
    }

    fn partial(&self, x: &[T], k: usize) -> T {
        if self.owned[k] {
            x[k].exp() - self.counts[k]
        } else {
            T::zero()
        }
    }

    fn depends_on(&self, k: usize) -> bool {
        self.owned[k]
    }

    /// `(−y_k v_k)_+ + (v_k e^{x_k + v_k t})_+`.
    fn zigzag_envelope(&self, x: &[T], v: &[T], k: usize) -> Option<RateBound<T>> {
        if !self.owned[k] {
            return Some(RateBound::zero());
        }
        Some(RateBound::Sum(vec![
            RateBound::Constant(positive_part(-self.counts[k] * v[k])),
            RateBound::ExpLinear { c: v[k], x0: x[k], v0: v[k] },
        ]))
    }
}

/// One accepted local switch: time from the start state and node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxSwitch<T> {
    pub tau: T,
    pub node: Option<usize>,
    pub proposals: usize,
}

/// The six-step thinning recipe for a Cox worker with Zig-Zag speeds
/// `|v_k| = 1`: simulate both envelope pieces for every owned node, take
/// the earliest, move there, and accept with probability
/// `(T₁ + T₂)_+ / ((T₁)_+ + (T₂)_+)`; otherwise repeat from the new point.
pub fn cox_propose_event<T: Real, R: Rng + ?Sized>(
    worker: &CoxLikelihood<T>,
    x: &[T],
    v: &[T],
    horizon: T,
    rng: &mut R,
) -> Result<CoxSwitch<T>> {
    if v.iter().any(|&c| c.abs() != T::one()) {
        return Err(Error::invalid("the Cox recipe requires Zig-Zag velocities"));
    }
    let mut xl = x.to_vec();
    let mut elapsed = T::zero();
    let mut proposals = 0;
    loop {
        let mut best = T::infinity();
        let mut node = None;
        for k in worker.owned_nodes() {
            let yv = worker.counts[k] * v[k];
            let t1 = if yv < T::zero() { exp1::<T, _>(rng) / -yv } else { T::infinity() };
            let t2 = if v[k] > T::zero() {
                let e: T = exp1(rng);
                (xl[k].exp() + e).ln() - xl[k]
            } else {
                T::infinity()
            };
            let tk = t1.min(t2);
            if tk < best {
                best = tk;
                node = Some(k);
            }
        }
        let Some(l) = node else {
            return Ok(CoxSwitch { tau: T::infinity(), node: None, proposals });
        };
        if elapsed + best > horizon {
            return Ok(CoxSwitch { tau: T::infinity(), node: None, proposals });
        }
        for (xi, &vi) in xl.iter_mut().zip(v) {
            *xi += vi * best;
        }
        elapsed += best;
        proposals += 1;
        let t1 = -worker.counts[l] * v[l];
        let t2 = v[l] * xl[l].exp();
        let denom = positive_part(t1) + positive_part(t2);
        let ratio = if denom > T::zero() { positive_part(t1 + t2) / denom } else { T::zero() };
        let u: T = uniform(rng);
        if u < ratio {
            return Ok(CoxSwitch { tau: elapsed, node: Some(l), proposals });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn adjacency_degrees() {
        let a = grid_adjacency::<f64>(3);
        let deg: Vec<f64> = (0..9).map(|u| a[u * 9..(u + 1) * 9].iter().sum()).collect();
        assert_eq!(deg, vec![2.0, 3.0, 2.0, 3.0, 4.0, 3.0, 2.0, 3.0, 2.0]);
    }

    #[test]
    fn quadrant_partition() {
        let p = grid_partition(4, 4).unwrap();
        assert_eq!(p[0], vec![0, 1, 4, 5]);
        assert_eq!(p[3], vec![10, 11, 14, 15]);
        let p = grid_partition(3, 2).unwrap();
        assert_eq!(p[0].len(), 5);
        assert!(grid_partition(2, 5).is_err());
    }

    #[test]
    fn partial_examples() {
        let m = CoxModel::new(2, vec![1.0, 0.0, 2.0, 0.0], 0.1, 1.0, grid_partition(2, 2).unwrap()).unwrap();
        let w = m.worker_potential(0);
        let x = [0.0; 4];
        assert_eq!(cox_partial(&w, 1, &x, 0).unwrap(), 0.0);
        assert_eq!(cox_partial(&w, 1, &x, 1).unwrap(), 1.0);
        assert!(matches!(cox_partial(&w, 1, &x, 2), Err(Error::NodeNotOwned { node: 2, worker: 1 })));
    }

    #[test]
    fn indefinite_prior_rejected() {
        // λ_max(A) on an 8×8 grid is 4 cos(π/9) ≈ 3.76 > 1/0.3
        let err = check_prior(8, 0.3, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(_)));
        assert!(check_prior(4, 0.1, 1.0).is_ok());
    }

    #[test]
    fn no_switch_when_moving_down_without_counts() {
        let m = CoxModel::new(2, vec![0.0; 4], 0.1, 1.0, grid_partition(2, 1).unwrap()).unwrap();
        let w = m.worker_potential(0);
        let mut rng = stream(1, 1);
        let s = cox_propose_event::<f64, _>(&w, &[0.0; 4], &[-1.0; 4], 1e6, &mut rng).unwrap();
        assert!(s.tau.is_infinite());
    }

    #[test]
    fn first_envelope_is_exponential() {
        // y = 2, v = −1: only the constant piece (−y v)_+ = 2 is active and
        // the true rate (−e^{x−t} + 2)_+ is close to it for very negative x
        let m = CoxModel::new(1, vec![2.0], 0.1, 1.0, vec![vec![0]]).unwrap();
        let w = m.worker_potential(0);
        let mut rng = stream(2, 1);
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|_| cox_propose_event(&w, &[-30.0], &[-1.0], 1e6, &mut rng).unwrap().tau)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }
}
