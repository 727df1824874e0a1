//! The potential interface consumed by the samplers.

use std::sync::Arc;

use crate::models::GaussianModel;
use crate::rates::RateBound;
use crate::scalar::{positive_part, Real};

/// Induced matrix norms for uniform Hessian bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixNorm {
    Spectral,
    Inf,
}

/// A (slice of a) negative log density `U` with the information needed to
/// simulate event times along the flow.
pub trait Potential<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// `U(x)` up to an additive constant.
    fn value(&self, x: &[T]) -> T;

    /// `∂_k U(x)`.
    fn partial(&self, x: &[T], k: usize) -> T;

    fn gradient(&self, x: &[T], out: &mut [T]) {
        for (k, g) in out.iter_mut().enumerate() {
            *g = self.partial(x, k);
        }
    }

    /// Per-datum evaluations spent on one call to [`Potential::partial`].
    fn partial_cost(&self) -> u64 {
        1
    }

    /// False when `∂_k U ≡ 0`.
    fn depends_on(&self, _k: usize) -> bool {
        true
    }

    /// A uniform bound on `sup_x ‖∇²U(x)‖` in the given norm.
    fn hessian_bound(&self, _norm: MatrixNorm) -> Option<T> {
        None
    }

    /// `(∂_k U(x), (∇²U v)_k)` when `∂_k U` is affine along every line.
    fn affine_partial(&self, _x: &[T], _v: &[T], _k: usize) -> Option<(T, T)> {
        None
    }

    /// Model-specific envelope of `t ↦ (v_k ∂_k U(x + tv))_+`.
    fn zigzag_envelope(&self, _x: &[T], _v: &[T], _k: usize) -> Option<RateBound<T>> {
        None
    }

    /// Sets the weight of a held prior share. Returns false when there is none.
    fn set_prior_weight(&mut self, _w: T) -> bool {
        false
    }
}

impl<T: Real, P: Potential<T> + ?Sized> Potential<T> for Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[T]) -> T {
        (**self).value(x)
    }
    fn partial(&self, x: &[T], k: usize) -> T {
        (**self).partial(x, k)
    }
    fn gradient(&self, x: &[T], out: &mut [T]) {
        (**self).gradient(x, out)
    }
    fn partial_cost(&self) -> u64 {
        (**self).partial_cost()
    }
    fn depends_on(&self, k: usize) -> bool {
        (**self).depends_on(k)
    }
    fn hessian_bound(&self, norm: MatrixNorm) -> Option<T> {
        (**self).hessian_bound(norm)
    }
    fn affine_partial(&self, x: &[T], v: &[T], k: usize) -> Option<(T, T)> {
        (**self).affine_partial(x, v, k)
    }
    fn zigzag_envelope(&self, x: &[T], v: &[T], k: usize) -> Option<RateBound<T>> {
        (**self).zigzag_envelope(x, v, k)
    }
}

/// A likelihood slice plus a weighted share `w · U₀` of a Gaussian prior.
///
/// The weight can be changed between rounds, which is how prior
/// redistribution reassigns prior mass to workers.
#[derive(Debug, Clone)]
pub struct PriorShare<T, L> {
    pub likelihood: L,
    prior: Option<Arc<GaussianModel<T>>>,
    weight: T,
}

impl<T: Real, L: Potential<T>> PriorShare<T, L> {
    pub fn without_prior(likelihood: L) -> Self {
        Self { likelihood, prior: None, weight: T::zero() }
    }

    pub fn new(likelihood: L, prior: Arc<GaussianModel<T>>, weight: T) -> Self {
        Self { likelihood, prior: Some(prior), weight }
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn has_prior(&self) -> bool {
        self.prior.is_some()
    }

    fn active_prior(&self) -> Option<&GaussianModel<T>> {
        self.prior.as_deref().filter(|_| self.weight != T::zero())
    }
}

impl<T: Real, L: Potential<T>> Potential<T> for PriorShare<T, L> {
    fn dim(&self) -> usize {
        self.likelihood.dim()
    }

    fn value(&self, x: &[T]) -> T {
        let mut u = self.likelihood.value(x);
        if let Some(p) = self.active_prior() {
            u += self.weight * p.value(x);
        }
        u
    }

    fn partial(&self, x: &[T], k: usize) -> T {
        let mut g = self.likelihood.partial(x, k);
        if let Some(p) = self.active_prior() {
            g += self.weight * p.partial(x, k);
        }
        g
    }

    fn partial_cost(&self) -> u64 {
        self.likelihood.partial_cost()
    }

    fn depends_on(&self, k: usize) -> bool {
        self.likelihood.depends_on(k) || self.active_prior().is_some()
    }

    fn hessian_bound(&self, norm: MatrixNorm) -> Option<T> {
        let h = self.likelihood.hessian_bound(norm)?;
        match self.active_prior() {
            Some(p) => Some(h + self.weight.abs() * p.hessian_bound(norm)?),
            None => Some(h),
        }
    }

    fn affine_partial(&self, x: &[T], v: &[T], k: usize) -> Option<(T, T)> {
        let (g, s) = self.likelihood.affine_partial(x, v, k)?;
        match self.active_prior() {
            Some(p) => {
                let (pg, ps) = p.affine_partial(x, v, k)?;
                Some((g + self.weight * pg, s + self.weight * ps))
            }
            None => Some((g, s)),
        }
    }

    fn set_prior_weight(&mut self, w: T) -> bool {
        if self.prior.is_some() {
            self.weight = w;
        }
        self.prior.is_some()
    }

    fn zigzag_envelope(&self, x: &[T], v: &[T], k: usize) -> Option<RateBound<T>> {
        let own = self.likelihood.zigzag_envelope(x, v, k)?;
        match self.active_prior() {
            Some(p) => {
                // (v_k(∂L + w∂U₀))_+ ≤ (v_k ∂L)_+ + (w v_k ∂U₀)_+ for w ≥ 0
                let (pg, ps) = p.affine_partial(x, v, k)?;
                let w = self.weight;
                if w < T::zero() {
                    return None;
                }
                Some(RateBound::Sum(vec![own, RateBound::Affine { b: w * v[k] * pg, a: w * v[k] * ps }]))
            }
            None => Some(own),
        }
    }
}

/// Sum of several potentials; used for the full posterior.
#[derive(Clone)]
pub struct SumPotential<T> {
    parts: Vec<Arc<dyn Potential<T>>>,
}

impl<T: Real> SumPotential<T> {
    pub fn new(parts: Vec<Arc<dyn Potential<T>>>) -> Self {
        assert!(!parts.is_empty(), "SumPotential needs at least one part");
        Self { parts }
    }
}

impl<T: Real> Potential<T> for SumPotential<T> {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }
    fn value(&self, x: &[T]) -> T {
        self.parts.iter().map(|p| p.value(x)).sum()
    }
    fn partial(&self, x: &[T], k: usize) -> T {
        self.parts.iter().map(|p| p.partial(x, k)).sum()
    }
    fn partial_cost(&self) -> u64 {
        self.parts.iter().map(|p| p.partial_cost()).sum()
    }
    fn depends_on(&self, k: usize) -> bool {
        self.parts.iter().any(|p| p.depends_on(k))
    }
    fn hessian_bound(&self, norm: MatrixNorm) -> Option<T> {
        self.parts.iter().map(|p| p.hessian_bound(norm)).sum()
    }
    fn affine_partial(&self, x: &[T], v: &[T], k: usize) -> Option<(T, T)> {
        let mut acc = (T::zero(), T::zero());
        for p in &self.parts {
            let (g, s) = p.affine_partial(x, v, k)?;
            acc.0 += g;
            acc.1 += s;
        }
        Some(acc)
    }
    fn zigzag_envelope(&self, x: &[T], v: &[T], k: usize) -> Option<RateBound<T>> {
        // (Σ aᵢ)_+ ≤ Σ (aᵢ)_+ ; parts without a custom envelope fall back to exact affine rates.
        let mut parts = Vec::with_capacity(self.parts.len());
        for p in &self.parts {
            if let Some(env) = p.zigzag_envelope(x, v, k) {
                parts.push(env);
            } else {
                let (g, s) = p.affine_partial(x, v, k)?;
                parts.push(RateBound::Affine { b: v[k] * g, a: v[k] * s });
            }
        }
        Some(RateBound::Sum(parts))
    }
}

/// Canonical Zig-Zag rate `(v_k ∂_k U(x))_+` for coordinate `k`.
pub fn zigzag_rate<T: Real, P: Potential<T> + ?Sized>(potential: &P, x: &[T], v: &[T], k: usize) -> T {
    positive_part(v[k] * potential.partial(x, k))
}

/// Canonical BPS rate `⟨v, ∇U(x)⟩_+`.
pub fn bps_rate<T: Real, P: Potential<T> + ?Sized>(potential: &P, x: &[T], v: &[T]) -> T {
    let mut g = vec![T::zero(); x.len()];
    potential.gradient(x, &mut g);
    positive_part(crate::scalar::dot(v, &g))
}
