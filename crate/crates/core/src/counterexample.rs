//! The dyadic counterexample: `Λ = (r_n)`, `α_n = γ_m` on level `m`, with
//! `Σ 2^m γ_m² < ∞` but `Σ_n |α_n|² / |r_n − x| = ∞` for every `x ∈ (−1, 1)`.

use crate::operator::{
    build_operator_spec, CoefficientRule, CoefficientSequence, DiagonalRule, DiagonalSequence, OperatorSpec,
};
use crate::sum::{neumaier, NeumaierSum};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::LN_2;

pub use crate::dyadic::{dyadic_r, dyadic_r_exact, gamma_coeff, split_index};

/// Deepest level [`phi_partial`] will materialize (`2^41` terms).
pub const MAX_PHI_LEVEL: u32 = 40;

/// `ln 2 · γ_m² · 2^{m−1} · (m − 1) = ln 2 · (m − 1) / (2 m ln² m)`.
pub fn chain_increment(m: u32) -> f64 {
    if m < 2 {
        return 0.0;
    }
    let mf = m as f64;
    LN_2 * (mf - 1.0) / (2.0 * mf * mf.ln().powi(2))
}

/// First level `N` at which the bracketing argument applies to `x`: the least
/// `n` with `−1 + 2^{−n} < −|x|`. `None` outside (−1, 1).
pub fn first_level(x: f64) -> Option<u32> {
    if !(x > -1.0 && x < 1.0) {
        return None;
    }
    let y = -x.abs();
    // −1 + 2^{−n} < y  ⇔  2^{−n} < 1 + y; 1 + y is exact when y ≤ −1/2
    let gap = 1.0 + y;
    (0..=1100).find(|&n| (-(n as f64)).exp2() < gap)
}

/// Chain lower bound on `Σ_n |γ_{m(n)}|² / |r_n − x|` over levels `≤ levels`.
/// Returns `(N, ln2 · Σ_{m=N}^{levels} γ_m² 2^{m−1} (m−1))`.
pub fn chain_lower_bound(x: f64, levels: u32) -> (u32, f64) {
    let first = first_level(x).unwrap_or(u32::MAX);
    let lb = neumaier((first..=levels).map(chain_increment));
    (first, lb)
}

/// Least level at which the partial chain bound at `x = 0` exceeds `threshold`.
pub fn lower_bound_crossing(threshold: f64) -> Option<u32> {
    let mut acc = NeumaierSum::new();
    for m in 1..=1_000_000u32 {
        acc.add(chain_increment(m));
        if acc.value() > threshold {
            return Some(m);
        }
    }
    None
}

/// The bracketing offset `k₀` at level `m`: `r_{2^m+k₀−1} ≤ x < r_{2^m+k₀}`,
/// clamped to `[0, 2^m]`, plus whether `x = r_{2^m+k₀−1}` exactly.
pub fn bracket(x: f64, m: u32) -> (u64, bool) {
    assert!(m <= MAX_PHI_LEVEL);
    let size = (1u64 << m) as f64;
    let y = x * size; // exact: scaling by a power of two
    let fl = y.floor();
    let frac = y - fl;
    // x < r_{2^m+k}  ⇔  fl + frac + 2^m − 1 < 2k
    let i = fl as i64 + (1i64 << m) - 1;
    let k0 = i.div_euclid(2) + 1;
    let hit = frac == 0.0 && i.rem_euclid(2) == 0 && (0..(1i64 << m)).contains(&(i / 2));
    (k0.clamp(0, 1i64 << m) as u64, hit)
}

/// One level of the φ computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub k0: u64,
    /// `Σ_k γ_m² / |r_{2^m+k} − x|`.
    pub level_sum: f64,
    /// The chain bound's contribution at this level (0 before `N`).
    pub bound_increment: f64,
    pub phi_partial: f64,
    pub lower_bound: f64,
}

/// Partial sums of `φ(x)` checked against the chain bound level by level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceWitness {
    pub x: f64,
    pub levels: u32,
    pub partial_sum: f64,
    pub paper_lower_bound: f64,
    /// First level of the chain, `None` when it lies beyond `levels`.
    pub first_level: Option<u32>,
    pub k0_trace: Vec<(u32, u64)>,
    pub rows: Vec<LevelRow>,
    /// `x` coincides with this `r_n`.
    pub exact_hit: Option<u64>,
    /// The chain inequality held at every level.
    pub dominates: bool,
    pub note: String,
}

fn level_sum(x: f64, m: u32) -> f64 {
    let g2 = gamma_coeff(m).powi(2);
    if g2 == 0.0 {
        return 0.0;
    }
    let size = 1u64 << m;
    let scale = (-(m as f64)).exp2();
    let chunk = 1u64 << 16;
    let parts: Vec<f64> = (0..size.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(size);
            neumaier((lo..hi).map(|k| {
                let r = (2.0 * k as f64 + 1.0 - size as f64) * scale;
                1.0 / (r - x).abs()
            }))
        })
        .collect();
    g2 * neumaier(parts)
}

/// Exact partial sums of `φ(x) = Σ |α_n|² / |r_n − x|` over levels `0..=max_level`.
pub fn phi_partial(x: f64, max_level: u32) -> Result<DivergenceWitness> {
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!("x = {x} must lie in (−1, 1)")));
    }
    if max_level > MAX_PHI_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "max_level {max_level} exceeds {MAX_PHI_LEVEL}"
        )));
    }
    let first = first_level(x).filter(|&n| n <= max_level);
    let mut rows = Vec::new();
    let mut k0_trace = Vec::new();
    let mut exact_hit = None;
    let mut phi = NeumaierSum::new();
    let mut lb = NeumaierSum::new();
    let mut dominates = true;
    for m in 0..=max_level {
        let (k0, hit) = bracket(x, m);
        k0_trace.push((m, k0));
        // a hit on an index whose coefficient vanishes contributes nothing
        if hit && exact_hit.is_none() && gamma_coeff(m) != 0.0 {
            exact_hit = Some((1u64 << m) + k0 - 1);
        }
        let s = if exact_hit.is_some() { f64::INFINITY } else { level_sum(x, m) };
        let inc = match first {
            Some(n) if m >= n => chain_increment(m),
            _ => 0.0,
        };
        phi.add(s);
        lb.add(inc);
        // compensation turns an infinite term into NaN
        let phi_value = if exact_hit.is_some() { f64::INFINITY } else { phi.value() };
        // the chain bound holds level by level, so the cumulative one does too
        dominates &= s >= inc && phi_value >= lb.value();
        rows.push(LevelRow {
            level: m,
            k0,
            level_sum: s,
            bound_increment: inc,
            phi_partial: phi_value,
            lower_bound: lb.value(),
        });
    }
    let note = match (exact_hit, first) {
        (Some(n), _) => format!("x = r_{n}: φ(x) has an infinite term"),
        (None, None) => format!("insufficient depth: the chain starts beyond level {max_level}"),
        (None, Some(n)) => format!(
            "chain from level {n}: each level contributes at least ln2·(m−1)/(2m ln²m), whose sum diverges"
        ),
    };
    Ok(DivergenceWitness {
        x,
        levels: max_level,
        partial_sum: if exact_hit.is_some() { f64::INFINITY } else { phi.value() },
        paper_lower_bound: lb.value(),
        first_level: first,
        k0_trace,
        rows,
        exact_hit,
        dominates,
        note,
    })
}

/// Level-wise partial sums of `Σ 2^m γ_m²` (finite) and `Σ m 2^m γ_m²` (divergent).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2DivergenceReport {
    pub rows: Vec<L2Row>,
    /// `1/(2 ln²2) + 1/ln 2`: the `m = 2` term plus `∫_2^∞ dt/(t ln²t)`.
    pub l2_certified_bound: f64,
    /// Head plus `∫_M^∞ dt/(t ln²t) = 1/ln M`.
    pub l2_tail_bound: f64,
    /// First level where the divergent series passes [`Self::DIVERGENCE_THRESHOLD`].
    pub threshold_level: Option<u32>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Row {
    pub level: u32,
    pub l2_increment: f64,
    pub l2_partial: f64,
    pub divergent_increment: f64,
    pub divergent_partial: f64,
}

impl L2DivergenceReport {
    pub const DIVERGENCE_THRESHOLD: f64 = 10.0;
}

pub fn verify_l2_vs_divergence(max_level: u32) -> Result<L2DivergenceReport> {
    if max_level < 3 {
        return Err(Error::InvalidArgument("max_level must be at least 3".into()));
    }
    let mut rows = Vec::new();
    let (mut a, mut b) = (NeumaierSum::new(), NeumaierSum::new());
    let mut threshold_level = None;
    for m in 0..=max_level {
        let g2 = gamma_coeff(m).powi(2);
        let l2 = (m as f64).exp2() * g2;
        let dv = m as f64 * l2;
        a.add(l2);
        b.add(dv);
        if threshold_level.is_none() && b.value() > L2DivergenceReport::DIVERGENCE_THRESHOLD {
            threshold_level = Some(m);
        }
        rows.push(L2Row {
            level: m,
            l2_increment: l2,
            l2_partial: a.value(),
            divergent_increment: dv,
            divergent_partial: b.value(),
        });
    }
    let ln2 = LN_2;
    Ok(L2DivergenceReport {
        rows,
        l2_certified_bound: 1.0 / (2.0 * ln2 * ln2) + 1.0 / ln2,
        l2_tail_bound: a.value() + 1.0 / (max_level as f64).ln(),
        threshold_level,
        note: "increments of the second series are 1/ln²m ≥ 1/m for m ≥ 2 once ln²m ≤ m, so it diverges".into(),
    })
}

/// The counterexample as an infinite rule-generated operator.
#[derive(Debug, Clone)]
pub struct Section3Model {
    pub spec: OperatorSpec,
    pub max_level: u32,
    /// `‖u‖²` over levels `≤ max_level`.
    pub l2_partial: f64,
}

impl Section3Model {
    /// Number of indices covered by `max_level`: `2^{M+1} − 1`.
    pub fn probe_depth(&self) -> u64 {
        (1u64 << (self.max_level + 1)) - 1
    }
}

pub fn section3_spec(max_level: u32) -> Result<Section3Model> {
    if !(2..=62).contains(&max_level) {
        return Err(Error::InvalidArgument("max_level must lie in 2..=62".into()));
    }
    let alpha = || CoefficientSequence::rule(CoefficientRule::DyadicSection3 { scale: 1.0.into() });
    let spec = build_operator_spec(DiagonalSequence::rule(DiagonalRule::DyadicSection3), vec![(alpha(), alpha())])?;
    let l2_partial = neumaier((0..=max_level).map(|m| (m as f64).exp2() * gamma_coeff(m).powi(2)));
    Ok(Section3Model {
        spec,
        max_level,
        l2_partial,
    })
}

/// `(level, φ(0) partial, chain bound)` for levels `0..=max_level`.
pub fn growth_table(x: f64, max_level: u32) -> Result<Vec<(u32, f64, f64)>> {
    Ok(phi_partial(x, max_level)?
        .rows
        .into_iter()
        .map(|r| (r.level, r.phi_partial, r.lower_bound))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_at_zero() {
        for m in 1..12 {
            let (k0, hit) = bracket(0.0, m);
            assert_eq!(k0, 1 << (m - 1));
            assert!(!hit || m == 0);
        }
        // x = 0 equals r_1 at level 0
        assert_eq!(bracket(0.0, 0), (1, true));
    }

    #[test]
    fn bracket_matches_scan() {
        for &x in &[-0.9, -0.3, 0.1234, 0.77, 0.999] {
            for m in 0..10u32 {
                let (k0, _) = bracket(x, m);
                let expect = (0..(1u64 << m))
                    .find(|&k| x < dyadic_r((1 << m) + k))
                    .unwrap_or(1 << m);
                assert_eq!(k0, expect, "x={x} m={m}");
            }
        }
    }

    #[test]
    fn first_levels() {
        assert_eq!(first_level(0.0), Some(1));
        assert_eq!(first_level(-0.6), Some(2));
        assert_eq!(first_level(0.999999), Some(20));
        assert_eq!(first_level(1.0), None);
    }

    #[test]
    fn chain_increment_formula() {
        let m = 7u32;
        let direct = LN_2 * gamma_coeff(m).powi(2) * (m as f64 - 1.0).exp2() * (m as f64 - 1.0);
        assert!((direct - chain_increment(m)).abs() < 1e-15);
    }

    #[test]
    fn small_phi_dominates() {
        let w = phi_partial(1.0 / 3.0, 12).unwrap();
        assert!(w.dominates);
        assert!(w.exact_hit.is_none());
    }

    #[test]
    fn zero_is_not_an_infinite_term() {
        // r_1 = 0 carries α_1 = 0
        let w = phi_partial(0.0, 10).unwrap();
        assert!(w.exact_hit.is_none());
        assert!(w.partial_sum.is_finite());
        assert!(w.dominates);
    }

    #[test]
    fn hit_with_nonzero_coefficient_is_infinite() {
        // r_4 = −3/4 sits on level 2, where γ_2 ≠ 0
        let w = phi_partial(-0.75, 4).unwrap();
        assert_eq!(w.exact_hit, Some(4));
        assert_eq!(w.partial_sum, f64::INFINITY);
        assert!(w.rows.iter().all(|r| !r.phi_partial.is_nan()));
    }
}
