use super::{eigenvalues, norm2};
use crate::contour::{ContourCurve, Orientation, Piece};
use crate::quad::gauss_legendre;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Minimum allowed distance between an eigenvalue and the curve.
const CURVE_CLEARANCE: f64 = 1e-8;
/// Successive doublings must agree to this (spectral norm).
const PLATEAU: f64 = 1e-10;
const MAX_NODES: usize = 4096;
/// Bisection depth limit for quadrature panels.
const MAX_PANEL_DEPTH: u32 = 48;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszProjection {
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub matrix: DMatrix<C64>,
    pub curve: ContourCurve,
    /// Gauss–Legendre nodes per panel at the plateau.
    pub quadrature_nodes: usize,
    /// `‖P² − P‖`
    pub idempotency_defect: f64,
    /// `‖(I − P) T P‖ / ‖T‖`
    pub invariance_defect: f64,
    pub rank_estimate: usize,
    /// `‖P_{2n} − P_n‖` at the last doubling.
    pub plateau_change: f64,
}

impl RieszProjection {
    /// Recomputes `(‖P² − P‖, ‖(I − P)TP‖/‖T‖)` from the stored matrix.
    pub fn defects(&self, t: &DMatrix<C64>) -> (f64, f64) {
        defects(&self.matrix, t)
    }
}

fn defects(p: &DMatrix<C64>, t: &DMatrix<C64>) -> (f64, f64) {
    let d = p.nrows();
    let idem = norm2(&(p * p - p));
    let eye = DMatrix::<C64>::identity(d, d);
    let tn = norm2(t);
    let inv = if tn == 0.0 { 0.0 } else { norm2(&((eye - p) * t * p)) / tn };
    (idem, inv)
}

fn rank_estimate(p: &DMatrix<C64>) -> usize {
    if p.is_empty() {
        return 0;
    }
    let sv = p.clone().singular_values();
    let cut = 1e-6 * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Parameter panels of `piece`, each no longer than the distance from its
/// midpoint to the nearest eigenvalue, so every panel sees its singularities
/// at a fixed relative distance.
fn panels(piece: &Piece, eigs: &[C64]) -> Vec<(f64, f64)> {
    let len = piece.length();
    let mut out = Vec::new();
    let mut stack = vec![(0.0, 1.0, 0u32)];
    while let Some((a, b, depth)) = stack.pop() {
        let mid = piece.point(0.5 * (a + b));
        let near = eigs.iter().map(|z| (z - mid).norm()).fold(f64::INFINITY, f64::min);
        if len * (b - a) <= near || depth >= MAX_PANEL_DEPTH {
            out.push((a, b));
        } else {
            let m = 0.5 * (a + b);
            stack.push((m, b, depth + 1));
            stack.push((a, m, depth + 1));
        }
    }
    out
}

/// Nodes `(ξ, w·ξ')` with `n` Gauss–Legendre points per panel.
fn nodes(curve: &ContourCurve, panels: &[Vec<(f64, f64)>], n: usize) -> Vec<(C64, C64)> {
    let gl = gauss_legendre(n);
    let mut out = Vec::new();
    for (piece, cuts) in curve.pieces.iter().zip(panels) {
        for &(a, b) in cuts {
            let half = 0.5 * (b - a);
            for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                let t = a + half * (x + 1.0);
                out.push((piece.point(t), piece.derivative(t) * (w * half)));
            }
        }
    }
    out
}

fn quadrature(t: &DMatrix<C64>, curve: &ContourCurve, nodes: Vec<(C64, C64)>) -> Result<DMatrix<C64>> {
    let d = t.nrows();
    let eye = DMatrix::<C64>::identity(d, d);
    let parts: Vec<Result<DMatrix<C64>>> = nodes
        .into_par_iter()
        .map(|(z, dz)| {
            let a = DMatrix::<C64>::identity(d, d) * z - t;
            let x = a.lu().solve(&eye).ok_or(Error::EigenvalueOnCurve {
                eigenvalue: z,
                distance: 0.0,
            })?;
            Ok(x * dz)
        })
        .collect();
    let mut sum = DMatrix::<C64>::zeros(d, d);
    for p in parts {
        sum += p?;
    }
    let sign = if curve.orientation == Orientation::Positive { 1.0 } else { -1.0 };
    Ok(sum * C64::new(0.0, -sign / (2.0 * PI)))
}

/// `P = (2πi)^{−1} ∮ (zI − T)^{−1} dz` by Gauss–Legendre quadrature on
/// panels graded towards nearby eigenvalues, starting at `nodes` per panel
/// and doubling until successive results agree.
pub fn riesz_projection(t: &DMatrix<C64>, curve: &ContourCurve, nodes: usize) -> Result<RieszProjection> {
    if !t.is_square() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let eigs = eigenvalues(t)?;
    for &ev in &eigs {
        let dist = curve.distance(ev);
        if dist < CURVE_CLEARANCE {
            return Err(Error::EigenvalueOnCurve {
                eigenvalue: ev,
                distance: dist,
            });
        }
    }
    let cuts: Vec<_> = curve.pieces.iter().map(|p| panels(p, &eigs)).collect();
    let mut n = nodes.max(2);
    let mut p = quadrature(t, curve, self::nodes(curve, &cuts, n))?;
    let mut change;
    loop {
        let next = quadrature(t, curve, self::nodes(curve, &cuts, 2 * n))?;
        change = norm2(&(&next - &p));
        p = next;
        n *= 2;
        if change < PLATEAU || 2 * n > MAX_NODES {
            break;
        }
    }
    let (idem, inv) = defects(&p, t);
    Ok(RieszProjection {
        rank_estimate: rank_estimate(&p),
        matrix: p,
        curve: curve.clone(),
        quadrature_nodes: n,
        idempotency_defect: idem,
        invariance_defect: inv,
        plateau_change: change,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub idempotency_defect: f64,
    pub invariance_defect: f64,
    pub rank: usize,
    pub dimension: usize,
    /// Rank 0 or full: the subspace is `{0}` or everything.
    pub trivial: bool,
    /// `‖(I − P) p(T) P‖ / ‖p(T)‖` for random polynomials `p`.
    pub commutant_probe: Vec<f64>,
    pub max_probe: f64,
}

/// Invariance diagnostics of `range(P)` under `T` and under 20 random
/// polynomials in `T` (degree ≤ 4, seeded).
pub fn invariance_report(t: &DMatrix<C64>, p: &DMatrix<C64>, seed: u64) -> Result<InvarianceReport> {
    if t.shape() != p.shape() || !t.is_square() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: T is {:?}, P is {:?}",
            t.shape(),
            p.shape()
        )));
    }
    let d = t.nrows();
    let (idem, inv) = defects(p, t);
    let rank = rank_estimate(p);
    let eye = DMatrix::<C64>::identity(d, d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tn = norm2(t).max(f64::MIN_POSITIVE);
    let mut probes = Vec::with_capacity(20);
    for _ in 0..20 {
        let deg = rng.gen_range(1..=4);
        // Horner with coefficients normalised so the powers stay comparable
        let ts = t / C64::new(tn, 0.0);
        let mut q = eye.clone() * C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..deg {
            let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            q = &ts * q + &eye * c;
        }
        let qn = norm2(&q);
        probes.push(if qn == 0.0 { 0.0 } else { norm2(&((&eye - p) * &q * p)) / qn });
    }
    let max_probe = probes.iter().copied().fold(0.0, f64::max);
    Ok(InvarianceReport {
        idempotency_defect: idem,
        invariance_defect: inv,
        rank,
        dimension: d,
        trivial: rank == 0 || rank == d,
        commutant_probe: probes,
        max_probe,
    })
}
