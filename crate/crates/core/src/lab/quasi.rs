use super::norm2;
use crate::operator::{truncate, OperatorSpec};
use crate::series::eval_borel_matrix;
use crate::sum::ComplexSum;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Rotations closer than this to the branch cut are rejected.
const MIN_MARGIN: f64 = 1e-12;

/// `T − ξ₀I` (rotated) and its quasisimilar partner on a truncation.
///
/// With `ω` the rotation, `D = ω·diag(λ_n − ξ₀)` and `R = D^{1/2}` (principal
/// branch), the construction is `T_s = ω(T − ξ₀I) = R·U` and
/// `T̃ = U·R = D + Σ_k (R^{−1} ω u_k) ⊗ (R^* v_k)`, so `T_s R = R T̃` and
/// `U T_s = T̃ U` hold exactly in finite dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasisimilarPair {
    #[serde(serialize_with = "crate::series::ser_c64")]
    pub xi0: C64,
    #[serde(serialize_with = "crate::series::ser_c64")]
    pub rotation: C64,
    /// Smallest angle between an entry of `D` and the negative real axis.
    pub branch_margin: f64,
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub t_shifted: DMatrix<C64>,
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub sqrt_diag: DMatrix<C64>,
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub t_tilde: DMatrix<C64>,
    /// `U` with `T_s = R U`.
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub u: DMatrix<C64>,
    /// `S = T̃ / ω`: the partner of the unrotated `T − ξ₀I`.
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub s: DMatrix<C64>,
    /// `max_n |R_nn² − D_nn| / |D_nn|`.
    pub sqrt_defect: f64,
    /// `‖T_s R − R T̃‖ / ‖T_s‖`
    pub intertwining_defect_sqrt: f64,
    /// `‖U T_s − T̃ U‖ / ‖T_s‖`
    pub intertwining_defect_u: f64,
}

fn angular_margin(args: &[f64], theta: f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, &a) in args.iter().enumerate() {
        // distance of a + θ from π on the circle
        let d = (a + theta - PI).rem_euclid(TAU);
        let d = d.min(TAU - d);
        if d < best.0 {
            best = (d, i);
        }
    }
    best
}

/// θ maximizing the least angular distance of `arg + θ` from π: 720-point
/// scan followed by golden-section refinement.
fn best_rotation(args: &[f64]) -> (f64, f64, usize) {
    let step = TAU / 720.0;
    let mut best = (0.0, -1.0, 0);
    for j in 0..720 {
        let th = j as f64 * step;
        let (m, i) = angular_margin(args, th);
        if m > best.1 {
            best = (th, m, i);
        }
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let f = |t: f64| angular_margin(args, t).0;
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    for _ in 0..80 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    let th = 0.5 * (a + b);
    let (m, i) = angular_margin(args, th);
    if m > best.1 {
        (th, m, i)
    } else {
        best
    }
}

pub fn quasisimilar_pair(spec: &OperatorSpec, xi0: C64, dim: usize) -> Result<QuasisimilarPair> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    let t = truncate(spec, dim);
    let d = t.nrows();
    let shifted: Vec<C64> = (1..=d as u64).map(|n| spec.diag().value(n) - xi0).collect();
    if let Some(i) = shifted.iter().position(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::ShiftInDiagonal { index: i + 1 });
    }
    let args: Vec<f64> = shifted.iter().map(|z| z.arg()).collect();
    let (theta, margin, worst) = best_rotation(&args);
    if margin < MIN_MARGIN {
        return Err(Error::NoRotation {
            margin,
            index: worst + 1,
        });
    }
    let omega = C64::from_polar(1.0, theta);
    let eye = DMatrix::<C64>::identity(d, d);
    let ts = (&t - &eye * xi0) * omega;
    let dvals: Vec<C64> = shifted.iter().map(|z| z * omega).collect();
    let roots: Vec<C64> = dvals.iter().map(|z| z.sqrt()).collect();
    let sqrt_defect = dvals
        .iter()
        .zip(&roots)
        .map(|(z, r)| (r * r - z).norm() / z.norm())
        .fold(0.0, f64::max);
    let r = DMatrix::from_diagonal(&DVector::from_vec(roots.clone()));
    let r_inv = DMatrix::from_diagonal(&DVector::from_iterator(d, roots.iter().map(|z| z.inv())));
    let dmat = DMatrix::from_diagonal(&DVector::from_vec(dvals));
    // Σ_k (ω u_k) v_k^*: the off-diagonal part of T_s
    let mut uv = DMatrix::<C64>::zeros(d, d);
    for p in spec.perturbations() {
        let a = DVector::from_iterator(d, (1..=d as u64).map(|n| p.u.value(n) * omega));
        let b = DVector::from_iterator(d, (1..=d as u64).map(|n| p.v.value(n)));
        uv += &a * b.adjoint();
    }
    let u = &r + &r_inv * &uv;
    let t_tilde = &dmat + &r_inv * &uv * &r;
    let tn = norm2(&ts).max(f64::MIN_POSITIVE);
    let def_sqrt = norm2(&(&ts * &r - &r * &t_tilde)) / tn;
    let def_u = norm2(&(&u * &ts - &t_tilde * &u)) / tn;
    let s = &t_tilde / omega;
    Ok(QuasisimilarPair {
        xi0,
        rotation: omega,
        branch_margin: margin,
        t_shifted: ts,
        sqrt_diag: r,
        t_tilde,
        u,
        s,
        sqrt_defect,
        intertwining_defect_sqrt: def_sqrt,
        intertwining_defect_u: def_u,
    })
}

/// Comparison of `M_{S*}(0)` (truncated, computed without cancelling the
/// square roots) against the certified `M_T(ξ₀)^*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsStarCheck {
    #[serde(serialize_with = "crate::series::ser_c64")]
    pub xi0: C64,
    pub dim: usize,
    /// Entrywise max `|M_{S*}(0) − M_T(ξ₀)^*|`.
    pub defect: f64,
    /// Tails of `M_T(ξ₀)` plus the truncation tail of `M_{S*}(0)`; `None`
    /// when some series is not certified.
    pub allowed: Option<f64>,
    /// `Some(defect ≤ allowed + rounding)`, `None` when inconclusive.
    pub consistent: Option<bool>,
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub m_s_star: DMatrix<C64>,
    #[serde(serialize_with = "super::io::ser_matrix")]
    pub m_t_adjoint: DMatrix<C64>,
}

pub fn ms_star_identity_check(spec: &OperatorSpec, xi0: C64, dim: usize, tol: f64) -> Result<MsStarCheck> {
    let pair = quasisimilar_pair(spec, xi0, dim)?;
    let d = pair.t_shifted.nrows();
    let n = spec.rank();
    // S* = (D* − ξ̄) + Σ_k ((D* − ξ̄)^{1/2} v_k) ⊗ ((D − ξ)^{−1/2} u_k), with the
    // square root R/√ω fixed by the rotation
    let half = pair.rotation.sqrt();
    let roots: Vec<C64> = (0..d).map(|i| pair.sqrt_diag[(i, i)] / half).collect();
    let diag_s: Vec<C64> = (1..=d as u64).map(|m| (spec.diag().value(m) - xi0).conj()).collect();
    let mut m_s = DMatrix::<C64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            let pi = &spec.perturbations()[i];
            let pj = &spec.perturbations()[j];
            let mut acc = ComplexSum::new();
            for m in 0..d {
                let idx = m as u64 + 1;
                let us = roots[m].conj() * pi.v.value(idx);
                let vs = pj.u.value(idx) / roots[m];
                acc.add(us * vs.conj() / diag_s[m]);
            }
            m_s[(i, j)] += acc.value();
        }
    }
    let mt = eval_borel_matrix(spec, xi0, tol)?;
    let m_t_adjoint = mt.matrix().adjoint();
    let defect = (&m_s - &m_t_adjoint).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let entry_tail = mt
        .entries
        .iter()
        .flatten()
        .map(|e| e.tail_bound)
        .try_fold(0.0f64, |acc, t| t.map(|t| acc.max(t)));
    let trunc_tail = truncation_tail(spec, xi0, d as u64);
    let allowed = entry_tail.zip(trunc_tail).map(|(a, b)| a + b);
    let scale = m_t_adjoint.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let consistent = allowed.map(|a| defect <= a + 1e-12 * scale);
    Ok(MsStarCheck {
        xi0,
        dim: d,
        defect,
        allowed,
        consistent,
        m_s_star: m_s,
        m_t_adjoint,
    })
}

/// Bound on `|Σ_{n>d} β_n^{(i)} conj(α_n^{(j)}) / conj(λ_n − ξ)|` over all `i, j`.
fn truncation_tail(spec: &OperatorSpec, xi: C64, d: u64) -> Option<f64> {
    if spec.dimension().is_some_and(|len| len <= d) {
        return Some(0.0);
    }
    let dist = spec.diag().hull_from(d + 1).distance(xi) * (1.0 - 1e-12);
    if !(dist > 0.0) {
        return None;
    }
    let mut worst = 0.0f64;
    for pi in spec.perturbations() {
        for pj in spec.perturbations() {
            let t = (pi.v.tail_sq(d)? * pj.u.tail_sq(d)?).sqrt() / dist;
            worst = worst.max(t);
        }
    }
    Some(worst)
}
