use super::curve::{build_gamma, ContourCurve, Piece, Side};
use crate::lab::eigenvalues;
use crate::operator::{Abscissa, AffineMap, DerivedSet, Hull, OperatorSpec, ReWeight};
use crate::series::{borel_matrix, relevant_set_series_with, sum_series, ReHint, SeriesBreakdown, SeriesOptions, Verdict};
use crate::spectral::secular::Secular;
use crate::{operator::truncate, Error, Result, C64};
use serde::Serialize;

/// Target band for the normalized diagonal: `|z| ≤ 0.9`, `Im z ≥ 0.05`.
const BAND_RADIUS: f64 = 0.9;
const BAND_FLOOR: f64 = 0.05;
/// Terms of the condition-(iii) series materialized for infinite models.
const CONDITION_III_BUDGET: u64 = 1 << 16;
/// Per-series term budget for determinant values along the curve.
const CURVE_BUDGET: u64 = 1 << 20;
/// A Newton limit this close to the curve is a root on the curve.
const ON_CURVE: f64 = 1e-9;

/// `T' = sT + tI` with the diagonal inside the upper half of the unit disc.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSpec {
    pub spec: OperatorSpec,
    pub map: AffineMap,
    pub original: OperatorSpec,
}

impl NormalizedSpec {
    /// Image of an original abscissa (the map is real scaling plus an
    /// imaginary shift, so vertical lines go to vertical lines).
    pub fn abscissa(&self, x: f64) -> f64 {
        self.map.scale.re * x
    }

    pub fn to_original(&self, z: C64) -> C64 {
        self.map.invert(z)
    }

    pub fn scale(&self) -> f64 {
        self.map.scale.re
    }
}

fn in_band(z: C64) -> bool {
    z.norm() <= BAND_RADIUS && z.im >= BAND_FLOOR
}

fn hull_in_band(h: &Hull) -> bool {
    match *h {
        Hull::Empty => true,
        Hull::Segment(a, b) => in_band(a) && in_band(b),
        Hull::Disc { center, radius } => center.norm() + radius <= BAND_RADIUS && center.im - radius >= BAND_FLOOR,
    }
}

fn diag_in_band(spec: &OperatorSpec) -> bool {
    match spec.diag().as_finite() {
        Some(v) => v.iter().all(|z| in_band(*z)),
        None => hull_in_band(&spec.diag().hull_from(1)),
    }
}

/// Maps the diagonal into `{|z| ≤ 0.9, Im z ≥ 0.05}` by `λ ↦ sλ + t` with
/// real `s > 0` and imaginary `t`; the identity when it already lies there.
pub fn normalize_to_upper_disc(spec: &OperatorSpec) -> NormalizedSpec {
    let map = if diag_in_band(spec) {
        AffineMap::IDENTITY
    } else {
        let b = spec.diag().bound();
        let real = match spec.diag().as_finite() {
            Some(v) => v.iter().all(|z| z.im == 0.0),
            None => matches!(spec.diag().hull_from(1), Hull::Segment(a, b) if a.im == 0.0 && b.im == 0.0),
        };
        if b == 0.0 {
            AffineMap {
                scale: C64::new(1.0, 0.0),
                shift: C64::new(0.0, 0.4),
            }
        } else if real {
            AffineMap {
                scale: C64::new(0.8 / b, 0.0),
                shift: C64::new(0.0, 0.4),
            }
        } else {
            AffineMap {
                scale: C64::new(0.4 / b, 0.0),
                shift: C64::new(0.0, 0.5),
            }
        }
    };
    NormalizedSpec {
        spec: spec.affine(&map),
        map,
        original: spec.clone(),
    }
}

/// Lower bounds on the distance from `{λ'_j : j ≥ from}` to the chord and
/// to the arc of `γ_{x'}`.
fn hull_gaps(h: &Hull, x: f64) -> (f64, f64) {
    match h {
        Hull::Empty => (f64::INFINITY, f64::INFINITY),
        _ => (h.re_distance(x), 1.0 - h.max_modulus()),
    }
}

/// `Σ_n (∫_γ |dξ|/|λ'_n − ξ|)² |α'_n|²` for each `u_k` of the normalized
/// operator, along `γ` at the image of the original abscissa `x`.
///
/// The tail of infinite models uses the smaller of two majorants: the hull
/// separation `(len/d)²`, and the chord bound `∫_ℓ ≤ 2 ln(1 + 2/δ')` with
/// `δ' = s|Re λ_n − x|` together with `∫_A ≤ len(A)/dist(Λ', A)`, which
/// reduces to the log-square series of the original data.
pub fn condition_iii_series(norm: &NormalizedSpec, x: impl Into<Abscissa>, side: Side, tol: f64) -> Result<SeriesBreakdown> {
    let x = x.into();
    let xs = norm.abscissa(x.value());
    let curve = build_gamma(xs, side)?;
    let spec = &norm.spec;
    let diag = spec.diag();
    let s = norm.scale();
    let len = curve.length();
    let arc_len: f64 = curve.arcs().map(|p| p.length()).sum();
    let opts = SeriesOptions {
        term_budget: CONDITION_III_BUDGET,
        ..Default::default()
    };
    let mut parts = Vec::new();
    for (k, p) in spec.perturbations().iter().enumerate() {
        let u = &p.u;
        let ou = &norm.original.perturbations()[k].u;
        if !spec.is_finite() {
            for hit in norm.original.diag().re_hits(&x) {
                if ou.nonzero_at(hit) != Some(false) {
                    return Err(Error::Pole {
                        location: format!("λ at {hit} lies on the chord"),
                        z: diag_point(spec, hit.index),
                    });
                }
            }
        }
        let err = std::cell::Cell::new(None);
        let term = |n: u64| {
            let a = u.value(n).norm_sqr();
            if a == 0.0 {
                return C64::new(0.0, 0.0);
            }
            match curve.inverse_distance(diag.value(n)) {
                Ok(i) => C64::new(i * i * a, 0.0),
                Err(_) => {
                    let first = err.take().unwrap_or(Error::Pole {
                        location: format!("λ_{n} lies on the curve"),
                        z: diag.value(n),
                    });
                    err.set(Some(first));
                    C64::new(f64::INFINITY, 0.0)
                }
            }
        };
        let tail = |from: u64| -> Option<f64> {
            let tsq = u.tail_sq(from - 1)?;
            let (d_chord, d_arc) = hull_gaps(&diag.hull_from(from), xs);
            let mut best: Option<f64> = None;
            let d = d_chord.min(d_arc) * (1.0 - 1e-12);
            if d > 0.0 {
                best = Some((len / d).powi(2) * tsq);
            }
            if d_arc > 0.0 {
                let kk = arc_len / (d_arc * (1.0 - 1e-12));
                let ls = norm.original.diag().re_weighted_tail(&x, from, ou, ReWeight::LogSquare);
                if let Some(ls) = ls {
                    let c = 2.0 * kk * kk + 16.0 * 4f64.ln().powi(2) + 32.0 * s.ln().powi(2);
                    let b = c * tsq + 32.0 * s * s * ls;
                    best = Some(best.map_or(b, |t| t.min(b)));
                }
            }
            best
        };
        let v = sum_series(spec.series_len(u, None), term, tail, true, tol, &opts, &|| {
            "chord log bound with the log-square tail of the original data".into()
        });
        if let Some(e) = err.take() {
            return Err(e);
        }
        parts.push((u.label().to_string(), v));
    }
    Ok(SeriesBreakdown::from_parts(parts))
}

fn diag_point(spec: &OperatorSpec, index: Option<u64>) -> C64 {
    index.map_or(C64::new(f64::NAN, f64::NAN), |n| spec.diag().value(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    SatisfiedAtSamples,
    Violated,
    Inconclusive,
}

/// Spectrum points inside and outside `int(γ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionI {
    pub holds: Option<bool>,
    #[serde(with = "crate::operator::cnum::vec")]
    pub inside: Vec<C64>,
    #[serde(with = "crate::operator::cnum::vec")]
    pub outside: Vec<C64>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    #[serde(serialize_with = "crate::series::ser_c64")]
    pub xi: C64,
    pub piece: usize,
    /// `|det M_T(ξ)|`
    pub modulus: f64,
    /// Bound on the evaluation error of the determinant.
    pub error: f64,
}

/// `det M_T ≠ 0` along `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionII {
    pub holds: Option<bool>,
    /// Convergence of the relevant series at `x`.
    pub relevant_series: Verdict,
    pub samples: Vec<CurveSample>,
    pub min_modulus: f64,
    #[serde(serialize_with = "crate::series::ser_c64")]
    pub min_at: C64,
    /// A root of `det M_T` on the curve (normalized coordinates).
    #[serde(serialize_with = "ser_opt")]
    pub root_on_curve: Option<C64>,
}

fn ser_opt<S: serde::Serializer>(z: &Option<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    z.map(|z| [z.re, z.im]).serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionIII {
    pub series: Option<SeriesBreakdown>,
    pub verdict: Verdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub x: Abscissa,
    pub side: Side,
    /// `λ ↦ sλ + t` applied before building the curve.
    pub map: AffineMap,
    /// The curve in normalized coordinates.
    pub curve: ContourCurve,
    pub condition_i: ConditionI,
    pub condition_ii: ConditionII,
    pub condition_iii: ConditionIII,
    pub overall: Overall,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisOptions {
    /// Samples per curve piece for condition (ii).
    pub samples_per_piece: usize,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        HypothesisOptions { samples_per_piece: 128 }
    }
}

fn curve_opts() -> SeriesOptions {
    SeriesOptions {
        term_budget: CURVE_BUDGET,
        ..Default::default()
    }
}

struct DetEval<'a> {
    norm: &'a NormalizedSpec,
    x: Abscissa,
    tol: f64,
    secular: Secular<'a>,
    /// Cleared once a full-budget evaluation still fails to separate the
    /// value from zero; later points then get the quick pass only.
    escalate: std::cell::Cell<bool>,
}

impl DetEval<'_> {
    /// `(det M_{T'}(ξ), error bound)`; chord points use real-part tails of the
    /// original data.
    fn eval(&self, xi: C64, chord: bool) -> Result<(C64, f64)> {
        if self.norm.spec.is_finite() {
            let v = self.secular.eval(xi)?;
            return Ok((v.g, v.err));
        }
        let hint = ReHint {
            spec: &self.norm.original,
            x: self.x,
        };
        let hint = chord.then_some(&hint);
        let quick = SeriesOptions {
            verdict_only: true,
            ..Default::default()
        };
        let m = borel_matrix(&self.norm.spec, xi, self.tol, &quick, hint)?;
        if m.determinant.norm() > m.det_error_bound || !self.escalate.get() {
            return Ok((m.determinant, m.det_error_bound));
        }
        let m = borel_matrix(&self.norm.spec, xi, self.tol, &curve_opts(), hint)?;
        if !(m.determinant.norm() > m.det_error_bound) {
            self.escalate.set(false);
        }
        Ok((m.determinant, m.det_error_bound))
    }

    fn modulus(&self, xi: C64, chord: bool) -> f64 {
        self.eval(xi, chord).map_or(0.0, |(g, _)| g.norm())
    }

    /// Damped Newton from `z0`; the limit and its residual when it converges.
    fn newton(&self, z0: C64) -> Option<(C64, f64)> {
        let mut z = z0;
        for _ in 0..60 {
            let (g, gp, _) = self.secular.eval_with_derivative(z).ok()?;
            if gp.norm() == 0.0 || !gp.is_finite() {
                return None;
            }
            let mut step = g / gp;
            let cap = 0.5 * self.secular.pole_distance(z);
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            z -= step;
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
                let v = self.secular.eval(z).ok()?;
                return Some((z, v.g.norm()));
            }
        }
        None
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn condition_i(norm: &NormalizedSpec, curve: &ContourCurve) -> ConditionI {
    let spec = &norm.spec;
    let (points, source) = match spec.dimension() {
        Some(d) => match eigenvalues(&truncate(spec, d as usize)) {
            Ok(ev) => (ev, "dense eigenvalues".to_string()),
            Err(e) => {
                return ConditionI {
                    holds: None,
                    inside: vec![],
                    outside: vec![],
                    source: format!("dense eigenvalues unavailable: {e}"),
                }
            }
        },
        None => {
            let pts = match spec.diag().derived_set() {
                DerivedSet::Segment { from, to } => (0..=64).map(|i| from + (to - from) * (i as f64 / 64.0)).collect(),
                d => d.candidates(),
            };
            (pts, "accumulation points of the diagonal".to_string())
        }
    };
    let scale = points.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    let mut undecided = false;
    for z in points {
        if curve.distance(z) <= 1e-10 * scale {
            undecided = true;
        } else if curve.encloses(z) {
            inside.push(z);
        } else {
            outside.push(z);
        }
    }
    let holds = if !inside.is_empty() {
        Some(true)
    } else if spec.is_finite() && !undecided {
        Some(false)
    } else {
        None
    };
    ConditionI {
        holds,
        inside,
        outside,
        source,
    }
}

/// Checks the three hypotheses of the spectral-subspace theorem on `γ_x^±`
/// after normalizing the diagonal into the upper half disc. `x` is in the
/// original coordinates.
pub fn check_subspace_hypotheses(spec: &OperatorSpec, x: impl Into<Abscissa>, side: Side, tol: f64) -> Result<HypothesisReport> {
    check_subspace_hypotheses_with(spec, x, side, tol, &HypothesisOptions::default())
}

pub fn check_subspace_hypotheses_with(
    spec: &OperatorSpec,
    x: impl Into<Abscissa>,
    side: Side,
    tol: f64,
    opts: &HypothesisOptions,
) -> Result<HypothesisReport> {
    let x = x.into();
    let norm = normalize_to_upper_disc(spec);
    let xs = norm.abscissa(x.value());
    let curve = build_gamma(xs, side)?;
    let mut notes = Vec::new();
    if !norm.map.is_identity() {
        notes.push(format!(
            "diagonal normalized by λ ↦ {}·λ + {}i; the chord sits at x' = {xs}",
            norm.map.scale.re, norm.map.shift.im
        ));
    }

    let condition_i = condition_i(&norm, &curve);

    let only = SeriesOptions {
        verdict_only: true,
        ..Default::default()
    };
    let relevant = relevant_set_series_with(spec, x, tol, &only).verdict();
    if relevant != Verdict::ConvergesCertified {
        notes.push(format!(
            "x is not a certified point of the relevant set Ω(T) (relevant series {relevant:?}); continuity of 1/det M_T on γ ∩ σ(T) is not established"
        ));
    }
    let ev = DetEval {
        norm: &norm,
        x,
        tol,
        secular: Secular::new(&norm.spec, tol).with_options(curve_opts()),
        escalate: std::cell::Cell::new(true),
    };
    let condition_ii = condition_ii(&ev, &curve, relevant, opts);

    let condition_iii = match condition_iii_series(&norm, x, side, tol) {
        Ok(b) => ConditionIII {
            verdict: b.verdict(),
            series: Some(b),
            note: None,
        },
        Err(Error::Pole { location, .. }) => ConditionIII {
            series: None,
            verdict: Verdict::DivergesCertified,
            note: Some(format!("infinite term: {location}")),
        },
        Err(e) => return Err(e),
    };

    let violated = condition_i.holds == Some(false)
        || condition_ii.holds == Some(false)
        || condition_iii.verdict == Verdict::DivergesCertified;
    let satisfied = condition_i.holds == Some(true)
        && condition_ii.holds == Some(true)
        && condition_iii.verdict == Verdict::ConvergesCertified;
    let overall = if violated {
        Overall::Violated
    } else if satisfied {
        Overall::SatisfiedAtSamples
    } else {
        Overall::Inconclusive
    };
    Ok(HypothesisReport {
        x,
        side,
        map: norm.map,
        curve,
        condition_i,
        condition_ii,
        condition_iii,
        overall,
        notes,
    })
}

fn condition_ii(ev: &DetEval, curve: &ContourCurve, relevant: Verdict, opts: &HypothesisOptions) -> ConditionII {
    let mut samples = Vec::new();
    let mut uncertified = false;
    let finite = ev.norm.spec.is_finite();
    // without Ω membership the chord values of an infinite model are not
    // available; arcs stay well separated from the diagonal
    let skip_chord = !finite && relevant != Verdict::ConvergesCertified;
    for (i, p) in curve.pieces.iter().enumerate() {
        let chord = matches!(p, Piece::Segment { .. });
        if chord && skip_chord {
            uncertified = true;
            continue;
        }
        let n = opts.samples_per_piece.max(2);
        for k in 0..n {
            let t = (k as f64 + 0.5) / n as f64;
            let xi = p.point(t);
            match ev.eval(xi, chord) {
                Ok((g, err)) => {
                    if !(g.norm() > err) {
                        uncertified = true;
                    }
                    samples.push(CurveSample {
                        xi,
                        piece: i,
                        modulus: g.norm(),
                        error: err,
                    });
                }
                Err(_) => {
                    uncertified = true;
                    samples.push(CurveSample {
                        xi,
                        piece: i,
                        modulus: 0.0,
                        error: f64::INFINITY,
                    });
                }
            }
        }
    }
    let (mut min_modulus, mut min_at) = (f64::INFINITY, C64::new(f64::NAN, f64::NAN));
    let mut root_on_curve = None;
    if let Some((idx, best)) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.modulus.total_cmp(&b.1.modulus))
    {
        min_modulus = best.modulus;
        min_at = best.xi;
        // infinite models are refined only while their values stay certifiable
        let refine = finite || ev.escalate.get();
        let p = &curve.pieces[best.piece];
        let chord = matches!(p, Piece::Segment { .. });
        let n = opts.samples_per_piece.max(2) as f64;
        let k = samples[..idx].iter().filter(|s| s.piece == best.piece).count() as f64;
        let (a, b) = (((k - 0.5) / n).max(0.0), ((k + 1.5) / n).min(1.0));
        if refine {
            let t = golden_min(|t| ev.modulus(p.point(t), chord), a, b);
            let refined = p.point(t);
            let m = ev.modulus(refined, chord);
            if m < min_modulus {
                min_modulus = m;
                min_at = refined;
            }
        }
        if let Some((z, r)) = refine.then(|| ev.newton(min_at)).flatten() {
            let err = ev.eval(z, chord).map_or(f64::INFINITY, |v| v.1);
            if curve.distance(z) <= ON_CURVE * (1.0 + z.norm()) && r <= ev.tol * (1.0 + err) {
                root_on_curve = Some(z);
                min_modulus = r;
                min_at = z;
            }
        }
    }
    let holds = if root_on_curve.is_some() {
        Some(false)
    } else if uncertified || relevant != Verdict::ConvergesCertified {
        None
    } else {
        Some(true)
    };
    ConditionII {
        holds,
        relevant_series: relevant,
        samples,
        min_modulus,
        min_at,
        root_on_curve,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_operator_spec, CoefficientSequence, DiagonalSequence};

    #[test]
    fn real_diagonal_is_shrunk_and_lifted() {
        let c = CoefficientSequence::finite_real(&[1.0, 1.0, 1.0]);
        let spec = build_operator_spec(DiagonalSequence::finite_real(&[-1.0, 0.0, 1.0]), vec![(c.clone(), c)]).unwrap();
        let n = normalize_to_upper_disc(&spec);
        assert_eq!(n.map.scale, C64::new(0.8, 0.0));
        assert_eq!(n.map.shift, C64::new(0.0, 0.4));
        assert!(diag_in_band(&n.spec));
        let again = normalize_to_upper_disc(&n.spec);
        assert!(again.map.is_identity());
    }
}
