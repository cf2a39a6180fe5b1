//! Coefficient and diagonal sequences: finite lists or deterministic index
//! rules with analytic envelopes.

use super::envelope::{Envelope, Weight};
use crate::dyadic::{self, gamma_coeff, Abscissa, GridPoint};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

fn unit() -> C64 {
    C64::new(1.0, 0.0)
}

fn is_unit(c: &C64) -> bool {
    *c == unit()
}

/// Built-in coefficient rules; values are `scale · base(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `ratio^{n−1}`
    Geometric {
        ratio: f64,
        #[serde(default = "unit", skip_serializing_if = "is_unit", with = "super::cnum")]
        scale: C64,
    },
    /// `n^{−exponent}`
    Power {
        exponent: f64,
        #[serde(default = "unit", skip_serializing_if = "is_unit", with = "super::cnum")]
        scale: C64,
    },
    /// `n^{−exponent} ln(n+1)^{−log_exponent}`
    PowerLog {
        exponent: f64,
        log_exponent: f64,
        #[serde(default = "unit", skip_serializing_if = "is_unit", with = "super::cnum")]
        scale: C64,
    },
    /// `γ_m` on level `m = ⌊log₂ n⌋`.
    DyadicSection3 {
        #[serde(default = "unit", skip_serializing_if = "is_unit", with = "super::cnum")]
        scale: C64,
    },
}

impl CoefficientRule {
    pub fn scale(&self) -> C64 {
        match *self {
            CoefficientRule::Geometric { scale, .. }
            | CoefficientRule::Power { scale, .. }
            | CoefficientRule::PowerLog { scale, .. }
            | CoefficientRule::DyadicSection3 { scale } => scale,
        }
    }

    fn scale_mut(&mut self) -> &mut C64 {
        match self {
            CoefficientRule::Geometric { scale, .. }
            | CoefficientRule::Power { scale, .. }
            | CoefficientRule::PowerLog { scale, .. }
            | CoefficientRule::DyadicSection3 { scale } => scale,
        }
    }

    pub fn value(&self, n: u64) -> C64 {
        let nf = n as f64;
        let base = match *self {
            CoefficientRule::Geometric { ratio, .. } => ratio.powf(nf - 1.0),
            CoefficientRule::Power { exponent, .. } => nf.powf(-exponent),
            CoefficientRule::PowerLog {
                exponent,
                log_exponent,
                ..
            } => nf.powf(-exponent) * (nf + 1.0).ln().powf(-log_exponent),
            CoefficientRule::DyadicSection3 { .. } => gamma_coeff(dyadic::split_index(n).0),
        };
        self.scale() * base
    }

    /// The tightest built-in envelope of `|value|`.
    pub fn envelope(&self) -> Envelope {
        let s = self.scale().norm();
        match *self {
            CoefficientRule::Geometric { ratio, .. } => Envelope::Geometric {
                scale: s,
                ratio: ratio.abs(),
            },
            CoefficientRule::Power { exponent, .. } => Envelope::Power { scale: s, exponent },
            CoefficientRule::PowerLog {
                exponent,
                log_exponent,
                ..
            } => Envelope::PowerLog {
                scale: s,
                exponent,
                log_exponent,
            },
            CoefficientRule::DyadicSection3 { .. } => Envelope::DyadicSection3 { scale: s },
        }
    }

    fn validate(&self) -> Result<()> {
        let s = self.scale();
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("rule {self:?}: non-finite scale")));
        }
        if let CoefficientRule::Geometric { ratio, .. } = *self {
            if !(ratio.abs() < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "geometric coefficient ratio {ratio} is not square-summable"
                )));
            }
        }
        self.envelope().validate()
    }

    /// Whether the coefficient at a grid location is nonzero (`None` when the
    /// index is not representable and the rule depends on it).
    fn nonzero_at(&self, p: GridPoint) -> Option<bool> {
        if self.scale() == C64::new(0.0, 0.0) {
            return Some(false);
        }
        Some(match *self {
            CoefficientRule::Geometric { ratio, .. } => ratio != 0.0 || p.index == Some(1),
            CoefficientRule::Power { .. } | CoefficientRule::PowerLog { .. } => true,
            CoefficientRule::DyadicSection3 { .. } => p.level >= 2,
        })
    }
}

type CustomFn = Arc<dyn Fn(u64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub(crate) enum CoeffSource {
    Finite(Vec<C64>),
    Rule(CoefficientRule),
    Custom { name: String, f: CustomFn },
}

/// A square-summable coefficient sequence `(c_n)_{n≥1}`.
#[derive(Clone)]
pub struct CoefficientSequence {
    pub(crate) source: CoeffSource,
    majorant: Option<Envelope>,
    decay_class: Option<Envelope>,
    label: String,
}

impl fmt::Debug for CoefficientSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("CoefficientSequence");
        d.field("label", &self.label);
        match &self.source {
            CoeffSource::Finite(v) => d.field("finite", v),
            CoeffSource::Rule(r) => d.field("rule", r),
            CoeffSource::Custom { name, .. } => d.field("custom", name),
        };
        d.field("majorant", &self.majorant)
            .field("decay_class", &self.decay_class)
            .finish()
    }
}

impl PartialEq for CoefficientSequence {
    fn eq(&self, other: &Self) -> bool {
        let same_source = match (&self.source, &other.source) {
            (CoeffSource::Finite(a), CoeffSource::Finite(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| {
                        x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                    })
            }
            (CoeffSource::Rule(a), CoeffSource::Rule(b)) => a == b,
            (CoeffSource::Custom { f: a, .. }, CoeffSource::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        };
        same_source && self.majorant == other.majorant && self.decay_class == other.decay_class
    }
}

/// How square-summability of a coefficient sequence was certified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Certificate {
    pub label: String,
    /// Upper bound on `Σ |c_n|²`.
    pub norm_sq_bound: f64,
    pub method: String,
}

const HEAD_TERMS: u64 = 4096;

impl CoefficientSequence {
    pub fn finite(values: Vec<C64>) -> Self {
        Self {
            source: CoeffSource::Finite(values),
            majorant: None,
            decay_class: None,
            label: String::new(),
        }
    }

    pub fn finite_real(values: &[f64]) -> Self {
        Self::finite(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn rule(rule: CoefficientRule) -> Self {
        Self {
            source: CoeffSource::Rule(rule),
            majorant: None,
            decay_class: None,
            label: String::new(),
        }
    }

    /// An arbitrary index rule; without a majorant no tail can be certified.
    pub fn custom<F>(name: &str, f: F, majorant: Option<Envelope>) -> Self
    where
        F: Fn(u64) -> C64 + Send + Sync + 'static,
    {
        Self {
            source: CoeffSource::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
            majorant,
            decay_class: None,
            label: String::new(),
        }
    }

    /// Declares an asymptotic decay class, checked on materialized terms.
    pub fn with_decay_class(mut self, env: Envelope) -> Self {
        self.decay_class = Some(env);
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn decay_class(&self) -> Option<&Envelope> {
        self.decay_class.as_ref()
    }

    pub fn as_finite(&self) -> Option<&[C64]> {
        match &self.source {
            CoeffSource::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_rule(&self) -> Option<&CoefficientRule> {
        match &self.source {
            CoeffSource::Rule(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.source, CoeffSource::Custom { .. })
    }

    /// Number of stored terms for finite lists.
    pub fn support_len(&self) -> Option<u64> {
        match &self.source {
            CoeffSource::Finite(v) => Some(v.len() as u64),
            _ => None,
        }
    }

    /// `c_n` for `n ≥ 1`; finite lists are zero beyond their length.
    pub fn value(&self, n: u64) -> C64 {
        debug_assert!(n >= 1);
        match &self.source {
            CoeffSource::Finite(v) => v.get((n - 1) as usize).copied().unwrap_or_default(),
            CoeffSource::Rule(r) => r.value(n),
            CoeffSource::Custom { f, .. } => f(n),
        }
    }

    /// Envelope used for tails: the rule's own or the declared majorant.
    pub fn tail_envelope(&self) -> Option<Envelope> {
        match &self.source {
            CoeffSource::Finite(_) => None,
            CoeffSource::Rule(r) => Some(r.envelope()),
            CoeffSource::Custom { .. } => self.majorant,
        }
    }

    /// Envelope for summability questions: the declared decay class, else the
    /// tail envelope.
    pub fn summability_envelope(&self) -> Option<Envelope> {
        self.decay_class.or_else(|| self.tail_envelope())
    }

    /// Upper bound on `Σ_{n>m} |c_n|²`.
    pub fn tail_sq(&self, m: u64) -> Option<f64> {
        self.weighted_tail(m, &Weight::ONE)
    }

    /// Upper bound on `Σ_{n>m} |c_n|² w(n)`.
    pub fn weighted_tail(&self, m: u64, w: &Weight) -> Option<f64> {
        match &self.source {
            CoeffSource::Finite(v) => Some(crate::sum::neumaier(
                v.iter()
                    .enumerate()
                    .skip(m as usize)
                    .map(|(i, c)| c.norm_sqr() * w.eval((i + 1) as f64)),
            )),
            _ => self.tail_envelope()?.weighted_tail(m, w),
        }
    }

    /// Whether the coefficient at `p` is nonzero, when decidable.
    pub fn nonzero_at(&self, p: GridPoint) -> Option<bool> {
        match &self.source {
            CoeffSource::Finite(v) => Some(match p.index {
                Some(n) => v.get((n - 1) as usize).is_some_and(|c| c.norm_sqr() > 0.0),
                None => false,
            }),
            CoeffSource::Rule(r) => r.nonzero_at(p),
            CoeffSource::Custom { f, .. } => p.index.map(|n| f(n).norm_sqr() > 0.0),
        }
    }

    /// Complex-conjugated sequence (envelopes unchanged).
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.source = match &self.source {
            CoeffSource::Finite(v) => CoeffSource::Finite(v.iter().map(|c| c.conj()).collect()),
            CoeffSource::Rule(r) => {
                let mut r = *r;
                let s = r.scale_mut();
                *s = s.conj();
                CoeffSource::Rule(r)
            }
            CoeffSource::Custom { name, f } => {
                let f = f.clone();
                CoeffSource::Custom {
                    name: format!("conj({name})"),
                    f: Arc::new(move |n| f(n).conj()),
                }
            }
        };
        out
    }

    /// Sequence multiplied by the constant `s`.
    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.source = match &self.source {
            CoeffSource::Finite(v) => CoeffSource::Finite(v.iter().map(|c| c * s).collect()),
            CoeffSource::Rule(r) => {
                let mut r = *r;
                *r.scale_mut() *= s;
                CoeffSource::Rule(r)
            }
            CoeffSource::Custom { name, f } => {
                let f = f.clone();
                CoeffSource::Custom {
                    name: name.clone(),
                    f: Arc::new(move |n| f(n) * s),
                }
            }
        };
        out.majorant = self.majorant.map(|e| e.scaled(s.norm()));
        out.decay_class = self.decay_class.map(|e| e.scaled(s.norm()));
        out
    }

    pub(crate) fn set_label(&mut self, label: String) {
        self.label = label;
    }

    /// Validation used by the spec builder.
    pub(crate) fn validate(&self, require_majorant: bool) -> Result<Option<L2Certificate>> {
        let name = self.display_name();
        match &self.source {
            CoeffSource::Finite(v) => {
                if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                    return Err(Error::InvalidArgument(format!("{name}: non-finite coefficient")));
                }
                if v.iter().all(|c| c.norm_sqr() == 0.0) {
                    return Err(Error::ZeroVector(name));
                }
            }
            CoeffSource::Rule(r) => {
                r.validate()?;
                if r.scale().norm() == 0.0 {
                    return Err(Error::ZeroVector(name));
                }
            }
            CoeffSource::Custom { f, .. } => {
                if let Some(m) = &self.majorant {
                    m.validate()?;
                } else if require_majorant {
                    return Err(Error::MissingMajorant(name));
                }
                if (1..=HEAD_TERMS).all(|n| f(n).norm_sqr() == 0.0) {
                    return Err(Error::ZeroVector(name));
                }
            }
        }
        if let Some(dc) = &self.decay_class {
            dc.validate()?;
            let depth = self.support_len().unwrap_or(HEAD_TERMS);
            for n in 1..=depth {
                let c = self.value(n).norm();
                if c > dc.value(n) * (1.0 + 1e-12) {
                    return Err(Error::InvalidArgument(format!(
                        "{name}: |c_{n}| = {c} exceeds declared decay class {}",
                        dc.describe()
                    )));
                }
            }
        }
        if let (CoeffSource::Custom { .. }, Some(m)) = (&self.source, &self.majorant) {
            for n in 1..=HEAD_TERMS {
                if self.value(n).norm() > m.value(n) * (1.0 + 1e-12) {
                    return Err(Error::InvalidArgument(format!(
                        "{name}: majorant violated at n = {n}"
                    )));
                }
            }
        }
        Ok(self.tail_sq(0).map(|b| L2Certificate {
            label: self.label.clone(),
            norm_sq_bound: b,
            method: match &self.source {
                CoeffSource::Finite(_) => "finite support".into(),
                _ => format!("envelope {}", self.tail_envelope().map(|e| e.describe()).unwrap_or_default()),
            },
        }))
    }

    fn display_name(&self) -> String {
        match (&self.source, self.label.is_empty()) {
            (CoeffSource::Custom { name, .. }, true) => name.clone(),
            (CoeffSource::Custom { name, .. }, false) => format!("{} ({name})", self.label),
            (_, false) => self.label.clone(),
            (_, true) => "sequence".into(),
        }
    }
}

/// Built-in diagonal rules (base values before the affine map).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DiagonalRule {
    /// `r_{2^m+k} = (2k + 1 − 2^m)/2^m`
    DyadicSection3,
    /// `ratio^{n−1}`, `0 < |ratio| < 1`
    Geometric {
        #[serde(with = "super::cnum")]
        ratio: C64,
    },
    /// `n^{−exponent}`, `exponent > 0`
    Power { exponent: f64 },
}

impl DiagonalRule {
    fn base(&self, n: u64) -> C64 {
        match *self {
            DiagonalRule::DyadicSection3 => C64::new(dyadic::dyadic_r(n), 0.0),
            DiagonalRule::Geometric { ratio } => ratio.powf(n as f64 - 1.0),
            DiagonalRule::Power { exponent } => C64::new((n as f64).powf(-exponent), 0.0),
        }
    }
}

/// The affine map `z ↦ scale·z + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(with = "super::cnum")]
    pub scale: C64,
    #[serde(with = "super::cnum")]
    pub shift: C64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        scale: C64::new(1.0, 0.0),
        shift: C64::new(0.0, 0.0),
    };

    pub fn apply(&self, z: C64) -> C64 {
        self.scale * z + self.shift
    }

    pub fn invert(&self, w: C64) -> C64 {
        (w - self.shift) / self.scale
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            scale: self.scale * inner.scale,
            shift: self.scale * inner.shift + self.shift,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    fn re_identity(&self) -> bool {
        self.scale.re == 1.0 && self.shift.re == 0.0
    }
}

impl Default for AffineMap {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum DiagSource {
    Finite(Vec<C64>),
    Rule { rule: DiagonalRule, map: AffineMap },
}

/// A bounded diagonal sequence `(λ_n)_{n≥1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSequence {
    pub(crate) source: DiagSource,
}

/// Convex set containing a tail `{λ_j : j ≥ n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Hull {
    Empty,
    Segment(C64, C64),
    Disc { center: C64, radius: f64 },
}

impl Hull {
    /// Distance from `z` to the hull (0 inside).
    pub fn distance(&self, z: C64) -> f64 {
        match *self {
            Hull::Empty => f64::INFINITY,
            Hull::Segment(a, b) => segment_distance(z, a, b),
            Hull::Disc { center, radius } => ((z - center).norm() - radius).max(0.0),
        }
    }

    /// Projection of the hull to the real axis.
    pub fn re_range(&self) -> Option<(f64, f64)> {
        match *self {
            Hull::Empty => None,
            Hull::Segment(a, b) => Some((a.re.min(b.re), a.re.max(b.re))),
            Hull::Disc { center, radius } => Some((center.re - radius, center.re + radius)),
        }
    }

    /// Largest modulus over the hull.
    pub fn max_modulus(&self) -> f64 {
        match *self {
            Hull::Empty => 0.0,
            Hull::Segment(a, b) => a.norm().max(b.norm()),
            Hull::Disc { center, radius } => center.norm() + radius,
        }
    }

    /// Distance between `x` and the real projection (0 inside).
    pub fn re_distance(&self, x: f64) -> f64 {
        match self.re_range() {
            None => f64::INFINITY,
            Some((lo, hi)) => (lo - x).max(x - hi).max(0.0),
        }
    }
}

pub(crate) fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Accumulation-point information about `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivedSet {
    /// Finite data determine no accumulation points.
    Undecidable,
    /// A single accumulation point.
    Point { point: C64 },
    /// Every point of the segment is an accumulation point.
    Segment { from: C64, to: C64 },
}

impl DerivedSet {
    /// Representative candidate points.
    pub fn candidates(&self) -> Vec<C64> {
        match *self {
            DerivedSet::Undecidable => vec![],
            DerivedSet::Point { point } => vec![point],
            DerivedSet::Segment { from, to } => (0..=8).map(|i| from + (to - from) * (i as f64 / 8.0)).collect(),
        }
    }
}

/// Weight applied to `|Re λ_n − x|` in relevant-set style tails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReWeight {
    /// `1/δ`
    Inverse,
    /// `ln² δ`
    LogSquare,
}

impl ReWeight {
    pub fn eval(&self, delta: f64) -> f64 {
        match self {
            ReWeight::Inverse => 1.0 / delta,
            ReWeight::LogSquare => delta.ln().powi(2),
        }
    }
}

const EXPLICIT_TERMS: u64 = 1 << 24;

impl DiagonalSequence {
    pub fn finite(values: Vec<C64>) -> Self {
        Self {
            source: DiagSource::Finite(values),
        }
    }

    pub fn finite_real(values: &[f64]) -> Self {
        Self::finite(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn rule(rule: DiagonalRule) -> Self {
        Self::mapped_rule(rule, AffineMap::IDENTITY)
    }

    pub fn mapped_rule(rule: DiagonalRule, map: AffineMap) -> Self {
        Self {
            source: DiagSource::Rule { rule, map },
        }
    }

    pub fn as_finite(&self) -> Option<&[C64]> {
        match &self.source {
            DiagSource::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_rule(&self) -> Option<(DiagonalRule, AffineMap)> {
        match &self.source {
            DiagSource::Rule { rule, map } => Some((*rule, *map)),
            _ => None,
        }
    }

    pub fn len(&self) -> Option<u64> {
        match &self.source {
            DiagSource::Finite(v) => Some(v.len() as u64),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// `λ_n`, `n ≥ 1`.
    pub fn value(&self, n: u64) -> C64 {
        match &self.source {
            DiagSource::Finite(v) => v[(n - 1) as usize],
            DiagSource::Rule { rule, map } => map.apply(rule.base(n)),
        }
    }

    /// `sup |λ_n|`.
    pub fn bound(&self) -> f64 {
        match &self.source {
            DiagSource::Finite(v) => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
            DiagSource::Rule { map, .. } => map.scale.norm() + map.shift.norm(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match &self.source {
            DiagSource::Finite(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidArgument("empty diagonal".into()));
                }
                if let Some(i) = v.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::UnboundedDiagonal(format!("entry {} is not finite", i + 1)));
                }
            }
            DiagSource::Rule { rule, map } => {
                let finite = |c: C64| c.re.is_finite() && c.im.is_finite();
                if !(finite(map.scale) && finite(map.shift)) || map.scale.norm() == 0.0 {
                    return Err(Error::InvalidArgument("degenerate affine map".into()));
                }
                match *rule {
                    DiagonalRule::Geometric { ratio } if ratio.norm() >= 1.0 && ratio.norm() != 1.0 => {
                        return Err(Error::UnboundedDiagonal(format!("geometric ratio {ratio}")));
                    }
                    DiagonalRule::Geometric { ratio } if !(ratio.norm() > 0.0 && ratio.norm() < 1.0) => {
                        return Err(Error::InvalidArgument(format!(
                            "geometric diagonal ratio must satisfy 0 < |ratio| < 1, got {ratio}"
                        )));
                    }
                    DiagonalRule::Power { exponent } if exponent < 0.0 => {
                        return Err(Error::UnboundedDiagonal(format!("power exponent {exponent}")));
                    }
                    DiagonalRule::Power { exponent } if !(exponent > 0.0 && exponent.is_finite()) => {
                        return Err(Error::InvalidArgument(
                            "power diagonal exponent must be positive".into(),
                        ));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Convex set containing `{λ_j : j ≥ n}`.
    pub fn hull_from(&self, n: u64) -> Hull {
        match &self.source {
            DiagSource::Finite(v) => {
                let rest = v.get((n.max(1) - 1) as usize..).unwrap_or(&[]);
                if rest.is_empty() {
                    return Hull::Empty;
                }
                let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) =
                    (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for z in rest {
                    lo_re = lo_re.min(z.re);
                    hi_re = hi_re.max(z.re);
                    lo_im = lo_im.min(z.im);
                    hi_im = hi_im.max(z.im);
                }
                if lo_im == hi_im {
                    return Hull::Segment(C64::new(lo_re, lo_im), C64::new(hi_re, lo_im));
                }
                let center = C64::new(0.5 * (lo_re + hi_re), 0.5 * (lo_im + hi_im));
                let radius = rest.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
                Hull::Disc { center, radius }
            }
            DiagSource::Rule { rule, map } => {
                let n = n.max(1);
                match *rule {
                    DiagonalRule::DyadicSection3 => {
                        Hull::Segment(map.apply(C64::new(-1.0, 0.0)), map.apply(C64::new(1.0, 0.0)))
                    }
                    DiagonalRule::Power { exponent } => Hull::Segment(
                        map.apply(C64::new(0.0, 0.0)),
                        map.apply(C64::new((n as f64).powf(-exponent), 0.0)),
                    ),
                    DiagonalRule::Geometric { ratio } => {
                        let r = ratio.norm().powf(n as f64 - 1.0);
                        if ratio.im == 0.0 && ratio.re > 0.0 {
                            Hull::Segment(map.apply(C64::new(0.0, 0.0)), map.apply(C64::new(r, 0.0)))
                        } else if ratio.im == 0.0 {
                            Hull::Segment(map.apply(C64::new(-r, 0.0)), map.apply(C64::new(r, 0.0)))
                        } else {
                            Hull::Disc {
                                center: map.shift,
                                radius: map.scale.norm() * r,
                            }
                        }
                    }
                }
            }
        }
    }

    /// Accumulation points of `Λ`, decided analytically for rules.
    pub fn derived_set(&self) -> DerivedSet {
        match &self.source {
            DiagSource::Finite(_) => DerivedSet::Undecidable,
            DiagSource::Rule { rule, map } => match rule {
                DiagonalRule::DyadicSection3 => DerivedSet::Segment {
                    from: map.apply(C64::new(-1.0, 0.0)),
                    to: map.apply(C64::new(1.0, 0.0)),
                },
                DiagonalRule::Geometric { .. } | DiagonalRule::Power { .. } => {
                    DerivedSet::Point { point: map.shift }
                }
            },
        }
    }

    /// The index `n` with `λ_n = z` exactly, if any.
    pub fn index_of(&self, z: C64) -> Option<GridPoint> {
        let at = |n: u64| GridPoint {
            level: 63 - n.leading_zeros(),
            index: Some(n),
        };
        match &self.source {
            DiagSource::Finite(v) => v.iter().position(|w| *w == z).map(|i| at(i as u64 + 1)),
            DiagSource::Rule { rule, map } => {
                let w = map.invert(z);
                if !(w.re.is_finite() && w.im.is_finite()) {
                    return None;
                }
                match *rule {
                    DiagonalRule::DyadicSection3 => {
                        if map.is_identity() {
                            return if z.im == 0.0 { dyadic::grid_point_of(z.re) } else { None };
                        }
                        let p = dyadic::grid_point_of(w.re)?;
                        let n = p.index?;
                        (self.value(n) == z).then_some(p)
                    }
                    DiagonalRule::Power { exponent } => {
                        if !(w.re > 0.0) {
                            return None;
                        }
                        let guess = w.re.powf(-1.0 / exponent).round();
                        if !(guess < 9.0e15) {
                            return None;
                        }
                        let g = guess as u64;
                        (g.saturating_sub(1).max(1)..=g + 1)
                            .find(|&n| self.value(n) == z)
                            .map(at)
                    }
                    DiagonalRule::Geometric { ratio } => {
                        if w.norm() == 0.0 {
                            return None;
                        }
                        let guess = 1.0 + (w.norm().ln() / ratio.norm().ln()).round();
                        if !(guess >= 1.0 && guess < 9.0e15) {
                            return None;
                        }
                        let g = guess as u64;
                        (g.saturating_sub(1).max(1)..=g + 1)
                            .find(|&n| self.value(n) == z)
                            .map(at)
                    }
                }
            }
        }
    }

    /// All indices with `Re λ_n = x` exactly. Rules have at most one such
    /// index except where the map is degenerate.
    pub fn re_hits(&self, x: &Abscissa) -> Vec<GridPoint> {
        let Abscissa::Float(xv) = *x else {
            // an odd-denominator fraction is never a double, hence never a value
            return vec![];
        };
        let at = |n: u64| GridPoint {
            level: 63 - n.leading_zeros(),
            index: Some(n),
        };
        match &self.source {
            DiagSource::Finite(v) => v
                .iter()
                .enumerate()
                .filter(|(_, w)| w.re == xv)
                .map(|(i, _)| at(i as u64 + 1))
                .collect(),
            DiagSource::Rule { rule, map } => {
                if map.scale.re == 0.0 {
                    return if map.shift.re == xv { vec![at(1)] } else { vec![] };
                }
                let base_re = (xv - map.shift.re) / map.scale.re;
                match *rule {
                    DiagonalRule::DyadicSection3 => {
                        if map.re_identity() {
                            return dyadic::grid_point_of(xv).into_iter().collect();
                        }
                        dyadic::grid_point_of(base_re)
                            .filter(|p| p.index.is_some_and(|n| self.value(n).re == xv))
                            .into_iter()
                            .collect()
                    }
                    DiagonalRule::Power { exponent } => {
                        if !(base_re > 0.0) {
                            return vec![];
                        }
                        let guess = base_re.powf(-1.0 / exponent).round();
                        if !(guess < 9.0e15) {
                            return vec![];
                        }
                        let g = guess as u64;
                        (g.saturating_sub(1).max(1)..=g + 1)
                            .filter(|&n| self.value(n).re == xv)
                            .map(at)
                            .collect()
                    }
                    DiagonalRule::Geometric { ratio } => {
                        // |Re(s ρ^{n−1})| ≤ |s||ρ|^{n−1} bounds how far hits can go
                        let gap = (xv - map.shift.re).abs();
                        if gap == 0.0 {
                            return vec![];
                        }
                        let last = 1.0 + ((gap / map.scale.norm()).ln() / ratio.norm().ln()).max(0.0);
                        let last = (last.ceil() as u64).min(EXPLICIT_TERMS);
                        (1..=last).filter(|&n| self.value(n).re == xv).map(at).collect()
                    }
                }
            }
        }
    }

    /// Upper bound on `Σ_{n≥from} |c_n|² w(|Re λ_n − x|)`, skipping indices
    /// with `Re λ_n = x` and `c_n = 0`. Returns `None` when no bound can be
    /// certified (missing envelope, or a pole with nonzero coefficient).
    pub fn re_weighted_tail(
        &self,
        x: &Abscissa,
        from: u64,
        coeff: &CoefficientSequence,
        weight: ReWeight,
    ) -> Option<f64> {
        let from = from.max(1);
        let xv = x.value();
        let mut last = [self.len(), coeff.support_len()].into_iter().flatten().min();
        if let Some(l) = last {
            if from > l {
                return Some(0.0);
            }
            if l - from > EXPLICIT_TERMS {
                last = None;
            }
        }
        if let Some(l) = last {
            return self.explicit_re_sum(xv, from, l, coeff, weight);
        }
        let env = coeff.tail_envelope()?;
        let DiagSource::Rule { rule, map } = &self.source else {
            unreachable!("finite diagonals always have a last index");
        };
        let hull = self.hull_from(from);
        let gap = hull.re_distance(xv) * (1.0 - 1e-12);
        if gap > 0.0 {
            return Some(uniform_gap_tail(&env, from, gap, &hull, xv, weight));
        }
        match *rule {
            DiagonalRule::Power { exponent } => {
                let a = map.scale.re.abs();
                if a == 0.0 {
                    return None;
                }
                if xv == map.shift.re {
                    // δ_n = a·n^{−e}
                    let w = match weight {
                        ReWeight::Inverse => Weight::power(exponent),
                        ReWeight::LogSquare => Weight::log_square(exponent, a.ln().abs()),
                    };
                    let scale = if weight == ReWeight::Inverse { 1.0 / a } else { 1.0 };
                    return Some(scale * env.weighted_tail(from - 1, &w)?);
                }
                self.split_at_separation(x, from, coeff, &env, weight)
            }
            DiagonalRule::Geometric { .. } => {
                if xv == map.shift.re {
                    return None;
                }
                self.split_at_separation(x, from, coeff, &env, weight)
            }
            DiagonalRule::DyadicSection3 => {
                if !map.re_identity() {
                    return None;
                }
                dyadic_level_tail(x, from, coeff, &env, weight)
            }
        }
    }

    fn explicit_re_sum(
        &self,
        xv: f64,
        from: u64,
        last: u64,
        coeff: &CoefficientSequence,
        weight: ReWeight,
    ) -> Option<f64> {
        let mut s = crate::sum::NeumaierSum::new();
        for n in from..=last {
            let c2 = coeff.value(n).norm_sqr();
            if c2 == 0.0 {
                continue;
            }
            let d = (self.value(n).re - xv).abs();
            if d == 0.0 {
                return None;
            }
            s.add(c2 * weight.eval(d));
        }
        Some(s.value() * (1.0 + 1e-12))
    }

    /// For rules whose tail hull shrinks to a point away from `x`: sum the
    /// head explicitly until the hull separates from `x`, then use the gap.
    fn split_at_separation(
        &self,
        x: &Abscissa,
        from: u64,
        coeff: &CoefficientSequence,
        env: &Envelope,
        weight: ReWeight,
    ) -> Option<f64> {
        let xv = x.value();
        let mut n = from;
        loop {
            let h = self.hull_from(n);
            if h.re_distance(xv) > 0.0 {
                break;
            }
            n = n.checked_mul(2)?;
            if n - from > EXPLICIT_TERMS {
                return None;
            }
        }
        let head = if n > from {
            self.explicit_re_sum(xv, from, n - 1, coeff, weight)?
        } else {
            0.0
        };
        let hull = self.hull_from(n);
        let gap = hull.re_distance(xv) * (1.0 - 1e-12);
        Some(head + uniform_gap_tail(env, n, gap, &hull, xv, weight))
    }
}

fn uniform_gap_tail(env: &Envelope, from: u64, gap: f64, hull: &Hull, xv: f64, weight: ReWeight) -> f64 {
    let t = env.tail_sq(from - 1);
    match weight {
        ReWeight::Inverse => t / gap,
        ReWeight::LogSquare => {
            let (lo, hi) = hull.re_range().unwrap_or((xv, xv));
            let dmax = (lo - xv).abs().max((hi - xv).abs()).max(gap);
            t * gap.ln().powi(2).max(dmax.ln().powi(2))
        }
    }
}

/// Level-by-level bound for the dyadic diagonal `r_n` (identity real part).
///
/// Level `m` holds `2^m` points with spacing `2^{1−m}`; with `d_m` the gap
/// from `x` to the nearest of them,
/// `Σ_k 1/|r − x| ≤ 2/d_m + 2^m(1 + m ln 2)` and
/// `Σ_k ln²|r − x| ≤ 2 ln² min(d_m,1) + 2^m (2 + ln² D)` with `D = 1 + |x|`.
fn dyadic_level_tail(
    x: &Abscissa,
    from: u64,
    coeff: &CoefficientSequence,
    env: &Envelope,
    weight: ReWeight,
) -> Option<f64> {
    if let Some(p) = x.grid_point() {
        let beyond = p.index.is_none_or(|n| n >= from);
        if beyond && coeff.nonzero_at(p) != Some(false) {
            return None;
        }
    }
    let xv = x.value();
    let dmax_ln2 = (1.0 + xv.abs()).ln().powi(2);
    let level_weight = |m: u32| -> f64 {
        let d = x.level_gap(m);
        let mf = m as f64;
        match weight {
            ReWeight::Inverse => 2.0 / d + mf.exp2() * (1.0 + mf * LN_2),
            ReWeight::LogSquare => 2.0 * d.min(1.0).ln().powi(2) + mf.exp2() * (2.0 + dmax_ln2),
        }
    };
    let (l0, _) = dyadic::split_index(from);
    let (m_asym, b) = x.asymptotic_gap_factor();
    let m_tail = m_asym.max(4).max(l0 + 1);
    let mut acc = crate::sum::NeumaierSum::new();
    // first (partial) level uses e(from), later ones e(2^m)
    acc.add(env.value(from).powi(2) * level_weight(l0));
    for m in (l0 + 1)..m_tail {
        acc.add(env.ln_level_sq(m).exp() * level_weight(m));
    }
    let poly: Vec<f64> = match weight {
        ReWeight::Inverse => vec![2.0 * b + 1.0, LN_2],
        ReWeight::LogSquare => vec![4.0 + dmax_ln2],
    };
    let tail = env.level_tail(m_tail, &poly)?;
    Some((acc.value() + tail) * (1.0 + 1e-12))
}
