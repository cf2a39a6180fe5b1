use crate::operator::{Abscissa, OperatorSpec};
use crate::series::{log_square_series_with, relevant_set_series_with, SeriesOptions, Verdict};
use crate::sum::NeumaierSum;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Odd prime denominator for sampled abscissas; never a dyadic rational.
const SAMPLE_DEN: u64 = 999_983;
const MAX_COVER_TERMS: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevantSample {
    pub x: Abscissa,
    /// `Σ (|α_n|² + |β_n|²)/|Re λ_n − x|` over all pairs.
    pub relevant: Verdict,
    /// `Σ ln²|Re λ_n − x| |α_n|²` over all `u_k`; skipped once the
    /// relevant series diverges.
    pub log_square: Option<Verdict>,
    /// Both of the above.
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevantSetSample {
    pub interval: (f64, f64),
    pub samples: Vec<RelevantSample>,
    /// Certified-convergent samples over decisive ones; 0 when none is decisive.
    pub hit_fraction: f64,
    pub decisive: usize,
}

/// Low-discrepancy points of `(a, b)` as fractions with an odd denominator.
pub fn sample_abscissas(a: f64, b: f64, count: usize) -> Vec<Abscissa> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|k| {
            let t = (0.5 + k as f64 * g).fract();
            let x = a + (b - a) * t;
            let mut num = (x * SAMPLE_DEN as f64).round() as i64;
            // a multiple of the prime would collapse to an integer
            if num % SAMPLE_DEN as i64 == 0 {
                num += 1;
            }
            Abscissa::fraction(num, SAMPLE_DEN).expect("odd prime denominator")
        })
        .collect()
}

const VERDICT_ONLY: SeriesOptions = SeriesOptions {
    term_budget: 100_000_000,
    divergence_threshold: 1e6,
    first_checkpoint: 64,
    verdict_only: true,
};

fn classify(spec: &OperatorSpec, x: Abscissa, tol: f64, with_log: bool) -> RelevantSample {
    let relevant = relevant_set_series_with(spec, x, tol, &VERDICT_ONLY).verdict();
    let log_square = (with_log && relevant != Verdict::DivergesCertified).then(|| {
        match log_square_series_with(spec, x, tol, &VERDICT_ONLY) {
            Ok(b) => b.verdict(),
            Err(_) => Verdict::DivergesCertified,
        }
    });
    RelevantSample {
        x,
        relevant,
        log_square,
        verdict: Verdict::all([relevant, log_square.unwrap_or(relevant)]),
    }
}

/// Samples the relevant set over `interval` with the golden Kronecker
/// sequence.
pub fn relevant_set_sample(spec: &OperatorSpec, interval: (f64, f64), num_samples: usize, tol: f64) -> Result<RelevantSetSample> {
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("empty sampling interval [{a}, {b}]")));
    }
    let samples: Vec<RelevantSample> = sample_abscissas(a, b, num_samples)
        .into_par_iter()
        .map(|x| classify(spec, x, tol, true))
        .collect();
    let decisive = samples.iter().filter(|s| s.verdict.is_decisive()).count();
    let hits = samples.iter().filter(|s| s.verdict == Verdict::ConvergesCertified).count();
    Ok(RelevantSetSample {
        interval,
        samples,
        hit_fraction: if decisive == 0 { 0.0 } else { hits as f64 / decisive as f64 },
        decisive,
    })
}

/// Measure estimate for the exceptional set: the intervals
/// `I_n = [Re λ_n − δ|α_n|², Re λ_n + δ|α_n|²]` over every `u_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverMeasure {
    pub delta: f64,
    /// `2δ Σ_k ‖u_k‖²`, when every `u_k` has a certified tail.
    pub certified_bound: Option<f64>,
    /// `2δ Σ |α_n|²` over the materialized terms.
    pub partial_bound: f64,
    /// `2δ` times the tail of the unmaterialized terms.
    pub tail: Option<f64>,
    /// Length of `⋃ I_n ∩ [−1, 1]` over the materialized terms.
    pub measured_union: f64,
    pub terms: u64,
}

pub fn exceptional_cover_measure(spec: &OperatorSpec, delta: f64) -> Result<CoverMeasure> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let diag = spec.diag();
    let mut intervals = Vec::new();
    let mut partial = NeumaierSum::new();
    let mut tail = Some(0.0);
    let mut terms = 0;
    for p in spec.perturbations() {
        let len = spec.series_len(&p.u, None).unwrap_or(MAX_COVER_TERMS).min(MAX_COVER_TERMS);
        terms = terms.max(len);
        for n in 1..=len {
            let a = p.u.value(n).norm_sqr();
            if a == 0.0 {
                continue;
            }
            partial.add(a);
            let c = diag.value(n).re;
            let (lo, hi) = ((c - delta * a).max(-1.0), (c + delta * a).min(1.0));
            if lo < hi {
                // endpoints round to ulp(c); keep the exact width for tiny intervals
                let clipped = lo == -1.0 || hi == 1.0;
                let width = if clipped { hi - lo } else { 2.0 * delta * a };
                intervals.push((lo, hi, width));
            }
        }
        tail = match (tail, p.u.tail_sq(len)) {
            (Some(t), Some(s)) => Some(t + s),
            _ => None,
        };
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    // a component is no longer than the sum of its members
    let mut union = NeumaierSum::new();
    let mut cur: Option<(f64, f64, NeumaierSum)> = None;
    for (lo, hi, width) in intervals {
        match cur.as_mut() {
            Some((_, b, w)) if lo <= *b => {
                *b = b.max(hi);
                w.add(width);
            }
            _ => {
                if let Some((a, b, w)) = cur.take() {
                    union.add((b - a).min(w.value()));
                }
                let mut w = NeumaierSum::new();
                w.add(width);
                cur = Some((lo, hi, w));
            }
        }
    }
    if let Some((a, b, w)) = cur {
        union.add((b - a).min(w.value()));
    }
    let partial_bound = 2.0 * delta * partial.value();
    let tail = tail.map(|t| 2.0 * delta * t);
    Ok(CoverMeasure {
        delta,
        certified_bound: tail.map(|t| partial_bound + t),
        partial_bound,
        tail,
        measured_union: union.value(),
        terms,
    })
}

/// Two certified points of the relevant set, or the sampling log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryWitness {
    pub pair: Option<(Abscissa, Abscissa)>,
    pub interval: Option<(f64, f64)>,
    pub log: Vec<RelevantSample>,
    pub note: String,
}

/// Searches `(a, b)`, the real projection of the diagonal envelope, for
/// `x₁ < x₂` at which every relevant series converges, preferring certified
/// points near the terciles of `(a, b)`.
pub fn corollary_witness_search(spec: &OperatorSpec, num_samples: usize, tol: f64) -> CorollaryWitness {
    let range = match spec.dimension() {
        Some(d) => (1..=d)
            .map(|n| spec.diag().value(n).re)
            .fold(None, |acc: Option<(f64, f64)>, x| match acc {
                None => Some((x, x)),
                Some((a, b)) => Some((a.min(x), b.max(x))),
            }),
        None => spec.diag().hull_from(1).re_range(),
    };
    let Some((a, b)) = range.filter(|(a, b)| a < b) else {
        return CorollaryWitness {
            pair: None,
            interval: range,
            log: Vec::new(),
            note: "the real parts of the diagonal do not span an interval".into(),
        };
    };
    let log: Vec<RelevantSample> = sample_abscissas(a, b, num_samples)
        .into_par_iter()
        .map(|x| classify(spec, x, tol, false))
        .collect();
    let mut good: Vec<Abscissa> = log
        .iter()
        .filter(|s| s.verdict == Verdict::ConvergesCertified)
        .map(|s| s.x)
        .filter(|x| x.value() > a && x.value() < b)
        .collect();
    good.sort_by(|x, y| x.value().total_cmp(&y.value()));
    good.dedup_by(|x, y| x.value() == y.value());
    // certified points nearest the terciles leave diagonal mass on both
    // outer sides, so neither spectral piece is trivially empty
    let nearest = |t: f64| {
        good.iter()
            .copied()
            .min_by(|x, y| (x.value() - t).abs().total_cmp(&(y.value() - t).abs()))
    };
    let pair = match (nearest(a + (b - a) / 3.0), nearest(a + 2.0 * (b - a) / 3.0)) {
        (Some(x1), Some(x2)) if x1.value() < x2.value() => Some((x1, x2)),
        _ => (good.len() >= 2).then(|| (good[0], good[good.len() - 1])),
    };
    let diverged = log.iter().filter(|s| s.verdict == Verdict::DivergesCertified).count();
    let note = match pair {
        Some(_) => format!("{} of {} samples certified", good.len(), log.len()),
        None => format!(
            "no pair found: {diverged} of {} samples certified divergent, {} inconclusive",
            log.len(),
            log.iter().filter(|s| !s.verdict.is_decisive()).count()
        ),
    };
    CorollaryWitness {
        pair,
        interval: Some((a, b)),
        log,
        note,
    }
}
