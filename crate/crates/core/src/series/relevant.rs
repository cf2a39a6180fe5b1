use super::{combine, sum_series, SeriesOptions, SeriesValue, Verdict, Witness};
use crate::counterexample::chain_lower_bound;
use crate::operator::{Abscissa, CoefficientRule, CoefficientSequence, DiagonalRule, OperatorSpec, ReWeight};
use crate::{Error, Result, C64};
use serde::Serialize;

/// A combined series with its per-sequence parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesBreakdown {
    pub combined: SeriesValue,
    pub parts: Vec<(String, SeriesValue)>,
}

impl SeriesBreakdown {
    pub(crate) fn from_parts(parts: Vec<(String, SeriesValue)>) -> Self {
        let refs: Vec<&SeriesValue> = parts.iter().map(|(_, v)| v).collect();
        SeriesBreakdown {
            combined: combine(&refs),
            parts,
        }
    }

    pub fn verdict(&self) -> Verdict {
        self.combined.verdict
    }
}

/// `Σ_k Σ_n |α_n^{(k)}|² / |z − λ_n|²`, one series per `u_k`.
pub fn ionascu_range_series(spec: &OperatorSpec, z: C64, tol: f64) -> Result<SeriesBreakdown> {
    ionascu_range_series_with(spec, z, tol, &SeriesOptions::default())
}

pub fn ionascu_range_series_with(
    spec: &OperatorSpec,
    z: C64,
    tol: f64,
    opts: &SeriesOptions,
) -> Result<SeriesBreakdown> {
    if let Some(p) = spec.diag().index_of(z) {
        return Err(Error::Pole {
            location: p.to_string(),
            z,
        });
    }
    let diag = spec.diag();
    let mut parts = Vec::new();
    for p in spec.perturbations() {
        let u = &p.u;
        let len = spec.series_len(u, None);
        let value = sum_series(
            len,
            |n| {
                let a = u.value(n).norm_sqr();
                if a == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                C64::new(a / (z - diag.value(n)).norm_sqr(), 0.0)
            },
            |from| {
                let d = diag.hull_from(from).distance(z) * (1.0 - 1e-12);
                (d > 0.0).then(|| u.tail_sq(from - 1)).flatten().map(|t| t / (d * d))
            },
            true,
            tol,
            opts,
            &|| envelope_note(u, "hull separation"),
        );
        parts.push((u.label().to_string(), value));
    }
    Ok(SeriesBreakdown::from_parts(parts))
}

fn envelope_note(c: &CoefficientSequence, how: &str) -> String {
    match c.tail_envelope() {
        Some(e) => format!("{how}; envelope {}", e.describe()),
        None => how.to_string(),
    }
}

/// Whether the dyadic lower-bound chain applies to `Σ |c_n|²/|r_n − x|`.
fn dyadic_chain(spec: &OperatorSpec, c: &CoefficientSequence, x: f64) -> Option<Witness> {
    let (DiagonalRule::DyadicSection3, map) = spec.diag().as_rule()? else {
        return None;
    };
    if !map.is_identity() || !(x > -1.0 && x < 1.0) {
        return None;
    }
    let CoefficientRule::DyadicSection3 { scale } = c.as_rule()? else {
        return None;
    };
    let levels = 200;
    let (first, lb) = chain_lower_bound(x, levels);
    Some(Witness::DyadicChain {
        levels,
        lower_bound: scale.norm_sqr() * lb,
        note: format!(
            "partial sums dominate ln2·Σ_{{m≥{first}}} |γ_m|²·2^(m−1)·(m−1) = ln2·Σ (m−1)/(2m ln²m), a divergent series"
        ),
    })
}

/// Relevant-set series `Σ |c_n|²/|Re λ_n − x|` for `c` in `{u_k, v_k}`.
pub fn relevant_set_series(spec: &OperatorSpec, x: impl Into<Abscissa>, tol: f64) -> SeriesBreakdown {
    relevant_set_series_with(spec, x, tol, &SeriesOptions::default())
}

pub fn relevant_set_series_with(
    spec: &OperatorSpec,
    x: impl Into<Abscissa>,
    tol: f64,
    opts: &SeriesOptions,
) -> SeriesBreakdown {
    let x = x.into();
    let mut parts = Vec::new();
    for p in spec.perturbations() {
        for c in [&p.u, &p.v] {
            parts.push((c.label().to_string(), re_series(spec, c, &x, ReWeight::Inverse, tol, opts)));
        }
    }
    SeriesBreakdown::from_parts(parts)
}

/// One series `Σ |c_n|² w(|Re λ_n − x|)`.
fn re_series(
    spec: &OperatorSpec,
    c: &CoefficientSequence,
    x: &Abscissa,
    weight: ReWeight,
    tol: f64,
    opts: &SeriesOptions,
) -> SeriesValue {
    let diag = spec.diag();
    for hit in diag.re_hits(x) {
        match c.nonzero_at(hit) {
            Some(false) => {}
            Some(true) => {
                return SeriesValue::diverges(
                    Witness::ExactPole {
                        location: format!("Re λ = x at {hit}"),
                    },
                    f64::INFINITY,
                    0,
                )
            }
            None => {
                return SeriesValue::inconclusive(Witness::ExactPole {
                    location: format!("Re λ = x at {hit}; coefficient undecidable"),
                })
            }
        }
    }
    let xv = x.value();
    if weight == ReWeight::Inverse {
        if let Some(w) = dyadic_chain(spec, c, xv) {
            let lb = match &w {
                Witness::DyadicChain { lower_bound, .. } => *lower_bound,
                _ => 0.0,
            };
            return SeriesValue::diverges(w, lb, 0);
        }
    }
    let len = spec.series_len(c, None);
    sum_series(
        len,
        |n| {
            let a = c.value(n).norm_sqr();
            if a == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let d = (diag.value(n).re - xv).abs();
            C64::new(a * weight.eval(d), 0.0)
        },
        |from| diag.re_weighted_tail(x, from, c, weight),
        weight == ReWeight::Inverse,
        tol,
        opts,
        &|| envelope_note(c, "real-part separation"),
    )
}

/// `Σ_n (ln |Re λ_n − x|)² |α_n^{(k)}|²` for every `u_k`.
pub fn log_square_series(spec: &OperatorSpec, x: impl Into<Abscissa>, tol: f64) -> Result<SeriesBreakdown> {
    log_square_series_with(spec, x, tol, &SeriesOptions::default())
}

pub fn log_square_series_with(
    spec: &OperatorSpec,
    x: impl Into<Abscissa>,
    tol: f64,
    opts: &SeriesOptions,
) -> Result<SeriesBreakdown> {
    let x = x.into();
    let mut parts = Vec::new();
    for p in spec.perturbations() {
        for hit in spec.diag().re_hits(&x) {
            if p.u.nonzero_at(hit) != Some(false) {
                return Err(Error::Pole {
                    location: hit.to_string(),
                    z: C64::new(x.value(), 0.0),
                });
            }
        }
        parts.push((
            p.u.label().to_string(),
            re_series(spec, &p.u, &x, ReWeight::LogSquare, tol, opts),
        ));
    }
    Ok(SeriesBreakdown::from_parts(parts))
}
