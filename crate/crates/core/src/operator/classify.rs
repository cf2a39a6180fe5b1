use super::sequence::{DerivedSet, DiagSource};
use super::spec::OperatorSpec;
use serde::Serialize;
use std::collections::HashMap;

/// Conditions of the nondegenerate class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoCondition {
    /// Some `α_n^{(k₁)} β_n^{(k₂)} ≠ 0` at every index.
    CoeffSupport,
    /// Every value of `Λ` is repeated at most `N` times.
    Multiplicity,
    /// `Λ` has at least two accumulation points.
    DerivedSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoClassification {
    pub in_class: bool,
    pub failed_conditions: Vec<RoCondition>,
    pub notes: Vec<String>,
    pub probe_depth: u64,
}

const REPORTED_INDICES: usize = 10;

/// Checks the class conditions on the first `probe_depth` indices.
pub fn classify_ro(spec: &OperatorSpec, probe_depth: u64) -> RoClassification {
    let depth = spec.dimension().map_or(probe_depth, |d| d.min(probe_depth));
    let n_rank = spec.rank();
    let mut failed = Vec::new();
    let mut notes = Vec::new();

    // coefficient support
    let mut bad = Vec::new();
    for n in 1..=depth {
        let any_u = spec.perturbations().iter().any(|p| p.u.value(n).norm_sqr() > 0.0);
        let any_v = spec.perturbations().iter().any(|p| p.v.value(n).norm_sqr() > 0.0);
        if !(any_u && any_v) {
            bad.push(n);
        }
    }
    if !bad.is_empty() {
        failed.push(RoCondition::CoeffSupport);
        let shown: Vec<String> = bad.iter().take(REPORTED_INDICES).map(|n| n.to_string()).collect();
        notes.push(format!(
            "coefficient support fails at {} index(es): n = {}{}",
            bad.len(),
            shown.join(", "),
            if bad.len() > REPORTED_INDICES { ", …" } else { "" }
        ));
    }

    // multiplicity
    let values: Vec<_> = (1..=depth).map(|n| spec.diag().value(n)).collect();
    let worst = match &spec.diag().source {
        DiagSource::Rule { .. } => exact_multiplicity(&values),
        DiagSource::Finite(_) => tolerant_multiplicity(&values, 1e-14 * spec.diag().bound()),
    };
    if let Some((count, at)) = worst {
        if count > n_rank {
            failed.push(RoCondition::Multiplicity);
            notes.push(format!(
                "value λ = {} repeated {count} times (rank {n_rank})",
                values[at]
            ));
        }
    }

    // derived set
    match spec.diag().derived_set() {
        DerivedSet::Undecidable => notes.push("derived set undecidable — finite data".into()),
        DerivedSet::Point { point } => {
            failed.push(RoCondition::DerivedSet);
            notes.push(format!("derived set is the single point {point}"));
        }
        DerivedSet::Segment { from, to } => notes.push(format!(
            "derived set contains the segment [{from}, {to}] (accumulation candidates only; not certified from data)"
        )),
    }

    RoClassification {
        in_class: failed.is_empty(),
        failed_conditions: failed,
        notes,
        probe_depth: depth,
    }
}

fn key(z: &crate::C64) -> (u64, u64) {
    // +0.0 and −0.0 compare equal
    let norm = |x: f64| if x == 0.0 { 0.0f64.to_bits() } else { x.to_bits() };
    (norm(z.re), norm(z.im))
}

/// Largest multiplicity under exact equality, with a representative index.
fn exact_multiplicity(values: &[crate::C64]) -> Option<(usize, usize)> {
    let mut counts: HashMap<(u64, u64), (usize, usize)> = HashMap::with_capacity(values.len());
    for (i, z) in values.iter().enumerate() {
        counts.entry(key(z)).or_insert((0, i)).0 += 1;
    }
    counts.into_values().max_by_key(|(c, i)| (*c, usize::MAX - i))
}

/// Largest number of values within `tol` of some value.
fn tolerant_multiplicity(values: &[crate::C64], tol: f64) -> Option<(usize, usize)> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    let mut best: Option<(usize, usize)> = None;
    for (pos, &i) in idx.iter().enumerate() {
        let z = values[i];
        let mut count = 0;
        for &j in idx[pos..].iter() {
            if values[j].re - z.re > tol {
                break;
            }
            if (values[j] - z).norm() <= tol {
                count += 1;
            }
        }
        for &j in idx[..pos].iter().rev() {
            if z.re - values[j].re > tol {
                break;
            }
            if (values[j] - z).norm() <= tol {
                count += 1;
            }
        }
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, i));
        }
    }
    best
}
