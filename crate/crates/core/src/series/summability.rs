use super::Verdict;
use crate::operator::{CoefficientSequence, OperatorSpec};
use crate::sum::neumaier;
use serde::Serialize;

/// Summability conditions on the perturbation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SummabilityCondition {
    /// `Σ |α_n|^{2/3} + |β_n|^{2/3} < ∞`
    #[serde(rename = "FJKP-2/3")]
    Fjkp,
    /// `Σ |α_n| + |β_n| < ∞`
    #[serde(rename = "FX-1")]
    Fx,
    /// `Σ |α_n| < ∞` or `Σ |β_n| < ∞`
    #[serde(rename = "GG-either")]
    GgEither,
    /// `Σ |α_n|² ln(1/|α_n|) + |β_n|² ln(1/|β_n|) < ∞` over nonzero terms
    #[serde(rename = "LOG")]
    Log,
    /// `Σ |α_n|^p + |β_n|^q < ∞`
    #[serde(rename = "PQ")]
    Pq { p: f64, q: f64 },
}

/// Per-sequence evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceEvidence {
    pub label: String,
    pub verdict: Verdict,
    /// Sum over the first materialized terms.
    pub head_partial_sum: f64,
    pub head_terms: u64,
    pub envelope: Option<String>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub condition: SummabilityCondition,
    pub verdict: Verdict,
    pub witness: Vec<SequenceEvidence>,
}

const HEAD: u64 = 4096;

#[derive(Clone, Copy)]
enum Functional {
    Power(f64),
    Log,
}

fn head_sum(c: &CoefficientSequence, f: Functional) -> (f64, u64) {
    let n = c.support_len().unwrap_or(HEAD);
    let s = neumaier((1..=n).map(|i| {
        let a = c.value(i).norm();
        if a == 0.0 {
            return 0.0;
        }
        match f {
            Functional::Power(p) => a.powf(p),
            Functional::Log => -a * a * a.ln(),
        }
    }));
    (s, n)
}

fn evidence(c: &CoefficientSequence, f: Functional) -> SequenceEvidence {
    let (head, terms) = head_sum(c, f);
    let mut ev = SequenceEvidence {
        label: c.label().to_string(),
        verdict: Verdict::Inconclusive,
        head_partial_sum: head,
        head_terms: terms,
        envelope: None,
        note: String::new(),
    };
    if c.support_len().is_some() {
        ev.verdict = Verdict::ConvergesCertified;
        ev.note = "finite support".into();
        return ev;
    }
    let Some(env) = c.summability_envelope() else {
        ev.note = "no envelope or decay class declared".into();
        return ev;
    };
    ev.envelope = Some(env.describe());
    let converges = match f {
        Functional::Power(p) => env.power_sum_converges(p),
        Functional::Log => env.log_sum_converges(),
    };
    // a rule's own envelope equals |c_n| (up to finitely many terms), so a
    // divergent envelope sum is decisive; a declared bound only works upward
    let exact = c.as_rule().is_some_and(|r| r.envelope() == env);
    ev.verdict = match (converges, exact) {
        (true, _) => Verdict::ConvergesCertified,
        (false, true) => Verdict::DivergesCertified,
        (false, false) => Verdict::Inconclusive,
    };
    ev.note = match (converges, exact) {
        (true, _) => "envelope series converges (comparison test)".into(),
        (false, true) => "coefficients equal the envelope, whose series diverges".into(),
        (false, false) => "declared bound diverges; comparison is not decisive".into(),
    };
    ev
}

/// Checks a summability condition for every perturbation pair.
pub fn check_summability(spec: &OperatorSpec, condition: SummabilityCondition) -> SummabilityReport {
    let (fu, fv, either) = match condition {
        SummabilityCondition::Fjkp => (Functional::Power(2.0 / 3.0), Functional::Power(2.0 / 3.0), false),
        SummabilityCondition::Fx => (Functional::Power(1.0), Functional::Power(1.0), false),
        SummabilityCondition::GgEither => (Functional::Power(1.0), Functional::Power(1.0), true),
        SummabilityCondition::Log => (Functional::Log, Functional::Log, false),
        SummabilityCondition::Pq { p, q } => (Functional::Power(p), Functional::Power(q), false),
    };
    let mut witness = Vec::new();
    let mut per_pair = Vec::new();
    for pair in spec.perturbations() {
        let eu = evidence(&pair.u, fu);
        let ev = evidence(&pair.v, fv);
        per_pair.push(if either {
            Verdict::any([eu.verdict, ev.verdict])
        } else {
            Verdict::all([eu.verdict, ev.verdict])
        });
        witness.push(eu);
        witness.push(ev);
    }
    SummabilityReport {
        condition,
        verdict: Verdict::all(per_pair),
        witness,
    }
}
