//! Scalar series with certified tails.
//!
//! Terms are accumulated in ascending index with compensated summation. At
//! doubling checkpoints the analytic tail bound of the remaining terms is
//! evaluated; a series is `ConvergesCertified` only when such a bound exists.
//! Nonnegative series whose partial sum crosses the divergence threshold are
//! `DivergesCertified`, as are series with an exact pole or a recorded
//! analytic lower-bound chain.

mod borel;
mod region;
mod relevant;
mod summability;

pub use borel::{eval_borel, eval_borel_derivative, eval_borel_matrix, eval_borel_matrix_with, eval_borel_with, BorelMatrixValue};
pub(crate) use borel::{borel_entry, borel_matrix, ReHint};
pub use region::{theorem_region_membership, Region};
pub use relevant::{
    ionascu_range_series, ionascu_range_series_with, log_square_series, log_square_series_with, relevant_set_series, relevant_set_series_with,
    SeriesBreakdown,
};
pub use summability::{check_summability, SequenceEvidence, SummabilityCondition, SummabilityReport};

use crate::sum::{ComplexSum, NeumaierSum};
use crate::C64;
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConvergesCertified,
    DivergesCertified,
    Inconclusive,
}

impl Verdict {
    pub fn is_decisive(&self) -> bool {
        !matches!(self, Verdict::Inconclusive)
    }

    /// Conjunction: all must converge; one divergence decides.
    pub fn all<I: IntoIterator<Item = Verdict>>(it: I) -> Verdict {
        let mut out = Verdict::ConvergesCertified;
        for v in it {
            match v {
                Verdict::DivergesCertified => return Verdict::DivergesCertified,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::ConvergesCertified => {}
            }
        }
        out
    }

    /// Disjunction: one convergence decides; all must diverge.
    pub fn any<I: IntoIterator<Item = Verdict>>(it: I) -> Verdict {
        let mut out = Verdict::DivergesCertified;
        for v in it {
            match v {
                Verdict::ConvergesCertified => return Verdict::ConvergesCertified,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::DivergesCertified => {}
            }
        }
        out
    }
}

/// Evidence attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// All nonzero terms were summed.
    FiniteSupport,
    /// Tail bounded through the named envelope argument.
    Envelope { description: String },
    /// A term is infinite.
    ExactPole { location: String },
    /// A nonnegative partial sum crossed the threshold.
    PartialSumThreshold { partial_sum: f64, threshold: f64 },
    /// The dyadic lower-bound chain: partial sums of a divergent minorant.
    DyadicChain { levels: u32, lower_bound: f64, note: String },
    /// No tail bound available within the term budget.
    BudgetExhausted,
}

pub(crate) fn ser_c64<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// A partial sum with a certified tail bound and a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesValue {
    #[serde(serialize_with = "ser_c64")]
    pub partial_sum: C64,
    pub terms_used: u64,
    /// `|true value − partial_sum| ≤ tail_bound`; `None` when unknown.
    pub tail_bound: Option<f64>,
    pub verdict: Verdict,
    pub witness: Witness,
}

impl SeriesValue {
    pub(crate) fn diverges(witness: Witness, partial: f64, terms: u64) -> Self {
        SeriesValue {
            partial_sum: C64::new(partial, 0.0),
            terms_used: terms,
            tail_bound: None,
            verdict: Verdict::DivergesCertified,
            witness,
        }
    }

    pub(crate) fn inconclusive(witness: Witness) -> Self {
        SeriesValue {
            partial_sum: C64::new(0.0, 0.0),
            terms_used: 0,
            tail_bound: None,
            verdict: Verdict::Inconclusive,
            witness,
        }
    }

    /// Whether the certified interval excludes zero.
    pub fn certified_nonzero(&self) -> bool {
        self.tail_bound.is_some_and(|t| self.partial_sum.norm() > t)
    }
}

/// Budgets for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Maximum number of terms materialized per series.
    pub term_budget: u64,
    /// Nonnegative partial sums beyond this certify divergence.
    pub divergence_threshold: f64,
    /// First checkpoint at which a tail bound is attempted.
    pub first_checkpoint: u64,
    /// Stop at the first finite tail bound: only the verdict is wanted.
    pub verdict_only: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            term_budget: 100_000_000,
            divergence_threshold: 1e6,
            first_checkpoint: 64,
            verdict_only: false,
        }
    }
}

/// Relative rounding allowance for compensated partial sums.
const ROUNDING: f64 = 1e-15;

/// Sums `term(1), term(2), …` until a tail bound `≤ tol` is certified, the
/// support ends, or the budget runs out.
pub(crate) fn sum_series<T, B>(
    len: Option<u64>,
    term: T,
    tail: B,
    nonneg: bool,
    tol: f64,
    opts: &SeriesOptions,
    describe: &dyn Fn() -> String,
) -> SeriesValue
where
    T: Fn(u64) -> C64,
    B: Fn(u64) -> Option<f64>,
{
    let mut acc = ComplexSum::new();
    let mut abs_acc = NeumaierSum::new();
    let mut done = 0u64;
    let mut checkpoint = opts.first_checkpoint.max(1);
    let limit = len.map_or(opts.term_budget, |l| l.min(opts.term_budget));
    loop {
        let target = checkpoint.min(limit);
        for n in (done + 1)..=target {
            let t = term(n);
            acc.add(t);
            abs_acc.add(t.norm());
        }
        done = target;
        let partial = acc.value();
        let rounding = ROUNDING * abs_acc.value();
        if len.is_some_and(|l| done >= l) {
            return SeriesValue {
                partial_sum: partial,
                terms_used: done,
                tail_bound: Some(rounding),
                verdict: Verdict::ConvergesCertified,
                witness: Witness::FiniteSupport,
            };
        }
        if nonneg && !(partial.re < opts.divergence_threshold) {
            return SeriesValue::diverges(
                Witness::PartialSumThreshold {
                    partial_sum: partial.re,
                    threshold: opts.divergence_threshold,
                },
                partial.re,
                done,
            );
        }
        let t = tail(done + 1).filter(|t| t.is_finite());
        let exhausted = done >= limit;
        if let Some(t) = t {
            if t + rounding <= tol || exhausted || opts.verdict_only {
                return SeriesValue {
                    partial_sum: partial,
                    terms_used: done,
                    tail_bound: Some(t + rounding),
                    verdict: Verdict::ConvergesCertified,
                    witness: Witness::Envelope {
                        description: describe(),
                    },
                };
            }
        }
        if exhausted {
            return SeriesValue {
                partial_sum: partial,
                terms_used: done,
                tail_bound: None,
                verdict: Verdict::Inconclusive,
                witness: Witness::BudgetExhausted,
            };
        }
        checkpoint = checkpoint.saturating_mul(2);
    }
}

/// Sum of independent series: partial sums add, tails add.
pub(crate) fn combine(parts: &[&SeriesValue]) -> SeriesValue {
    let verdict = Verdict::all(parts.iter().map(|p| p.verdict));
    let partial: C64 = parts.iter().map(|p| p.partial_sum).sum();
    let tail = parts
        .iter()
        .map(|p| p.tail_bound)
        .try_fold(0.0, |acc, t| t.map(|t| acc + t));
    let witness = parts
        .iter()
        .find(|p| p.verdict == verdict)
        .map(|p| p.witness.clone())
        .unwrap_or(Witness::FiniteSupport);
    SeriesValue {
        partial_sum: partial,
        terms_used: parts.iter().map(|p| p.terms_used).max().unwrap_or(0),
        tail_bound: if verdict == Verdict::DivergesCertified { None } else { tail },
        verdict,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_support_is_exact() {
        let v = sum_series(
            Some(3),
            |n| C64::new(n as f64, 0.0),
            |_| None,
            true,
            1e-12,
            &SeriesOptions::default(),
            &|| String::new(),
        );
        assert_eq!(v.partial_sum.re, 6.0);
        assert_eq!(v.verdict, Verdict::ConvergesCertified);
    }

    #[test]
    fn harmonic_crosses_threshold() {
        let opts = SeriesOptions {
            divergence_threshold: 10.0,
            ..Default::default()
        };
        let v = sum_series(None, |n| C64::new(1.0 / n as f64, 0.0), |_| None, true, 1e-12, &opts, &|| String::new());
        assert_eq!(v.verdict, Verdict::DivergesCertified);
    }

    #[test]
    fn no_tail_means_inconclusive() {
        let opts = SeriesOptions {
            term_budget: 1000,
            ..Default::default()
        };
        let v = sum_series(None, |n| C64::new(1.0 / (n * n) as f64, 0.0), |_| None, true, 1e-12, &opts, &|| String::new());
        assert_eq!(v.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn verdict_algebra() {
        use Verdict::*;
        assert_eq!(Verdict::all([ConvergesCertified, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::all([Inconclusive, DivergesCertified]), DivergesCertified);
        assert_eq!(Verdict::any([DivergesCertified, ConvergesCertified]), ConvergesCertified);
        assert_eq!(Verdict::any([DivergesCertified, Inconclusive]), Inconclusive);
    }
}
