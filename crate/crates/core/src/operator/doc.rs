//! JSON document layout for operator specifications.

use super::envelope::Envelope;
use super::sequence::{AffineMap, CoeffSource, CoefficientRule, CoefficientSequence, DiagSource, DiagonalRule, DiagonalSequence};
use super::spec::{build_operator_spec, OperatorSpec};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagDoc {
    Finite {
        #[serde(with = "super::cnum::vec")]
        values: Vec<C64>,
    },
    Rule {
        rule: DiagonalRule,
        #[serde(default, skip_serializing_if = "AffineMap::is_identity")]
        map: AffineMap,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeqDoc {
    Finite {
        #[serde(with = "super::cnum::vec")]
        values: Vec<C64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decay_class: Option<Envelope>,
    },
    Rule {
        rule: CoefficientRule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decay_class: Option<Envelope>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub u: SeqDoc,
    pub v: SeqDoc,
}

/// `{"diag": …, "perturbations": [{"u": …, "v": …}], "declared_pq": [p, q]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub diag: DiagDoc,
    pub perturbations: Vec<PairDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_pq: Option<[f64; 2]>,
}

impl SeqDoc {
    fn build(self) -> CoefficientSequence {
        let (seq, dc) = match self {
            SeqDoc::Finite { values, decay_class } => (CoefficientSequence::finite(values), decay_class),
            SeqDoc::Rule { rule, decay_class } => (CoefficientSequence::rule(rule), decay_class),
        };
        match dc {
            Some(e) => seq.with_decay_class(e),
            None => seq,
        }
    }

    fn from_seq(s: &CoefficientSequence) -> Result<Self> {
        let decay_class = s.decay_class().copied();
        match &s.source {
            CoeffSource::Finite(v) => Ok(SeqDoc::Finite {
                values: v.clone(),
                decay_class,
            }),
            CoeffSource::Rule(r) => Ok(SeqDoc::Rule { rule: *r, decay_class }),
            CoeffSource::Custom { name, .. } => Err(Error::InvalidArgument(format!(
                "custom sequence `{name}` cannot be serialized"
            ))),
        }
    }
}

impl SpecDocument {
    pub fn into_spec(self) -> Result<OperatorSpec> {
        let diag = match self.diag {
            DiagDoc::Finite { values } => DiagonalSequence::finite(values),
            DiagDoc::Rule { rule, map } => DiagonalSequence::mapped_rule(rule, map),
        };
        let pairs = self
            .perturbations
            .into_iter()
            .map(|p| (p.u.build(), p.v.build()))
            .collect();
        if let Some([p, q]) = self.declared_pq {
            crate::series::theorem_region_membership(p, q)?;
        }
        Ok(build_operator_spec(diag, pairs)?.with_declared_pq(self.declared_pq.map(|[p, q]| (p, q))))
    }

    pub fn from_spec(spec: &OperatorSpec) -> Result<Self> {
        let diag = match &spec.diag().source {
            DiagSource::Finite(v) => DiagDoc::Finite { values: v.clone() },
            DiagSource::Rule { rule, map } => DiagDoc::Rule { rule: *rule, map: *map },
        };
        let perturbations = spec
            .perturbations()
            .iter()
            .map(|p| {
                Ok(PairDoc {
                    u: SeqDoc::from_seq(&p.u)?,
                    v: SeqDoc::from_seq(&p.v)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(SpecDocument {
            diag,
            perturbations,
            declared_pq: spec.declared_pq().map(|(p, q)| [p, q]),
        })
    }
}

impl OperatorSpec {
    /// Parses and validates a JSON specification.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_spec()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = SpecDocument::from_spec(self)?;
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }
}
