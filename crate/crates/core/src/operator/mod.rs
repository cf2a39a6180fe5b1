//! Diagonal sequences, perturbation vectors and the operator specification.

mod classify;
mod doc;
mod envelope;
mod sequence;
mod spec;

pub use crate::dyadic::{Abscissa, GridPoint};
pub use classify::{classify_ro, RoClassification, RoCondition};
pub use doc::{DiagDoc, PairDoc, SeqDoc, SpecDocument};
pub use envelope::{Envelope, Weight};
pub use sequence::{
    AffineMap, CoefficientRule, CoefficientSequence, DerivedSet, DiagonalRule, DiagonalSequence,
    Hull, L2Certificate, ReWeight,
};
pub use spec::{build_operator_spec, build_operator_spec_with, truncate, BuildOptions, OperatorSpec, Perturbation};

pub(crate) use sequence::segment_distance;

/// Serde helpers accepting either a bare number or an `[re, im]` pair.
pub(crate) mod cnum {
    use crate::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    impl From<Repr> for C64 {
        fn from(r: Repr) -> Self {
            match r {
                Repr::Real(x) => C64::new(x, 0.0),
                Repr::Pair([a, b]) => C64::new(a, b),
            }
        }
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Repr::deserialize(d).map(C64::from)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
            let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
            pairs.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
            Vec::<Repr>::deserialize(d).map(|v| v.into_iter().map(C64::from).collect())
        }
    }
}
