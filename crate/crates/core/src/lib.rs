//! Spectral analysis of operators of the form `T = D_Λ + Σ_k u_k ⊗ v_k`, where
//! `D_Λ` is diagonal on a fixed orthonormal basis and the perturbation has
//! finite rank.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`] — diagonal and coefficient sequences (finite lists or index
//!   rules with analytic tail envelopes) and the validated [`OperatorSpec`].
//! * [`series`] — Borel-type series with certified tails and the summability
//!   hierarchy used to classify perturbations.
//! * [`spectral`] — eigenvalue criteria, an argument-principle root finder and
//!   relevant-set sampling.
//! * [`contour`] — chord-plus-arc curves, inverse-distance integrals and the
//!   spectral-subspace hypothesis checker.
//! * [`lab`] — dense truncations: eigensolver, Riesz projections,
//!   quasisimilarity constructions.
//! * [`counterexample`] — the dyadic construction whose relevant set is empty.
//!
//! Every series evaluation returns a [`SeriesValue`]: a partial sum, the
//! number of terms used, an optional rigorous tail bound and a verdict. A
//! verdict is only ever "certified" when an analytic bound backs it.

pub mod contour;
pub mod counterexample;
pub mod dyadic;
pub mod error;
pub mod lab;
pub mod operator;
pub mod quad;
pub mod series;
pub mod spectral;
pub mod sum;

pub use error::{Error, Result};
pub use operator::{
    build_operator_spec, classify_ro, truncate, Abscissa, CoefficientRule, CoefficientSequence,
    DiagonalRule, DiagonalSequence, Envelope, OperatorSpec, RoClassification,
};
pub use series::{SeriesValue, Verdict};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
