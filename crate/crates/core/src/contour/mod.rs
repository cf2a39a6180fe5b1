//! Chord-plus-arc curves around parts of the spectrum, inverse-distance
//! integrals along them and the checker for the spectral-subspace hypotheses.

mod curve;
mod hypotheses;

pub use curve::{
    build_gamma, curve_inverse_distance, segment_integral, segment_inverse_distance, ContourCurve, Orientation,
    Piece, Side,
};
pub use hypotheses::{
    check_subspace_hypotheses, check_subspace_hypotheses_with, condition_iii_series, normalize_to_upper_disc, ConditionI,
    ConditionII, ConditionIII, CurveSample, HypothesisOptions, HypothesisReport, NormalizedSpec, Overall,
};
