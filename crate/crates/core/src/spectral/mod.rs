//! Eigenvalue criterion, root scanning of `det M_T`, and sampling of the
//! relevant set.

mod roots;
mod sampling;
pub(crate) mod secular;

pub use eigen_test::{ionascu_eigen_test, EigenVerdict, IsEigen};
pub use roots::{find_eigenvalues, find_eigenvalues_with, ExcludedCell, Rect, RootCandidate, ScanOptions, SpectrumReport};
pub use sampling::{
    corollary_witness_search, exceptional_cover_measure, relevant_set_sample, sample_abscissas, CorollaryWitness,
    CoverMeasure, RelevantSample, RelevantSetSample,
};
