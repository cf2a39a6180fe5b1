//! Dense finite-dimensional ground truth: eigendecomposition, Riesz
//! projections, invariance diagnostics and quasisimilarity constructions on
//! truncations of `T`.
//!
//! Riesz projections over a curve separating the spectrum are the
//! finite-dimensional stand-in for local spectral subspaces: for a matrix the
//! two coincide.

mod eigen;
pub mod io;
mod quasi;
mod riesz;

pub use eigen::{dense_eigendecomposition, dense_eigendecomposition_with_cap, eigenvalues, EigenPair, DEFAULT_DIM_CAP};
pub use quasi::{ms_star_identity_check, quasisimilar_pair, MsStarCheck, QuasisimilarPair};
pub use riesz::{invariance_report, riesz_projection, InvarianceReport, RieszProjection};

use crate::C64;
use nalgebra::DMatrix;

/// Spectral norm (largest singular value).
pub fn norm2(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}
