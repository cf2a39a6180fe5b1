use super::norm2;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub const DEFAULT_DIM_CAP: usize = 2000;

/// Required relative residual `‖Tv − λv‖ / ‖T‖`.
const RESIDUAL_TARGET: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    #[serde(serialize_with = "crate::series::ser_c64")]
    pub value: C64,
    #[serde(skip)]
    pub vector: DVector<C64>,
    /// `‖Tv − λv‖ / ‖T‖` with `‖v‖ = 1`.
    pub residual: f64,
    /// Residual above target.
    pub flagged: bool,
}

fn check_cap(m: &DMatrix<C64>, cap: usize) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!("matrix is {}×{}, not square", m.nrows(), m.ncols())));
    }
    if m.nrows() > cap {
        return Err(Error::DimensionCap { dim: m.nrows(), cap });
    }
    Ok(())
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    check_cap(m, DEFAULT_DIM_CAP)?;
    if m.is_empty() {
        return Ok(vec![]);
    }
    let (_, t) = m.clone().schur().unpack();
    Ok(t.diagonal().iter().copied().collect())
}

pub fn dense_eigendecomposition(m: &DMatrix<C64>) -> Result<Vec<EigenPair>> {
    dense_eigendecomposition_with_cap(m, DEFAULT_DIM_CAP)
}

/// All eigenpairs: Schur form, back substitution on the triangular factor,
/// then one step of inverse iteration for clustered eigenvalues.
pub fn dense_eigendecomposition_with_cap(m: &DMatrix<C64>, cap: usize) -> Result<Vec<EigenPair>> {
    check_cap(m, cap)?;
    let d = m.nrows();
    if d == 0 {
        return Ok(vec![]);
    }
    let (q, t) = m.clone().schur().unpack();
    let scale = norm2(m).max(f64::MIN_POSITIVE);
    let tiny = scale * f64::EPSILON;
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let lambda = t[(i, i)];
        let mut y = DVector::<C64>::zeros(d);
        y[i] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in j + 1..=i {
                s += t[(j, k)] * y[k];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < tiny {
                den = C64::new(tiny, 0.0);
            }
            y[j] = -s / den;
        }
        let mut v = &q * y;
        v /= C64::new(v.norm(), 0.0);
        let mut residual = (m * &v - &v * lambda).norm() / scale;
        if residual > RESIDUAL_TARGET {
            // inverse iteration with a slightly shifted matrix
            let shift = lambda + C64::new(tiny * 1e3, 0.0);
            let a = m - DMatrix::<C64>::identity(d, d) * shift;
            if let Some(w) = a.lu().solve(&v) {
                let nrm = w.norm();
                if nrm.is_finite() && nrm > 0.0 {
                    let w = w / C64::new(nrm, 0.0);
                    let r = (m * &w - &w * lambda).norm() / scale;
                    if r < residual {
                        v = w;
                        residual = r;
                    }
                }
            }
        }
        out.push(EigenPair {
            value: lambda,
            vector: v,
            residual,
            flagged: residual > RESIDUAL_TARGET,
        });
    }
    Ok(out)
}
