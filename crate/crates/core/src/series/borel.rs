use super::{ser_c64, sum_series, SeriesOptions, SeriesValue, Verdict};
use crate::operator::{Abscissa, OperatorSpec, ReWeight};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::Serialize;

/// Lets the Cauchy–Schwarz tail use real-part separations measured in another
/// (affinely related) coordinate system: valid when `|λ_n − z| ≥ |Re μ_n − x|`
/// for the hint's diagonal `μ` and the scale of the map cancels.
pub(crate) struct ReHint<'a> {
    pub spec: &'a OperatorSpec,
    pub x: Abscissa,
}

fn pole_check(spec: &OperatorSpec, z: C64) -> Result<()> {
    if let Some(p) = spec.diag().index_of(z) {
        return Err(Error::Pole {
            location: p.to_string(),
            z,
        });
    }
    Ok(())
}

/// `Σ α_n^{(i)} conj(β_n^{(j)}) / (λ_n − z)^power`, `power ∈ {1, 2}`.
pub(crate) fn borel_entry(
    spec: &OperatorSpec,
    i: usize,
    j: usize,
    z: C64,
    power: i32,
    tol: f64,
    opts: &SeriesOptions,
    hint: Option<&ReHint>,
) -> Result<SeriesValue> {
    pole_check(spec, z)?;
    let u = &spec.perturbations()[i].u;
    let v = &spec.perturbations()[j].v;
    let diag = spec.diag();
    let len = spec.series_len(u, Some(v));
    let term = |n: u64| {
        let a = u.value(n);
        if a.norm_sqr() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        a * v.value(n).conj() / (diag.value(n) - z).powi(power)
    };
    let tail = |from: u64| -> Option<f64> {
        let mut best: Option<f64> = None;
        let d = diag.hull_from(from).distance(z) * (1.0 - 1e-12);
        if d > 0.0 {
            if let (Some(ta), Some(tb)) = (u.tail_sq(from - 1), v.tail_sq(from - 1)) {
                best = Some((ta * tb).sqrt() / d.powi(power));
            }
        }
        if power == 1 {
            let re_bound = match hint {
                Some(h) => {
                    let hu = &h.spec.perturbations()[i].u;
                    let hv = &h.spec.perturbations()[j].v;
                    let hd = h.spec.diag();
                    hd.re_weighted_tail(&h.x, from, hu, ReWeight::Inverse)
                        .zip(hd.re_weighted_tail(&h.x, from, hv, ReWeight::Inverse))
                }
                None => {
                    let x = Abscissa::Float(z.re);
                    diag.re_weighted_tail(&x, from, u, ReWeight::Inverse)
                        .zip(diag.re_weighted_tail(&x, from, v, ReWeight::Inverse))
                }
            };
            if let Some((a, b)) = re_bound {
                let cs = (a * b).sqrt();
                best = Some(best.map_or(cs, |t| t.min(cs)));
            }
        }
        best
    };
    let describe = || {
        format!(
            "Cauchy–Schwarz with envelopes {} and {}",
            u.tail_envelope().map(|e| e.describe()).unwrap_or_else(|| "finite".into()),
            v.tail_envelope().map(|e| e.describe()).unwrap_or_else(|| "finite".into())
        )
    };
    Ok(sum_series(len, term, tail, false, tol, opts, &describe))
}

/// `f_T(z) = Σ α_n conj(β_n)/(λ_n − z)` for rank-one specs.
pub fn eval_borel(spec: &OperatorSpec, z: C64, tol: f64) -> Result<SeriesValue> {
    eval_borel_with(spec, z, tol, &SeriesOptions::default())
}

pub fn eval_borel_with(spec: &OperatorSpec, z: C64, tol: f64, opts: &SeriesOptions) -> Result<SeriesValue> {
    if spec.rank() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the scalar Borel series needs rank 1, spec has rank {}",
            spec.rank()
        )));
    }
    borel_entry(spec, 0, 0, z, 1, tol, opts, None)
}

/// `f'_{ij}(z) = Σ α_n^{(i)} conj(β_n^{(j)})/(λ_n − z)²`.
pub fn eval_borel_derivative(spec: &OperatorSpec, i: usize, j: usize, z: C64, tol: f64) -> Result<SeriesValue> {
    borel_entry(spec, i, j, z, 2, tol, &SeriesOptions::default(), None)
}

/// `M_T(z) = I + [f^{(i,j)}(z)]` with its determinant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorelMatrixValue {
    /// Series `f^{(i,j)}(z)`, row-major.
    pub entries: Vec<Vec<SeriesValue>>,
    #[serde(serialize_with = "ser_c64")]
    pub determinant: C64,
    /// Bound on `|det M_T(z) − determinant|` from the entry tails.
    pub det_error_bound: f64,
}

impl BorelMatrixValue {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// The matrix `I + F` of partial sums.
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            let e = self.entries[i][j].partial_sum;
            if i == j {
                e + 1.0
            } else {
                e
            }
        })
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::all(self.entries.iter().flatten().map(|e| e.verdict))
    }
}

pub fn eval_borel_matrix(spec: &OperatorSpec, z: C64, tol: f64) -> Result<BorelMatrixValue> {
    borel_matrix(spec, z, tol, &SeriesOptions::default(), None)
}

pub fn eval_borel_matrix_with(spec: &OperatorSpec, z: C64, tol: f64, opts: &SeriesOptions) -> Result<BorelMatrixValue> {
    borel_matrix(spec, z, tol, opts, None)
}

pub(crate) fn borel_matrix(
    spec: &OperatorSpec,
    z: C64,
    tol: f64,
    opts: &SeriesOptions,
    hint: Option<&ReHint>,
) -> Result<BorelMatrixValue> {
    let n = spec.rank();
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(borel_entry(spec, i, j, z, 1, tol, opts, hint)?);
        }
        entries.push(row);
    }
    let mut value = BorelMatrixValue {
        entries,
        determinant: C64::new(0.0, 0.0),
        det_error_bound: 0.0,
    };
    let m = value.matrix();
    value.determinant = match n {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().determinant(),
    };
    // Hadamard: |det(M + E) − det M| ≤ Π(‖m_i‖ + ‖e_i‖) − Π‖m_i‖
    let mut with_err = 1.0;
    let mut without = 1.0;
    let mut known = true;
    for i in 0..n {
        let row_norm = (0..n).map(|j| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        let mut err2 = 0.0;
        for j in 0..n {
            match value.entries[i][j].tail_bound {
                Some(t) => err2 += t * t,
                None => known = false,
            }
        }
        with_err *= row_norm + err2.sqrt();
        without *= row_norm;
    }
    value.det_error_bound = if known {
        (with_err - without).max(0.0) + 1e-15 * n as f64 * without
    } else {
        f64::INFINITY
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_operator_spec, CoefficientSequence, DiagonalSequence};

    fn toy() -> OperatorSpec {
        build_operator_spec(
            DiagonalSequence::finite_real(&[0.0, 1.0]),
            vec![(CoefficientSequence::finite_real(&[1.0, 1.0]), CoefficientSequence::finite_real(&[1.0, 1.0]))],
        )
        .unwrap()
    }

    #[test]
    fn two_term_model_direct_value() {
        let v = eval_borel(&toy(), C64::new(0.5, 0.0), 1e-12).unwrap();
        // 1/(0−½) + 1/(1−½) = 0
        assert!(v.partial_sum.norm() < 1e-15);
    }

    #[test]
    fn pole_is_an_error() {
        assert!(matches!(eval_borel(&toy(), C64::new(1.0, 0.0), 1e-12), Err(Error::Pole { .. })));
    }

    #[test]
    fn rank_one_determinant_is_one_plus_f() {
        let s = toy();
        let z = C64::new(0.3, 0.7);
        let f = eval_borel(&s, z, 1e-12).unwrap();
        let m = eval_borel_matrix(&s, z, 1e-12).unwrap();
        assert_eq!(m.determinant, f.partial_sum + 1.0);
    }
}
