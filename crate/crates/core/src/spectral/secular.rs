//! Evaluation of `g(z) = det M_T(z)` and `g'(z)` with an error bound, with a
//! fast path for finite specs.

use crate::operator::{Hull, OperatorSpec};
use crate::series::{borel_entry, eval_borel_matrix_with, SeriesOptions};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

pub(crate) struct Secular<'a> {
    spec: &'a OperatorSpec,
    tol: f64,
    opts: SeriesOptions,
    finite: Option<Finite>,
}

struct Finite {
    /// Every materialized diagonal entry.
    all: Vec<C64>,
    lambda: Vec<C64>,
    /// `w[n][i*N + j] = α_n^{(i)} conj(β_n^{(j)})`
    weights: Vec<Vec<C64>>,
}

pub(crate) struct Value {
    pub g: C64,
    /// Bound on `|g(z) − g|`.
    pub err: f64,
}

impl<'a> Secular<'a> {
    pub fn new(spec: &'a OperatorSpec, tol: f64) -> Self {
        let finite = spec.dimension().map(|d| {
            let rank = spec.rank();
            let all: Vec<C64> = (1..=d).map(|n| spec.diag().value(n)).collect();
            let mut lambda = Vec::new();
            let mut weights = Vec::new();
            for n in 1..=d {
                let w: Vec<C64> = (0..rank * rank)
                    .map(|ij| {
                        let p = &spec.perturbations()[ij / rank];
                        let q = &spec.perturbations()[ij % rank];
                        p.u.value(n) * q.v.value(n).conj()
                    })
                    .collect();
                if w.iter().any(|c| *c != C64::new(0.0, 0.0)) {
                    lambda.push(spec.diag().value(n));
                    weights.push(w);
                }
            }
            Finite { all, lambda, weights }
        });
        Secular {
            spec,
            tol,
            opts: SeriesOptions::default(),
            finite,
        }
    }

    pub fn with_options(mut self, opts: SeriesOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn rank(&self) -> usize {
        self.spec.rank()
    }

    /// Distance from `z` to the diagonal (materialized points or envelope).
    pub fn pole_distance(&self, z: C64) -> f64 {
        match &self.finite {
            Some(f) => f.all.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min),
            None => match self.spec.diag().hull_from(1) {
                Hull::Empty => f64::INFINITY,
                h => h.distance(z),
            },
        }
    }

    fn finite_matrices(&self, f: &Finite, z: C64, derivative: bool) -> Result<(DMatrix<C64>, DMatrix<C64>, f64)> {
        let n = self.rank();
        let mut m = DMatrix::<C64>::identity(n, n);
        let mut dm = DMatrix::<C64>::zeros(n, n);
        let mut mag = 0.0;
        for (lam, w) in f.lambda.iter().zip(&f.weights) {
            let d = lam - z;
            if d == C64::new(0.0, 0.0) {
                return Err(Error::Pole {
                    location: "diagonal entry".into(),
                    z,
                });
            }
            let inv = d.inv();
            let inv2 = inv * inv;
            for ij in 0..n * n {
                let t = w[ij] * inv;
                m[(ij / n, ij % n)] += t;
                mag += t.norm();
                if derivative {
                    dm[(ij / n, ij % n)] += w[ij] * inv2;
                }
            }
        }
        let err = 8.0 * f64::EPSILON * (f.lambda.len() as f64 + 1.0) * (1.0 + mag);
        Ok((m, dm, err))
    }

    pub fn eval(&self, z: C64) -> Result<Value> {
        if let Some(f) = &self.finite {
            let (m, _, err) = self.finite_matrices(f, z, false)?;
            let g = det(&m);
            let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
            let n = self.rank() as i32;
            return Ok(Value {
                g,
                err: err * n as f64 * scale.powi(n - 1) + 4.0 * f64::EPSILON * scale.powi(n),
            });
        }
        let v = eval_borel_matrix_with(self.spec, z, self.tol, &self.opts)?;
        Ok(Value {
            g: v.determinant,
            err: v.det_error_bound,
        })
    }

    /// `(g, g', err)`, with `g' = tr(adj(M) M')`.
    pub fn eval_with_derivative(&self, z: C64) -> Result<(C64, C64, f64)> {
        let n = self.rank();
        let (m, dm, err) = match &self.finite {
            Some(f) => self.finite_matrices(f, z, true)?,
            None => {
                let v = eval_borel_matrix_with(self.spec, z, self.tol, &self.opts)?;
                let mut dm = DMatrix::<C64>::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        dm[(i, j)] = borel_entry(self.spec, i, j, z, 2, self.tol, &self.opts, None)?.partial_sum;
                    }
                }
                (v.matrix(), dm, v.det_error_bound)
            }
        };
        let adj = adjugate(&m);
        Ok((det(&m), (adj * dm).trace(), err))
    }
}

pub(crate) fn det(m: &DMatrix<C64>) -> C64 {
    match m.nrows() {
        0 => C64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.determinant(),
    }
}

/// Classical adjoint by cofactors (ranks are small).
pub(crate) fn adjugate(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    }
    DMatrix::from_fn(n, n, |i, j| {
        // adj[i][j] = (−1)^{i+j} det(minor without row j, column i)
        let minor = m.clone().remove_row(j).remove_column(i);
        let c = det(&minor);
        if (i + j) % 2 == 0 {
            c
        } else {
            -c
        }
    })
}
