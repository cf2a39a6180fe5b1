use super::sequence::{AffineMap, CoefficientSequence, DiagSource, DiagonalSequence, L2Certificate};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

/// One rank-one term `u ⊗ v`, acting as `x ↦ ⟨x, v⟩ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub u: CoefficientSequence,
    pub v: CoefficientSequence,
}

/// A validated operator `T = D_Λ + Σ_k u_k ⊗ v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    diag: DiagonalSequence,
    perturbations: Vec<Perturbation>,
    l2: Vec<L2Certificate>,
    declared_pq: Option<(f64, f64)>,
}

/// Options for [`build_operator_spec_with`].
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Reject custom rule sequences that carry no tail majorant.
    pub require_majorants: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            require_majorants: true,
        }
    }
}

/// Validates and assembles an operator specification.
pub fn build_operator_spec(
    diag: DiagonalSequence,
    perturbations: Vec<(CoefficientSequence, CoefficientSequence)>,
) -> Result<OperatorSpec> {
    build_operator_spec_with(diag, perturbations, &BuildOptions::default())
}

pub fn build_operator_spec_with(
    diag: DiagonalSequence,
    perturbations: Vec<(CoefficientSequence, CoefficientSequence)>,
    opts: &BuildOptions,
) -> Result<OperatorSpec> {
    diag.validate()?;
    if perturbations.is_empty() {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let mut pairs = Vec::with_capacity(perturbations.len());
    let mut l2 = Vec::new();
    for (k, (mut u, mut v)) in perturbations.into_iter().enumerate() {
        for (name, seq) in [("u", &mut u), ("v", &mut v)] {
            let label = format!("{name}_{}", k + 1);
            seq.set_label(label.clone());
            if let (Some(d), Some(s)) = (diag.len(), seq.support_len()) {
                if s > d {
                    return Err(Error::InvalidArgument(format!(
                        "{label} has {s} terms but the diagonal has {d}; sequences must be index-aligned"
                    )));
                }
            }
            l2.extend(seq.validate(opts.require_majorants)?);
        }
        pairs.push(Perturbation { u, v });
    }
    Ok(OperatorSpec {
        diag,
        perturbations: pairs,
        l2,
        declared_pq: None,
    })
}

impl OperatorSpec {
    pub fn diag(&self) -> &DiagonalSequence {
        &self.diag
    }

    pub fn perturbations(&self) -> &[Perturbation] {
        &self.perturbations
    }

    pub fn rank(&self) -> usize {
        self.perturbations.len()
    }

    /// How each coefficient sequence was certified square-summable.
    pub fn l2_certificates(&self) -> &[L2Certificate] {
        &self.l2
    }

    /// Dimension for finite diagonals, `None` for infinite models.
    pub fn dimension(&self) -> Option<u64> {
        self.diag.len()
    }

    /// Whether every sequence is a finite list.
    pub fn is_finite(&self) -> bool {
        self.diag.len().is_some()
    }

    /// Number of possibly nonzero terms of a series pairing `a` with the
    /// diagonal (and optionally `b`).
    pub(crate) fn series_len(&self, a: &CoefficientSequence, b: Option<&CoefficientSequence>) -> Option<u64> {
        [self.diag.len(), a.support_len(), b.and_then(|b| b.support_len())]
            .into_iter()
            .flatten()
            .min()
    }

    /// `(p, q)` summability exponents declared in the input document.
    pub fn declared_pq(&self) -> Option<(f64, f64)> {
        self.declared_pq
    }

    pub fn with_declared_pq(mut self, pq: Option<(f64, f64)>) -> Self {
        self.declared_pq = pq;
        self
    }

    /// The adjoint `T* = D_{conj Λ} + Σ v_k ⊗ u_k`.
    pub fn adjoint(&self) -> OperatorSpec {
        let diag = match &self.diag.source {
            DiagSource::Finite(v) => DiagonalSequence::finite(v.iter().map(|z| z.conj()).collect()),
            DiagSource::Rule { rule, map } => {
                use super::sequence::DiagonalRule;
                let rule = match *rule {
                    DiagonalRule::Geometric { ratio } => DiagonalRule::Geometric { ratio: ratio.conj() },
                    r => r,
                };
                DiagonalSequence::mapped_rule(
                    rule,
                    AffineMap {
                        scale: map.scale.conj(),
                        shift: map.shift.conj(),
                    },
                )
            }
        };
        let perturbations = self
            .perturbations
            .iter()
            .map(|p| Perturbation {
                u: p.v.clone(),
                v: p.u.clone(),
            })
            .collect();
        OperatorSpec {
            diag,
            perturbations,
            l2: self.l2.clone(),
            declared_pq: self.declared_pq.map(|(p, q)| (q, p)),
        }
    }

    /// The operator `s·T + t·I`: diagonal mapped by `λ ↦ sλ + t`, every `u_k`
    /// scaled by `s`.
    pub fn affine(&self, map: &AffineMap) -> OperatorSpec {
        let diag = match &self.diag.source {
            DiagSource::Finite(v) => DiagonalSequence::finite(v.iter().map(|z| map.apply(*z)).collect()),
            DiagSource::Rule { rule, map: inner } => DiagonalSequence::mapped_rule(*rule, map.compose(inner)),
        };
        let perturbations = self
            .perturbations
            .iter()
            .map(|p| Perturbation {
                u: p.u.scaled(map.scale),
                v: p.v.clone(),
            })
            .collect();
        OperatorSpec {
            diag,
            perturbations,
            l2: self.l2.clone(),
            declared_pq: self.declared_pq,
        }
    }

    /// `Σ_k α_n^{(k)} conj(β_m^{(k)})`.
    pub fn rank_entry(&self, n: u64, m: u64) -> C64 {
        self.perturbations
            .iter()
            .map(|p| p.u.value(n) * p.v.value(m).conj())
            .sum()
    }
}

/// The leading `dim × dim` block of `T` (clamped to the dimension of finite
/// models).
pub fn truncate(spec: &OperatorSpec, dim: usize) -> DMatrix<C64> {
    let d = match spec.dimension() {
        Some(n) => dim.min(n as usize),
        None => dim,
    };
    let alpha: Vec<Vec<C64>> = spec
        .perturbations
        .iter()
        .map(|p| (1..=d as u64).map(|n| p.u.value(n)).collect())
        .collect();
    let beta: Vec<Vec<C64>> = spec
        .perturbations
        .iter()
        .map(|p| (1..=d as u64).map(|n| p.v.value(n).conj()).collect())
        .collect();
    DMatrix::from_fn(d, d, |i, j| {
        let mut e: C64 = (0..spec.rank()).map(|k| alpha[k][i] * beta[k][j]).sum();
        if i == j {
            e += spec.diag.value(i as u64 + 1);
        }
        e
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_misaligned_lists() {
        let d = DiagonalSequence::finite_real(&[0.0, 1.0]);
        let u = CoefficientSequence::finite_real(&[1.0, 1.0, 1.0]);
        let v = CoefficientSequence::finite_real(&[1.0]);
        assert!(matches!(
            build_operator_spec(d, vec![(u, v)]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn affine_map_scales_u_only() {
        let d = DiagonalSequence::finite_real(&[0.0, 1.0]);
        let s = build_operator_spec(
            d,
            vec![(CoefficientSequence::finite_real(&[1.0, 1.0]), CoefficientSequence::finite_real(&[1.0, 2.0]))],
        )
        .unwrap();
        let m = AffineMap {
            scale: C64::new(2.0, 0.0),
            shift: C64::new(0.0, 1.0),
        };
        let t = truncate(&s, 2);
        let tm = truncate(&s.affine(&m), 2);
        let want = t.map(|z| z * 2.0) + DMatrix::identity(2, 2) * C64::new(0.0, 1.0);
        assert!((tm - want).norm() < 1e-15);
    }
}
