use nalgebra::DMatrix;
use proptest::prelude::*;
use rankpert::counterexample::section3_spec;
use rankpert::operator::{build_operator_spec_with, BuildOptions, Envelope};
use rankpert::series::*;
use rankpert::{
    build_operator_spec, truncate, CoefficientRule, CoefficientSequence, DiagonalRule, DiagonalSequence, Error,
    OperatorSpec, C64,
};

const TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn finite(lambda: &[C64], pairs: &[(&[f64], &[f64])]) -> OperatorSpec {
    let seqs = pairs
        .iter()
        .map(|(u, v)| (CoefficientSequence::finite_real(u), CoefficientSequence::finite_real(v)))
        .collect();
    build_operator_spec(DiagonalSequence::finite(lambda.to_vec()), seqs).unwrap()
}

fn toy() -> OperatorSpec {
    finite(&[c(0.0, 0.0), c(1.0, 0.0)], &[(&[1.0, 1.0], &[1.0, 1.0])])
}

/// `det(T − z) / Π(λ_n − z)` from the dense truncation (matrix determinant lemma).
fn det_oracle(spec: &OperatorSpec, z: C64) -> C64 {
    let d = spec.dimension().unwrap() as usize;
    let t = truncate(spec, d) - DMatrix::<C64>::identity(d, d) * z;
    let denom: C64 = (1..=d as u64).map(|n| spec.diag().value(n) - z).product();
    t.determinant() / denom
}

#[test]
fn single_term_borel() {
    let spec = finite(&[c(0.0, 0.0)], &[(&[1.0], &[1.0])]);
    let v = eval_borel(&spec, c(2.0, 0.0), TOL).unwrap();
    assert_eq!(v.partial_sum, c(-0.5, 0.0));
    assert_eq!(v.verdict, Verdict::ConvergesCertified);
}

#[test]
fn toy_vanishes_at_the_larger_root() {
    let z = c((3.0 + 5f64.sqrt()) / 2.0, 0.0);
    let v = eval_borel(&toy(), z, TOL).unwrap();
    assert!((v.partial_sum + 1.0).norm() <= 1e-12);
}

#[test]
fn pole_on_the_diagonal() {
    let spec = finite(
        &[c(0.1, 0.0), c(0.2, 0.0), c(0.3, 0.0), c(0.4, 0.5)],
        &[(&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0, 1.0, 1.0])],
    );
    assert!(matches!(eval_borel(&spec, c(0.4, 0.5), TOL), Err(Error::Pole { .. })));
    assert!(matches!(eval_borel_matrix(&spec, c(0.4, 0.5), TOL), Err(Error::Pole { .. })));
}

#[test]
fn rank_two_diagonal_blocks() {
    let spec = finite(&[c(0.0, 0.0), c(1.0, 0.0)], &[(&[1.0, 0.0], &[1.0, 0.0]), (&[0.0, 1.0], &[0.0, 1.0])]);
    let z = c(3.0, 0.0);
    let m = eval_borel_matrix(&spec, z, TOL).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[c(1.0 - 1.0 / 3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
    assert!((m.matrix() - want).iter().all(|e| e.norm() <= 1e-15));
    assert!((m.determinant - 1.0 / 3.0).norm() <= 1e-15);
    assert!((det_oracle(&spec, z) - 1.0 / 3.0).norm() <= 1e-14);
}

#[test]
fn rank_two_determinant_is_the_direct_expansion() {
    let lambda = [c(0.1, 0.2), c(-0.4, 0.0), c(0.3, -0.1), c(0.7, 0.4)];
    let spec = finite(
        &lambda,
        &[(&[1.0, -0.5, 0.0, 0.0], &[0.3, 2.0, 0.0, 0.0]), (&[0.0, 0.0, 1.0, -0.5], &[0.0, 0.0, 0.3, 2.0])],
    );
    let z = c(0.05, 0.9);
    let m = eval_borel_matrix(&spec, z, TOL).unwrap();
    let e = m.matrix();
    let ad_bc = e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(1, 0)];
    assert!((m.determinant - ad_bc).norm() <= 1e-15);
    assert!((m.determinant - det_oracle(&spec, z)).norm() <= 1e-13);
}

#[test]
fn range_series_examples() {
    let spec = finite(&[c(0.0, 0.0)], &[(&[1.0], &[1.0])]);
    let r = ionascu_range_series(&spec, c(2.0, 0.0), TOL).unwrap();
    assert_eq!(r.combined.partial_sum, c(0.25, 0.0));
    assert_eq!(r.verdict(), Verdict::ConvergesCertified);

    let model = section3_spec(20).unwrap();
    let r = ionascu_range_series(&model.spec, c(2.0, 0.0), 1e-10).unwrap();
    assert_eq!(r.verdict(), Verdict::ConvergesCertified);
    // |r_n − 2| ≥ 1, so the sum is at most ‖u‖²
    assert!(r.combined.partial_sum.re <= model.l2_partial + 1e-10);
}

#[test]
fn range_series_without_majorant_is_inconclusive() {
    let u = CoefficientSequence::custom("bare", |n| c(1.0 / n as f64, 0.0), None);
    let v = CoefficientSequence::rule(CoefficientRule::Geometric { ratio: 0.5, scale: 1.0.into() });
    let spec = build_operator_spec_with(
        DiagonalSequence::rule(DiagonalRule::DyadicSection3),
        vec![(u, v)],
        &BuildOptions { require_majorants: false },
    )
    .unwrap();
    let opts = SeriesOptions { term_budget: 10_000, ..SeriesOptions::default() };
    let r = ionascu_range_series_with(&spec, c(0.3, 0.01), TOL, &opts).unwrap();
    assert_eq!(r.verdict(), Verdict::Inconclusive);
}

#[test]
fn relevant_series_examples() {
    let spec = finite(&[c(0.0, 1.0), c(0.0, 2.0)], &[(&[1.0, 1.0], &[1.0, 1.0])]);
    let r = relevant_set_series(&spec, 1.0, TOL);
    assert_eq!(r.verdict(), Verdict::ConvergesCertified);
    assert!((r.combined.partial_sum.re - 4.0).abs() <= 1e-15);

    let model = section3_spec(20).unwrap();
    assert_eq!(relevant_set_series(&model.spec, 0.0, TOL).verdict(), Verdict::DivergesCertified);

    let spec = finite(&[c(0.1, 0.0), c(0.2, 0.0), c(0.3, 0.4)], &[(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0])]);
    assert_eq!(relevant_set_series(&spec, 0.3, TOL).verdict(), Verdict::DivergesCertified);
}

#[test]
fn log_square_examples() {
    // |Re λ_n − x| ≥ 1 everywhere: bounded by ln²(diameter)·‖u‖²
    let spec = finite(&[c(2.0, 0.0), c(3.5, 0.0)], &[(&[1.0, 0.5], &[1.0, 1.0])]);
    let r = log_square_series(&spec, 0.0, TOL).unwrap();
    assert_eq!(r.verdict(), Verdict::ConvergesCertified);
    let want = 2f64.ln().powi(2) + 0.25 * 3.5f64.ln().powi(2);
    assert!((r.combined.partial_sum.re - want).abs() <= 1e-14);
    assert!(r.combined.partial_sum.re <= 3.5f64.ln().powi(2) * 1.25);

    // λ_n = 1/n, α_n = 2^{−n}, x = 0: Σ ln²n · 4^{−n}
    let alpha = CoefficientSequence::rule(CoefficientRule::Geometric { ratio: 0.5, scale: 0.5.into() });
    let spec = build_operator_spec(DiagonalSequence::rule(DiagonalRule::Power { exponent: 1.0 }), vec![(alpha.clone(), alpha)])
        .unwrap();
    let r = log_square_series(&spec, 0.0, 1e-12).unwrap();
    assert_eq!(r.verdict(), Verdict::ConvergesCertified);
    let oracle: f64 = (1..200).map(|n| (n as f64).ln().powi(2) * 0.25f64.powi(n)).sum();
    assert!((r.combined.partial_sum.re - oracle).abs() <= 1e-12 + r.combined.tail_bound.unwrap());

    assert!(matches!(log_square_series(&spec, 1.0, TOL), Err(Error::Pole { .. })));
}

fn rule_pair(u: CoefficientRule, v: CoefficientRule, decay: Option<Envelope>) -> OperatorSpec {
    let seq = |r| {
        let s = CoefficientSequence::rule(r);
        match decay {
            Some(e) => s.with_decay_class(e),
            None => s,
        }
    };
    build_operator_spec(DiagonalSequence::rule(DiagonalRule::DyadicSection3), vec![(seq(u), seq(v))]).unwrap()
}

const CONDITIONS: [SummabilityCondition; 4] =
    [SummabilityCondition::Fjkp, SummabilityCondition::Fx, SummabilityCondition::GgEither, SummabilityCondition::Log];

#[test]
fn inverse_square_coefficients_pass_every_condition() {
    let p = CoefficientRule::Power { exponent: 2.0, scale: 1.0.into() };
    let spec = rule_pair(p, p, Some(Envelope::Power { scale: 1.0, exponent: 2.0 }));
    for cond in CONDITIONS {
        assert_eq!(check_summability(&spec, cond).verdict, Verdict::ConvergesCertified, "{cond:?}");
    }
}

#[test]
fn bertrand_coefficients_straddle_fx() {
    // Σ 1/(n ln²(n+1)) converges: FX holds
    let p = CoefficientRule::PowerLog { exponent: 1.0, log_exponent: 2.0, scale: 1.0.into() };
    let spec = rule_pair(p, p, None);
    assert_eq!(check_summability(&spec, SummabilityCondition::Fx).verdict, Verdict::ConvergesCertified);
    assert_eq!(check_summability(&spec, SummabilityCondition::Log).verdict, Verdict::ConvergesCertified);

    // Σ 1/(n ln(n+1)) diverges while Σ ln n/(n² ln²(n+1)) converges
    let p = CoefficientRule::PowerLog { exponent: 1.0, log_exponent: 1.0, scale: 1.0.into() };
    let spec = rule_pair(p, p, None);
    assert_eq!(check_summability(&spec, SummabilityCondition::Fx).verdict, Verdict::DivergesCertified);
    assert_eq!(check_summability(&spec, SummabilityCondition::Log).verdict, Verdict::ConvergesCertified);
}

#[test]
fn finite_support_always_converges() {
    for cond in CONDITIONS {
        let r = check_summability(&toy(), cond);
        assert_eq!(r.verdict, Verdict::ConvergesCertified);
        assert!(r.witness.iter().all(|w| w.note.contains("finite support")), "{:?}", r.witness);
    }
}

#[test]
fn region_examples() {
    assert_eq!(theorem_region_membership(0.5, 0.5).unwrap(), Region::Fjkp);
    assert_eq!(theorem_region_membership(2.0, 1.5).unwrap(), Region::Uncovered);
    assert_eq!(theorem_region_membership(1.8, 1.8).unwrap(), Region::Main);
    assert!(theorem_region_membership(2.5, 1.0).is_err());
}

fn power_rule(s: f64) -> CoefficientRule {
    CoefficientRule::Power { exponent: s, scale: 1.0.into() }
}

/// Which of `Σ n^{−s·t}` converge: exponent `st > 1`.
fn power_truth(s_u: f64, s_v: f64, cond: SummabilityCondition) -> bool {
    match cond {
        SummabilityCondition::Fjkp => s_u * 2.0 / 3.0 > 1.0 && s_v * 2.0 / 3.0 > 1.0,
        SummabilityCondition::Fx => s_u > 1.0 && s_v > 1.0,
        SummabilityCondition::GgEither => s_u > 1.0 || s_v > 1.0,
        // n^{−2s} ln n is summable for every s > 1/2
        SummabilityCondition::Log => true,
        SummabilityCondition::Pq { .. } => unreachable!(),
    }
}

fn off_boundary() -> impl Strategy<Value = f64> {
    (0.55..3.0f64).prop_filter("away from the thresholds", |s| (s - 1.0).abs() > 0.02 && (s - 1.5).abs() > 0.02)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn nested_conditions_are_consistent(s_u in off_boundary(), s_v in off_boundary()) {
        let spec = rule_pair(power_rule(s_u), power_rule(s_v), None);
        let verdicts: Vec<Verdict> = CONDITIONS.iter().map(|c| check_summability(&spec, *c).verdict).collect();
        for w in verdicts.windows(2) {
            if w[0] == Verdict::ConvergesCertified {
                prop_assert_eq!(w[1], Verdict::ConvergesCertified, "{:?}", verdicts);
            }
        }
        for (cond, v) in CONDITIONS.iter().zip(&verdicts) {
            let want = if power_truth(s_u, s_v, *cond) { Verdict::ConvergesCertified } else { Verdict::DivergesCertified };
            prop_assert_eq!(*v, want, "{:?} at ({}, {})", cond, s_u, s_v);
        }
    }
}

proptest! {
    #[test]
    fn region_is_monotone(p in 0.01..=2.0f64, q in 0.01..=2.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (p2, q2) = (p * (0.01 + 0.99 * a), q * (0.01 + 0.99 * b));
        let before = theorem_region_membership(p, q).unwrap();
        let after = theorem_region_membership(p2.max(1e-3), q2.max(1e-3)).unwrap();
        prop_assert!(after >= before, "({p}, {q}) → {before:?} but ({p2}, {q2}) → {after:?}");
    }

    #[test]
    fn adjoint_series_is_conjugate(
        ratio in 0.1..0.9f64,
        re in -2.0..2.0f64,
        im in 0.05..2.0f64,
        scale_re in -1.0..1.0f64,
        scale_im in -1.0..1.0f64,
    ) {
        let u = CoefficientSequence::rule(CoefficientRule::Geometric { ratio, scale: c(scale_re, scale_im + 1.5) });
        let v = CoefficientSequence::rule(CoefficientRule::Power { exponent: 1.0, scale: c(0.5, -0.25) });
        let diag = DiagonalSequence::rule(DiagonalRule::Geometric { ratio: c(0.3, 0.6) });
        let spec = build_operator_spec(diag, vec![(u, v)]).unwrap();
        let z = c(re, im);
        let f = eval_borel(&spec, z, 1e-12).unwrap();
        let g = eval_borel(&spec.adjoint(), z.conj(), 1e-12).unwrap();
        prop_assume!(f.verdict == Verdict::ConvergesCertified && g.verdict == Verdict::ConvergesCertified);
        let allowed = f.tail_bound.unwrap() + g.tail_bound.unwrap() + 1e-14;
        prop_assert!((f.partial_sum - g.partial_sum.conj()).norm() <= allowed);
    }

    #[test]
    fn rank_one_determinant_is_one_plus_f(ratio in 0.1..0.9f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        prop_assume!(im.abs() > 0.05);
        let u = CoefficientSequence::rule(CoefficientRule::Geometric { ratio, scale: 1.0.into() });
        let spec = build_operator_spec(DiagonalSequence::rule(DiagonalRule::DyadicSection3), vec![(u.clone(), u)]).unwrap();
        let z = c(re, im);
        let f = eval_borel(&spec, z, 1e-12).unwrap();
        let m = eval_borel_matrix(&spec, z, 1e-12).unwrap();
        prop_assert_eq!(m.determinant, f.partial_sum + 1.0);
    }

    #[test]
    fn tighter_tolerance_stays_in_the_certified_interval(ratio in 0.5..0.95f64, re in -1.5..1.5f64, im in 0.01..1.0f64) {
        let u = CoefficientSequence::rule(CoefficientRule::Geometric { ratio, scale: 1.0.into() });
        let v = CoefficientSequence::rule(CoefficientRule::Power { exponent: 1.0, scale: 1.0.into() });
        let spec = build_operator_spec(DiagonalSequence::rule(DiagonalRule::DyadicSection3), vec![(u, v)]).unwrap();
        let z = c(re, im);
        let coarse = eval_borel(&spec, z, 1e-3).unwrap();
        let fine = eval_borel(&spec, z, 1e-12).unwrap();
        prop_assume!(coarse.verdict == Verdict::ConvergesCertified);
        prop_assert!(fine.terms_used >= coarse.terms_used);
        let slack = coarse.tail_bound.unwrap() + 1e-14 * (1.0 + coarse.partial_sum.norm());
        prop_assert!((fine.partial_sum - coarse.partial_sum).norm() <= slack);
    }
}
