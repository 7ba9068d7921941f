use conclab::families::{lieb_core, powered_spectrum};
use conclab::lab::{loewner_midpoint_test, LoewnerExpr};
use conclab::linalg::{complex_gaussian, haar_unitary, random_posdef, stream_rng, CMatrix};
use conclab::means::power_mean;
use conclab::norms::eval_norm_psd;
use conclab::posmaps::sample_kraus;
use conclab::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn pair(seed: u64, dim: usize) -> (PosDefMatrix, PosDefMatrix) {
    let mut rng = stream_rng(seed, 0);
    (random_posdef(&mut rng, dim, 0.1, 10.0), random_posdef(&mut rng, dim, 0.1, 10.0))
}

fn invertible(seed: u64, dim: usize) -> CMatrix {
    let mut rng = stream_rng(seed, 1);
    complex_gaussian(&mut rng, dim, dim) + CMatrix::identity(dim, dim).scale(2.0)
}

fn means() -> Vec<MeanSpec> {
    vec![
        MeanSpec::arithmetic(),
        MeanSpec::geometric(),
        MeanSpec::harmonic(),
        MeanSpec::plain(MeanKind::WeightedGeometric(0.3)),
        MeanSpec::plain(MeanKind::PowerMean(0.5)),
        MeanSpec::plain(MeanKind::PowerMean(-0.5)),
        MeanSpec::new(MeanKind::PowerMean(0.5), Some(MeanModifier::Adjoint)).unwrap(),
        MeanSpec::new(MeanKind::WeightedGeometric(0.3), Some(MeanModifier::Transposed)).unwrap(),
    ]
}

fn antinorms(dim: usize) -> Vec<NormSpec> {
    vec![
        NormSpec::KyFanAntiNorm { k: 1 },
        NormSpec::KyFanAntiNorm { k: dim },
        NormSpec::SchattenQuasi { p: 0.5 },
        NormSpec::NegativeSchatten { p: 1.0 },
        NormSpec::MinkowskiK { k: dim },
        NormSpec::SmallestEigenvalue,
        NormSpec::derived(NormSpec::OperatorNorm),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transformer_equality(seed in any::<u64>(), dim in 2usize..4) {
        let (a, b) = pair(seed, dim);
        let x = invertible(seed, dim);
        for mean in means() {
            let lhs = mean.eval(&a.conjugate_by(&x).unwrap(), &b.conjugate_by(&x).unwrap()).unwrap();
            let rhs = mean.eval(&a, &b).unwrap().conjugate_by(&x).unwrap();
            let diff = lhs.as_herm().sub(rhs.as_herm()).unwrap().max_abs_entry();
            prop_assert!(diff <= 1e-8 * rhs.max_eigenvalue(), "{mean}: {diff}");
        }
    }

    #[test]
    fn means_are_jointly_monotone(seed in any::<u64>(), dim in 2usize..4) {
        let (a, b) = pair(seed, dim);
        let (da, db) = pair(seed ^ 0x5555, dim);
        let a2 = PosDefMatrix::new(a.as_herm().add(da.as_herm()).unwrap()).unwrap();
        let b2 = PosDefMatrix::new(b.as_herm().add(db.as_herm()).unwrap()).unwrap();
        for mean in means() {
            let lo = mean.eval(&a, &b).unwrap();
            let hi = mean.eval(&a2, &b2).unwrap();
            let gap = hi.as_herm().sub(lo.as_herm()).unwrap().min_eigenvalue();
            prop_assert!(gap >= -1e-9 * hi.max_eigenvalue(), "{mean}: {gap}");
        }
    }

    #[test]
    fn means_of_equal_arguments_are_idempotent(seed in any::<u64>()) {
        let (a, _) = pair(seed, 3);
        for mean in means() {
            let m = mean.eval(&a, &a).unwrap();
            let diff = m.as_herm().sub(a.as_herm()).unwrap().max_abs_entry();
            prop_assert!(diff <= 1e-9 * a.max_eigenvalue(), "{mean}: {diff}");
        }
    }

    #[test]
    fn antinorm_axioms(seed in any::<u64>(), dim in 2usize..5, t in 0.01f64..100.0) {
        let (a, b) = pair(seed, dim);
        let u = haar_unitary(&mut stream_rng(seed, 2), dim);
        let sum = a.as_herm().add(b.as_herm()).unwrap();
        for norm in antinorms(dim) {
            let na = eval_norm_psd(&norm, a.as_herm()).unwrap();
            let nb = eval_norm_psd(&norm, b.as_herm()).unwrap();
            let ns = eval_norm_psd(&norm, &sum).unwrap();
            prop_assert!(ns >= na + nb - 1e-10 * ns.max(1.0), "{norm} superadditivity");
            let nt = eval_norm_psd(&norm, &a.as_herm().scaled(t)).unwrap();
            prop_assert!(rel(nt, t * na) <= 1e-10, "{norm} homogeneity");
            let nu = eval_norm_psd(&norm, &a.as_herm().conjugate_by(&u)).unwrap();
            prop_assert!(rel(nu, na) <= 1e-10, "{norm} unitary invariance");
        }
    }

    #[test]
    fn norms_are_subadditive(seed in any::<u64>(), dim in 2usize..5) {
        let (a, b) = pair(seed, dim);
        let sum = a.as_herm().add(b.as_herm()).unwrap();
        for norm in [NormSpec::KyFanNorm { k: 1 }, NormSpec::KyFanNorm { k: dim }, NormSpec::OperatorNorm, NormSpec::Trace] {
            let (na, nb, ns) = (
                eval_norm_psd(&norm, a.as_herm()).unwrap(),
                eval_norm_psd(&norm, b.as_herm()).unwrap(),
                eval_norm_psd(&norm, &sum).unwrap(),
            );
            prop_assert!(ns <= na + nb + 1e-10 * ns.max(1.0), "{norm}");
        }
    }

    #[test]
    fn hat_map_identity(seed in any::<u64>(), p in 0.1f64..1.0, q in 0.1f64..1.0, s in 0.1f64..1.0) {
        let (a, b) = pair(seed, 3);
        let phi = sample_kraus(3, 3, 2, seed, 10).unwrap();
        let psi = sample_kraus(3, 3, 2, seed, 11).unwrap();
        let c = phi.hat(&a.power(p)).unwrap();
        let d = psi.hat(&b.power(q)).unwrap();
        let lhs: f64 = powered_spectrum(&lieb_core(&c, d.as_herm()).unwrap(), s).unwrap().iter().sum();
        let direct = FamilySpec::lieb(phi, psi, NormSpec::Trace, ParameterPoint::new(-p, -q, -s)).unwrap();
        let rhs = direct.eval(&a, Some(&b)).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn lieb_family_homogeneity(seed in any::<u64>(), t in 0.2f64..5.0) {
        let (a, b) = pair(seed, 2);
        let phi = sample_kraus(2, 2, 2, seed, 3).unwrap();
        let point = ParameterPoint::new(0.6, 0.3, 0.9);
        let f = FamilySpec::lieb(phi.clone(), phi, NormSpec::Trace, point).unwrap();
        let base = f.eval(&a, Some(&b)).unwrap();
        let scaled = f.eval(&a.scaled(t).unwrap(), Some(&b.scaled(t).unwrap())).unwrap();
        prop_assert!(rel(scaled, t.powf(0.9 * 0.9) * base) <= 1e-9);
    }
}

#[test]
fn means_are_jointly_concave() {
    for (seed, mean) in means().into_iter().enumerate() {
        let expr = LoewnerExpr::MeanConcavity { mean };
        let r = loewner_midpoint_test(&expr, 300, &SamplerConfig::new(3, seed as u64)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{mean}: {}", r.worst_violation);
    }
}

#[test]
fn hat_powers_are_operator_concave() {
    for (i, p) in [0.0, 0.3, 0.7, 1.0].into_iter().enumerate() {
        let map = sample_kraus(3, 2, 2, 40, i as u64).unwrap();
        let expr = LoewnerExpr::HatPower { map, p };
        let r = loewner_midpoint_test(&expr, 300, &SamplerConfig::new(3, 41)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "p = {p}: {}", r.worst_violation);
    }
}

#[test]
fn power_means_are_ordered_inside_the_lemma_region() {
    for (p, q) in [(1.0, 2.0), (0.5, 1.0), (-1.0, 1.0), (-2.0, -1.0), (-1.0, -0.5), (0.7, 1.5)] {
        let expr = LoewnerExpr::PowerMeanDominance { p, q };
        let r = loewner_midpoint_test(&expr, 500, &SamplerConfig::new(2, 5)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "({p}, {q}): {}", r.worst_violation);
    }
}

#[test]
fn power_mean_at_one_is_the_arithmetic_mean() {
    let (a, b) = pair(3, 3);
    let m = power_mean(&a, &b, 1.0).unwrap();
    let avg = HermMatrix::combine(0.5, a.as_herm(), b.as_herm()).unwrap();
    assert!(m.as_herm().sub(&avg).unwrap().max_abs_entry() < 1e-12);
}

#[test]
fn kyfan_dominance_principle() {
    let mut rng = stream_rng(77, 0);
    for trial in 0..1000 {
        use rand::Rng;
        let dim = 2 + trial % 3;
        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..5.0)).collect();
        // a = T b + d with T doubly stochastic and d >= 0
        let w: f64 = rng.random_range(0.0..1.0);
        let mean = b.iter().sum::<f64>() / dim as f64;
        let a: Vec<f64> = b.iter().map(|x| w * x + (1.0 - w) * mean + rng.random_range(0.0..0.5)).collect();
        let u = haar_unitary(&mut rng, dim);
        let ha = HermMatrix::from_diag(&a).conjugate_by(&u);
        let hb = HermMatrix::from_diag(&b);
        for norm in antinorms(dim) {
            let na = eval_norm_psd(&norm, &ha).unwrap();
            let nb = eval_norm_psd(&norm, &hb).unwrap();
            assert!(na >= nb - 1e-10 * na.max(1.0), "trial {trial}, {norm}: {na} < {nb}");
        }
    }
}
