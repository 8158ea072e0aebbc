use proptest::prelude::*;
use rand::Rng;

use ising_infer::coupling::{spectrum, CouplingMatrix, Family};
use ising_infer::inference::{mple, pseudo_score};
use ising_infer::sampler::{cw_log_z, SpinConfiguration};
use ising_infer::seed::{derive_seed, splitmix64, stream};
use ising_infer::testing::{test_statistic, CriticalValue, TestKind};
use ising_infer::theory::{solve_m, CriticalLaw};

fn spins_strategy(n: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), n)
}

fn family_strategy() -> impl Strategy<Value = (Family, usize)> {
    prop_oneof![
        (2usize..40).prop_map(|n| (Family::Complete, n)),
        (1usize..20).prop_map(|k| (Family::Bipartite, 2 * k)),
        (2usize..5, 1usize..6).prop_map(|(q, k)| (Family::QPartite { q }, q * k)),
        (3usize..6, 1usize..5).prop_map(|(q, k)| (Family::CyclicQPartite { q }, q * k)),
        (1usize..4, 3usize..10)
            .prop_map(|(d, k)| (Family::RandomRegular { d: 2 * d }, 2 * d + 2 * k)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn np_is_ms_minus_one_on_complete(spins in (2usize..60).prop_flat_map(spins_strategy)) {
        let q = CouplingMatrix::build(Family::Complete, spins.len(), None).unwrap();
        let x = SpinConfiguration::new(&q, spins).unwrap();
        let ms = test_statistic(TestKind::Ms, &x);
        let np = test_statistic(TestKind::Np, &x);
        prop_assert!((np - (ms - 1.0)).abs() < 1e-9 * ms.max(1.0));
    }

    #[test]
    fn global_flip_leaves_statistics_unchanged((family, n) in family_strategy(), seed in any::<u64>()) {
        let q = CouplingMatrix::build(family, n, Some(seed)).unwrap();
        let mut rng = stream(seed, 0);
        let spins: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let flipped: Vec<i8> = spins.iter().map(|s| -s).collect();
        let a = SpinConfiguration::new(&q, spins).unwrap();
        let b = SpinConfiguration::new(&q, flipped).unwrap();
        prop_assert!((a.quadratic_form() - b.quadratic_form()).abs() < 1e-12);
        let (pa, pb) = (mple(&a), mple(&b));
        prop_assert_eq!(pa.exists, pb.exists);
        if pa.exists {
            prop_assert!((pa.value - pb.value).abs() < 1e-9);
        }
    }

    #[test]
    fn squared_eigenvalues_sum_to_frobenius((family, n) in family_strategy(), seed in any::<u64>()) {
        let q = CouplingMatrix::build(family, n, Some(seed)).unwrap();
        let s = spectrum(&q).unwrap();
        let sum: f64 = s.finite_eigs.iter().map(|l| l * l).sum();
        prop_assert!((sum - q.frobenius_sq()).abs() < 1e-9 * q.frobenius_sq().max(1.0));
        prop_assert_eq!(s.finite_eigs.len(), n);
    }

    #[test]
    fn mple_solves_the_pseudo_score((family, n) in family_strategy(), seed in any::<u64>()) {
        let q = CouplingMatrix::build(family, n, Some(seed)).unwrap();
        let mut rng = stream(seed, 1);
        let spins: Vec<i8> = (0..n).map(|_| if rng.random::<f64>() < 0.7 { 1 } else { -1 }).collect();
        let x = SpinConfiguration::new(&q, spins).unwrap();
        let sum_abs: f64 = x.fields().iter().map(|t| t.abs()).sum();
        let xqx = x.quadratic_form();
        let r = mple(&x);
        let inside = xqx > -sum_abs * (1.0 - 1e-9) && xqx < sum_abs * (1.0 - 1e-9);
        prop_assert_eq!(r.exists, inside && sum_abs > 0.0);
        if r.exists {
            prop_assert!((pseudo_score(x.fields(), r.value) - xqx).abs() < 1e-8 * sum_abs.max(1.0));
        }
    }

    #[test]
    fn seeds_are_deterministic(master in any::<u64>(), index in any::<u64>()) {
        prop_assert_eq!(derive_seed(master, index), splitmix64(splitmix64(master) ^ index));
        let a: [u64; 4] = std::array::from_fn({ let mut r = stream(master, index); move |_| r.random() });
        let b: [u64; 4] = std::array::from_fn({ let mut r = stream(master, index); move |_| r.random() });
        prop_assert_eq!(a, b);
    }

    #[test]
    fn decisions_are_monotone(k in -5.0f64..5.0, gamma in 0.0f64..1.0, a in -10.0f64..10.0, b in -10.0f64..10.0, u in 0.0f64..1.0) {
        let cv = CriticalValue {
            kind: TestKind::Ms,
            value: k,
            gamma,
            p_above: None,
            p_at: None,
            conservative_level: None,
            achieved_level: None,
            sampler: "test".into(),
            reps: 0,
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(!cv.decide(lo, u) || cv.decide(hi, u));
        prop_assert!(cv.decide(f64::INFINITY, u));
        prop_assert!(!cv.decide(f64::NEG_INFINITY, u));
    }

    #[test]
    fn magnetization_is_a_fixed_point(theta in 1.0001f64..20.0) {
        let m = solve_m(theta);
        prop_assert!(m > 0.0 && m <= 1.0);
        prop_assert!((m - (theta * m).tanh()).abs() < 1e-12);
    }

    #[test]
    fn cw_log_z_is_increasing(n in 1usize..400, a in -3.0f64..3.0, d in 0.01f64..2.0) {
        prop_assert!(cw_log_z(n, a + d).unwrap() >= cw_log_z(n, a).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn critical_cdf_is_symmetric_for_every_h(h in -2.0f64..3.0, u in 0.0f64..4.0) {
        let law = CriticalLaw::new(h).unwrap();
        prop_assert!((law.cdf(-u) + law.cdf(u) - 1.0).abs() < 1e-9);
        prop_assert!(law.cdf(u) >= law.cdf(u * 0.5) - 1e-12);
    }
}
