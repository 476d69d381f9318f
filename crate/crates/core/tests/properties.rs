use proptest::prelude::*;

use dcw_core::annealed::{second_moment, TestFunction};
use dcw_core::combinatorics::{count_triple, log_count_single, BinomialTable};
use dcw_core::expansions::{coeffs_single, eval_f};
use dcw_core::limits::{distance, EmpiricalLaw, LimitLaw, Metric, ScalingRule};
use dcw_core::model::{hamiltonian, log_t_statistic, sample_graph, ModelParams, SpinConfig};
use dcw_core::numeric::{ln_cosh, log_sum_exp};
use dcw_core::quenched::exact_law;

fn spins(n: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), n)
}

fn law() -> impl Strategy<Value = EmpiricalLaw> {
    prop::collection::vec((-3.0f64..3.0, 0.01f64..1.0), 1..12).prop_map(|a| EmpiricalLaw::new(a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_reproduces_beta(n in 1usize..100_000, p in 1e-6f64..1.0, beta in 0.0f64..3.0) {
        let m = ModelParams::new(n, p, beta).unwrap();
        prop_assert!((m.gamma() * 2.0 * n as f64 * p - beta).abs() <= 4.0 * f64::EPSILON * beta.max(1e-300));
    }

    #[test]
    fn energy_is_flip_symmetric_and_matches_t(
        (n, s) in (1usize..24).prop_flat_map(|n| (Just(n), spins(n))),
        p in 0.01f64..1.0,
        beta in 0.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let params = ModelParams::new(n, p, beta).unwrap();
        let g = sample_graph(&params, seed);
        let sigma = SpinConfig::new(s).unwrap();
        let h = hamiltonian(&g, &sigma, &params).unwrap();
        prop_assert_eq!(h, hamiltonian(&g, &sigma.flipped(), &params).unwrap());
        let lt = log_t_statistic(&g, &sigma, &params).unwrap();
        let want = -beta * h - ln_cosh(params.gamma()) * g.edge_count() as f64;
        prop_assert!((lt - want).abs() <= 1e-12 * want.abs().max(1e-300) + 1e-300);
    }

    #[test]
    fn magnetization_cache(s in spins(37)) {
        let sigma = SpinConfig::new(s.clone()).unwrap();
        let m: i64 = s.iter().map(|&v| v as i64).sum();
        prop_assert_eq!(sigma.magnetization(), m);
        prop_assert!((m + 37).rem_euclid(2) == 0 && m.abs() <= 37);
    }

    #[test]
    fn f_is_odd_in_the_pair(m in 0i32..3, x in -2.0f64..2.0, p in 0.0f64..1.0, z in -2.0f64..2.0) {
        prop_assert_eq!(eval_f(m, x, p, z).unwrap(), eval_f(m, -x, p, -z).unwrap());
    }

    #[test]
    fn single_coefficients_parity(p in 0.0f64..1.0, g in 0.0f64..3.0) {
        let a = coeffs_single(p, g);
        let b = coeffs_single(p, -g);
        prop_assert_eq!(a.a0, b.a0);
        prop_assert_eq!(a.a1, -b.a1);
    }

    #[test]
    fn triple_symmetries(n in 1usize..40, k in -40i64..40, l in -40i64..40, m in -40i64..40) {
        let c = count_triple(n, k, l, m).log_count;
        prop_assert_eq!(c, count_triple(n, l, k, m).log_count);
        prop_assert_eq!(c, count_triple(n, -k, -l, m).log_count);
        prop_assert_eq!(c, count_triple(n, k, -l, -m).log_count);
    }

    #[test]
    fn triple_marginals(n in 1usize..10_000, kf in 0.0f64..1.0, lf in 0.0f64..1.0) {
        let ni = n as i64;
        let k = 2 * (kf * n as f64).floor() as i64 - ni;
        let l = 2 * (lf * n as f64).floor() as i64 - ni;
        let tab = BinomialTable::new(n);
        let total = log_sum_exp((-ni..=ni).map(|m| tab.log_count_triple(k, l, m)));
        let want = log_count_single(n, k) + log_count_single(n, l);
        prop_assert!((total - want).abs() < 1e-9, "{} vs {}", total, want);
    }

    #[test]
    fn levy_is_a_metric(a in law(), b in law(), c in law()) {
        let ab = distance(Metric::Levy, &a, &b).unwrap();
        let ba = distance(Metric::Levy, &b, &a).unwrap();
        let bc = distance(Metric::Levy, &b, &c).unwrap();
        let ac = distance(Metric::Levy, &a, &c).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ac <= ab + bc + 1e-8);
        prop_assert_eq!(distance(Metric::Levy, &a, &a).unwrap(), 0.0);
        prop_assert_eq!(distance(Metric::Ks, &a, &a).unwrap(), 0.0);
        prop_assert_eq!(distance(Metric::Tv, &a, &a).unwrap(), 0.0);
        prop_assert!(ab <= distance(Metric::Ks, &a, &b).unwrap() + 1e-12);
    }

    #[test]
    fn empirical_weights_normalized(a in law()) {
        let s: f64 = a.weights().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(a.values().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn second_moment_dominates(n in 1usize..40, p in 0.05f64..1.0, beta in 0.0f64..1.0, gi in 0usize..4) {
        let params = ModelParams::new(n, p, beta).unwrap();
        let g = TestFunction::ALL[gi];
        let s = second_moment(&params, g, ScalingRule::SqrtN, 400).unwrap();
        prop_assert!(s.variance_ratio >= 0.0);
        prop_assert!(s.log_second >= 2.0 * s.log_mean - 1e-9);
    }

    #[test]
    fn exact_laws_are_symmetric(n in 1usize..14, p in 0.05f64..1.0, beta in 0.0f64..2.0, seed in any::<u64>()) {
        let params = ModelParams::new(n, p, beta).unwrap();
        let g = sample_graph(&params, seed);
        let law = exact_law(&g, beta, ScalingRule::SqrtN).unwrap();
        let (v, w) = (law.values(), law.weights());
        let k = v.len();
        for i in 0..k {
            prop_assert_eq!(v[i], -v[k - 1 - i]);
            prop_assert!((w[i] - w[k - 1 - i]).abs() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn levy_below_ks_against_gauss(a in law(), var in 0.2f64..4.0) {
        let g = LimitLaw::gauss(var).unwrap();
        let l = distance(Metric::Levy, &a, &g).unwrap();
        let k = distance(Metric::Ks, &a, &g).unwrap();
        prop_assert!(l <= k + 1e-9, "{} > {}", l, k);
    }
}
