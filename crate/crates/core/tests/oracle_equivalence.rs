//! The library against exhaustive enumeration.

use dcw_core::annealed::{annealed_mean, second_moment, TestFunction, DEFAULT_N_GUARD};
use dcw_core::combinatorics::count_triple;
use dcw_core::expansions::{eval_f, expected_pair_closed, expected_t_closed};
use dcw_core::limits::{LimitLaw, ScalingRule};
use dcw_core::model::{log_t_statistic, overlap, sample_graph, ModelParams, SpinConfig};
use dcw_core::quenched::exact_law;
use dcw_oracle as oracle;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn disorder_averages_at_n3() {
    for p in [0.3, 0.4, 0.7] {
        for beta in [0.5, 0.8, 1.0] {
            let params = ModelParams::new(3, p, beta).unwrap();
            for a in 0..8u64 {
                let s = oracle::spins_of(3, a);
                let sigma = SpinConfig::new(s.clone()).unwrap();
                let closed = expected_t_closed(&params, sigma.magnetization()).unwrap().exp();
                let brute = oracle::expected_t(3, p, beta, &s);
                assert!(rel(closed, brute) < 1e-12, "E T p={p} beta={beta} sigma={a}");
                for b in 0..8u64 {
                    let t = oracle::spins_of(3, b);
                    let tau = SpinConfig::new(t.clone()).unwrap();
                    let o = overlap(&sigma, &tau).unwrap();
                    let closed = expected_pair_closed(&params, sigma.magnetization(), tau.magnetization(), o)
                        .unwrap()
                        .exp();
                    let brute = oracle::expected_tt(3, p, beta, &s, &t);
                    assert!(rel(closed, brute) < 1e-12, "E TT p={p} beta={beta} ({a},{b})");
                }
            }
        }
    }
}

#[test]
fn t_statistic_against_oracle() {
    let params = ModelParams::new(6, 0.45, 0.9).unwrap();
    let g = sample_graph(&params, 21);
    let edges: Vec<(usize, usize)> = g.edges().collect();
    for mask in [0u64, 5, 17, 63] {
        let s = oracle::spins_of(6, mask);
        let lt = log_t_statistic(&g, &SpinConfig::new(s.clone()).unwrap(), &params).unwrap();
        let brute = oracle::t_statistic(6, 0.45, 0.9, &s, &edges);
        assert!((lt - brute.ln()).abs() < 1e-13);
    }
}

#[test]
fn triple_counts_exact() {
    for n in 2..=12usize {
        let brute = oracle::triple_counts(n);
        let ni = n as i64;
        for k in -ni..=ni {
            for l in -ni..=ni {
                for m in -ni..=ni {
                    let c = count_triple(n, k, l, m);
                    match brute.get(&(k, l, m)) {
                        Some(&want) => assert_eq!(c.log_count.exp().round() as u64, want, "N={n} ({k},{l},{m})"),
                        None => assert!(!c.is_realizable(), "N={n} ({k},{l},{m})"),
                    }
                }
            }
        }
    }
}

#[test]
fn single_counts_exact() {
    for n in 1..=60u64 {
        for ups in 0..=n {
            let k = 2 * ups as i64 - n as i64;
            let want = oracle::binomial(n, ups) as f64;
            let got = dcw_core::combinatorics::log_count_single(n as usize, k).exp();
            assert!(rel(got, want) < 1e-12);
        }
    }
}

#[test]
fn annealed_moments_at_n3() {
    for (p, beta, g) in [
        (0.4, 0.8, TestFunction::Gauss),
        (0.3, 1.0, TestFunction::One),
        (0.7, 0.5, TestFunction::Lorentz),
        (0.6, 1.0, TestFunction::Bump),
    ] {
        let params = ModelParams::new(3, p, beta).unwrap();
        let scale = ScalingRule::SqrtN;
        let s = scale.scale(3, p);
        let (mean, second) = oracle::annealed_moments(3, p, beta, |x| g.eval(x), s);
        assert!(rel(annealed_mean(&params, g, scale).exp(), mean) < 1e-12, "mean {g:?}");
        let sm = second_moment(&params, g, scale, DEFAULT_N_GUARD).unwrap();
        assert!(rel(sm.log_second.exp(), second) < 1e-12, "second {g:?}");
        let var = (second - mean * mean) / (mean * mean);
        assert!((sm.variance_ratio - var).abs() < 1e-10, "variance {g:?}: {} vs {var}", sm.variance_ratio);
    }
}

#[test]
fn annealed_moments_at_n2_with_critical_scaling() {
    let params = ModelParams::new(2, 0.5, 1.0).unwrap();
    for scale in [ScalingRule::N34, ScalingRule::N32p] {
        let s = scale.scale(2, 0.5);
        let (mean, second) = oracle::annealed_moments(2, 0.5, 1.0, |x| TestFunction::Gauss.eval(x), s);
        let sm = second_moment(&params, TestFunction::Gauss, scale, DEFAULT_N_GUARD).unwrap();
        assert!(rel(sm.log_mean.exp(), mean) < 1e-12);
        assert!(rel(sm.log_second.exp(), second) < 1e-12);
    }
}

#[test]
fn gibbs_law_against_oracle() {
    for (n, p, beta, seed) in [(8usize, 0.3, 0.7, 1u64), (10, 0.6, 1.0, 2), (11, 0.02, 2.0, 3)] {
        let params = ModelParams::new(n, p, beta).unwrap();
        let g = sample_graph(&params, seed);
        let edges: Vec<(usize, usize)> = g.edges().collect();
        let brute = oracle::gibbs_magnetization_law(n, p, beta, &edges);
        let law = exact_law(&g, beta, ScalingRule::SqrtN).unwrap();
        let s = (n as f64).sqrt();
        assert_eq!(law.values().len(), brute.len());
        for ((v, w), (m, bw)) in law.atoms().zip(brute) {
            assert!((v - m as f64 / s).abs() < 1e-14);
            assert!((w - bw).abs() < 1e-13, "N={n}: {w} vs {bw}");
        }
    }
}

#[test]
fn f_against_naive_evaluation() {
    for m in [0, 1, 2] {
        for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for p in [0.1, 0.5, 0.9] {
                for z in [-0.7, -0.05, 0.3, 1.2] {
                    let a = eval_f(m, x, p, z).unwrap();
                    let b = oracle::f_m(m, x, p, z);
                    assert!((a - b).abs() < 1e-14 * b.abs().max(1.0), "F_{m}({x},{p},{z})");
                }
            }
        }
    }
}

#[test]
fn limit_law_moments_by_two_quadratures() {
    let q = LimitLaw::quartic();
    let simpson_norm = oracle::simpson(|x| (-x.powi(4) / 12.0).exp(), -30.0, 30.0, 200_000);
    let simpson_m2 = oracle::simpson(|x| x * x * (-x.powi(4) / 12.0).exp(), -30.0, 30.0, 200_000) / simpson_norm;
    assert!((q.moment(2).unwrap() - simpson_m2).abs() < 1e-9);
    assert!((q.log_norm() - simpson_norm.ln()).abs() < 1e-10);

    for c in [0.01, 1.0, 7.5] {
        let qg = LimitLaw::quartic_gauss(c).unwrap();
        let w = |x: f64| (-c * x * x / 24.0 - x.powi(4) / 12.0).exp();
        let norm = oracle::simpson(w, -30.0, 30.0, 200_000);
        let m4 = oracle::simpson(|x| x.powi(4) * w(x), -30.0, 30.0, 200_000) / norm;
        assert!((qg.log_norm() - norm.ln()).abs() < 1e-10);
        assert!((qg.moment(4).unwrap() - m4).abs() < 1e-9);
    }
}
