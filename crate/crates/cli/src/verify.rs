//! Self-checks of the library against brute-force enumeration (`quick`) and
//! against the asymptotic trends at large `N` (`full`).

use std::time::Instant;

use serde::Serialize;

use dcw_core::annealed::{annealed_mean, mean_prediction, second_moment, variance_ratio, TestFunction};
use dcw_core::combinatorics::{count_triple, log_count_single, stirling_gap, stirling_gap_with_lambda};
use dcw_core::expansions::{
    coeffs_single, default_p_grid, default_z_grid, eval_f, expected_pair_closed, expected_t_closed,
    expected_t_with, residual_order, ExpansionId,
};
use dcw_core::limits::{distance, predicted_limit, EmpiricalLaw, LimitLaw, Metric, Regime, ScalingRule};
use dcw_core::model::{overlap, sample_graph, ModelParams, SpinConfig};
use dcw_core::quenched::{
    complete_graph_law, exact_law, gibbs_weights, glauber_chain, heat_bath_transition_matrix,
    quenched_levy_experiment, ChainConfig, Method,
};
use dcw_oracle as oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

/// Deliberate corruption of the library's inputs, to confirm the checks
/// can fail.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mutation {
    /// Added to the single-spin coefficient `a1` before evaluating `E T`.
    pub a1_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRow {
    pub id: String,
    pub z_order: f64,
    pub p_order: f64,
    pub expected_z_order: f64,
    pub expected_p_order: f64,
    pub pass: bool,
}

/// Fitted remainder orders of every identity, checked against the actual
/// leading remainder term within 0.2.
pub fn expansion_rows() -> Vec<ExpansionRow> {
    let (pg, zg) = (default_p_grid(), default_z_grid());
    ExpansionId::ALL
        .iter()
        .map(|&id| {
            let fit = residual_order(id, &pg, &zg).expect("default grids are valid");
            let (ez, ep) = id.remainder_orders();
            ExpansionRow {
                id: id.label().to_string(),
                z_order: fit.z_order,
                p_order: fit.p_order,
                expected_z_order: ez,
                expected_p_order: ep,
                pass: (fit.z_order - ez).abs() <= 0.2 && fit.p_order >= ep - 0.2 && !fit.exact_within_noise,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinatoricsRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub triples: usize,
    pub max_log_discrepancy: f64,
    pub pass: bool,
}

/// Triple counts against exhaustive pair enumeration for `N = 2..=n_max`.
pub fn combinatorics_rows(n_max: usize) -> Vec<CombinatoricsRow> {
    (2..=n_max.min(14))
        .map(|n| {
            let brute = oracle::triple_counts(n);
            let ni = n as i64;
            let mut worst: f64 = 0.0;
            let mut support_ok = true;
            for k in -ni..=ni {
                for l in -ni..=ni {
                    for m in -ni..=ni {
                        let c = count_triple(n, k, l, m);
                        match brute.get(&(k, l, m)) {
                            Some(&want) => worst = worst.max((c.log_count - (want as f64).ln()).abs()),
                            None => support_ok &= !c.is_realizable(),
                        }
                    }
                }
            }
            CombinatoricsRow {
                n,
                triples: brute.len(),
                max_log_discrepancy: worst,
                pass: support_ok && worst < 1e-9,
            }
        })
        .collect()
}

fn timed(name: &str, check: impl FnOnce() -> (bool, String)) -> CheckResult {
    let start = Instant::now();
    let (pass, detail) = check();
    CheckResult {
        name: name.to_string(),
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn seq(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn single_moment_check(mutation: Mutation) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for p in [0.3, 0.4, 0.7] {
        for beta in [0.5, 0.8, 1.0] {
            let params = ModelParams::new(3, p, beta).unwrap();
            let mut c = coeffs_single(p, params.gamma());
            c.a1 += mutation.a1_shift;
            for mask in 0..8u64 {
                let s = oracle::spins_of(3, mask);
                let m: i64 = s.iter().map(|&v| v as i64).sum();
                let got = expected_t_with(&c, 3, m).unwrap().exp();
                worst = worst.max(rel(got, oracle::expected_t(3, p, beta, &s)));
            }
        }
    }
    (worst <= 1e-12, format!("max relative error {worst:.2e}"))
}

fn pair_moment_check() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for p in [0.3, 0.4, 0.7] {
        for beta in [0.5, 0.8, 1.0] {
            let params = ModelParams::new(3, p, beta).unwrap();
            for a in 0..8u64 {
                for b in 0..8u64 {
                    let (s, t) = (oracle::spins_of(3, a), oracle::spins_of(3, b));
                    let (sigma, tau) = (SpinConfig::new(s.clone()).unwrap(), SpinConfig::new(t.clone()).unwrap());
                    let o = overlap(&sigma, &tau).unwrap();
                    let got = expected_pair_closed(&params, sigma.magnetization(), tau.magnetization(), o)
                        .unwrap()
                        .exp();
                    worst = worst.max(rel(got, oracle::expected_tt(3, p, beta, &s, &t)));
                }
            }
        }
    }
    (worst <= 1e-12, format!("max relative error {worst:.2e}"))
}

fn quick_checks(mutation: Mutation) -> Vec<CheckResult> {
    let mut out = vec![
        timed("single-spin disorder average, N=3", || single_moment_check(mutation)),
        timed("pair disorder average, N=3", pair_moment_check),
        timed("triple counts, N=2..12", || {
            let rows = combinatorics_rows(12);
            let worst = rows.iter().map(|r| r.max_log_discrepancy).fold(0.0, f64::max);
            (rows.iter().all(|r| r.pass), format!("max log discrepancy {worst:.2e}"))
        }),
        timed("single counts, N=1..60", || {
            let mut worst: f64 = 0.0;
            for n in 1..=60u64 {
                for ups in 0..=n {
                    let want = (oracle::binomial(n, ups) as f64).ln();
                    worst = worst.max((log_count_single(n as usize, 2 * ups as i64 - n as i64) - want).abs());
                }
            }
            (worst < 1e-12, format!("max log discrepancy {worst:.2e}"))
        }),
        timed("annealed moments, N=3", || {
            let mut worst: f64 = 0.0;
            for (p, beta) in [(0.4, 0.8), (0.3, 1.0), (0.7, 0.5)] {
                let params = ModelParams::new(3, p, beta).unwrap();
                for g in TestFunction::ALL {
                    let (mean, second) = oracle::annealed_moments(3, p, beta, |x| g.eval(x), 3f64.sqrt());
                    let sm = second_moment(&params, g, ScalingRule::SqrtN, 400).unwrap();
                    worst = worst.max(rel(sm.log_mean.exp(), mean)).max(rel(sm.log_second.exp(), second));
                }
            }
            (worst <= 1e-12, format!("max relative error {worst:.2e}"))
        }),
        timed("Gibbs magnetization law, N<=12", || {
            let mut worst: f64 = 0.0;
            for (n, p, beta, seed) in [(6usize, 0.5, 0.9, 1u64), (9, 0.3, 1.0, 2), (12, 0.6, 0.5, 3)] {
                let graph = sample_graph(&ModelParams::new(n, p, beta).unwrap(), seed);
                let edges: Vec<(usize, usize)> = graph.edges().collect();
                let brute = oracle::gibbs_magnetization_law(n, p, beta, &edges);
                let law = exact_law(&graph, beta, ScalingRule::SqrtN).unwrap();
                for ((_, w), (_, bw)) in law.atoms().zip(brute) {
                    worst = worst.max((w - bw).abs());
                }
            }
            (worst < 1e-12, format!("max weight error {worst:.2e}"))
        }),
        timed("heat-bath detailed balance, N=4", || {
            let graph = sample_graph(&ModelParams::new(4, 0.5, 1.0).unwrap(), 4);
            let pi = gibbs_weights(&graph, 1.0).unwrap();
            let mat = heat_bath_transition_matrix(&graph, 1.0).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..pi.len() {
                for j in 0..pi.len() {
                    worst = worst.max((pi[i] * mat[i][j] - pi[j] * mat[j][i]).abs());
                }
            }
            (worst <= 1e-12, format!("max flow imbalance {worst:.2e}"))
        }),
        timed("F against naive evaluation", || {
            let mut worst: f64 = 0.0;
            for m in 0..3 {
                for x in [-2.0, 0.0, 1.0] {
                    for p in [0.1, 0.5, 0.9] {
                        for z in [-0.7, 0.05, 1.2] {
                            let a = eval_f(m, x, p, z).unwrap();
                            worst = worst.max((a - oracle::f_m(m, x, p, z)).abs());
                        }
                    }
                }
            }
            (worst < 1e-14, format!("max absolute error {worst:.2e}"))
        }),
    ];
    out.push(timed("expansion remainder orders", || {
        let rows = expansion_rows();
        let detail = rows.iter().map(|r| format!("{} z^{:.2} p^{:.2}", r.id, r.z_order, r.p_order)).collect::<Vec<_>>();
        (rows.iter().all(|r| r.pass), detail.join(", "))
    }));
    out
}

fn ratio(n: usize, p: f64, beta: f64, regime: Regime) -> f64 {
    let params = ModelParams::new(n, p, beta).unwrap();
    let (_, rule) = predicted_limit(beta, regime).unwrap();
    let g = TestFunction::Gauss;
    (annealed_mean(&params, g, rule) - mean_prediction(&params, g, regime).unwrap()).exp()
}

fn trend_band(ratios: &[f64], band: f64) -> (bool, String) {
    let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    (decreasing(&gaps) && gaps.last().is_some_and(|&g| g <= band), format!("ratios {}", seq(ratios)))
}

fn full_checks() -> Vec<CheckResult> {
    vec![
        timed("E T approximation, N=10^4", || {
            let (n, p, beta) = (10_000usize, 0.1, 0.5);
            let params = ModelParams::new(n, p, beta).unwrap();
            let bound = (n as f64 * (n as f64 * p).powf(0.2)).sqrt() as i64;
            let worst = (-bound..=bound)
                .filter(|m| (m + n as i64) % 2 == 0)
                .map(|m| {
                    let approx = -beta * beta / 8.0 + beta * (m * m) as f64 / (2.0 * n as f64);
                    (expected_t_closed(&params, m).unwrap() - approx).abs()
                })
                .fold(0.0, f64::max);
            (worst < 1e-2, format!("max deviation {worst:.2e}"))
        }),
        timed("annealed high-temperature mean", || {
            let r: Vec<f64> = [1_000, 10_000, 100_000].iter().map(|&n| ratio(n, 0.2, 0.5, Regime::HighTemp)).collect();
            trend_band(&r, 0.02)
        }),
        timed("annealed critical means", || {
            let ns = [1_000usize, 10_000, 100_000, 1_000_000];
            let a: Vec<f64> = ns.iter().map(|&n| ratio(n, 1.0, 1.0, Regime::CritDiverging)).collect();
            let b: Vec<f64> = ns
                .iter()
                .map(|&n| ratio(n, (n as f64).powf(-0.75), 1.0, Regime::CritLine(1.0)))
                .collect();
            let c: Vec<f64> = ns.iter().map(|&n| ratio(n, (n as f64).powf(-0.8), 1.0, Regime::CritVanishing)).collect();
            let (ok_a, da) = trend_band(&a, 0.05);
            let (ok_b, db) = trend_band(&b, 0.05);
            let (ok_c, dc) = trend_band(&c, 0.05);
            (ok_a && ok_b && ok_c, format!("(a) {da}; (b) {db}; (c) {dc}"))
        }),
        timed("annealed variance ratio", || {
            let v: Vec<f64> = [50usize, 100, 200, 400]
                .iter()
                .map(|&n| {
                    let params = ModelParams::new(n, 0.3, 0.5).unwrap();
                    variance_ratio(&params, TestFunction::Gauss, ScalingRule::SqrtN, 400).unwrap()
                })
                .collect();
            (decreasing(&v), format!("ratios {}", seq(&v)))
        }),
        timed("critical quartic law at p=1", || {
            let q = LimitLaw::quartic();
            let ks: Vec<f64> = [1_000usize, 10_000, 100_000]
                .iter()
                .map(|&n| distance(Metric::Ks, &complete_graph_law(n, 1.0, ScalingRule::N34), &q).unwrap())
                .collect();
            (decreasing(&ks) && ks[2] < 0.05, format!("KS {}", seq(&ks)))
        }),
        timed("quenched high-temperature CLT", || {
            let med: Vec<f64> = [12usize, 16, 20]
                .iter()
                .map(|&n| {
                    let params = ModelParams::new(n, 0.6, 0.5).unwrap();
                    let cfg = ChainConfig::with_defaults(n, 1, 2024);
                    quenched_levy_experiment(&params, Regime::HighTemp, 100, Method::Exact, &cfg)
                        .unwrap()
                        .aggregate
                        .median_levy
                })
                .collect();
            (decreasing(&med), format!("median Levy {}", seq(&med)))
        }),
        timed("Glauber chain against exact law, N=12", || {
            let graph = sample_graph(&ModelParams::new(12, 0.5, 0.8).unwrap(), 7);
            let exact = exact_law(&graph, 0.8, ScalingRule::SqrtN).unwrap();
            let cfg = ChainConfig {
                sweeps: 1_000_000,
                burn_in: 1_000,
                thinning: 1,
                seed: 11,
            };
            let xs: Vec<f64> = glauber_chain(&graph, 0.8, &cfg)
                .unwrap()
                .iter()
                .map(|&m| m as f64 / 12f64.sqrt())
                .collect();
            let tv = distance(Metric::Tv, &EmpiricalLaw::from_samples(&xs).unwrap(), &exact).unwrap();
            (tv <= 0.02, format!("TV {tv:.3e}"))
        }),
        timed("Stirling approximation", || {
            let ns = [100usize, 1_000, 10_000];
            let w = |n: usize| (n as f64).powf(0.8) as usize;
            let plain: Vec<f64> = ns.iter().map(|&n| stirling_gap(n, w(n)).unwrap()).collect();
            let corrected: Vec<f64> = ns.iter().map(|&n| stirling_gap_with_lambda(n, w(n)).unwrap()).collect();
            (
                decreasing(&plain) && decreasing(&corrected) && corrected[2] < 0.01,
                format!("gap {}; with lambda {}", seq(&plain), seq(&corrected)),
            )
        }),
    ]
}

pub fn verify_suite(level: Level) -> Vec<CheckResult> {
    verify_suite_with(level, Mutation::default())
}

pub fn verify_suite_with(level: Level, mutation: Mutation) -> Vec<CheckResult> {
    let mut out = quick_checks(mutation);
    if level == Level::Full {
        out.extend(full_checks());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_rows_pass() {
        let rows = expansion_rows();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }

    #[test]
    fn perturbed_a1_is_caught() {
        assert!(single_moment_check(Mutation::default()).0);
        assert!(!single_moment_check(Mutation { a1_shift: 1e-6 }).0);
    }

    #[test]
    fn small_combinatorics_rows() {
        let rows = combinatorics_rows(6);
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.pass && r.max_log_discrepancy < 1e-12));
    }
}
