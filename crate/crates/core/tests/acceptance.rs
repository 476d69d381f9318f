//! Acceptance suite. One PASS/FAIL line per criterion.
//!
//! A failure that matches an analysed defect of the criterion itself is
//! reported as `FAIL (known)` and does not fail the run unless
//! `DCW_ACCEPTANCE_STRICT=1` is set.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dcw_core::annealed::{annealed_mean, mean_prediction, variance_ratio, TestFunction};
use dcw_core::combinatorics::{count_triple, stirling_gap, stirling_gap_with_lambda, stirling_log_binomial};
use dcw_core::expansions::{
    default_p_grid, default_z_grid, expected_pair_closed, expected_t_closed, residual_order, ExpansionId,
};
use dcw_core::limits::{distance, predicted_limit, EmpiricalLaw, LimitLaw, Metric, Regime, ScalingRule};
use dcw_core::model::{overlap, sample_graph, ModelParams, SpinConfig};
use dcw_core::quadrature::integrate_default;
use dcw_core::quenched::{
    complete_graph_law, exact_law, gibbs_weights, glauber_chain, heat_bath_transition_matrix,
    quenched_levy_experiment, ChainConfig, Method,
};
use dcw_oracle as oracle;

struct Verdict {
    pass: bool,
    /// Set when the failure matches a known, analysed defect of the criterion.
    known: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, known: false, detail: detail.into() }
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn fmt_seq(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn c1_disorder_identities() -> Verdict {
    let mut worst: f64 = 0.0;
    for p in [0.3, 0.7] {
        for beta in [0.5, 1.0] {
            let params = ModelParams::new(3, p, beta).unwrap();
            for a in 0..8u64 {
                let s = oracle::spins_of(3, a);
                let sigma = SpinConfig::new(s.clone()).unwrap();
                let got = expected_t_closed(&params, sigma.magnetization()).unwrap().exp();
                let want = oracle::expected_t(3, p, beta, &s);
                worst = worst.max((got - want).abs() / want);
                for b in 0..8u64 {
                    let t = oracle::spins_of(3, b);
                    let tau = SpinConfig::new(t.clone()).unwrap();
                    let o = overlap(&sigma, &tau).unwrap();
                    let got = expected_pair_closed(&params, sigma.magnetization(), tau.magnetization(), o)
                        .unwrap()
                        .exp();
                    let want = oracle::expected_tt(3, p, beta, &s, &t);
                    worst = worst.max((got - want).abs() / want);
                }
            }
        }
    }
    Verdict::new(worst <= 1e-12, format!("max relative error {worst:.2e}"))
}

fn c2_triple_counts() -> Verdict {
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for n in 2..=12usize {
        let brute = oracle::triple_counts(n);
        let ni = n as i64;
        for k in -ni..=ni {
            for l in -ni..=ni {
                for m in -ni..=ni {
                    let c = count_triple(n, k, l, m);
                    checked += 1;
                    let ok = match brute.get(&(k, l, m)) {
                        Some(&want) => c.is_realizable() && c.log_count.exp().round() as u64 == want,
                        None => !c.is_realizable(),
                    };
                    mismatches += usize::from(!ok);
                }
            }
        }
    }
    Verdict::new(mismatches == 0, format!("{checked} triples, {mismatches} mismatches"))
}

fn c3_expansion_orders() -> Verdict {
    let (pg, zg) = (default_p_grid(), default_z_grid());
    let mut bad = Vec::new();
    let mut parts = Vec::new();
    for id in ExpansionId::ALL {
        let fit = residual_order(id, &pg, &zg).unwrap();
        let want = id.stated_orders().0;
        parts.push(format!("{} z^{:.3}", id.label(), fit.z_order));
        if (fit.z_order - want).abs() > 0.2 {
            bad.push(id);
        }
    }
    let mut v = Verdict::new(bad.is_empty(), parts.join(", "));
    if bad == [ExpansionId::A4] {
        v.known = true;
        v.detail += "; f8A: the z^3 term vanishes by parity, the true remainder is 8p^3(1-p)z^4";
    }
    v
}

fn ratio(params: &ModelParams, g: TestFunction, regime: Regime) -> f64 {
    let (_, rule) = predicted_limit(params.beta(), regime).unwrap();
    (annealed_mean(params, g, rule) - mean_prediction(params, g, regime).unwrap()).exp()
}

fn trend_and_band(ratios: &[f64], band: f64) -> bool {
    let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    strictly_decreasing(&gaps) && gaps.last().is_some_and(|&g| g <= band)
}

fn c4_annealed_high_temp() -> Verdict {
    let ratios: Vec<f64> = [1_000usize, 10_000, 100_000]
        .iter()
        .map(|&n| ratio(&ModelParams::new(n, 0.2, 0.5).unwrap(), TestFunction::Gauss, Regime::HighTemp))
        .collect();
    Verdict::new(trend_and_band(&ratios, 0.02), format!("ratios {}", fmt_seq(&ratios)))
}

fn c5_annealed_critical() -> Verdict {
    let ns = [1_000usize, 10_000, 100_000, 1_000_000];
    let mut all = true;
    let mut parts = Vec::new();
    let legs: [(&str, fn(usize) -> f64, fn(usize) -> Regime); 3] = [
        ("a", |_| 1.0, |_| Regime::CritDiverging),
        ("b", |n| (n as f64).powf(-0.75), |_| Regime::CritLine(1.0)),
        ("c", |n| (n as f64).powf(-0.8), |_| Regime::CritVanishing),
    ];
    for (tag, p_of, regime_of) in legs {
        let ratios: Vec<f64> = ns
            .iter()
            .map(|&n| ratio(&ModelParams::new(n, p_of(n), 1.0).unwrap(), TestFunction::Gauss, regime_of(n)))
            .collect();
        let ok = trend_and_band(&ratios, 0.05);
        all &= ok;
        parts.push(format!("({tag}) {}", fmt_seq(&ratios)));
    }
    Verdict::new(all, parts.join("; "))
}

fn c6_variance_dominance() -> Verdict {
    let ns = [50usize, 100, 200, 400];
    let leg = |beta: f64, p: f64| -> Vec<f64> {
        ns.iter()
            .map(|&n| {
                let params = ModelParams::new(n, p, beta).unwrap();
                variance_ratio(&params, TestFunction::Gauss, ScalingRule::SqrtN, 400).unwrap()
            })
            .collect()
    };
    let high = leg(0.5, 0.3);
    let crit = leg(1.0, 1.0);
    let (ok_high, ok_crit) = (strictly_decreasing(&high), strictly_decreasing(&crit));
    let mut v = Verdict::new(
        ok_high && ok_crit,
        format!("(0.5, 0.3): {}; (1, 1): {}", fmt_seq(&high), fmt_seq(&crit)),
    );
    if ok_high && !ok_crit && crit.iter().all(|&r| r == 0.0) {
        v.known = true;
        v.detail += "; at p = 1 the graph is deterministic so the variance is identically 0";
    }
    v
}

fn c7_mcmc() -> Verdict {
    let params = ModelParams::new(12, 0.5, 0.8).unwrap();
    let graph = sample_graph(&params, 7);
    let exact = exact_law(&graph, 0.8, ScalingRule::SqrtN).unwrap();
    let cfg = ChainConfig {
        sweeps: 1_000_000,
        burn_in: 1_000,
        thinning: 1,
        seed: 11,
    };
    let ms = glauber_chain(&graph, 0.8, &cfg).unwrap();
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64 / 12f64.sqrt()).collect();
    let emp = EmpiricalLaw::from_samples(&xs).unwrap();
    let tv = distance(Metric::Tv, &emp, &exact).unwrap();

    let small = sample_graph(&ModelParams::new(4, 0.5, 1.3).unwrap(), 3);
    let pi = gibbs_weights(&small, 1.3).unwrap();
    let mat = heat_bath_transition_matrix(&small, 1.3).unwrap();
    let mut db: f64 = 0.0;
    for i in 0..pi.len() {
        for j in 0..pi.len() {
            db = db.max((pi[i] * mat[i][j] - pi[j] * mat[j][i]).abs());
        }
    }
    Verdict::new(tv <= 0.02 && db <= 1e-12, format!("TV {tv:.4e} over {} sweeps; detailed balance {db:.1e}", cfg.sweeps))
}

fn c8_quenched_clt() -> Verdict {
    let medians: Vec<f64> = [12usize, 16, 20]
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
    Verdict::new(strictly_decreasing(&medians), format!("median Levy {}", fmt_seq(&medians)))
}

fn c9_quartic() -> Verdict {
    let quartic = LimitLaw::quartic();
    let ks: Vec<f64> = [1_000usize, 10_000, 100_000]
        .iter()
        .map(|&n| distance(Metric::Ks, &complete_graph_law(n, 1.0, ScalingRule::N34), &quartic).unwrap())
        .collect();
    Verdict::new(strictly_decreasing(&ks) && ks[2] < 0.05, format!("KS {}", fmt_seq(&ks)))
}

fn c10_vanishing_exploratory() -> Verdict {
    let n = 1usize << 16;
    let params = ModelParams::new(n, (n as f64).powf(-0.8), 1.0).unwrap();
    let cfg = ChainConfig {
        sweeps: 1_500,
        burn_in: 500,
        thinning: 1,
        seed: 16,
    };
    match quenched_levy_experiment(&params, Regime::CritVanishing, 2, Method::Mcmc, &cfg) {
        Ok(rep) => Verdict::new(
            true,
            format!(
                "non-gating: median second moment {:.3} (target 12), median Levy {:.3e}",
                rep.aggregate.median_m2, rep.aggregate.median_levy
            ),
        ),
        Err(e) => Verdict::new(false, format!("run failed: {e}")),
    }
}

fn random_law(rng: &mut ChaCha8Rng) -> EmpiricalLaw {
    let k = rng.random_range(1..12);
    EmpiricalLaw::new((0..k).map(|_| (rng.random_range(-3.0..3.0), rng.random_range(0.01..1.0))).collect()).unwrap()
}

fn c11_laws_and_metrics() -> Verdict {
    let laws = [
        LimitLaw::gauss(1.0).unwrap(),
        LimitLaw::gauss(2.0).unwrap(),
        LimitLaw::gauss(12.0).unwrap(),
        LimitLaw::quartic(),
        LimitLaw::quartic_gauss(0.1).unwrap(),
        LimitLaw::quartic_gauss(1.0).unwrap(),
        LimitLaw::quartic_gauss(10.0).unwrap(),
    ];
    let norm_err = laws
        .iter()
        .map(|l| {
            let h = l.half_width();
            (integrate_default(|x| l.pdf(x), -h, h) - 1.0).abs()
        })
        .fold(0.0f64, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut violations = 0usize;
    for _ in 0..100 {
        let (a, b, c) = (random_law(&mut rng), random_law(&mut rng), random_law(&mut rng));
        let d = |x: &EmpiricalLaw, y: &EmpiricalLaw| distance(Metric::Levy, x, y).unwrap();
        let ok = d(&a, &a) == 0.0
            && (d(&a, &b) - d(&b, &a)).abs() < 1e-9
            && d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-8
            && d(&a, &b) <= distance(Metric::Ks, &a, &b).unwrap() + 1e-12;
        violations += usize::from(!ok);
    }

    let delta = |x: f64| EmpiricalLaw::new(vec![(x, 1.0)]).unwrap();
    let point_err = [0.0, 0.05, 0.3, 0.999, 1.0, 2.5]
        .iter()
        .map(|&a| (distance(Metric::Levy, &delta(0.0), &delta(a)).unwrap() - f64::min(a, 1.0)).abs())
        .fold(0.0f64, f64::max);

    Verdict::new(
        norm_err <= 1e-8 && violations == 0 && point_err <= 1e-9,
        format!("normalization {norm_err:.1e}; {violations}/100 metric violations; point masses {point_err:.1e}"),
    )
}

fn c12_stirling() -> Verdict {
    let ns = [100usize, 1_000, 10_000];
    let window = |n: usize| (n as f64).powf(0.8) as usize;
    let gaps: Vec<f64> = ns.iter().map(|&n| stirling_gap(n, window(n)).unwrap()).collect();
    let with_lambda: Vec<f64> = ns.iter().map(|&n| stirling_gap_with_lambda(n, window(n)).unwrap()).collect();
    // The normalization 2^N / sqrt(2 pi N) without the parity-lattice factor 2.
    let literal: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let shift = std::f64::consts::LN_2;
            let w = window(n) as i64;
            let ni = n as i64;
            (-w..=w)
                .filter(|k| (k + ni) % 2 == 0)
                .map(|k| {
                    let exact = dcw_core::combinatorics::log_count_single(n, k);
                    (stirling_log_binomial(n, k) - shift - exact).abs()
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    let trend = strictly_decreasing(&gaps);
    let mut v = Verdict::new(
        trend && gaps[2] < 0.01,
        format!(
            "gap {}; with lambda {}; uncorrected constant {}",
            fmt_seq(&gaps),
            fmt_seq(&with_lambda),
            fmt_seq(&literal)
        ),
    );
    if trend && gaps[2] >= 0.01 && with_lambda[2] < 0.01 {
        v.known = true;
        v.detail += "; the leading-order form omits the k^2/(2N^2) correction, which alone exceeds 0.01 at the window edge";
    }
    v
}

fn main() -> ExitCode {
    let strict = std::env::var("DCW_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("disorder-moment identities at N=3", c1_disorder_identities),
        ("triple counts for N=2..12", c2_triple_counts),
        ("expansion remainder orders", c3_expansion_orders),
        ("annealed high-temperature mean", c4_annealed_high_temp),
        ("annealed critical means", c5_annealed_critical),
        ("variance dominance", c6_variance_dominance),
        ("MCMC against exact law", c7_mcmc),
        ("quenched high-temperature CLT", c8_quenched_clt),
        ("critical quartic law", c9_quartic),
        ("vanishing-density regime (exploratory)", c10_vanishing_exploratory),
        ("limit laws and metrics", c11_laws_and_metrics),
        ("Stirling asymptotics", c12_stirling),
    ];
    let mut unexpected = 0usize;
    let mut known = 0usize;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = match (v.pass, v.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("[{tag}] {:>2}. {name} ({secs:.1}s): {}", i + 1, v.detail);
        if !v.pass {
            if v.known {
                known += 1;
            } else {
                unexpected += 1;
            }
        }
    }
    println!(
        "acceptance: {} passed, {known} known failures, {unexpected} unexpected failures",
        criteria.len() - known - unexpected
    );
    if unexpected > 0 || (strict && known > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
