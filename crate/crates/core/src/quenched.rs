//! Magnetization law under the Gibbs measure of a fixed disorder: exact
//! enumeration for small `N`, heat-bath dynamics otherwise, and replica
//! experiments against the predicted limit laws.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};

use crate::combinatorics::BinomialTable;
use crate::error::{invalid, Error, Result};
use crate::limits::{distance, predicted_limit, EmpiricalLaw, Metric, Regime, ScalingRule};
use crate::model::{sample_graph, DisorderGraph, ModelParams};
use crate::numeric::log_sum_exp;
use crate::seed::{split_seed, streams};

/// Largest `N` for which the Gibbs measure is enumerated.
pub const EXACT_GUARD: usize = 24;

/// Recorded samples below which a chain is flagged as too short.
pub const ESS_WARNING: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainConfig {
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Sweeps between recorded samples.
    pub thinning: usize,
    pub seed: u64,
}

impl ChainConfig {
    /// Burn-in of `10 N` sweeps on top of `recorded` sweeps, thinning 1.
    pub fn with_defaults(n: usize, recorded: usize, seed: u64) -> Self {
        Self {
            sweeps: 10 * n + recorded,
            burn_in: 10 * n,
            thinning: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.sweeps {
            return Err(invalid("burn_in", format!("{} is not below sweeps = {}", self.burn_in, self.sweeps)));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning", "must be at least 1"));
        }
        Ok(())
    }

    pub fn recorded(&self) -> usize {
        (self.sweeps - self.burn_in).div_ceil(self.thinning)
    }
}

/// `log` of the Gibbs weight of each magnetization `M = -N, -N+2, ..., N`
/// (unnormalized; minus infinity for unreachable `M`).
pub fn exact_log_weights(graph: &DisorderGraph, beta: f64) -> Result<Vec<f64>> {
    let n = graph.n();
    if n > EXACT_GUARD {
        return Err(Error::Guard {
            what: "exact enumeration",
            n,
            guard: EXACT_GUARD,
            cost: format!("2^{n} configurations"),
        });
    }
    let coupling = beta / (2.0 * n as f64 * graph.p());
    if graph.edge_count() == n * n {
        return Ok(complete_log_weights(n, beta));
    }
    let w = graph.couplings();
    // Off-diagonal spin sum S = sum_{i<j} w_ij s_i s_j lies in [-total, total].
    let total: i64 = w.iter().flatten().map(|&(_, x)| x as i64).sum::<i64>() / 2;
    let width = (2 * total + 1) as usize;
    let top_bits = n.min(6);
    let low_bits = n - top_bits;
    let counts: Vec<Vec<u64>> = (0..1u64 << top_bits)
        .into_par_iter()
        .map(|chunk| {
            let mut hist = vec![0u64; (n + 1) * width];
            let mut s: Vec<i64> = (0..n)
                .map(|i| if i >= low_bits && (chunk >> (i - low_bits)) & 1 == 1 { -1 } else { 1 })
                .collect();
            let mut field: Vec<i64> = w
                .iter()
                .map(|row| row.iter().map(|&(j, x)| x as i64 * s[j as usize]).sum())
                .collect();
            let mut spin_sum: i64 = (0..n).map(|i| s[i] * field[i]).sum::<i64>() / 2;
            let mut ups: usize = s.iter().filter(|&&v| v == 1).count();
            let mut record = |ups: usize, spin_sum: i64| {
                hist[ups * width + (spin_sum + total) as usize] += 1;
            };
            record(ups, spin_sum);
            for step in 1..1u64 << low_bits {
                let i = step.trailing_zeros() as usize;
                let old = s[i];
                spin_sum -= 2 * old * field[i];
                for &(j, x) in &w[i] {
                    field[j as usize] -= 2 * x as i64 * old;
                }
                s[i] = -old;
                if old == 1 {
                    ups -= 1;
                } else {
                    ups += 1;
                }
                record(ups, spin_sum);
            }
            hist
        })
        .collect();
    let mut hist = vec![0u64; (n + 1) * width];
    for h in &counts {
        for (a, b) in hist.iter_mut().zip(h) {
            *a += b;
        }
    }
    // Index by M = 2 ups - N.
    Ok((0..=n)
        .map(|ups| {
            log_sum_exp(
                hist[ups * width..(ups + 1) * width]
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(idx, &c)| (c as f64).ln() + coupling * (idx as i64 - total) as f64),
            )
        })
        .collect())
}

/// `log(nu_N(k) e^{beta k^2 / (2N)})` for `k = -N, -N+2, ..., N`.
fn complete_log_weights(n: usize, beta: f64) -> Vec<f64> {
    let tab = BinomialTable::new(n);
    (0..=n)
        .map(|ups| {
            let k = 2 * ups as i64 - n as i64;
            tab.log_count_single(k) + beta * (k * k) as f64 / (2.0 * n as f64)
        })
        .collect()
}

fn law_from_log_weights(n: usize, lw: &[f64], scale: f64) -> EmpiricalLaw {
    let z = log_sum_exp(lw.iter().copied());
    let atoms = lw
        .iter()
        .enumerate()
        .map(|(ups, &l)| ((2 * ups as i64 - n as i64) as f64 / scale, (l - z).exp()))
        .collect();
    EmpiricalLaw::new(atoms).expect("Gibbs weights form a law")
}

/// Law of `M / scale` under the Gibbs measure of `graph`.
pub fn exact_law(graph: &DisorderGraph, beta: f64, scale: ScalingRule) -> Result<EmpiricalLaw> {
    let lw = exact_log_weights(graph, beta)?;
    Ok(law_from_log_weights(graph.n(), &lw, scale.scale(graph.n(), graph.p())))
}

/// Law of `M / scale` on the complete graph, in `O(N)`.
pub fn complete_graph_law(n: usize, beta: f64, scale: ScalingRule) -> EmpiricalLaw {
    law_from_log_weights(n, &complete_log_weights(n, beta), scale.scale(n, 1.0))
}

/// Heat-bath dynamics in random site order; returns `M` after each recorded sweep.
pub fn glauber_chain(graph: &DisorderGraph, beta: f64, cfg: &ChainConfig) -> Result<Vec<i64>> {
    cfg.validate()?;
    let n = graph.n();
    let w = graph.couplings();
    let coupling = beta / (2.0 * n as f64 * graph.p());
    // Local fields are integers in [-2(N-1), 2(N-1)].
    let offset = 2 * n as i64;
    let p_up: Vec<f64> = (-offset..=offset)
        .map(|f| 1.0 / (1.0 + (-2.0 * coupling * f as f64).exp()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let mut m: i64 = s.iter().map(|&v| v as i64).sum();
    let mut order: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(cfg.recorded());
    for sweep in 0..cfg.sweeps {
        order.shuffle(&mut rng);
        for &i in &order {
            let f: i64 = w[i].iter().map(|&(j, x)| x as i64 * s[j as usize] as i64).sum();
            let new = if rng.random::<f64>() < p_up[(f + offset) as usize] { 1 } else { -1 };
            m += (new - s[i]) as i64;
            s[i] = new;
        }
        if sweep >= cfg.burn_in && (sweep - cfg.burn_in).is_multiple_of(cfg.thinning) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Gibbs probabilities of all `2^N` configurations, indexed by the bit mask
/// of up spins.
pub fn gibbs_weights(graph: &DisorderGraph, beta: f64) -> Result<Vec<f64>> {
    let n = graph.n();
    if n > 12 {
        return Err(Error::Guard {
            what: "the configuration-level Gibbs table",
            n,
            guard: 12,
            cost: format!("2^{n} entries"),
        });
    }
    let coupling = beta / (2.0 * n as f64 * graph.p());
    let lw: Vec<f64> = (0..1u64 << n)
        .map(|mask| {
            let s = crate::model::SpinConfig::from_mask(n, mask);
            coupling * graph.spin_sum(&s).expect("length matches") as f64
        })
        .collect();
    let z = log_sum_exp(lw.iter().copied());
    Ok(lw.iter().map(|l| (l - z).exp()).collect())
}

/// Transition matrix of one heat-bath update at a uniformly chosen site.
pub fn heat_bath_transition_matrix(graph: &DisorderGraph, beta: f64) -> Result<Vec<Vec<f64>>> {
    let n = graph.n();
    if n > 8 {
        return Err(Error::Guard {
            what: "the transition matrix",
            n,
            guard: 8,
            cost: format!("4^{n} entries"),
        });
    }
    let w = graph.couplings();
    let coupling = beta / (2.0 * n as f64 * graph.p());
    let size = 1usize << n;
    let mut mat = vec![vec![0.0; size]; size];
    for (from, row) in mat.iter_mut().enumerate() {
        let s = crate::model::SpinConfig::from_mask(n, from as u64);
        for i in 0..n {
            let f: i64 = w[i].iter().map(|&(j, x)| x as i64 * s.spins()[j as usize] as i64).sum();
            let up = 1.0 / (1.0 + (-2.0 * coupling * f as f64).exp());
            let mask_up = from | (1 << i);
            let mask_down = from & !(1 << i);
            row[mask_up] += up / n as f64;
            row[mask_down] += (1.0 - up) / n as f64;
        }
    }
    Ok(mat)
}

/// Effective sample size from the initial positive sequence estimate of the
/// integrated autocorrelation time.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return n as f64;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = autocov(0);
    if g0 <= 0.0 {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = autocov(lag) + autocov(lag + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        lag += 2;
    }
    let tau = (2.0 * sum - g0) / g0;
    (n as f64 / tau.max(1e-12)).min(n as f64 * 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaResult {
    pub seed: u64,
    pub levy: f64,
    pub ks: f64,
    pub m2: f64,
    pub m4: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quartiles {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut data = Data::new(values.to_vec());
        Self {
            median: data.median(),
            q1: data.lower_quartile(),
            q3: data.upper_quartile(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub median_levy: f64,
    pub q1_levy: f64,
    pub q3_levy: f64,
    pub median_ks: f64,
    pub q1_ks: f64,
    pub q3_ks: f64,
    pub median_m2: f64,
    pub median_m4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportParams {
    pub n: usize,
    pub p: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaReport {
    pub params: ReportParams,
    pub regime: Regime,
    pub method: Method,
    pub replicas: Vec<ReplicaResult>,
    pub aggregate: Aggregate,
    pub warnings: Vec<String>,
}

/// Distances between the scaled magnetization law of independent disorder
/// replicas and the predicted limit. Replica `r` uses graph seed
/// `split_seed(cfg.seed, r, GRAPH)` and chain seed `split_seed(cfg.seed, r, CHAIN)`.
pub fn quenched_levy_experiment(
    params: &ModelParams,
    regime: Regime,
    replicas: usize,
    method: Method,
    cfg: &ChainConfig,
) -> Result<ReplicaReport> {
    let (law, rule) = predicted_limit(params.beta(), regime)?;
    if replicas == 0 {
        return Err(invalid("replicas", "must be at least 1"));
    }
    match method {
        Method::Exact if params.n() > EXACT_GUARD => {
            return Err(Error::Guard {
                what: "exact enumeration",
                n: params.n(),
                guard: EXACT_GUARD,
                cost: format!("{replicas} x 2^{} configurations", params.n()),
            })
        }
        Method::Mcmc => cfg.validate()?,
        Method::Exact => {}
    }
    let results: Vec<Result<ReplicaResult>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let seed = split_seed(cfg.seed, r, streams::GRAPH);
            let graph = sample_graph(params, seed);
            let (emp, ess) = match method {
                Method::Exact => (exact_law(&graph, params.beta(), rule)?, None),
                Method::Mcmc => {
                    let chain_cfg = ChainConfig {
                        seed: split_seed(cfg.seed, r, streams::CHAIN),
                        ..*cfg
                    };
                    let ms = glauber_chain(&graph, params.beta(), &chain_cfg)?;
                    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
                    let ess = effective_sample_size(&xs);
                    let scale = rule.scale(params.n(), params.p());
                    let emp = EmpiricalLaw::from_samples(&xs)?.symmetrize().rescale(scale);
                    (emp, Some(ess))
                }
            };
            Ok(ReplicaResult {
                seed,
                levy: distance(Metric::Levy, &emp, &law)?,
                ks: distance(Metric::Ks, &emp, &law)?,
                m2: emp.moment(2),
                m4: emp.moment(4),
                ess,
            })
        })
        .collect();
    let replicas: Vec<ReplicaResult> = results.into_iter().collect::<Result<_>>()?;
    let col = |f: fn(&ReplicaResult) -> f64| replicas.iter().map(f).collect::<Vec<f64>>();
    let levy = Quartiles::of(&col(|r| r.levy));
    let ks = Quartiles::of(&col(|r| r.ks));
    let aggregate = Aggregate {
        median_levy: levy.median,
        q1_levy: levy.q1,
        q3_levy: levy.q3,
        median_ks: ks.median,
        q1_ks: ks.q1,
        q3_ks: ks.q3,
        median_m2: Quartiles::of(&col(|r| r.m2)).median,
        median_m4: Quartiles::of(&col(|r| r.m4)).median,
    };
    let warnings = replicas
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match r.ess {
            Some(e) if e < ESS_WARNING => Some(format!("replica {i}: effective sample size {e:.0} is below {ESS_WARNING}")),
            _ => None,
        })
        .collect();
    Ok(ReplicaReport {
        params: ReportParams {
            n: params.n(),
            p: params.p(),
            beta: params.beta(),
        },
        regime,
        method,
        replicas,
        aggregate,
        warnings,
    })
}
