//! Disorder averages of the tilted partition sums
//! `Z(g) = sum_sigma g(|sigma| / scale) T(sigma)`.
//!
//! `E T(sigma)` depends on `sigma` only through its magnetization, so the
//! mean is an `O(N)` sum over magnetization classes and the second moment an
//! `O(N^3)` sum over `(|sigma|, |tau|, |sigma tau|)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::BinomialTable;
use crate::error::{Error, Result};
use crate::expansions::{coeffs_pair, coeffs_single, covariance_coeffs};
use crate::limits::{Regime, ScalingRule};
use crate::model::ModelParams;
use crate::numeric::{merge_pairwise, neumaier_sum, pairwise_sum, LogSumExp};
use crate::quadrature::{integrate, DEFAULT_ABS_TOL};

pub const DEFAULT_N_GUARD: usize = 400;

const PREDICTION_HALF_WIDTH: f64 = 30.0;

/// Bounded nonnegative test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `1`
    One,
    /// `exp(-x^2)`
    Gauss,
    /// `1 / (1 + x^2)`
    Lorentz,
    /// `exp(1 - 1 / (1 - x^2))` on `(-1, 1)`, zero outside.
    Bump,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [Self::One, Self::Gauss, Self::Lorentz, Self::Bump];

    pub fn id(self) -> &'static str {
        match self {
            Self::One => "one",
            Self::Gauss => "gauss",
            Self::Lorentz => "lorentz",
            Self::Bump => "bump",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.id() == s)
    }

    pub fn bound(self) -> f64 {
        1.0
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Gauss => (-x * x).exp(),
            Self::Lorentz => 1.0 / (1.0 + x * x),
            Self::Bump => {
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

/// `log E Z(g)`.
pub fn annealed_mean(params: &ModelParams, g: TestFunction, scale: ScalingRule) -> f64 {
    let n = params.n();
    let c = coeffs_single(params.p(), params.gamma());
    let s = scale.scale(n, params.p());
    let tab = BinomialTable::new(n);
    let n2 = (n as f64) * (n as f64);
    let mut acc = LogSumExp::new();
    let mut k = -(n as i64);
    while k <= n as i64 {
        let gv = g.eval(k as f64 / s);
        if gv > 0.0 {
            let kf = k as f64;
            acc.push(tab.log_count_single(k) + gv.ln() + n2 * c.a0 + c.a1 * kf * kf);
        }
        k += 2;
    }
    acc.value()
}

fn half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    integrate(f, 0.0, PREDICTION_HALF_WIDTH, DEFAULT_ABS_TOL, 4000).value
}

/// `int g(x) w(x) dx` over the real line for an even weight `w`.
fn weighted_integral<W: Fn(f64) -> f64>(g: TestFunction, w: W) -> f64 {
    half_line(|x| (g.eval(x) + g.eval(-x)) * w(x))
}

/// `log` of the leading-order prediction for `E Z(g)` in `regime`.
///
/// The critical-line prediction uses the `c` carried by the regime tag.
pub fn mean_prediction(params: &ModelParams, g: TestFunction, regime: Regime) -> Result<f64> {
    let beta = params.beta();
    if beta > 1.0 {
        return Err(Error::UnsupportedRegime(format!("beta = {beta} > 1")));
    }
    let n = params.n() as f64;
    let ln2n = n * std::f64::consts::LN_2;
    // e^{-1/8} / sqrt(2 pi)
    let log_crit_const = -0.125 - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mismatch = || {
        Err(Error::Usage(format!(
            "regime {} is inconsistent with beta = {beta}",
            regime.tag()
        )))
    };
    match regime {
        Regime::HighTemp => {
            if beta >= 1.0 {
                return mismatch();
            }
            let e = weighted_integral(g, |x| (-(1.0 - beta) * x * x / 2.0).exp())
                / (2.0 * std::f64::consts::PI).sqrt();
            Ok(ln2n - beta * beta / 8.0 + e.ln())
        }
        _ if beta < 1.0 => mismatch(),
        Regime::CritDiverging => {
            let i = weighted_integral(g, |x| (-x.powi(4) / 12.0).exp());
            Ok(ln2n + 0.25 * n.ln() + log_crit_const + i.ln())
        }
        Regime::CritLine(c) => {
            if !(c > 0.0) {
                return Err(crate::error::invalid("c", "must be positive"));
            }
            let i = weighted_integral(g, |x| (-c * x * x / 24.0 - x.powi(4) / 12.0).exp());
            Ok(ln2n + 0.25 * n.ln() + log_crit_const + i.ln())
        }
        Regime::CritVanishing => {
            let i = weighted_integral(g, |x| (-x * x / 24.0).exp());
            Ok(ln2n + (n * params.p()).ln() + log_crit_const + i.ln())
        }
    }
}

/// `E Z(g)^2` together with the mean and the normalized variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    pub log_mean: f64,
    pub log_second: f64,
    /// `Var Z / (E Z)^2`.
    pub variance_ratio: f64,
}

fn guard(n: usize, n_guard: usize) -> Result<()> {
    if n > n_guard {
        let terms = (n as f64 + 1.0).powi(3) / 16.0;
        return Err(Error::Guard {
            what: "the annealed second moment",
            n,
            guard: n_guard,
            cost: format!("about {terms:.2e} triple-sum terms"),
        });
    }
    Ok(())
}

/// `log E Z(g)^2`.
pub fn annealed_second_moment(params: &ModelParams, g: TestFunction, scale: ScalingRule, n_guard: usize) -> Result<f64> {
    Ok(second_moment(params, g, scale, n_guard)?.log_second)
}

/// `Var Z(g) / (E Z(g))^2`.
pub fn variance_ratio(params: &ModelParams, g: TestFunction, scale: ScalingRule, n_guard: usize) -> Result<f64> {
    Ok(second_moment(params, g, scale, n_guard)?.variance_ratio)
}

/// Triple sum over `(|sigma|, |tau|, |sigma tau|)`.
///
/// With `q` the weight of a triple in `(E Z)^2` (normalized to sum to 1) and
/// `Delta = N^2 c0 + c1 (k^2 + l^2) + c12 m^2` the log of
/// `E[T T] / (E T E T)`, the variance ratio is `sum q expm1(Delta)`, which
/// avoids subtracting two nearly equal second moments.
///
/// The summand depends on `(k, l)` only through `{|k|, |l|}`, so the sum
/// runs over `0 <= |l| <= |k|` with the sign-summed test function
/// `G(K) = g(K / s) + g(-K / s)` (`g(0)` at `K = 0`) and multiplicity 2 off
/// the diagonal. Slices over `|k|` run in parallel and are reduced pairwise
/// in a fixed order; results can differ at the 1e-13 level across thread
/// counts.
pub fn second_moment(params: &ModelParams, g: TestFunction, scale: ScalingRule, n_guard: usize) -> Result<SecondMoment> {
    let n = params.n();
    guard(n, n_guard)?;
    let (p, gamma) = (params.p(), params.gamma());
    let a = coeffs_single(p, gamma);
    let b = coeffs_pair(p, gamma);
    let cv = covariance_coeffs(p, gamma);
    let s = scale.scale(n, p);
    let tab = BinomialTable::new(n);
    let ni = n as i64;
    let n2 = (n as f64) * (n as f64);
    let log_mean = annealed_mean(params, g, scale);

    let ks: Vec<i64> = (0..=ni).filter(|k| (k + ni) % 2 == 0).collect();
    let log_g: Vec<f64> = ks
        .iter()
        .map(|&k| {
            let x = k as f64 / s;
            let v = if k == 0 { g.eval(0.0) } else { g.eval(x) + g.eval(-x) };
            v.ln()
        })
        .collect();

    let slices: Vec<(LogSumExp, f64)> = (0..ks.len())
        .into_par_iter()
        .map(|ik| {
            let k = ks[ik];
            let mut lse = LogSumExp::new();
            let mut var_terms = Vec::new();
            if log_g[ik] == f64::NEG_INFINITY {
                return (lse, 0.0);
            }
            for il in 0..=ik {
                if log_g[il] == f64::NEG_INFINITY {
                    continue;
                }
                let l = ks[il];
                let (kf, lf) = (k as f64, l as f64);
                let kl2 = kf * kf + lf * lf;
                let mult = if il < ik { std::f64::consts::LN_2 } else { 0.0 };
                let base = mult + log_g[ik] + log_g[il];
                let second_base = base + n2 * b.b0 + b.b1 * kl2;
                let q_base = base + 2.0 * n2 * a.a0 + a.a1 * kl2 - 2.0 * log_mean;
                let delta_base = n2 * cv.c0 + cv.c1 * kl2;
                let ua = (ni + k) / 2;
                let ub = (ni + l) / 2;
                let x_lo = (ub - (ni - ua)).max(0);
                let x_hi = ua.min(ub);
                let mut slice = Vec::with_capacity((x_hi - x_lo + 1).max(0) as usize);
                for x in x_lo..=x_hi {
                    let lnu = tab.log_count_triple_x(k, l, x);
                    let m = (4 * x - ni - k - l) as f64;
                    let m2 = m * m;
                    lse.push(second_base + lnu + b.b12 * m2);
                    let lq = q_base + lnu;
                    let d = delta_base + cv.c12 * m2;
                    slice.push(if d > 30.0 {
                        (lq + d).exp() - lq.exp()
                    } else {
                        lq.exp() * d.exp_m1()
                    });
                }
                var_terms.push(neumaier_sum(slice));
            }
            (lse, neumaier_sum(var_terms))
        })
        .collect();

    let lses: Vec<LogSumExp> = slices.iter().map(|s| s.0).collect();
    let vars: Vec<f64> = slices.iter().map(|s| s.1).collect();
    let log_second = merge_pairwise(&lses).value();
    let ratio = pairwise_sum(&vars);
    if ratio < -1e-9 {
        return Err(Error::Internal(format!("negative variance ratio {ratio:e}")));
    }
    Ok(SecondMoment {
        log_mean,
        log_second,
        variance_ratio: ratio.max(0.0),
    })
}
