//! Magnetization counts and the entropy function of the binomial.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, ln_factorial_table};

/// `I(x) = (1-x)/2 log(1-x) + (1+x)/2 log(1+x)` on `[-1, 1]`.
pub fn entropy_i(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain(format!("I({x}) is defined on [-1, 1] only")));
    }
    let half = |u: f64| if u == 0.0 { 0.0 } else { 0.5 * u * u.ln() };
    let a = x.abs();
    // a atanh(a) + log(1 - a^2) / 2 loses at most a factor 2 to cancellation
    Ok(if a < 0.5 {
        a * a.atanh() + 0.5 * (-a * a).ln_1p()
    } else {
        half(1.0 + a) + half(1.0 - a)
    })
}

/// Taylor coefficient `d_i` of `I` at 0.
pub fn taylor_coeff(i: u32) -> Result<f64> {
    if i < 2 {
        return Err(Error::Usage(format!("Taylor coefficients start at i = 2, got {i}")));
    }
    Ok(if i % 2 == 1 { 0.0 } else { 1.0 / (i as f64 * (i as f64 - 1.0)) })
}

fn admissible(n: usize, k: i64) -> bool {
    k.unsigned_abs() as usize <= n && (k + n as i64).rem_euclid(2) == 0
}

/// `log nu_N(k)`: the number of configurations of magnetization `k`.
pub fn log_count_single(n: usize, k: i64) -> f64 {
    if !admissible(n, k) {
        return f64::NEG_INFINITY;
    }
    ln_binomial(n as i64, (n as i64 + k) / 2)
}

/// Number of pairs `(sigma, tau)` with `|sigma| = k`, `|tau| = l`, `|sigma tau| = m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleCount {
    pub n: usize,
    pub k: i64,
    pub l: i64,
    pub m: i64,
    pub log_count: f64,
}

impl TripleCount {
    pub fn is_realizable(&self) -> bool {
        self.log_count > f64::NEG_INFINITY
    }
}

/// Indices `(a, b, x)` of a triple: `a` up spins of `sigma`, `b` of `tau`,
/// `x` sites up in both. `None` when the triple is empty.
fn triple_split(n: usize, k: i64, l: i64, m: i64) -> Option<(i64, i64, i64)> {
    if !(admissible(n, k) && admissible(n, l) && admissible(n, m)) {
        return None;
    }
    let ni = n as i64;
    let s = ni + k + l + m;
    if s.rem_euclid(4) != 0 {
        return None;
    }
    let (a, b, x) = ((ni + k) / 2, (ni + l) / 2, s / 4);
    if x < 0 || x > a || b - x < 0 || b - x > ni - a {
        return None;
    }
    Some((a, b, x))
}

pub fn count_triple(n: usize, k: i64, l: i64, m: i64) -> TripleCount {
    let log_count = match triple_split(n, k, l, m) {
        Some((a, b, x)) => {
            let ni = n as i64;
            ln_binomial(ni, a) + ln_binomial(a, x) + ln_binomial(ni - a, b - x)
        }
        None => f64::NEG_INFINITY,
    };
    TripleCount { n, k, l, m, log_count }
}

/// Log binomials for a fixed `N` from a factorial table.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    n: usize,
    lf: Vec<f64>,
}

impl BinomialTable {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            lf: ln_factorial_table(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `log C(a, b)` for `0 <= a <= N`; minus infinity outside `0 <= b <= a`.
    #[inline]
    pub fn ln_binom(&self, a: i64, b: i64) -> f64 {
        if b < 0 || b > a {
            return f64::NEG_INFINITY;
        }
        self.lf[a as usize] - self.lf[b as usize] - self.lf[(a - b) as usize]
    }

    #[inline]
    pub fn log_count_single(&self, k: i64) -> f64 {
        if !admissible(self.n, k) {
            return f64::NEG_INFINITY;
        }
        self.ln_binom(self.n as i64, (self.n as i64 + k) / 2)
    }

    /// `log nu_N(k, l, m)` with `m` given through `x`, the number of sites up
    /// in both configurations: `m = 4x - N - k - l`.
    #[inline]
    pub fn log_count_triple_x(&self, k: i64, l: i64, x: i64) -> f64 {
        let ni = self.n as i64;
        let a = (ni + k) / 2;
        let b = (ni + l) / 2;
        self.ln_binom(ni, a) + self.ln_binom(a, x) + self.ln_binom(ni - a, b - x)
    }

    pub fn log_count_triple(&self, k: i64, l: i64, m: i64) -> f64 {
        match triple_split(self.n, k, l, m) {
            Some((_, _, x)) => self.log_count_triple_x(k, l, x),
            None => f64::NEG_INFINITY,
        }
    }
}

/// `lambda_N(k) = log(((N+1)^2 - k^2) / N^2) / 2`.
pub fn lambda_n(n: usize, k: i64) -> Result<f64> {
    if k.unsigned_abs() as usize > n || n == 0 {
        return Err(Error::Domain(format!("lambda_N(k) needs |k| <= N, got N = {n}, k = {k}")));
    }
    let nf = n as f64;
    let kf = k as f64;
    Ok(0.5 * (((nf + 1.0) * (nf + 1.0) - kf * kf) / (nf * nf)).ln())
}

/// `N log 2 + log sqrt(2 / (pi N)) - N I(k/N)`: the Stirling approximation
/// of `log C(N, (N+k)/2)` on the parity lattice, whose spacing of 2 gives
/// the factor `2 / sqrt(2 pi N)`.
pub fn stirling_log_binomial(n: usize, k: i64) -> f64 {
    let nf = n as f64;
    nf * std::f64::consts::LN_2 + 0.5 * (2.0 / (std::f64::consts::PI * nf)).ln()
        - nf * entropy_i(k as f64 / nf).unwrap_or(f64::NAN)
}

fn gap_over_window(n: usize, k_window: usize, with_lambda: bool) -> Result<f64> {
    if k_window > n {
        return Err(Error::Usage(format!("k_window {k_window} exceeds N = {n}")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let tab = BinomialTable::new(n);
    let start = -(k_window as i64);
    let gap = (start..=k_window as i64)
        .filter(|&k| admissible(n, k))
        .map(|k| {
            let mut approx = stirling_log_binomial(n, k);
            if with_lambda {
                approx -= lambda_n(n, k).unwrap_or(0.0);
            }
            (tab.log_count_single(k) - approx).abs()
        })
        .fold(0.0, f64::max);
    Ok(gap)
}

/// Largest deviation of `log C(N, (N+k)/2)` from its Stirling approximation
/// over admissible `|k| <= k_window`.
pub fn stirling_gap(n: usize, k_window: usize) -> Result<f64> {
    gap_over_window(n, k_window, false)
}

/// As [`stirling_gap`], with the `-lambda_N(k)` correction included in the
/// approximation.
pub fn stirling_gap_with_lambda(n: usize, k_window: usize) -> Result<f64> {
    gap_over_window(n, k_window, true)
}

/// Extremal ratios `C(N, (N+k)/2) / (N^{-1/2} 2^N e^{-N I(k/N) - lambda_N(k)})`
/// over `1 <= N <= n_max` and admissible `|k| <= N`, as `(min, max)`.
pub fn crude_bound_constants(n_max: usize) -> (f64, f64) {
    let lf = ln_factorial_table(n_max);
    let (lo, hi) = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let nf = n as f64;
            let base = -0.5 * nf.ln() + nf * std::f64::consts::LN_2;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut k = -(n as i64);
            while k <= n as i64 {
                let a = ((n as i64 + k) / 2) as usize;
                let lb = lf[n] - lf[a] - lf[n - a];
                let approx = base - nf * entropy_i(k as f64 / nf).unwrap() - lambda_n(n, k).unwrap();
                let r = lb - approx;
                lo = lo.min(r);
                hi = hi.max(r);
                k += 2;
            }
            (lo, hi)
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    (lo.exp(), hi.exp())
}

/// Smallest `C` with `2^{-N} nu_N(k) <= C N^{-1/2} e^{-k^2 / (2N)}` for all
/// `k` and every `N` in `ns`.
pub fn local_clt_constant(ns: &[usize]) -> f64 {
    ns.par_iter()
        .map(|&n| {
            let tab = BinomialTable::new(n);
            let nf = n as f64;
            let mut best = f64::NEG_INFINITY;
            let mut k = -(n as i64);
            while k <= n as i64 {
                let kf = k as f64;
                let v = tab.log_count_single(k) - nf * std::f64::consts::LN_2 + 0.5 * nf.ln() + kf * kf / (2.0 * nf);
                best = best.max(v);
                k += 2;
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
        .exp()
}
