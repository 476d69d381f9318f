//! Limit laws of the rescaled magnetization, and distances between laws.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gk15, integrate, DEFAULT_ABS_TOL};

/// Parameter regime of the magnetization limit theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HighTemp,
    /// `beta = 1`, `p^4 N^3 -> infinity`.
    CritDiverging,
    /// `beta = 1`, `p^4 N^3 -> 1 / c^2`.
    CritLine(f64),
    /// `beta = 1`, `p^4 N^3 -> 0`.
    CritVanishing,
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::HighTemp => "high_temp",
            Regime::CritDiverging => "crit_diverging",
            Regime::CritLine(_) => "crit_line",
            Regime::CritVanishing => "crit_vanishing",
        }
    }
}

/// How the magnetization is rescaled before comparing with the limit law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRule {
    /// `sqrt(N)`
    SqrtN,
    /// `N^{3/4}`
    N34,
    /// `sqrt(N^3 p^2)`
    N32p,
}

impl ScalingRule {
    pub fn scale(self, n: usize, p: f64) -> f64 {
        let nf = n as f64;
        match self {
            ScalingRule::SqrtN => nf.sqrt(),
            ScalingRule::N34 => nf.powf(0.75),
            ScalingRule::N32p => nf.powf(1.5) * p,
        }
    }
}

/// The finite-size critical-line parameter `c = (p^4 N^3)^{-1/2}`.
pub fn critical_line_c(n: usize, p: f64) -> f64 {
    1.0 / (p.powi(4) * (n as f64).powi(3)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LawKind {
    Gauss { variance: f64 },
    /// Density proportional to `exp(-x^4 / 12)`.
    Quartic,
    /// Density proportional to `exp(-c x^2 / 24 - x^4 / 12)`.
    QuarticGauss { c: f64 },
}

const TABLE_POINTS: usize = 100_001;
const BASE_HALF_WIDTH: f64 = 30.0;

#[derive(Debug)]
struct CdfTable {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

/// A symmetric limit law with cached normalization.
#[derive(Debug)]
pub struct LimitLaw {
    kind: LawKind,
    log_norm: f64,
    half_width: f64,
    table: OnceLock<CdfTable>,
}

impl Clone for LimitLaw {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind,
            log_norm: self.log_norm,
            half_width: self.half_width,
            table: OnceLock::new(),
        }
    }
}

impl PartialEq for LimitLaw {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn log_quartic_norm() -> f64 {
    // int exp(-x^4/12) dx = 2 * 12^{1/4} * Gamma(5/4)
    (2.0 * 12f64.powf(0.25) * statrs::function::gamma::gamma(1.25)).ln()
}

impl LimitLaw {
    pub fn new(kind: LawKind) -> Result<Self> {
        let mut half_width = BASE_HALF_WIDTH;
        match kind {
            LawKind::Gauss { variance } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(invalid("variance", "must be positive and finite"));
                }
                half_width = half_width.max(12.0 * variance.sqrt());
            }
            LawKind::QuarticGauss { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid("c", "must be positive and finite"));
                }
            }
            LawKind::Quartic => {}
        }
        let mut law = Self {
            kind,
            log_norm: 0.0,
            half_width,
            table: OnceLock::new(),
        };
        law.log_norm = match kind {
            LawKind::Gauss { variance } => 0.5 * (2.0 * std::f64::consts::PI * variance).ln(),
            LawKind::Quartic => log_quartic_norm(),
            LawKind::QuarticGauss { .. } => {
                let q = integrate(|x| law.unnormalized(x), 0.0, half_width, 1e-14, 4000);
                (2.0 * q.value).ln()
            }
        };
        let mass = 2.0 * integrate(|x| law.pdf(x), 0.0, half_width, DEFAULT_ABS_TOL, 4000).value;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Internal(format!("{kind:?}: density integrates to {mass}")));
        }
        Ok(law)
    }

    pub fn gauss(variance: f64) -> Result<Self> {
        Self::new(LawKind::Gauss { variance })
    }

    pub fn quartic() -> Self {
        Self::new(LawKind::Quartic).expect("quartic law")
    }

    pub fn quartic_gauss(c: f64) -> Result<Self> {
        Self::new(LawKind::QuarticGauss { c })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Half-width of the integration and tabulation domain.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn log_unnormalized(&self, x: f64) -> f64 {
        let x2 = x * x;
        match self.kind {
            LawKind::Gauss { variance } => -x2 / (2.0 * variance),
            LawKind::Quartic => -x2 * x2 / 12.0,
            LawKind::QuarticGauss { c } => -c * x2 / 24.0 - x2 * x2 / 12.0,
        }
    }

    fn unnormalized(&self, x: f64) -> f64 {
        self.log_unnormalized(x).exp()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (self.log_unnormalized(x) - self.log_norm).exp()
    }

    /// CDF by adaptive quadrature from the center.
    pub fn cdf(&self, x: f64) -> f64 {
        let a = x.abs().min(self.half_width);
        let half = integrate(|t| self.pdf(t), 0.0, a, DEFAULT_ABS_TOL, 4000).value;
        if x >= 0.0 {
            (0.5 + half).min(1.0)
        } else {
            (0.5 - half).max(0.0)
        }
    }

    pub fn moment(&self, order: u32) -> Result<f64> {
        if order > 8 {
            return Err(Error::Usage(format!("moments are supported up to order 8, got {order}")));
        }
        if order % 2 == 1 {
            return Ok(0.0);
        }
        if order == 0 {
            return Ok(1.0);
        }
        let k = order as i32;
        Ok(2.0 * integrate(|t| t.powi(k) * self.pdf(t), 0.0, self.half_width, DEFAULT_ABS_TOL, 4000).value)
    }

    fn table(&self) -> &CdfTable {
        self.table.get_or_init(|| {
            let lo = -self.half_width;
            let step = 2.0 * self.half_width / (TABLE_POINTS - 1) as f64;
            let mid = TABLE_POINTS / 2;
            let mut values = vec![0.0; TABLE_POINTS];
            values[mid] = 0.5;
            let f = |t: f64| self.pdf(t);
            let mut acc = 0.5;
            for j in mid + 1..TABLE_POINTS {
                let a = lo + (j - 1) as f64 * step;
                acc += gk15(&f, a, a + step).0;
                values[j] = acc.min(1.0);
            }
            for j in 0..mid {
                values[j] = (1.0 - values[TABLE_POINTS - 1 - j]).max(0.0);
            }
            CdfTable { lo, step, values }
        })
    }

    /// CDF from a precomputed table with linear interpolation.
    pub fn cdf_tabulated(&self, x: f64) -> f64 {
        let t = self.table();
        let u = (x - t.lo) / t.step;
        if u <= 0.0 {
            return 0.0;
        }
        if u >= (TABLE_POINTS - 1) as f64 {
            return 1.0;
        }
        let j = u.floor() as usize;
        let w = u - j as f64;
        t.values[j] * (1.0 - w) + t.values[j + 1] * w
    }

    fn grid(&self) -> Vec<f64> {
        let t = self.table();
        (0..TABLE_POINTS).map(|j| t.lo + j as f64 * t.step).collect()
    }
}

/// The limit law and the rescaling of the magnetization for `(beta, regime)`.
pub fn predicted_limit(beta: f64, regime: Regime) -> Result<(LimitLaw, ScalingRule)> {
    if beta > 1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "beta = {beta} > 1: the magnetization concentrates on two points"
        )));
    }
    match (beta < 1.0, regime) {
        (true, Regime::HighTemp) => Ok((LimitLaw::gauss(1.0 / (1.0 - beta))?, ScalingRule::SqrtN)),
        (false, Regime::CritDiverging) => Ok((LimitLaw::quartic(), ScalingRule::N34)),
        (false, Regime::CritLine(c)) => Ok((LimitLaw::quartic_gauss(c)?, ScalingRule::N34)),
        (false, Regime::CritVanishing) => Ok((LimitLaw::gauss(12.0)?, ScalingRule::N32p)),
        _ => Err(Error::Usage(format!(
            "regime {} does not apply at beta = {beta}",
            regime.tag()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawQuery {
    Pdf(f64),
    Cdf(f64),
    Moment(u32),
}

pub fn law_eval(law: &LimitLaw, what: LawQuery) -> Result<f64> {
    match what {
        LawQuery::Pdf(x) => Ok(law.pdf(x)),
        LawQuery::Cdf(x) => Ok(law.cdf(x)),
        LawQuery::Moment(k) => law.moment(k),
    }
}

/// A finitely supported law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    values: Vec<f64>,
    weights: Vec<f64>,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl EmpiricalLaw {
    /// Atoms in any order; equal values are merged, zero weights dropped,
    /// and the weights normalized.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(v, w)| !v.is_finite() || !(w >= 0.0) || !w.is_finite()) {
            return Err(invalid("atoms", "values must be finite and weights nonnegative"));
        }
        atoms.retain(|&(_, w)| w > 0.0);
        if atoms.is_empty() {
            return Err(invalid("atoms", "total weight must be positive"));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            if values.last() == Some(&v) {
                *weights.last_mut().unwrap() += w;
            } else {
                values.push(v);
                weights.push(w);
            }
        }
        let total = crate::numeric::neumaier_sum(weights.iter().copied());
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self::from_parts(values, weights))
    }

    fn from_parts(values: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Self { values, weights, cum }
    }

    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&x| (x, 1.0)).collect())
    }

    /// Average of the law and its reflection through 0.
    pub fn symmetrize(&self) -> Self {
        let atoms = self
            .values
            .iter()
            .zip(&self.weights)
            .flat_map(|(&v, &w)| [(v, 0.5 * w), (-v, 0.5 * w)])
            .collect();
        Self::new(atoms).expect("reflection of a valid law")
    }

    /// The law of `x / scale`.
    pub fn rescale(&self, scale: f64) -> Self {
        Self::from_parts(self.values.iter().map(|v| v / scale).collect(), self.weights.clone())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn moment(&self, order: u32) -> f64 {
        crate::numeric::neumaier_sum(self.atoms().map(|(v, w)| w * v.powi(order as i32)))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let j = self.values.partition_point(|&v| v <= x);
        if j == 0 {
            0.0
        } else {
            self.cum[j - 1]
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let j = self.values.partition_point(|&v| v < x);
        if j == 0 {
            0.0
        } else {
            self.cum[j - 1]
        }
    }
}

/// Either kind of law, as an argument to [`distance`].
#[derive(Debug, Clone, Copy)]
pub enum LawRef<'a> {
    Empirical(&'a EmpiricalLaw),
    Limit(&'a LimitLaw),
}

impl<'a> From<&'a EmpiricalLaw> for LawRef<'a> {
    fn from(l: &'a EmpiricalLaw) -> Self {
        LawRef::Empirical(l)
    }
}

impl<'a> From<&'a LimitLaw> for LawRef<'a> {
    fn from(l: &'a LimitLaw) -> Self {
        LawRef::Limit(l)
    }
}

impl LawRef<'_> {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            LawRef::Empirical(e) => e.cdf(x),
            LawRef::Limit(l) => l.cdf_tabulated(x),
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        match self {
            LawRef::Empirical(e) => e.cdf_left(x),
            LawRef::Limit(l) => l.cdf_tabulated(x),
        }
    }

    fn is_continuous(&self) -> bool {
        matches!(self, LawRef::Limit(_))
    }

    /// Points where the CDF may jump. A continuous law contributes its
    /// tabulation grid only when compared with another continuous law.
    fn breakpoints(&self, other_continuous: bool) -> Vec<f64> {
        match self {
            LawRef::Empirical(e) => e.values.clone(),
            LawRef::Limit(l) if other_continuous => l.grid(),
            LawRef::Limit(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Levy,
    Ks,
    Tv,
}

pub fn distance<'a, 'b>(metric: Metric, a: impl Into<LawRef<'a>>, b: impl Into<LawRef<'b>>) -> Result<f64> {
    let (a, b) = (a.into(), b.into());
    match metric {
        Metric::Levy => Ok(levy(a, b)),
        Metric::Ks => Ok(ks(a, b)),
        Metric::Tv => match (a, b) {
            (LawRef::Empirical(x), LawRef::Empirical(y)) => Ok(tv(x, y)),
            _ => Err(Error::Usage("total variation needs two discrete laws".into())),
        },
    }
}

fn ks(a: LawRef, b: LawRef) -> f64 {
    let both = a.is_continuous() && b.is_continuous();
    let mut pts = a.breakpoints(both);
    pts.extend(b.breakpoints(both));
    pts.iter()
        .map(|&t| {
            let right = (a.cdf(t) - b.cdf(t)).abs();
            let left = (a.cdf_left(t) - b.cdf_left(t)).abs();
            right.max(left)
        })
        .fold(0.0, f64::max)
}

fn tv(a: &EmpiricalLaw, b: &EmpiricalLaw) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut parts = Vec::with_capacity(a.values.len() + b.values.len());
    while i < a.values.len() || j < b.values.len() {
        let va = a.values.get(i).copied().unwrap_or(f64::INFINITY);
        let vb = b.values.get(j).copied().unwrap_or(f64::INFINITY);
        if va == vb {
            parts.push((a.weights[i] - b.weights[j]).abs());
            i += 1;
            j += 1;
        } else if va < vb {
            parts.push(a.weights[i]);
            i += 1;
        } else {
            parts.push(b.weights[j]);
            j += 1;
        }
    }
    0.5 * crate::numeric::neumaier_sum(parts)
}

const LEVY_TOL: f64 = 1e-12;

// Feasibility of eps in the Levy metric means
//   (A) F_b(t) - F_a(t + eps) <= eps   and   (B) F_a(t - eps) - F_b(t) <= eps
// for all t. On any interval where F_b is constant, the left side of (A) is
// nonincreasing in t, so its supremum sits at a jump of F_b; on an interval
// where t + eps avoids the jumps of F_a and F_b is continuous, it is
// nondecreasing, so the supremum is the left limit at a jump of F_a shifted
// by -eps. The same argument for (B) gives the jumps of F_b and the jumps of
// F_a shifted by +eps. Checking both sides of those finitely many points is
// therefore exact.
fn levy_feasible(a: LawRef, b: LawRef, ja: &[f64], jb: &[f64], eps: f64) -> bool {
    let slack = eps + 1e-15;
    let check_a = |t: f64| {
        b.cdf(t) - a.cdf(t + eps) <= slack && b.cdf_left(t) - a.cdf_left(t + eps) <= slack
    };
    let check_b = |t: f64| {
        a.cdf(t - eps) - b.cdf(t) <= slack && a.cdf_left(t - eps) - b.cdf_left(t) <= slack
    };
    jb.iter().all(|&t| check_a(t) && check_b(t)) && ja.iter().all(|&s| check_a(s - eps) && check_b(s + eps))
}

fn levy(a: LawRef, b: LawRef) -> f64 {
    let both = a.is_continuous() && b.is_continuous();
    let ja = a.breakpoints(both);
    let jb = b.breakpoints(both);
    if levy_feasible(a, b, &ja, &jb, 0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > LEVY_TOL {
        let mid = 0.5 * (lo + hi);
        if levy_feasible(a, b, &ja, &jb, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
