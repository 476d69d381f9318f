//! The functions `F_m(x, p, z) = log(1 - p + p exp(x z - m log cosh z))`,
//! the linearization coefficients of `F_1` and `F_2` on the lattice points
//! that spin products can take, and the exact disorder averages of `T` and
//! `T T` built from them.
//!
//! With `t = tanh(gamma)` the coefficients have closed forms:
//!
//! ```text
//! a1  = atanh(p t)                     a0 = log(1 - p^2 t^2) / 2
//! b1  = log((1 + 2pt + pt^2) / (1 - 2pt + pt^2)) / 4
//! b12 = log1p(4 p (1-p) t^2 / (1 - p t^2)^2) / 4
//! b0  = log(1 - p t^2) + b12
//! ```
//!
//! They follow from `exp(+-gamma) / cosh(gamma) = 1 +- t` and are evaluated
//! without the cancellation that the defining half-sums suffer for small
//! `gamma`.

use astro_float::{BigFloat, Consts, RoundingMode};

use crate::combinatorics::count_triple;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::{ln_cosh, ols_slope};

/// `F_m(x, p, z)`.
pub fn eval_f(m: i32, x: f64, p: f64, z: f64) -> Result<f64> {
    if p == 0.0 {
        return Ok(0.0);
    }
    let u = x * z - m as f64 * ln_cosh(z);
    if u > 30.0 {
        // log(p e^u (1 + (1-p) e^{-u} / p))
        let inner = p + (1.0 - p) * (-u).exp();
        if inner <= 0.0 {
            return Err(Error::Domain(format!("F_{m}({x}, {p}, {z}): nonpositive argument")));
        }
        return Ok(u + inner.ln());
    }
    let shift = p * u.exp_m1();
    if shift <= -1.0 || shift.is_nan() {
        return Err(Error::Domain(format!("F_{m}({x}, {p}, {z}): nonpositive argument")));
    }
    Ok(shift.ln_1p())
}

/// `f(x) = F_1(x, p, gamma) = a0 + a1 x` for `x = +-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleCoeffs {
    pub a0: f64,
    pub a1: f64,
}

/// `g(x1 + x2) = F_2(x1 + x2, p, gamma) = b0 + b1 x1 + b2 x2 + b12 x1 x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
}

/// Exponent of `E[T T] / (E[T] E[T])`: `N^2 c0 + c1 (k^2 + l^2) + c12 m^2`.
///
/// Every coefficient carries a factor `p (1 - p)` and vanishes at `p = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceCoeffs {
    pub c0: f64,
    pub c1: f64,
    pub c12: f64,
}

pub fn coeffs_single(p: f64, gamma: f64) -> SingleCoeffs {
    let pt = p * gamma.abs().tanh();
    SingleCoeffs {
        a0: 0.5 * (-pt * pt).ln_1p(),
        a1: pt.atanh().copysign(gamma),
    }
}

/// The same coefficients from their definition as half-sums of `F_1`.
pub fn coeffs_single_from_definition(p: f64, gamma: f64) -> Result<SingleCoeffs> {
    let fp = eval_f(1, 1.0, p, gamma)?;
    let fm = eval_f(1, 1.0, p, -gamma)?;
    Ok(SingleCoeffs {
        a0: 0.5 * (fp + fm),
        a1: 0.5 * (fp - fm),
    })
}

pub fn coeffs_pair(p: f64, gamma: f64) -> PairCoeffs {
    let t = gamma.abs().tanh();
    let pt2 = p * t * t;
    let b1 = (0.25 * ((2.0 * p * t + pt2).ln_1p() - (-2.0 * p * t + pt2).ln_1p())).copysign(gamma);
    let b12 = pair_b12(p, t);
    PairCoeffs {
        b0: (-pt2).ln_1p() + b12,
        b1,
        b2: b1,
        b12,
    }
}

fn pair_b12(p: f64, t: f64) -> f64 {
    let d = 1.0 - p * t * t;
    0.25 * (4.0 * p * (1.0 - p) * t * t / (d * d)).ln_1p()
}

/// The pair coefficients by solving the 4x4 system for `g(2), g(0), g(0), g(-2)`.
pub fn coeffs_pair_from_definition(p: f64, gamma: f64) -> Result<PairCoeffs> {
    let g2 = eval_f(2, 2.0, p, gamma)?;
    let gm2 = eval_f(2, -2.0, p, gamma)?;
    let g0 = eval_f(2, 0.0, p, gamma)?;
    let b1 = 0.25 * (g2 - gm2);
    Ok(PairCoeffs {
        b0: 0.25 * (g2 + gm2 + 2.0 * g0),
        b1,
        b2: b1,
        b12: 0.25 * (g2 + gm2 - 2.0 * g0),
    })
}

pub fn covariance_coeffs(p: f64, gamma: f64) -> CovarianceCoeffs {
    let t = gamma.tanh();
    let q = p * (1.0 - p) * t * t;
    let b12 = pair_b12(p, t);
    let pt = p * t;
    CovarianceCoeffs {
        c0: (-q / (1.0 - pt * pt)).ln_1p() + b12,
        c1: 0.25 * ((q / ((1.0 + pt) * (1.0 + pt))).ln_1p() - (q / ((1.0 - pt) * (1.0 - pt))).ln_1p()),
        c12: b12,
    }
}

pub(crate) fn check_magnetization(n: usize, m: i64) -> Result<()> {
    if m.unsigned_abs() as usize > n || (m + n as i64).rem_euclid(2) != 0 {
        return Err(Error::Usage(format!("magnetization {m} is not attainable for N = {n}")));
    }
    Ok(())
}

/// `log E[T(sigma)] = N^2 a0 + a1 M^2` for any `sigma` with `|sigma| = M`.
pub fn expected_t_closed(params: &ModelParams, m: i64) -> Result<f64> {
    let c = coeffs_single(params.p(), params.gamma());
    expected_t_with(&c, params.n(), m)
}

/// As [`expected_t_closed`] with explicit coefficients.
pub fn expected_t_with(c: &SingleCoeffs, n: usize, m: i64) -> Result<f64> {
    check_magnetization(n, m)?;
    let n2 = (n * n) as f64;
    Ok(n2 * c.a0 + c.a1 * (m * m) as f64)
}

/// `log E[T(sigma) T(tau)] = N^2 b0 + b1 (M_s^2 + M_t^2) + b12 M_st^2`.
pub fn expected_pair_closed(params: &ModelParams, m_sigma: i64, m_tau: i64, m_overlap: i64) -> Result<f64> {
    let n = params.n();
    if !count_triple(n, m_sigma, m_tau, m_overlap).is_realizable() {
        return Err(Error::Usage(format!(
            "(|sigma|, |tau|, |sigma tau|) = ({m_sigma}, {m_tau}, {m_overlap}) is not realizable for N = {n}"
        )));
    }
    let b = coeffs_pair(params.p(), params.gamma());
    let n2 = (n * n) as f64;
    let sq = |v: i64| (v * v) as f64;
    Ok(n2 * b.b0 + b.b1 * (sq(m_sigma) + sq(m_tau)) + b.b12 * sq(m_overlap))
}

/// The five expansion identities for combinations of `F_1` and `F_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionId {
    /// `F1(1,p,z) + F1(1,p,-z) = -p^2 tanh^2 z + O(p^3 z^4)`
    A1,
    /// `F1(1,p,z) - F1(1,p,-z) = 2 p tanh z + O(p^2 z^3)`
    A2,
    /// `F2(2,p,z) - F2(2,p,-z) = 4 p tanh z + O(p^2 z^3)`
    A3,
    /// `F2(2,p,z) + F2(2,p,-z) - 2 F2(0,p,z) = 4 p (1-p) tanh^2 z + O(p^3 z^3)`
    A4,
    /// `F2(2,p,z) + F2(2,p,-z) + 2 F2(0,p,z) = -4 p^2 z^2 + O(p^2 z^4)`
    A5,
}

impl ExpansionId {
    pub const ALL: [ExpansionId; 5] = [Self::A1, Self::A2, Self::A3, Self::A4, Self::A5];

    pub fn label(self) -> &'static str {
        match self {
            Self::A1 => "f1A",
            Self::A2 => "f6A",
            Self::A3 => "f7A",
            Self::A4 => "f8A",
            Self::A5 => "f3A",
        }
    }

    /// Exponents `(in z, in p)` of the stated remainder.
    pub fn stated_orders(self) -> (f64, f64) {
        match self {
            Self::A1 => (4.0, 3.0),
            Self::A2 => (3.0, 2.0),
            Self::A3 => (3.0, 2.0),
            Self::A4 => (3.0, 3.0),
            Self::A5 => (4.0, 2.0),
        }
    }

    /// Exponents of the actual leading remainder term. They agree with
    /// [`stated_orders`](Self::stated_orders) except for `A4`, whose `z^3`
    /// term cancels because both sides are even in `z`: the remainder is
    /// `8 p^3 (1-p) z^4 + ...`.
    pub fn remainder_orders(self) -> (f64, f64) {
        match self {
            Self::A4 => (4.0, 3.0),
            other => other.stated_orders(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.label().eq_ignore_ascii_case(s) || format!("{id:?}").eq_ignore_ascii_case(s))
    }
}

const EXT_PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

/// Extended-precision evaluation context for the expansion residuals.
struct Ext {
    cc: Consts,
}

impl Ext {
    fn new() -> Self {
        Self {
            cc: Consts::new().expect("constant cache"),
        }
    }

    fn num(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, EXT_PREC)
    }

    fn f_m(&mut self, m: f64, x: f64, p: &BigFloat, z: &BigFloat) -> BigFloat {
        let lc = z.cosh(EXT_PREC, RM, &mut self.cc).ln(EXT_PREC, RM, &mut self.cc);
        let u = self
            .num(x)
            .mul(z, EXT_PREC, RM)
            .sub(&self.num(m).mul(&lc, EXT_PREC, RM), EXT_PREC, RM);
        let e = u.exp(EXT_PREC, RM, &mut self.cc);
        let one = self.num(1.0);
        one.sub(p, EXT_PREC, RM)
            .add(&p.mul(&e, EXT_PREC, RM), EXT_PREC, RM)
            .ln(EXT_PREC, RM, &mut self.cc)
    }

    /// Returns `(lhs, lhs - leading)`.
    fn residual(&mut self, id: ExpansionId, p: f64, z: f64) -> (BigFloat, BigFloat) {
        let pb = self.num(p);
        let zb = self.num(z);
        let mz = zb.neg();
        let th = zb.tanh(EXT_PREC, RM, &mut self.cc);
        let th2 = th.mul(&th, EXT_PREC, RM);
        let p2 = pb.mul(&pb, EXT_PREC, RM);
        let (lhs, lead) = match id {
            ExpansionId::A1 => {
                let l = self.f_m(1.0, 1.0, &pb, &zb).add(&self.f_m(1.0, 1.0, &pb, &mz), EXT_PREC, RM);
                (l, p2.mul(&th2, EXT_PREC, RM).neg())
            }
            ExpansionId::A2 => {
                let l = self.f_m(1.0, 1.0, &pb, &zb).sub(&self.f_m(1.0, 1.0, &pb, &mz), EXT_PREC, RM);
                (l, self.num(2.0 * p).mul(&th, EXT_PREC, RM))
            }
            ExpansionId::A3 => {
                let l = self.f_m(2.0, 2.0, &pb, &zb).sub(&self.f_m(2.0, 2.0, &pb, &mz), EXT_PREC, RM);
                (l, self.num(4.0 * p).mul(&th, EXT_PREC, RM))
            }
            ExpansionId::A4 => {
                let f0 = self.f_m(2.0, 0.0, &pb, &zb);
                let l = self
                    .f_m(2.0, 2.0, &pb, &zb)
                    .add(&self.f_m(2.0, 2.0, &pb, &mz), EXT_PREC, RM)
                    .sub(&self.num(2.0).mul(&f0, EXT_PREC, RM), EXT_PREC, RM);
                let q = self.num(4.0).mul(&pb, EXT_PREC, RM).mul(&self.num(1.0).sub(&pb, EXT_PREC, RM), EXT_PREC, RM);
                (l, q.mul(&th2, EXT_PREC, RM))
            }
            ExpansionId::A5 => {
                let f0 = self.f_m(2.0, 0.0, &pb, &zb);
                let l = self
                    .f_m(2.0, 2.0, &pb, &zb)
                    .add(&self.f_m(2.0, 2.0, &pb, &mz), EXT_PREC, RM)
                    .add(&self.num(2.0).mul(&f0, EXT_PREC, RM), EXT_PREC, RM);
                let z2 = zb.mul(&zb, EXT_PREC, RM);
                (l, self.num(-4.0).mul(&p2, EXT_PREC, RM).mul(&z2, EXT_PREC, RM))
            }
        };
        let res = lhs.sub(&lead, EXT_PREC, RM);
        (lhs, res)
    }

    fn ln_abs(&mut self, v: &BigFloat) -> f64 {
        if v.is_zero() {
            return f64::NEG_INFINITY;
        }
        let l = v.abs().ln(EXT_PREC, RM, &mut self.cc);
        to_f64(&l)
    }
}

fn to_f64(v: &BigFloat) -> f64 {
    v.to_string().parse().unwrap_or(f64::NAN)
}

/// `log |LHS - leading term|` of an expansion identity, evaluated in
/// 256-bit arithmetic. Minus infinity when the residual is exactly zero.
pub fn log_abs_residual(id: ExpansionId, p: f64, z: f64) -> f64 {
    let mut ext = Ext::new();
    let (_, r) = ext.residual(id, p, z);
    ext.ln_abs(&r)
}

/// Fitted orders of an expansion remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFit {
    pub id: ExpansionId,
    /// Least-squares slope of `log|residual|` against `log z` at fixed `p`.
    pub z_order: f64,
    /// Least-squares slope of `log|residual|` against `log p` at fixed `z`.
    pub p_order: f64,
    pub p_fixed: f64,
    pub z_fixed: f64,
    /// The residual vanished to working precision at every grid point.
    pub exact_within_noise: bool,
}

/// `z in {2^-4, ..., 2^-16}`.
pub fn default_z_grid() -> Vec<f64> {
    (4..=16).map(|k| 2f64.powi(-k)).collect()
}

/// `p in {2^-1, ..., 2^-8}`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=8).map(|k| 2f64.powi(-k)).collect()
}

fn middle(v: &[f64]) -> &[f64] {
    let drop = v.len() / 4;
    &v[drop..v.len() - drop]
}

/// Fit the remainder orders of `id`.
///
/// The slopes use the middle half of each grid. The `z` fit holds `p` at
/// the median of `p_grid`; the `p` fit holds `z` at the median of `z_grid`.
pub fn residual_order(id: ExpansionId, p_grid: &[f64], z_grid: &[f64]) -> Result<ResidualFit> {
    if p_grid.len() < 3 || z_grid.len() < 3 {
        return Err(Error::Usage("residual fits need at least 3 grid points per axis".into()));
    }
    if z_grid.iter().any(|&z| !(z > 0.0 && z <= 1.0 / 16.0)) {
        return Err(Error::Usage("z grid must lie in (0, 1/16]".into()));
    }
    if p_grid.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::Usage("p grid must lie in (0, 1]".into()));
    }
    let mut ext = Ext::new();
    let p_fixed = p_grid[p_grid.len() / 2];
    let z_fixed = z_grid[z_grid.len() / 2];
    // Residuals this far below |lhs| are at the working precision.
    let noise = (EXT_PREC as f64 - 16.0) * std::f64::consts::LN_2;
    let mut degenerate = true;
    let mut sample = |p: f64, z: f64, ext: &mut Ext| -> f64 {
        let (lhs, r) = ext.residual(id, p, z);
        let lr = ext.ln_abs(&r);
        let ll = ext.ln_abs(&lhs);
        if lr > ll - noise {
            degenerate = false;
        }
        lr
    };
    let zs = middle(z_grid);
    let ys: Vec<f64> = zs.iter().map(|&z| sample(p_fixed, z, &mut ext)).collect();
    let xs: Vec<f64> = zs.iter().map(|z| z.ln()).collect();
    let z_order = ols_slope(&xs, &ys);
    let ps = middle(p_grid);
    let ys: Vec<f64> = ps.iter().map(|&p| sample(p, z_fixed, &mut ext)).collect();
    let xs: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let p_order = ols_slope(&xs, &ys);
    Ok(ResidualFit {
        id,
        z_order,
        p_order,
        p_fixed,
        z_fixed,
        exact_within_noise: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_at_zero_coupling() {
        for m in [0, 1, 2] {
            for x in [-2.0, 0.0, 1.0] {
                for p in [0.0, 0.3, 1.0] {
                    assert_eq!(eval_f(m, x, p, 0.0).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn f_collapses_at_p_one() {
        for z in [0.01, 0.4, 2.0] {
            let v = eval_f(1, 1.0, 1.0, z).unwrap();
            assert!((v - (z - z.cosh().ln())).abs() < 1e-15);
        }
    }

    #[test]
    fn f_against_truncated_series() {
        let (p, z) = (0.3, 1e-3);
        let series = p * z - p * p / 2.0 * z * z;
        assert!((eval_f(1, 1.0, p, z).unwrap() - series).abs() < 1e-10);
    }

    #[test]
    fn f_domain_error() {
        // p = 3 and a large negative exponent: 1 - 3 + 3 e^u < 0.
        assert!(matches!(eval_f(1, -1.0, 3.0, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn f_symmetry() {
        for &(m, x, p, z) in &[(1, 1.0, 0.4, 0.2), (2, 2.0, 0.9, 0.05), (2, 0.0, 0.1, 0.7)] {
            assert_eq!(eval_f(m, x, p, z).unwrap(), eval_f(m, -x, p, -z).unwrap());
        }
    }

    #[test]
    fn single_coeffs_special_cases() {
        let g = 0.37;
        let c = coeffs_single(1.0, g);
        assert!((c.a0 + g.cosh().ln()).abs() < 1e-15);
        assert!((c.a1 - g).abs() < 1e-15);
        assert_eq!(coeffs_single(0.4, 0.0), SingleCoeffs { a0: 0.0, a1: 0.0 });
    }

    #[test]
    fn closed_forms_match_definitions() {
        for &p in &[0.05, 0.3, 0.5, 0.97, 1.0] {
            for &g in &[1e-4, 0.01, 0.2, 0.9] {
                let c = coeffs_single(p, g);
                let d = coeffs_single_from_definition(p, g).unwrap();
                assert!((c.a0 - d.a0).abs() < 1e-14, "a0 p={p} g={g}");
                assert!((c.a1 - d.a1).abs() < 1e-14, "a1 p={p} g={g}");
                let b = coeffs_pair(p, g);
                let e = coeffs_pair_from_definition(p, g).unwrap();
                for (x, y) in [(b.b0, e.b0), (b.b1, e.b1), (b.b12, e.b12)] {
                    assert!((x - y).abs() < 1e-14, "pair p={p} g={g}: {x} vs {y}");
                }
                assert_eq!(b.b1, b.b2);
                let cv = covariance_coeffs(p, g);
                assert!((cv.c0 - (b.b0 - 2.0 * c.a0)).abs() < 1e-14);
                assert!((cv.c1 - (b.b1 - c.a1)).abs() < 1e-14);
                assert_eq!(cv.c12, b.b12);
            }
        }
    }

    #[test]
    fn pair_system_reproduces_g() {
        for &(p, g) in &[(0.4, 0.3), (0.9, 0.01), (0.2, 1.1)] {
            let b = coeffs_pair(p, g);
            let g2 = eval_f(2, 2.0, p, g).unwrap();
            let g0 = eval_f(2, 0.0, p, g).unwrap();
            let gm2 = eval_f(2, -2.0, p, g).unwrap();
            assert!((b.b0 + b.b1 + b.b2 + b.b12 - g2).abs() < 1e-13);
            assert!((b.b0 + b.b1 - b.b2 - b.b12 - g0).abs() < 1e-13);
            assert!((b.b0 - b.b1 + b.b2 - b.b12 - g0).abs() < 1e-13);
            assert!((b.b0 - b.b1 - b.b2 + b.b12 - gm2).abs() < 1e-13);
        }
        let zero = coeffs_pair(0.6, 0.0);
        assert_eq!((zero.b0, zero.b1, zero.b12), (0.0, 0.0, 0.0));
    }

    #[test]
    fn covariance_vanishes_at_p_one() {
        let c = covariance_coeffs(1.0, 0.013);
        assert_eq!((c.c0, c.c1, c.c12), (0.0, 0.0, 0.0));
    }

    #[test]
    fn expected_t_parity() {
        let m = ModelParams::new(4, 0.5, 0.5).unwrap();
        assert!(expected_t_closed(&m, 1).is_err());
        assert!(expected_t_closed(&m, 6).is_err());
        assert!(expected_t_closed(&m, -4).is_ok());
    }

    #[test]
    fn expected_t_full_graph() {
        let m = ModelParams::new(6, 1.0, 0.9).unwrap();
        let g = m.gamma();
        for k in [-6i64, -2, 0, 4] {
            let direct = g * (k * k) as f64 - 36.0 * g.cosh().ln();
            assert!((expected_t_closed(&m, k).unwrap() - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn pair_with_itself_is_doubled_statistic() {
        // sigma == tau: T(sigma)^2 has disorder average exp(sum g(2 sigma_i sigma_j)).
        let m = ModelParams::new(5, 0.35, 0.8).unwrap();
        let (p, g) = (m.p(), m.gamma());
        for k in [-5i64, -1, 3] {
            let pairs_plus = ((25 + k * k) / 2) as f64;
            let pairs_minus = 25.0 - pairs_plus;
            let direct = pairs_plus * eval_f(2, 2.0, p, g).unwrap() + pairs_minus * eval_f(2, -2.0, p, g).unwrap();
            let closed = expected_pair_closed(&m, k, k, 5).unwrap();
            assert!((closed - direct).abs() < 1e-13, "{closed} vs {direct}");
        }
    }

    #[test]
    fn unrealizable_triple_rejected() {
        let m = ModelParams::new(2, 0.5, 0.5).unwrap();
        assert!(expected_pair_closed(&m, 0, 0, 0).is_err());
        assert!(expected_pair_closed(&m, 0, 0, 2).is_ok());
    }

    #[test]
    fn labels_parse() {
        for id in ExpansionId::ALL {
            assert_eq!(ExpansionId::parse(id.label()), Some(id));
        }
        assert_eq!(ExpansionId::parse("a4"), Some(ExpansionId::A4));
        assert_eq!(ExpansionId::parse("nope"), None);
    }

    #[test]
    fn extended_residual_agrees_with_f64_where_f64_is_accurate() {
        // At moderate z the f64 path is accurate to many digits.
        let (p, z) = (0.5, 0.25);
        let lhs = eval_f(1, 1.0, p, z).unwrap() - eval_f(1, 1.0, p, -z).unwrap();
        let res = lhs - 2.0 * p * z.tanh();
        assert!((log_abs_residual(ExpansionId::A2, p, z) - res.abs().ln()).abs() < 1e-8);
    }
}
