//! Brute-force reference computations for tests.
//!
//! Everything here is deliberately naive: exhaustive enumeration over graphs
//! and spin configurations, exact integer counts and a fixed-panel Simpson
//! rule. Inputs are plain numbers and slices so nothing depends on the
//! library under test.

use std::collections::BTreeMap;

/// Every ordered pair `(i, j)` of `0..n`, in row-major order.
fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
}

/// `sum_{(i,j) in edges} s_i s_j`.
pub fn spin_sum(spins: &[i8], edges: &[(usize, usize)]) -> i64 {
    edges.iter().map(|&(i, j)| spins[i] as i64 * spins[j] as i64).sum()
}

/// Spins of configuration `mask`: bit `i` set means `s_i = +1`.
pub fn spins_of(n: usize, mask: u64) -> Vec<i8> {
    (0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect()
}

/// `T(sigma) = exp(gamma S - |E| log cosh gamma)` with `gamma = beta / (2 n p)`.
pub fn t_statistic(n: usize, p: f64, beta: f64, spins: &[i8], edges: &[(usize, usize)]) -> f64 {
    let gamma = beta / (2.0 * n as f64 * p);
    (gamma * spin_sum(spins, edges) as f64).exp() / gamma.cosh().powi(edges.len() as i32)
}

/// Calls `visit(probability, edges)` for each of the `2^{n^2}` graphs.
pub fn for_each_graph(n: usize, p: f64, mut visit: impl FnMut(f64, &[(usize, usize)])) {
    let all = pairs(n);
    assert!(all.len() <= 20, "graph enumeration is for tiny n only");
    let mut edges = Vec::with_capacity(all.len());
    for mask in 0u64..1 << all.len() {
        edges.clear();
        edges.extend(all.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e));
        let k = edges.len() as i32;
        let prob = p.powi(k) * (1.0 - p).powi(all.len() as i32 - k);
        visit(prob, &edges);
    }
}

/// `E T(sigma)` over the disorder.
pub fn expected_t(n: usize, p: f64, beta: f64, sigma: &[i8]) -> f64 {
    let mut acc = 0.0;
    for_each_graph(n, p, |w, e| acc += w * t_statistic(n, p, beta, sigma, e));
    acc
}

/// `E[T(sigma) T(tau)]` over the disorder.
pub fn expected_tt(n: usize, p: f64, beta: f64, sigma: &[i8], tau: &[i8]) -> f64 {
    let mut acc = 0.0;
    for_each_graph(n, p, |w, e| {
        acc += w * t_statistic(n, p, beta, sigma, e) * t_statistic(n, p, beta, tau, e)
    });
    acc
}

/// `(E Z, E Z^2)` for `Z = sum_sigma g(M(sigma) / scale) T(sigma)`.
pub fn annealed_moments(n: usize, p: f64, beta: f64, g: impl Fn(f64) -> f64, scale: f64) -> (f64, f64) {
    let configs: Vec<(Vec<i8>, f64)> = (0..1u64 << n)
        .map(|mask| {
            let s = spins_of(n, mask);
            let m: i64 = s.iter().map(|&v| v as i64).sum();
            (s, g(m as f64 / scale))
        })
        .collect();
    let (mut first, mut second) = (0.0, 0.0);
    for_each_graph(n, p, |w, e| {
        let z: f64 = configs.iter().map(|(s, gv)| gv * t_statistic(n, p, beta, s, e)).sum();
        first += w * z;
        second += w * z * z;
    });
    (first, second)
}

/// `C(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Number of pairs `(sigma, tau)` for each `(|sigma|, |tau|, |sigma tau|)`.
pub fn triple_counts(n: usize) -> BTreeMap<(i64, i64, i64), u64> {
    assert!(n <= 16);
    let full = (1u64 << n) - 1;
    let d = n + 1;
    let mut counts = vec![0u64; d * d * d];
    for a in 0..=full {
        let ua = a.count_ones() as usize;
        for b in 0..=full {
            // sigma_i tau_i = +1 exactly where the bits agree
            let um = (!(a ^ b) & full).count_ones() as usize;
            counts[(ua * d + b.count_ones() as usize) * d + um] += 1;
        }
    }
    let mag = |u: usize| 2 * u as i64 - n as i64;
    let mut out = BTreeMap::new();
    for (idx, &c) in counts.iter().enumerate() {
        if c > 0 {
            out.insert((mag(idx / (d * d)), mag(idx / d % d), mag(idx % d)), c);
        }
    }
    out
}

/// Gibbs law of the magnetization on a fixed graph:
/// weights `exp(beta / (2 n p) * S(sigma))` summed per `M`, normalized.
pub fn gibbs_magnetization_law(n: usize, p: f64, beta: f64, edges: &[(usize, usize)]) -> Vec<(i64, f64)> {
    let c = beta / (2.0 * n as f64 * p);
    let mut by_m = BTreeMap::<i64, f64>::new();
    let raw: Vec<(i64, f64)> = (0..1u64 << n)
        .map(|mask| {
            let s = spins_of(n, mask);
            (s.iter().map(|&v| v as i64).sum(), c * spin_sum(&s, edges) as f64)
        })
        .collect();
    let top = raw.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    for (m, e) in raw {
        *by_m.entry(m).or_default() += (e - top).exp();
    }
    let z: f64 = by_m.values().sum();
    by_m.into_iter().map(|(m, w)| (m, w / z)).collect()
}

/// Composite Simpson rule with `panels` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels.is_multiple_of(2) && panels > 0);
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Naive `log(1 - p + p exp(x z) / cosh(z)^m)`.
pub fn f_m(m: i32, x: f64, p: f64, z: f64) -> f64 {
    (1.0 - p + p * (x * z).exp() / z.cosh().powi(m)).ln()
}
