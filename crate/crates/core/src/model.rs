//! The disorder (a directed Erdos-Renyi graph with loops), spin
//! configurations, the Hamiltonian and the tilted statistic `T`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{invalid, Error, Result};
use crate::numeric::ln_cosh;

/// Edge probability at or above which graphs are stored as a dense bit matrix.
pub const DEFAULT_DENSE_THRESHOLD: f64 = 0.05;

/// `(N, p, beta)` together with the derived coupling `gamma = beta / (2 N p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    p: f64,
    beta: f64,
    gamma: f64,
}

impl ModelParams {
    pub fn new(n: usize, p: f64, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N", "must be at least 1"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid("p", format!("{p} is not in (0, 1]")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("{beta} is not a finite nonnegative number")));
        }
        let gamma = beta / (2.0 * n as f64 * p);
        Ok(Self { n, p, beta, gamma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `1 / (2 N p)`, the prefactor of the Hamiltonian.
    pub fn coupling(&self) -> f64 {
        1.0 / (2.0 * self.n as f64 * self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Adjacency {
    /// Row-major bit matrix, `words` u64 words per row.
    Dense { words: usize, bits: Vec<u64> },
    /// Sorted out-neighbour lists.
    Sparse { out: Vec<Vec<u32>> },
}

/// One realization of the edge indicators `eps[i][j]`, loops included.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderGraph {
    n: usize,
    p: f64,
    seed: u64,
    edge_count: usize,
    adj: Adjacency,
}

/// Sample a graph, storing it densely when `p >= DEFAULT_DENSE_THRESHOLD`.
pub fn sample_graph(params: &ModelParams, seed: u64) -> DisorderGraph {
    sample_graph_with_threshold(params, seed, DEFAULT_DENSE_THRESHOLD)
}

/// Sample a graph with an explicit dense/sparse threshold.
///
/// The edge set only depends on `(N, p, seed)`: the `N^2` ordered pairs are
/// visited in row-major order and the gaps between present pairs are drawn
/// from a geometric distribution, so the threshold changes the storage and
/// nothing else.
pub fn sample_graph_with_threshold(params: &ModelParams, seed: u64, dense_threshold: f64) -> DisorderGraph {
    let n = params.n();
    let p = params.p();
    let total = (n as u64) * (n as u64);
    let mut linear = Vec::new();
    if p >= 1.0 {
        linear.extend(0..total);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gap = Geometric::new(p).expect("p validated in (0, 1)");
        let mut pos = 0u64;
        loop {
            let skip = gap.sample(&mut rng);
            pos = match pos.checked_add(skip) {
                Some(v) if v < total => v,
                _ => break,
            };
            linear.push(pos);
            pos += 1;
        }
    }
    DisorderGraph::from_sorted_linear(n, p, seed, &linear, p >= dense_threshold)
}

impl DisorderGraph {
    fn from_sorted_linear(n: usize, p: f64, seed: u64, linear: &[u64], dense: bool) -> Self {
        let adj = if dense {
            let words = n.div_ceil(64);
            let mut bits = vec![0u64; words * n];
            for &l in linear {
                let (i, j) = ((l / n as u64) as usize, (l % n as u64) as usize);
                bits[i * words + j / 64] |= 1 << (j % 64);
            }
            Adjacency::Dense { words, bits }
        } else {
            let mut out = vec![Vec::new(); n];
            for &l in linear {
                out[(l / n as u64) as usize].push((l % n as u64) as u32);
            }
            Adjacency::Sparse { out }
        };
        Self {
            n,
            p,
            seed,
            edge_count: linear.len(),
            adj,
        }
    }

    /// Build a graph from an explicit edge list (duplicates are rejected).
    pub fn from_edges(n: usize, p: f64, seed: u64, edges: &[(usize, usize)]) -> Result<Self> {
        let mut linear = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Usage(format!("edge ({i}, {j}) out of range for N = {n}")));
            }
            linear.push((i * n + j) as u64);
        }
        linear.sort_unstable();
        if linear.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Usage("duplicate ordered pair in edge list".into()));
        }
        Ok(Self::from_sorted_linear(n, p, seed, &linear, p >= DEFAULT_DENSE_THRESHOLD))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.adj, Adjacency::Dense { .. })
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        match &self.adj {
            Adjacency::Dense { words, bits } => bits[i * words + j / 64] >> (j % 64) & 1 == 1,
            Adjacency::Sparse { out } => out[i].binary_search(&(j as u32)).is_ok(),
        }
    }

    /// Out-neighbours of `i` in increasing order.
    pub fn out_neighbors(&self, i: usize) -> Box<dyn Iterator<Item = usize> + '_> {
        match &self.adj {
            Adjacency::Dense { words, bits } => {
                let row = &bits[i * words..(i + 1) * words];
                Box::new(row.iter().enumerate().flat_map(|(w, &word)| {
                    let mut rest = word;
                    std::iter::from_fn(move || {
                        if rest == 0 {
                            return None;
                        }
                        let b = rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        Some(w * 64 + b)
                    })
                }))
            }
            Adjacency::Sparse { out } => Box::new(out[i].iter().map(|&j| j as usize)),
        }
    }

    /// All ordered pairs, sorted lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.out_neighbors(i).map(move |j| (i, j)))
    }

    pub fn loop_count(&self) -> usize {
        (0..self.n).filter(|&i| self.contains(i, i)).count()
    }

    /// Symmetrized off-diagonal couplings: for each `i`, the pairs
    /// `(j, eps[i][j] + eps[j][i])` with `j != i` and a nonzero weight.
    pub fn couplings(&self) -> Vec<Vec<(u32, u8)>> {
        let mut w: Vec<Vec<(u32, u8)>> = vec![Vec::new(); self.n];
        for (i, j) in self.edges() {
            if i != j {
                w[i].push((j as u32, 1));
                w[j].push((i as u32, 1));
            }
        }
        for row in &mut w {
            row.sort_unstable_by_key(|&(j, _)| j);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        w
    }

    /// `sum_{i,j} eps[i][j] sigma_i sigma_j`.
    pub fn spin_sum(&self, sigma: &SpinConfig) -> Result<i64> {
        check_len(self.n, sigma.len())?;
        let s = sigma.spins();
        let mut total = 0i64;
        for i in 0..self.n {
            let row: i64 = self.out_neighbors(i).map(|j| s[j] as i64).sum();
            total += s[i] as i64 * row;
        }
        Ok(total)
    }

    /// Text export: `N p seed` on the first line, then one `i j` per line,
    /// 0-based and lexicographically sorted.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.p, self.seed);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    /// Inverse of [`DisorderGraph::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Usage("empty graph file".into()))?;
        let parse_err = |what: &str| Error::Usage(format!("malformed graph file: {what}"));
        let mut h = header.split_whitespace();
        let n: usize = h.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("N"))?;
        let p: f64 = h.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("p"))?;
        let seed: u64 = h.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("seed"))?;
        let mut edges = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut t = line.split_whitespace();
            let i = t.next().and_then(|x| x.parse().ok()).ok_or_else(|| parse_err(line))?;
            let j = t.next().and_then(|x| x.parse().ok()).ok_or_else(|| parse_err(line))?;
            edges.push((i, j));
        }
        Self::from_edges(n, p, seed, &edges)
    }
}

/// A configuration in `{-1, +1}^N` with its cached total magnetization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    spins: Vec<i8>,
    m: i64,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Usage(format!("spin value {bad} is not +1 or -1")));
        }
        let m = spins.iter().map(|&s| s as i64).sum();
        Ok(Self { spins, m })
    }

    pub fn all_up(n: usize) -> Self {
        Self {
            spins: vec![1; n],
            m: n as i64,
        }
    }

    /// Bit `i` of `mask` set means `sigma_i = +1`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let spins: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
        let m = 2 * (mask & mask_of(n)).count_ones() as i64 - n as i64;
        Self { spins, m }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// `|sigma| = sum_i sigma_i`.
    pub fn magnetization(&self) -> i64 {
        self.m
    }

    pub fn flipped(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|&s| -s).collect(),
            m: -self.m,
        }
    }
}

fn mask_of(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `H(sigma) = -(1 / (2 N p)) sum_{i,j} eps[i][j] sigma_i sigma_j`.
pub fn hamiltonian(graph: &DisorderGraph, sigma: &SpinConfig, params: &ModelParams) -> Result<f64> {
    check_len(params.n(), graph.n())?;
    let s = graph.spin_sum(sigma)?;
    Ok(-(s as f64) * params.coupling())
}

/// `log T(sigma) = gamma * sum eps sigma sigma - log cosh(gamma) * #edges`.
pub fn log_t_statistic(graph: &DisorderGraph, sigma: &SpinConfig, params: &ModelParams) -> Result<f64> {
    check_len(params.n(), graph.n())?;
    let s = graph.spin_sum(sigma)?;
    let g = params.gamma();
    Ok(g * s as f64 - ln_cosh(g) * graph.edge_count() as f64)
}

/// `|sigma tau| = sum_i sigma_i tau_i`.
pub fn overlap(sigma: &SpinConfig, tau: &SpinConfig) -> Result<i64> {
    check_len(sigma.len(), tau.len())?;
    Ok(sigma
        .spins()
        .iter()
        .zip(tau.spins())
        .map(|(&a, &b)| (a * b) as i64)
        .sum())
}
