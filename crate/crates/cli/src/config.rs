//! Experiment configuration: a TOML file, validated as a whole.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dcw_core::annealed::{TestFunction, DEFAULT_N_GUARD};
use dcw_core::limits::{critical_line_c, predicted_limit, Regime};
use dcw_core::quenched::EXACT_GUARD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyExpansions,
    VerifyCombinatorics,
    AnnealedMean,
    AnnealedVariance,
    QuenchedExact,
    QuenchedMcmc,
    LimitsTable,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            Self::VerifyExpansions => "verify-expansions",
            Self::VerifyCombinatorics => "verify-combinatorics",
            Self::AnnealedMean => "annealed-mean",
            Self::AnnealedVariance => "annealed-variance",
            Self::QuenchedExact => "quenched-exact",
            Self::QuenchedMcmc => "quenched-mcmc",
            Self::LimitsTable => "limits-table",
        }
    }

    fn uses_grid(self) -> bool {
        matches!(
            self,
            Self::AnnealedMean | Self::AnnealedVariance | Self::QuenchedExact | Self::QuenchedMcmc
        )
    }
}

/// How `p` depends on `N` across the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum PRule {
    /// `p = value`
    Const { value: f64 },
    /// `p = scale * N^(-exponent)`
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `p = (c^2 N^3)^(-1/4)`, so that `(p^4 N^3)^(-1/2) = c`.
    CritLine { c: f64 },
}

fn one() -> f64 {
    1.0
}

impl PRule {
    pub fn eval(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            PRule::Const { value } => value,
            PRule::Power { exponent, scale } => scale * nf.powf(-exponent),
            PRule::CritLine { c } => (c * c * nf.powi(3)).powf(-0.25),
        }
    }
}

impl Default for PRule {
    fn default() -> Self {
        PRule::Const { value: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    HighTemp,
    CritDiverging,
    CritLine,
    CritVanishing,
}

impl RegimeTag {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "high_temp" => Some(Self::HighTemp),
            "crit_diverging" => Some(Self::CritDiverging),
            "crit_line" => Some(Self::CritLine),
            "crit_vanishing" => Some(Self::CritVanishing),
            _ => None,
        }
    }

    /// The regime of a grid cell. On the critical line `c` is taken from the
    /// cell's own `(N, p)`.
    pub fn at(self, n: usize, p: f64) -> Regime {
        match self {
            Self::HighTemp => Regime::HighTemp,
            Self::CritDiverging => Regime::CritDiverging,
            Self::CritLine => Regime::CritLine(critical_line_c(n, p)),
            Self::CritVanishing => Regime::CritVanishing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub p: PRule,
    #[serde(default)]
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    /// Defaults to `10 N` sweeps.
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "default_recorded")]
    pub recorded: usize,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
}

fn default_recorded() -> usize {
    10_000
}

fn default_thinning() -> usize {
    1
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            burn_in: None,
            recorded: default_recorded(),
            thinning: default_thinning(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawName {
    Gauss,
    Quartic,
    QuarticGauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub law: LawName,
    #[serde(default)]
    pub variance: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_from")]
    pub from: f64,
    #[serde(default = "default_to")]
    pub to: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_from() -> f64 {
    -5.0
}

fn default_to() -> f64 {
    5.0
}

fn default_points() -> usize {
    201
}

/// Assertions evaluated on the finished grid, per `beta`, along increasing `N`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// The tracked quantity must strictly decrease along `N`.
    #[serde(default)]
    pub trend: bool,
    /// Bound on the tracked quantity at the largest `N`.
    #[serde(default)]
    pub band: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    /// File name stem; defaults to the experiment kind.
    #[serde(default)]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub regime: Option<RegimeTag>,
    #[serde(default = "default_g")]
    pub g: String,
    #[serde(default)]
    pub replicas: Option<usize>,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub n_guard: Option<usize>,
    #[serde(default)]
    pub limits: Option<LimitsSection>,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_g() -> String {
    "gauss".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every problem found in a configuration, not just the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationError {
    pub errors: Vec<FieldError>,
}

impl ValidationError {
    pub fn single(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            errors: vec![FieldError {
                field: field.into(),
                message: message.into(),
            }],
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.errors {
            write!(f, "\n  {}: {}", e.field, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub regime: Regime,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: 0,
            grid: Grid::default(),
            regime: None,
            g: default_g(),
            replicas: None,
            chain: ChainSection::default(),
            n_guard: None,
            limits: None,
            check: CheckSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        toml::from_str(text).map_err(|e| ValidationError::single("config", e.to_string().trim_end()))
    }

    pub fn test_function(&self) -> TestFunction {
        TestFunction::parse(&self.g).unwrap_or(TestFunction::Gauss)
    }

    pub fn n_guard(&self) -> usize {
        self.n_guard.unwrap_or(DEFAULT_N_GUARD)
    }

    pub fn replicas(&self) -> usize {
        self.replicas.unwrap_or(100)
    }

    fn regime_tag(&self, beta: f64) -> Option<RegimeTag> {
        self.regime.or((beta < 1.0).then_some(RegimeTag::HighTemp))
    }

    /// Grid cells, `beta` outermost and `N` ascending within each `beta`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut ns = self.grid.n.clone();
        ns.sort_unstable();
        let mut out = Vec::new();
        for &beta in &self.grid.beta {
            let Some(tag) = self.regime_tag(beta) else { continue };
            for &n in &ns {
                let p = self.grid.p.eval(n);
                out.push(Cell {
                    n,
                    p,
                    beta,
                    regime: tag.at(n, p),
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut errors = Vec::new();
        let mut err = |field: &str, message: String| {
            errors.push(FieldError {
                field: field.into(),
                message,
            })
        };

        if self.kind.uses_grid() {
            if self.grid.n.is_empty() {
                err("grid.n", "must list at least one N".into());
            }
            if let Some(&bad) = self.grid.n.iter().find(|&&n| n == 0) {
                err("grid.n", format!("N = {bad} must be at least 1"));
            }
            if self.grid.beta.is_empty() {
                err("grid.beta", "must list at least one beta".into());
            }
            for &beta in &self.grid.beta {
                if !(beta >= 0.0) || !beta.is_finite() {
                    err("grid.beta", format!("beta = {beta} must be finite and nonnegative"));
                } else if beta > 1.0 {
                    err("grid.beta", format!("beta = {beta} > 1 is outside every supported regime"));
                } else {
                    match self.regime_tag(beta) {
                        None => err("regime", format!("beta = {beta} needs an explicit critical regime")),
                        Some(tag) => {
                            if let Err(e) = predicted_limit(beta, tag.at(1, 1.0)) {
                                err("regime", format!("beta = {beta}: {e}"));
                            }
                        }
                    }
                }
            }
            for &n in self.grid.n.iter().filter(|&&n| n > 0) {
                let p = self.grid.p.eval(n);
                if !(p > 0.0 && p <= 1.0) {
                    err("grid.p", format!("rule gives p = {p} at N = {n}, outside (0, 1]"));
                }
            }
            if TestFunction::parse(&self.g).is_none() {
                err("g", format!("unknown test function {:?}", self.g));
            }
        }

        let max_n = self.grid.n.iter().copied().max().unwrap_or(0);
        match self.kind {
            ExperimentKind::AnnealedVariance if max_n > self.n_guard() => err(
                "grid.n",
                format!(
                    "N = {max_n} exceeds the second-moment guard {} (about {:.1e} triple-sum terms); raise n_guard to run it",
                    self.n_guard(),
                    (max_n as f64).powi(3) / 8.0
                ),
            ),
            ExperimentKind::QuenchedExact if max_n > EXACT_GUARD => err(
                "grid.n",
                format!("N = {max_n} exceeds the exact-enumeration guard {EXACT_GUARD} (2^{max_n} configurations per replica)"),
            ),
            _ => {}
        }
        if matches!(self.kind, ExperimentKind::QuenchedExact | ExperimentKind::QuenchedMcmc) && self.replicas() == 0 {
            err("replicas", "must be at least 1".into());
        }
        if self.kind == ExperimentKind::QuenchedMcmc {
            if self.chain.recorded == 0 {
                err("chain.recorded", "must be at least 1".into());
            }
            if self.chain.thinning == 0 {
                err("chain.thinning", "must be at least 1".into());
            }
        }
        if self.kind == ExperimentKind::LimitsTable {
            match &self.limits {
                None => err("limits", "a limits-table experiment needs a [limits] section".into()),
                Some(l) => {
                    if !(l.from < l.to) {
                        err("limits.from", format!("{} is not below limits.to = {}", l.from, l.to));
                    }
                    if l.points < 2 {
                        err("limits.points", "must be at least 2".into());
                    }
                    match l.law {
                        LawName::Gauss if !l.variance.is_some_and(|v| v > 0.0) => {
                            err("limits.variance", "gauss needs a positive variance".into())
                        }
                        LawName::QuarticGauss if !l.c.is_some_and(|c| c > 0.0) => {
                            err("limits.c", "quartic_gauss needs a positive c".into())
                        }
                        _ => {}
                    }
                }
            }
        }
        if let Some(b) = self.check.band {
            if !(b >= 0.0) {
                err("check.band", format!("{b} must be nonnegative"));
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { errors })
        }
    }

    /// SHA-256 of the canonical JSON form (object keys sorted, no
    /// whitespace). The output section is excluded since it does not affect
    /// results.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output");
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
