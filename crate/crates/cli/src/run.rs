//! Executes a validated configuration and writes its outputs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use dcw_core::annealed::{annealed_mean, mean_prediction, second_moment};
use dcw_core::limits::{predicted_limit, LimitLaw, ScalingRule};
use dcw_core::model::ModelParams;
use dcw_core::quenched::{quenched_levy_experiment, ChainConfig, Method, ReplicaReport};

use crate::config::{Cell, ExperimentConfig, ExperimentKind, LawName, ValidationError};
use crate::verify::{combinatorics_rows, expansion_rows, CombinatoricsRow, ExpansionRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out_dir: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug)]
pub enum RunError {
    Invalid(ValidationError),
    Model(dcw_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Invalid(e) => e.fmt(f),
            RunError::Model(e) => e.fmt(f),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ValidationError> for RunError {
    fn from(e: ValidationError) -> Self {
        RunError::Invalid(e)
    }
}

impl From<dcw_core::Error> for RunError {
    fn from(e: dcw_core::Error) -> Self {
        RunError::Model(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealedRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub g_id: String,
    pub scale: String,
    /// `log E Z` for the mean, `log E Z^2` for the variance.
    pub value_log: f64,
    /// The leading-order prediction of `log E Z` for the mean, `2 log E Z`
    /// for the variance.
    pub prediction_log: f64,
    /// `E Z / prediction` for the mean, `Var Z / (E Z)^2` for the variance.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub x: f64,
    pub pdf: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CellResult {
    Annealed(AnnealedRow),
    Quenched(ReplicaReport),
    Expansion(ExpansionRow),
    Combinatorics(CombinatoricsRow),
    Limit(LimitRow),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub kind: ExperimentKind,
    pub code_version: String,
    pub wall_time_secs: f64,
    pub cells: Vec<CellResult>,
    pub assertions: Vec<Assertion>,
    pub files: Vec<PathBuf>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

fn scale_id(rule: ScalingRule) -> &'static str {
    match rule {
        ScalingRule::SqrtN => "sqrt_n",
        ScalingRule::N34 => "n^3/4",
        ScalingRule::N32p => "n^3/2*p",
    }
}

fn annealed_row(cfg: &ExperimentConfig, cell: &Cell) -> Result<AnnealedRow, RunError> {
    let params = ModelParams::new(cell.n, cell.p, cell.beta)?;
    let g = cfg.test_function();
    let (_, rule) = predicted_limit(cell.beta, cell.regime)?;
    let base = AnnealedRow {
        n: cell.n,
        p: cell.p,
        beta: cell.beta,
        g_id: g.id().to_string(),
        scale: scale_id(rule).to_string(),
        value_log: 0.0,
        prediction_log: 0.0,
        ratio: 0.0,
    };
    if cfg.kind == ExperimentKind::AnnealedMean {
        let value = annealed_mean(&params, g, rule);
        let prediction = mean_prediction(&params, g, cell.regime)?;
        Ok(AnnealedRow {
            value_log: value,
            prediction_log: prediction,
            ratio: (value - prediction).exp(),
            ..base
        })
    } else {
        let sm = second_moment(&params, g, rule, cfg.n_guard())?;
        Ok(AnnealedRow {
            value_log: sm.log_second,
            prediction_log: 2.0 * sm.log_mean,
            ratio: sm.variance_ratio,
            ..base
        })
    }
}

fn quenched_report(cfg: &ExperimentConfig, cell: &Cell) -> Result<ReplicaReport, RunError> {
    let params = ModelParams::new(cell.n, cell.p, cell.beta)?;
    let method = if cfg.kind == ExperimentKind::QuenchedExact {
        Method::Exact
    } else {
        Method::Mcmc
    };
    let burn_in = cfg.chain.burn_in.unwrap_or(10 * cell.n);
    let chain = ChainConfig {
        sweeps: burn_in + cfg.chain.recorded * cfg.chain.thinning,
        burn_in,
        thinning: cfg.chain.thinning,
        seed: cfg.seed,
    };
    Ok(quenched_levy_experiment(&params, cell.regime, cfg.replicas(), method, &chain)?)
}

fn limit_rows(cfg: &ExperimentConfig) -> Result<Vec<LimitRow>, RunError> {
    let l = cfg.limits.expect("validated");
    let law = match l.law {
        LawName::Gauss => LimitLaw::gauss(l.variance.unwrap_or(1.0))?,
        LawName::Quartic => LimitLaw::quartic(),
        LawName::QuarticGauss => LimitLaw::quartic_gauss(l.c.unwrap_or(1.0))?,
    };
    let step = (l.to - l.from) / (l.points - 1) as f64;
    Ok((0..l.points)
        .map(|i| {
            let x = l.from + i as f64 * step;
            LimitRow {
                x,
                pdf: law.pdf(x),
                cdf: law.cdf(x),
            }
        })
        .collect())
}

/// The tracked quantity of a grid cell for trend and band assertions.
fn tracked(kind: ExperimentKind, cell: &CellResult) -> Option<f64> {
    match (kind, cell) {
        (ExperimentKind::AnnealedMean, CellResult::Annealed(r)) => Some((r.ratio - 1.0).abs()),
        (ExperimentKind::AnnealedVariance, CellResult::Annealed(r)) => Some(r.ratio),
        (_, CellResult::Quenched(r)) => Some(r.aggregate.median_levy),
        _ => None,
    }
}

fn grid_assertions(cfg: &ExperimentConfig, cells: &[Cell], results: &[CellResult]) -> Vec<Assertion> {
    let what = match cfg.kind {
        ExperimentKind::AnnealedMean => "|ratio - 1|",
        ExperimentKind::AnnealedVariance => "variance ratio",
        _ => "median Levy distance",
    };
    let mut out = Vec::new();
    let mut betas: Vec<f64> = cells.iter().map(|c| c.beta).collect();
    betas.dedup();
    for beta in betas {
        let series: Vec<(usize, f64)> = cells
            .iter()
            .zip(results)
            .filter(|(c, _)| c.beta == beta)
            .filter_map(|(c, r)| tracked(cfg.kind, r).map(|v| (c.n, v)))
            .collect();
        let values: Vec<f64> = series.iter().map(|s| s.1).collect();
        let listing = series.iter().map(|(n, v)| format!("N={n}: {v:.4e}")).collect::<Vec<_>>().join(", ");
        if cfg.check.trend {
            out.push(Assertion {
                name: format!("{what} strictly decreasing in N at beta={beta}"),
                pass: values.len() >= 2 && values.windows(2).all(|w| w[1] < w[0]),
                detail: listing.clone(),
            });
        }
        if let (Some(band), Some(&last)) = (cfg.check.band, values.last()) {
            out.push(Assertion {
                name: format!("{what} <= {band} at largest N, beta={beta}"),
                pass: last <= band,
                detail: format!("{last:.4e}"),
            });
        }
    }
    out
}

/// Runs every grid cell of a validated configuration and writes CSV and/or
/// JSON outputs. Cells run one after another; each cell parallelizes
/// internally.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    let cells = cfg.cells();
    let (results, assertions) = match cfg.kind {
        ExperimentKind::VerifyExpansions => {
            let rows = expansion_rows();
            let a = rows
                .iter()
                .map(|r| Assertion {
                    name: format!("{} remainder order", r.id),
                    pass: r.pass,
                    detail: format!("z^{:.3} p^{:.3}", r.z_order, r.p_order),
                })
                .collect();
            (rows.into_iter().map(CellResult::Expansion).collect(), a)
        }
        ExperimentKind::VerifyCombinatorics => {
            let rows = combinatorics_rows(12);
            let worst = rows.iter().map(|r| r.max_log_discrepancy).fold(0.0, f64::max);
            let a = vec![Assertion {
                name: "triple counts match enumeration, N=2..12".into(),
                pass: rows.iter().all(|r| r.pass),
                detail: format!("max log discrepancy {worst:.3e}"),
            }];
            (rows.into_iter().map(CellResult::Combinatorics).collect(), a)
        }
        ExperimentKind::AnnealedMean | ExperimentKind::AnnealedVariance => {
            let r: Vec<CellResult> = cells
                .iter()
                .map(|c| annealed_row(cfg, c).map(CellResult::Annealed))
                .collect::<Result<_, _>>()?;
            let a = grid_assertions(cfg, &cells, &r);
            (r, a)
        }
        ExperimentKind::QuenchedExact | ExperimentKind::QuenchedMcmc => {
            let r: Vec<CellResult> = cells
                .iter()
                .map(|c| quenched_report(cfg, c).map(CellResult::Quenched))
                .collect::<Result<_, _>>()?;
            let a = grid_assertions(cfg, &cells, &r);
            (r, a)
        }
        ExperimentKind::LimitsTable => (limit_rows(cfg)?.into_iter().map(CellResult::Limit).collect(), Vec::new()),
    };

    let mut record = RunRecord {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        kind: cfg.kind,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        cells: results,
        assertions,
        files: Vec::new(),
    };
    let dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let stem = cfg.output.stem.clone().unwrap_or_else(|| cfg.kind.id().to_string());
    std::fs::create_dir_all(&dir)?;
    if matches!(opts.format, Format::Csv | Format::Both) {
        let path = dir.join(format!("{stem}.csv"));
        std::fs::write(&path, render_csv(cfg, &record)?)?;
        record.files.push(path);
    }
    if matches!(opts.format, Format::Json | Format::Both) {
        let path = dir.join(format!("{stem}.json"));
        record.files.push(path.clone());
        write_json(&path, cfg, &record)?;
    }
    Ok(record)
}

pub fn header_line(cfg: &ExperimentConfig) -> String {
    format!(
        "dcw config_hash={} seed={} kind={} version={}",
        cfg.hash(),
        cfg.seed,
        cfg.kind.id(),
        env!("CARGO_PKG_VERSION")
    )
}

#[derive(Serialize)]
struct QuenchedCsvRow<'a> {
    #[serde(rename = "N")]
    n: usize,
    p: f64,
    beta: f64,
    regime: &'a str,
    method: &'a str,
    replica: usize,
    seed: u64,
    levy: f64,
    ks: f64,
    m2: f64,
    m4: f64,
    ess: Option<f64>,
}

/// CSV with a leading `# ...` header comment line. Contains no timing, so
/// identical configurations give identical bytes.
pub fn render_csv(cfg: &ExperimentConfig, record: &RunRecord) -> Result<Vec<u8>, RunError> {
    let mut buf = format!("# {}\n", header_line(cfg)).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for cell in &record.cells {
            match cell {
                CellResult::Annealed(r) => w.serialize(r)?,
                CellResult::Expansion(r) => w.serialize(r)?,
                CellResult::Combinatorics(r) => w.serialize(r)?,
                CellResult::Limit(r) => w.serialize(r)?,
                CellResult::Quenched(rep) => {
                    let method = match rep.method {
                        Method::Exact => "exact",
                        Method::Mcmc => "mcmc",
                    };
                    for (i, r) in rep.replicas.iter().enumerate() {
                        w.serialize(QuenchedCsvRow {
                            n: rep.params.n,
                            p: rep.params.p,
                            beta: rep.params.beta,
                            regime: rep.regime.tag(),
                            method,
                            replica: i,
                            seed: r.seed,
                            levy: r.levy,
                            ks: r.ks,
                            m2: r.m2,
                            m4: r.m4,
                            ess: r.ess,
                        })?
                    }
                }
            }
        }
        w.flush()?;
    }
    Ok(buf)
}

/// JSON has no comment syntax, so the header line is the first member.
fn write_json(path: &Path, cfg: &ExperimentConfig, record: &RunRecord) -> Result<(), RunError> {
    #[derive(Serialize)]
    struct Document<'a> {
        header: String,
        config: &'a ExperimentConfig,
        #[serde(flatten)]
        record: &'a RunRecord,
    }
    let doc = Document {
        header: header_line(cfg),
        config: cfg,
        record,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
