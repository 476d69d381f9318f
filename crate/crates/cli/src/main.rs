use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dcw_cli::config::{LawName, LimitsSection, PRule, RegimeTag};
use dcw_cli::{run_experiment, verify_suite_with, ExperimentConfig, ExperimentKind, Format, Level, Mutation, RunOptions, ValidationError};

const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Numerical laboratory for the dilute Curie-Weiss model.
#[derive(Parser)]
#[command(name = "dcw", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Falls back to DCW_OUT_DIR, then the config, then `results`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by --config.
    Run,
    #[command(subcommand)]
    Verify(VerifyCmd),
    #[command(subcommand)]
    Annealed(AnnealedCmd),
    #[command(subcommand)]
    Quenched(QuenchedCmd),
    #[command(subcommand)]
    Limits(LimitsCmd),
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Fitted remainder orders of the expansion identities.
    Expansions,
    /// Triple counts against exhaustive enumeration.
    Combinatorics,
    /// All exact-oracle checks at small N.
    Quick(SuiteArgs),
    /// Quick checks plus the large-N trend checks.
    Full(SuiteArgs),
}

#[derive(Args)]
struct SuiteArgs {
    /// Shift added to the coefficient a1 (mutation testing).
    #[arg(long, hide = true, default_value_t = 0.0)]
    perturb_a1: f64,
}

#[derive(Subcommand)]
enum AnnealedCmd {
    /// Annealed mean against its leading-order prediction.
    Mean(GridArgs),
    /// Annealed second moment and normalized variance.
    Variance(GridArgs),
}

#[derive(Subcommand)]
enum QuenchedCmd {
    /// Exact Gibbs laws by enumeration.
    Exact(QuenchedArgs),
    /// Gibbs laws sampled by heat-bath dynamics.
    Mcmc(QuenchedArgs),
}

#[derive(Subcommand)]
enum LimitsCmd {
    /// Density and distribution function of a limit law on a grid.
    Pdf(LimitArgs),
}

#[derive(Args)]
struct GridArgs {
    /// System sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Constant edge probability.
    #[arg(long, conflicts_with_all = ["p_exponent", "crit_c"])]
    p: Option<f64>,
    /// p = N^(-exponent).
    #[arg(long, conflicts_with = "crit_c")]
    p_exponent: Option<f64>,
    /// p on the critical line with this c.
    #[arg(long)]
    crit_c: Option<f64>,
    /// Inverse temperatures, comma separated.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Test function: one, gauss, lorentz or bump.
    #[arg(long)]
    g: Option<String>,
    /// high_temp, crit_diverging, crit_line or crit_vanishing.
    #[arg(long)]
    regime: Option<String>,
    /// Largest N allowed for the second-moment sum.
    #[arg(long)]
    n_guard: Option<usize>,
    /// Assert the tracked quantity decreases along N.
    #[arg(long)]
    trend: bool,
    /// Assert the tracked quantity is at most this at the largest N.
    #[arg(long)]
    band: Option<f64>,
}

#[derive(Args)]
struct QuenchedArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    recorded: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Gauss,
    Quartic,
    QuarticGauss,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    #[arg(long)]
    variance: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

fn load(cli: &Cli, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, ValidationError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ValidationError::single("config", format!("cannot read {}: {e}", path.display())))?;
            let cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(k) = kind.filter(|&k| k != cfg.kind) {
                return Err(ValidationError::single(
                    "kind",
                    format!("config is {} but the subcommand runs {}", cfg.kind.id(), k.id()),
                ));
            }
            cfg
        }
        None => match kind {
            Some(k) => ExperimentConfig::new(k),
            None => return Err(ValidationError::single("config", "`run` needs --config")),
        },
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn apply_grid(cfg: &mut ExperimentConfig, a: &GridArgs) -> Result<(), ValidationError> {
    if !a.n.is_empty() {
        cfg.grid.n = a.n.clone();
    }
    if !a.beta.is_empty() {
        cfg.grid.beta = a.beta.clone();
    }
    if let Some(value) = a.p {
        cfg.grid.p = PRule::Const { value };
    }
    if let Some(exponent) = a.p_exponent {
        cfg.grid.p = PRule::Power { exponent, scale: 1.0 };
    }
    if let Some(c) = a.crit_c {
        cfg.grid.p = PRule::CritLine { c };
    }
    if let Some(g) = &a.g {
        cfg.g = g.clone();
    }
    if let Some(r) = &a.regime {
        cfg.regime = Some(RegimeTag::parse(r).ok_or_else(|| ValidationError::single("regime", format!("unknown regime {r:?}")))?);
    }
    if a.n_guard.is_some() {
        cfg.n_guard = a.n_guard;
    }
    cfg.check.trend |= a.trend;
    if a.band.is_some() {
        cfg.check.band = a.band;
    }
    Ok(())
}

fn build(cli: &Cli) -> Result<Option<ExperimentConfig>, ValidationError> {
    let cfg = match &cli.command {
        Command::Run => load(cli, None)?,
        Command::Verify(VerifyCmd::Expansions) => load(cli, Some(ExperimentKind::VerifyExpansions))?,
        Command::Verify(VerifyCmd::Combinatorics) => load(cli, Some(ExperimentKind::VerifyCombinatorics))?,
        Command::Verify(_) => return Ok(None),
        Command::Annealed(cmd) => {
            let (kind, args) = match cmd {
                AnnealedCmd::Mean(a) => (ExperimentKind::AnnealedMean, a),
                AnnealedCmd::Variance(a) => (ExperimentKind::AnnealedVariance, a),
            };
            let mut cfg = load(cli, Some(kind))?;
            apply_grid(&mut cfg, args)?;
            cfg
        }
        Command::Quenched(cmd) => {
            let (kind, args) = match cmd {
                QuenchedCmd::Exact(a) => (ExperimentKind::QuenchedExact, a),
                QuenchedCmd::Mcmc(a) => (ExperimentKind::QuenchedMcmc, a),
            };
            let mut cfg = load(cli, Some(kind))?;
            apply_grid(&mut cfg, &args.grid)?;
            if args.replicas.is_some() {
                cfg.replicas = args.replicas;
            }
            if args.burn_in.is_some() {
                cfg.chain.burn_in = args.burn_in;
            }
            if let Some(r) = args.recorded {
                cfg.chain.recorded = r;
            }
            if let Some(t) = args.thinning {
                cfg.chain.thinning = t;
            }
            cfg
        }
        Command::Limits(LimitsCmd::Pdf(a)) => {
            let mut cfg = load(cli, Some(ExperimentKind::LimitsTable))?;
            let mut l = cfg.limits.unwrap_or(LimitsSection {
                law: LawName::Quartic,
                variance: None,
                c: None,
                from: -5.0,
                to: 5.0,
                points: 201,
            });
            if let Some(law) = a.law {
                l.law = match law {
                    LawArg::Gauss => LawName::Gauss,
                    LawArg::Quartic => LawName::Quartic,
                    LawArg::QuarticGauss => LawName::QuarticGauss,
                };
            }
            l.variance = a.variance.or(l.variance);
            l.c = a.c.or(l.c);
            l.from = a.from.unwrap_or(l.from);
            l.to = a.to.unwrap_or(l.to);
            l.points = a.points.unwrap_or(l.points);
            cfg.limits = Some(l);
            cfg
        }
    };
    Ok(Some(cfg))
}

fn run_suite(level: Level, perturb_a1: f64) -> ExitCode {
    let results = verify_suite_with(level, Mutation { a1_shift: perturb_a1 });
    let mut failed = 0;
    for r in &results {
        println!("[{}] {} ({:.2}s): {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.seconds, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("{} checks, {failed} failed", results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ASSERTION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    if let Command::Verify(VerifyCmd::Quick(a) | VerifyCmd::Full(a)) = &cli.command {
        let level = if matches!(cli.command, Command::Verify(VerifyCmd::Full(_))) {
            Level::Full
        } else {
            Level::Quick
        };
        return run_suite(level, a.perturb_a1);
    }
    let cfg = match build(&cli) {
        Ok(Some(cfg)) => cfg,
        Ok(None) => unreachable!("suites return above"),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let opts = RunOptions {
        out_dir: cli.out.clone().or_else(|| std::env::var_os("DCW_OUT_DIR").map(PathBuf::from)),
        format: cli.format,
    };
    match run_experiment(&cfg, &opts) {
        Ok(record) => {
            for a in &record.assertions {
                println!("[{}] {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            for f in &record.files {
                println!("wrote {}", f.display());
            }
            if record.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ASSERTION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
