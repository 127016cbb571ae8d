//! `acdep` command line: coefficients, the independence test, dominance
//! counts, variance oracles and the simulation harness.
//!
//! JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success, 1 a
//! failed self-check, 2 bad input, 3 degenerate data.

mod selfcheck;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acdep::experiments::{self, ExperimentConfig};
use acdep::simgen::SamplerSpec;
use acdep::{
    a_const, b_const, build_permutations, count_dominated, count_dominating, load_csv, population_oracle,
    sigma_sq_limit_with, t_ac, t_ac_cond, t_ac_naive, wald_test, CountMode, EstimatorOptions, PermScheme,
    PointSet, SampleMatrix, SeedSpec, Side,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "acdep", version, about = "Multivariate rank dependence coefficient and independence test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fast,
    Oracle,
}

impl From<Mode> for CountMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Fast => CountMode::Fast,
            Mode::Oracle => CountMode::Oracle,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dominance counting: dimension-specific fast path or pairwise oracle.
    #[arg(long, value_enum, default_value = "fast")]
    mode: Mode,
}

#[derive(Args)]
struct DataArgs {
    /// CSV with a header naming columns y1.., z1.. (and x1.. when conditioning).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dy: usize,
    #[arg(long)]
    dz: usize,
    #[arg(long, value_parser = ["cyclic", "random"], default_value = "cyclic")]
    perm: String,
    /// Z-score the conditioning columns before the neighbour search.
    #[arg(long)]
    standardize: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient of Y on Z.
    Coeff {
        #[command(flatten)]
        data: DataArgs,
        /// Un-permuted variant (inconsistent in general; for comparison).
        #[arg(long)]
        naive: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Conditional coefficient of Y on Z given X.
    Condcoeff {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        dx: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Wald-type independence test with the estimated variance.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_parser = ["right", "two"], default_value = "right")]
        side: String,
        #[command(flatten)]
        common: Common,
    },
    /// For every point of B, the number of points of A it dominates.
    Rankcount {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// The files start with a header row.
        #[arg(long)]
        header: bool,
        /// Count points of A that dominate each point of B instead.
        #[arg(long)]
        dominating: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Limit variance under independence for a sampler spec.
    OracleSigma {
        /// JSON sampler spec; its `seed` is replaced by --seed.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        mc: usize,
        #[arg(long, default_value_t = 2_000_000)]
        b_mc: usize,
        /// Weight of the discrete part of Z.
        #[arg(long, default_value_t = 0.0)]
        discrete_weight: f64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment config; writes results.jsonl, summary.csv, timing.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the master seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "fast")]
        mode: Mode,
    },
    /// Oracle-equivalence and closed-form checks.
    Selfcheck {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Input(String),
    Degenerate(String),
    Check,
}

impl From<acdep::Error> for Failure {
    fn from(e: acdep::Error) -> Self {
        if e.is_degenerate() {
            Failure::Degenerate(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn emit<T: Serialize>(value: &T) -> Outcome {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn threads(n: Option<usize>, default_single: bool) -> Outcome {
    let n = match (n, default_single) {
        (Some(0), _) => return Err(Failure::Input("--threads must be positive".into())),
        (Some(n), _) => n,
        (None, true) => 1,
        (None, false) => return Ok(()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))
}

fn options(data: &DataArgs, common: &Common) -> EstimatorOptions {
    EstimatorOptions { standardize: data.standardize, ..EstimatorOptions::with_mode(common.mode.into()) }
}

fn perm_scheme(data: &DataArgs) -> Result<PermScheme, Failure> {
    Ok(data.perm.parse()?)
}

#[derive(Serialize)]
struct CoeffOut {
    estimator: &'static str,
    n: usize,
    value: f64,
    numerator: f64,
    denominator: f64,
    seed: u64,
}

fn coeff(data: &DataArgs, naive: bool, common: &Common) -> Outcome {
    let ds = load_csv::<f64>(&data.input, data.dy, data.dz, 0)?;
    let seed = SeedSpec::new(common.seed);
    let opts = options(data, common);
    let (estimator, r) = if naive {
        ("naive", t_ac_naive(&ds.y, &ds.z, &seed, &opts)?)
    } else {
        let perms = build_permutations(ds.n(), data.dy, perm_scheme(data)?, &seed)?;
        ("t_ac", t_ac(&ds.y, &ds.z, &perms, &seed, &opts)?)
    };
    emit(&CoeffOut { estimator, n: r.n, value: r.value, numerator: r.numerator, denominator: r.denominator, seed: common.seed })
}

fn condcoeff(data: &DataArgs, dx: usize, common: &Common) -> Outcome {
    if dx == 0 {
        return Err(Failure::Input("--dx must be at least 1".into()));
    }
    let ds = load_csv::<f64>(&data.input, data.dy, data.dz, dx)?;
    let x = ds.x.as_ref().ok_or_else(|| Failure::Input("missing x columns".into()))?;
    let seed = SeedSpec::new(common.seed);
    let perms = build_permutations(ds.n(), data.dy, perm_scheme(data)?, &seed)?;
    let r = t_ac_cond(&ds.y, &ds.z, x, &perms, &seed, &options(data, common))?;
    emit(&CoeffOut {
        estimator: "t_ac_cond",
        n: r.n,
        value: r.value,
        numerator: r.numerator,
        denominator: r.denominator,
        seed: common.seed,
    })
}

fn test(data: &DataArgs, side: &str, common: &Common) -> Outcome {
    let side: Side = side.parse()?;
    let ds = load_csv::<f64>(&data.input, data.dy, data.dz, 0)?;
    let seed = SeedSpec::new(common.seed);
    let perms = build_permutations(ds.n(), data.dy, perm_scheme(data)?, &seed)?;
    emit(&wald_test(&ds.y, &ds.z, &perms, &seed, &options(data, common), side)?)
}

fn read_points(path: &Path, header: bool) -> Result<PointSet<f64>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| !v.is_nan()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Failure::Input(format!("{}: row {} is not numeric", path.display(), i + 1)))?;
        rows.push(row);
    }
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Failure::Input(format!("{}: no data", path.display())));
    }
    Ok(PointSet::from_rows(d, &rows)?)
}

#[derive(Serialize)]
struct RankOut<'a> {
    dim: usize,
    relation: &'static str,
    counts: &'a [usize],
}

fn rankcount(a: &Path, b: &Path, header: bool, dominating: bool, common: &Common) -> Outcome {
    let (a, b) = (read_points(a, header)?, read_points(b, header)?);
    let mode = common.mode.into();
    let counts = if dominating { count_dominating(&a, &b, mode)? } else { count_dominated(&a, &b, mode)? };
    emit(&RankOut { dim: a.dim(), relation: if dominating { "a >= b" } else { "a <= b" }, counts: counts.as_slice() })
}

#[derive(Serialize)]
struct SigmaOut {
    gamma1: f64,
    gamma2: f64,
    denom: f64,
    gamma1_se: f64,
    gamma2_se: f64,
    denom_se: f64,
    a_d: f64,
    b_d: f64,
    b_d_se: f64,
    discrete_weight: f64,
    sigma_sq: f64,
    mc_samples: usize,
    seed: u64,
}

fn oracle_sigma(spec: &Path, mc: usize, b_mc: usize, eta: f64, common: &Common) -> Outcome {
    let text = std::fs::read_to_string(spec)?;
    let seed = SeedSpec::new(common.seed);
    let spec: SamplerSpec = serde_json::from_str(&text)?;
    let frozen = SamplerSpec { seed, ..spec }.freeze_design(seed)?;
    let sampler = |s: &SeedSpec, m: usize| Ok::<SampleMatrix<f64>, acdep::Error>(SamplerSpec { seed: *s, ..frozen.clone() }.generate(m)?.y);
    let pop = population_oracle(&sampler, mc, &seed.derive(1))?;
    let a = a_const(frozen.d_z)?;
    let b = b_const(frozen.d_z, b_mc, &seed.derive(2))?;
    let sigma_sq = sigma_sq_limit_with(pop.gamma1, pop.gamma2, pop.denom, eta, a, b.value)?;
    emit(&SigmaOut {
        gamma1: pop.gamma1,
        gamma2: pop.gamma2,
        denom: pop.denom,
        gamma1_se: pop.std_errors.gamma1,
        gamma2_se: pop.std_errors.gamma2,
        denom_se: pop.std_errors.denom,
        a_d: a,
        b_d: b.value,
        b_d_se: b.std_error,
        discrete_weight: eta,
        sigma_sq,
        mc_samples: pop.mc_samples,
        seed: common.seed,
    })
}

#[derive(Serialize)]
struct SimulateOut {
    kind: String,
    config_hash: String,
    master_seed: u64,
    out: String,
    summary_header: Vec<String>,
    summary: Vec<Vec<String>>,
}

fn with_overrides(cfg: ExperimentConfig, seed: Option<u64>, mode: CountMode) -> ExperimentConfig {
    use ExperimentConfig::*;
    match cfg {
        RejectionGrid(mut c) => {
            c.seed = seed.unwrap_or(c.seed);
            c.mode = mode;
            RejectionGrid(c)
        }
        Monotonicity(mut c) => {
            c.seed = seed.unwrap_or(c.seed);
            c.mode = mode;
            Monotonicity(c)
        }
        Convergence(mut c) => {
            c.seed = seed.unwrap_or(c.seed);
            c.mode = mode;
            Convergence(c)
        }
        CantorTrajectory(mut c) => {
            c.seed = seed.unwrap_or(c.seed);
            CantorTrajectory(c)
        }
        CalibrationCrossCheck(mut c) => {
            c.seed = seed.unwrap_or(c.seed);
            c.mode = mode;
            CalibrationCrossCheck(c)
        }
    }
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>, mode: Mode) -> Outcome {
    let text = std::fs::read_to_string(config)?;
    let cfg = with_overrides(ExperimentConfig::from_json(&text)?, seed, mode.into());
    eprintln!("running {} (config {})", kind_name(&cfg), cfg.hash()?);
    let result = experiments::run(&cfg)?;
    experiments::write_outputs(&result, out)?;
    let (summary_header, summary) = result.summary_table();
    emit(&SimulateOut {
        kind: kind_name(&cfg).to_string(),
        config_hash: cfg.hash()?,
        master_seed: cfg.master_seed(),
        out: out.display().to_string(),
        summary_header,
        summary,
    })
}

fn kind_name(cfg: &ExperimentConfig) -> &'static str {
    match cfg {
        ExperimentConfig::RejectionGrid(_) => "rejection-grid",
        ExperimentConfig::Monotonicity(_) => "monotonicity",
        ExperimentConfig::Convergence(_) => "convergence",
        ExperimentConfig::CantorTrajectory(_) => "cantor-trajectory",
        ExperimentConfig::CalibrationCrossCheck(_) => "calibration-cross-check",
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Coeff { data, naive, common } => {
            threads(None, true)?;
            coeff(&data, naive, &common)
        }
        Command::Condcoeff { data, dx, common } => {
            threads(None, true)?;
            condcoeff(&data, dx, &common)
        }
        Command::Test { data, side, common } => {
            threads(None, true)?;
            test(&data, &side, &common)
        }
        Command::Rankcount { a, b, header, dominating, common } => {
            threads(None, true)?;
            rankcount(&a, &b, header, dominating, &common)
        }
        Command::OracleSigma { spec, mc, b_mc, discrete_weight, threads: t, common } => {
            threads(t, true)?;
            oracle_sigma(&spec, mc, b_mc, discrete_weight, &common)
        }
        Command::Simulate { config, out, threads: t, seed, mode } => {
            threads(t, false)?;
            simulate(&config, &out, seed, mode)
        }
        Command::Selfcheck { common } => {
            threads(None, true)?;
            let report = selfcheck::run(common.seed, common.mode.into());
            emit(&report)?;
            if report.pass { Ok(()) } else { Err(Failure::Check) }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Degenerate(msg)) => {
            eprintln!("degenerate data: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Check) => {
            eprintln!("self-check failed");
            ExitCode::from(1)
        }
    }
}
