//! `ccgc` — command-line front end for the coded matrix-multiplication
//! library: closed-form thresholds, invariant verification, straggler
//! simulation, the stability/speed sweeps, and file-based decoding.
//!
//! Configuration comes from flags and an optional flat `key = value` file
//! (`--config`); flags override file values, unknown keys are rejected.
//! Usage and validation problems exit with status 2, runtime failures with
//! status 1. `CCGC_THREADS` caps worker parallelism.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use ccgc::{
    analysis, decode, derive_params, exponent_audit, read_matrix_market, sample_completion,
    sample_delays, speed_sweep, stability_sweep, substream_seed, worker_assignments,
    worker_compute, write_matrix_market, DelayModel, InterpolationMode, PointRule, SchemeParams,
    SimConfig, DEFAULT_COMPUTE_RATE, DEFAULT_SWEEP_TRIALS,
};

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "ccgc",
    version,
    about = "Coded distributed matrix multiplication: thresholds, verification, and straggler experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the recovery-threshold table (all schemes) for one parameter set.
    Threshold(ThresholdArgs),
    /// Re-verify the combinatorial invariants (combine matrices, exponent
    /// layouts) and exit nonzero on any violation.
    Verify(VerifyArgs),
    /// Run a randomized straggler experiment and emit per-trial CSV.
    Simulate(SimulateArgs),
    /// Error-vs-threshold sweep over delta_p values at fixed kp.
    Stability(SweepArgs),
    /// Sparsity/speed sweep over delta_p values at fixed kp.
    Speed(SweepArgs),
    /// Read A and B from Matrix Market files, run one encode -> straggle ->
    /// decode cycle, and write the decoded product.
    DecodeFile(DecodeFileArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` config file; flags override file values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the primary output here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SchemeArgs {
    /// Column splits of A (k_A).
    #[arg(long)]
    ka: Option<usize>,
    /// Column splits of B (k_B).
    #[arg(long)]
    kb: Option<usize>,
    /// Row splits carried by each code symbol (k_p).
    #[arg(long)]
    kp: Option<usize>,
    /// Row splits per encoded block (delta_p).
    #[arg(long)]
    dp: Option<usize>,
    /// Column grid of A (defaults to ka).
    #[arg(long)]
    m: Option<usize>,
    /// Column grid of B (defaults to kb).
    #[arg(long)]
    n: Option<usize>,
    /// Total workers N (a multiple of the group size eta).
    #[arg(long = "n-workers")]
    n_workers: Option<usize>,
}

#[derive(Args)]
struct DelayArgs {
    /// Delay model: shifted_exponential or deterministic.
    #[arg(long = "delay-model")]
    delay_model: Option<String>,
    /// Shift (seconds) of the shifted-exponential delay.
    #[arg(long = "delay-shift")]
    delay_shift: Option<f64>,
    /// Rate (1/seconds) of the shifted-exponential delay.
    #[arg(long = "delay-rate")]
    delay_rate: Option<f64>,
    /// Worker multiply/add throughput per second.
    #[arg(long = "compute-rate")]
    compute_rate: Option<f64>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Largest group size to check combine matrices for.
    #[arg(long = "eta-max")]
    eta_max: Option<usize>,
    /// Largest k_A for the exponent audit.
    #[arg(long = "ka-max")]
    ka_max: Option<usize>,
    /// Largest k_B for the exponent audit.
    #[arg(long = "kb-max")]
    kb_max: Option<usize>,
    /// Largest delta_p for the exponent audit.
    #[arg(long = "dp-max")]
    dp_max: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    delay: DelayArgs,
    /// Input density in (0, 1].
    #[arg(long)]
    rho: Option<f64>,
    /// Shared row count beta of A and B.
    #[arg(long = "matrix-rows")]
    matrix_rows: Option<usize>,
    /// Column count of A and B (alpha = gamma).
    #[arg(long = "matrix-cols")]
    matrix_cols: Option<usize>,
    /// Number of independent trials.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Row splits carried by each code symbol (k_p).
    #[arg(long)]
    kp: Option<usize>,
    /// Comma-separated delta_p values, e.g. 1,2,7,14.
    #[arg(long = "dp-list")]
    dp_list: Option<String>,
    /// Square input size (rows = cols).
    #[arg(long)]
    size: Option<usize>,
    /// Input density in (0, 1].
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct DecodeFileArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    delay: DelayArgs,
    /// Matrix Market file holding A.
    #[arg(long)]
    a: Option<PathBuf>,
    /// Matrix Market file holding B.
    #[arg(long)]
    b: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Errors and config-file plumbing
// ---------------------------------------------------------------------------

enum AppError {
    /// Bad flags, bad config keys/values, infeasible parameters. Exit 2.
    Usage(String),
    /// Failures while executing a valid configuration. Exit 1.
    Runtime(String),
}

fn usage(msg: impl Display) -> AppError {
    AppError::Usage(msg.to_string())
}

fn runtime(msg: impl Display) -> AppError {
    AppError::Runtime(msg.to_string())
}

/// Library errors raised mid-run: parameter-shaped ones are still the
/// caller's configuration at fault, the rest are genuine runtime failures.
fn exec_err(e: ccgc::Error) -> AppError {
    match e {
        ccgc::Error::Parameter { .. } | ccgc::Error::Infeasible(_) => usage(e),
        other => runtime(other),
    }
}

/// Parsed `key = value` file with strict key accounting: every key the
/// subcommand understands is `take`n exactly once, and leftovers are
/// rejected.
struct ConfigFile {
    values: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self, AppError> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(usage(format!(
                        "config {} line {}: expected `key = value`, got `{line}`",
                        path.display(),
                        lineno + 1
                    )));
                };
                let key = key.trim().to_string();
                if values.insert(key.clone(), value.trim().to_string()).is_some() {
                    return Err(usage(format!(
                        "config {} line {}: duplicate key `{key}`",
                        path.display(),
                        lineno + 1
                    )));
                }
            }
        }
        Ok(ConfigFile { values, consumed: BTreeSet::new() })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, AppError>
    where
        T::Err: Display,
    {
        self.consumed.insert(key.to_string());
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| usage(format!("config key `{key}`: cannot parse `{raw}`: {e}"))),
        }
    }

    fn finish(self) -> Result<(), AppError> {
        for key in self.values.keys() {
            if !self.consumed.contains(key) {
                return Err(usage(format!("unknown config key `{key}`")));
            }
        }
        Ok(())
    }
}

fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, AppError> {
    flag.or(file).ok_or_else(|| usage(format!("missing required parameter `{name}`")))
}

fn prefer<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn resolve_scheme(args: &SchemeArgs, file: &mut ConfigFile) -> Result<SchemeParams, AppError> {
    let ka = require(args.ka, file.take("ka")?, "ka")?;
    let kb = require(args.kb, file.take("kb")?, "kb")?;
    let kp = require(args.kp, file.take("kp")?, "kp")?;
    let dp = require(args.dp, file.take("dp")?, "dp")?;
    let m = prefer(args.m, file.take("m")?, ka);
    let n = prefer(args.n, file.take("n")?, kb);
    let n_workers = require(args.n_workers, file.take("n_workers")?, "n_workers")?;
    derive_params(ka, kb, kp, dp, m, n, n_workers, PointRule::Equidistant).map_err(usage)
}

fn resolve_delay(
    args: &DelayArgs,
    file: &mut ConfigFile,
) -> Result<(DelayModel, f64), AppError> {
    let model: String = prefer(
        args.delay_model.clone(),
        file.take("delay_model")?,
        "shifted_exponential".to_string(),
    );
    let shift = prefer(args.delay_shift, file.take("delay_shift")?, 1.0);
    let rate = prefer(args.delay_rate, file.take("delay_rate")?, 1.0);
    let compute_rate = prefer(args.compute_rate, file.take("compute_rate")?, DEFAULT_COMPUTE_RATE);
    let model = match model.as_str() {
        "shifted_exponential" => DelayModel::ShiftedExponential { shift, rate },
        "deterministic" => DelayModel::Deterministic,
        other => {
            return Err(usage(format!(
                "delay_model must be shifted_exponential or deterministic, got `{other}`"
            )))
        }
    };
    Ok((model, compute_rate))
}

fn resolve_common(
    args: &CommonArgs,
    file: &mut ConfigFile,
) -> Result<(u64, Option<PathBuf>), AppError> {
    let seed = prefer(args.seed, file.take("seed")?, 0);
    let out = args.out.clone().or(file.take("out")?);
    Ok((seed, out))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_dp_list(raw: &str) -> Result<Vec<usize>, AppError> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|e| usage(format!("dp_list entry `{}`: {e}", tok.trim())))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_threshold(args: ThresholdArgs) -> Result<(), AppError> {
    let mut file = ConfigFile::load(args.common.config.as_deref())?;
    let (_seed, out) = resolve_common(&args.common, &mut file)?;
    let params = resolve_scheme(&args.scheme, &mut file)?;
    file.finish()?;

    let mut rows = vec![analysis::recovery_threshold(&params).map_err(exec_err)?];
    let baselines =
        analysis::baseline_thresholds(params.k_a, params.k_b, params.kp, params.p, params.m, params.n)
            .map_err(exec_err)?;
    for row in baselines.rows() {
        rows.push(row.clone().at_worker_budget(params.n_workers));
    }
    match analysis::split_scheme_threshold(
        params.k_a,
        params.k_b,
        params.kp,
        params.delta_p,
        params.n_workers,
    ) {
        Ok(row) => rows.push(row),
        Err(ccgc::Error::SplitInapplicable { delta_p, kp }) => {
            eprintln!("note: split scheme omitted (delta_p={delta_p} does not divide kp={kp})");
        }
        Err(e) => return Err(exec_err(e)),
    }

    let mut text = String::from(analysis::ThresholdReport::CSV_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.csv_row());
        text.push('\n');
    }
    emit(out.as_deref(), &text)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), AppError> {
    let mut file = ConfigFile::load(args.common.config.as_deref())?;
    let (seed, out) = resolve_common(&args.common, &mut file)?;
    let eta_max = prefer(args.eta_max, file.take("eta_max")?, 8);
    let ka_max = prefer(args.ka_max, file.take("ka_max")?, 4);
    let kb_max = prefer(args.kb_max, file.take("kb_max")?, 4);
    let dp_max = prefer(args.dp_max, file.take("dp_max")?, 6);
    file.finish()?;

    let mut violations = Vec::new();
    let mut gc_checked = 0usize;
    let mut worst_residual: f64 = 0.0;
    for eta in 1..=eta_max {
        for kappa in 0..eta {
            let label = (eta * 64 + kappa) as u64;
            let h = ccgc::construct_gc_matrix(eta, kappa, substream_seed(seed, "verify-gc", label))
                .map_err(exec_err)?;
            let report = ccgc::verify_gc_matrix(&h).map_err(exec_err)?;
            gc_checked += 1;
            worst_residual = worst_residual.max(report.worst_residual);
            if !(report.support_ok && report.span_ok) {
                violations.push(format!(
                    "combine matrix eta={eta} kappa={kappa}: support_ok={} span_ok={} failing_subset={:?}",
                    report.support_ok, report.span_ok, report.failing_subset
                ));
            }
        }
    }

    let mut audits = 0usize;
    for ka in 1..=ka_max {
        for kb in 1..=kb_max {
            for dp in 1..=dp_max {
                let audit = exponent_audit(ka, kb, dp);
                audits += 1;
                if !(audit.distinct_useful && audit.disjoint && audit.within_degree) {
                    violations.push(format!(
                        "exponent audit ka={ka} kb={kb} dp={dp}: distinct={} disjoint={} within_degree={}",
                        audit.distinct_useful, audit.disjoint, audit.within_degree
                    ));
                }
            }
        }
    }

    let text = format!(
        "combine matrices: {gc_checked} verified (eta <= {eta_max}), worst residual {worst_residual:.3e}\n\
         exponent audits: {audits} verified (ka <= {ka_max}, kb <= {kb_max}, dp <= {dp_max})\n\
         violations: {}\n",
        violations.len()
    );
    emit(out.as_deref(), &text)?;
    if violations.is_empty() {
        Ok(())
    } else {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        Err(runtime(format!("{} invariant violation(s)", violations.len())))
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), AppError> {
    let mut file = ConfigFile::load(args.common.config.as_deref())?;
    let (seed, out) = resolve_common(&args.common, &mut file)?;
    let params = resolve_scheme(&args.scheme, &mut file)?;
    let (delay_model, compute_rate) = resolve_delay(&args.delay, &mut file)?;
    let rho = prefer(args.rho, file.take("rho")?, 1.0);
    let matrix_rows = require(args.matrix_rows, file.take("matrix_rows")?, "matrix_rows")?;
    let matrix_cols = require(args.matrix_cols, file.take("matrix_cols")?, "matrix_cols")?;
    let trials = prefer(args.trials, file.take("trials")?, DEFAULT_SWEEP_TRIALS);
    file.finish()?;

    let config = SimConfig {
        params,
        rho,
        matrix_rows,
        matrix_cols,
        delay_model,
        compute_rate,
        trials,
        seed,
    };
    let result = ccgc::run_experiment(&config).map_err(exec_err)?;
    emit(out.as_deref(), &result.to_csv())
}

enum SweepKind {
    Stability,
    Speed,
}

fn cmd_sweep(kind: SweepKind, args: SweepArgs) -> Result<(), AppError> {
    let mut file = ConfigFile::load(args.common.config.as_deref())?;
    let (seed, out) = resolve_common(&args.common, &mut file)?;
    let kp = require(args.kp, file.take("kp")?, "kp")?;
    let dp_raw: String = require(args.dp_list.clone(), file.take("dp_list")?, "dp_list")?;
    let size = require(args.size, file.take("size")?, "size")?;
    let rho = prefer(args.rho, file.take("rho")?, 0.01);
    file.finish()?;

    let dp_list = parse_dp_list(&dp_raw)?;
    let (csv, skipped) = match kind {
        SweepKind::Stability => {
            let sweep = stability_sweep(kp, &dp_list, size, rho, seed).map_err(exec_err)?;
            (sweep.to_csv(), sweep.skipped)
        }
        SweepKind::Speed => {
            let sweep = speed_sweep(kp, &dp_list, size, rho, seed).map_err(exec_err)?;
            (sweep.to_csv(), sweep.skipped)
        }
    };
    for skip in &skipped {
        eprintln!("note: skipped delta_p={}: {}", skip.delta_p, skip.reason);
    }
    emit(out.as_deref(), &csv)
}

fn cmd_decode_file(args: DecodeFileArgs) -> Result<(), AppError> {
    let mut file = ConfigFile::load(args.common.config.as_deref())?;
    let (seed, out) = resolve_common(&args.common, &mut file)?;
    let params = resolve_scheme(&args.scheme, &mut file)?;
    let (delay_model, compute_rate) = resolve_delay(&args.delay, &mut file)?;
    let a_path: PathBuf = require(args.a.clone(), file.take("a")?, "a")?;
    let b_path: PathBuf = require(args.b.clone(), file.take("b")?, "b")?;
    file.finish()?;
    let out = out.ok_or_else(|| usage("decode-file requires `out` for the decoded product"))?;

    let a = read_matrix_market(&a_path).map_err(|e| runtime(format!("{}: {e}", a_path.display())))?;
    let b = read_matrix_market(&b_path).map_err(|e| runtime(format!("{}: {e}", b_path.display())))?;
    let a_grid = ccgc::partition_grid(&a, params.p, params.m).map_err(exec_err)?;
    let b_grid = ccgc::partition_grid(&b, params.p, params.n).map_err(exec_err)?;

    let h = ccgc::construct_gc_matrix(params.eta, params.kappa, substream_seed(seed, "gc", 0))
        .map_err(exec_err)?;
    let assignments = worker_assignments(&params, &h).map_err(exec_err)?;
    let results: Result<Vec<_>, _> = assignments
        .iter()
        .map(|w| worker_compute(w, &a_grid, &b_grid, &params))
        .collect();
    let results = results.map_err(exec_err)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(substream_seed(seed, "delays", 0));
    let delays = sample_delays(delay_model, params.n_workers, &mut rng);
    let finish_times: Vec<f64> = results
        .iter()
        .zip(&delays)
        .map(|(r, d)| d + r.op_count as f64 / compute_rate)
        .collect();
    let completion = sample_completion(&finish_times, &params).map_err(exec_err)?;
    let survivors: Vec<_> = completion.survivors.iter().map(|&w| results[w].clone()).collect();
    let report = decode(&params, &h, &survivors, InterpolationMode::ExactLowest).map_err(exec_err)?;

    write_matrix_market(&out, &report.product)
        .map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    println!(
        "decoded {}x{} product -> {}",
        report.product.rows(),
        report.product.cols(),
        out.display()
    );
    println!(
        "workers_finished={} completion_time={:.6} groups_used={} vandermonde_condition={:.6e} success={}",
        completion.survivors.len(),
        completion.completion_time,
        report.groups_used.len(),
        report.vandermonde_condition,
        report.success
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn init_threads() -> Result<(), AppError> {
    match std::env::var("CCGC_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .map_err(|e| usage(format!("CCGC_THREADS=`{raw}` is not a thread count: {e}")))?;
            if n == 0 {
                return Err(usage("CCGC_THREADS must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| runtime(format!("thread pool: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    init_threads()?;
    match cli.command {
        Command::Threshold(args) => cmd_threshold(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Stability(args) => cmd_sweep(SweepKind::Stability, args),
        Command::Speed(args) => cmd_sweep(SweepKind::Speed, args),
        Command::DecodeFile(args) => cmd_decode_file(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
