//! Randomized straggler experiments: normalized error, a simulated
//! completion-time proxy, and the stability/sparsity sweeps over `delta_p`.
//!
//! Each trial draws sparse inputs, runs every worker, assigns finish times
//! `delay + op_count / compute_rate`, and decodes from the first prefix of
//! arrivals whose per-group occupancy is decodable. The error metric is
//! always measured against the dense-path product of the uncoded inputs.
//!
//! All randomness flows from one seed through named substreams (`matrix`,
//! `gc`, `delays`), so a config reproduces byte-identical results while the
//! components can still be re-seeded independently.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis;
use crate::decode::{decode, InterpolationMode};
use crate::error::{Error, Result};
use crate::gradcode::{construct_gc_matrix, GcMatrix};
use crate::matrix::{partition_grid, transpose_multiply, BlockMatrix};
use crate::scheme::{derive_params, worker_assignments, worker_compute, PointRule, SchemeParams};

/// Default multiply/add throughput per worker (operations per second).
/// Deliberately slow so the compute term dominates completion-time gaps
/// between sparse and dense encodings.
pub const DEFAULT_COMPUTE_RATE: f64 = 1.0e4;

/// Trials per sweep row.
pub const DEFAULT_SWEEP_TRIALS: usize = 5;

/// Sweep rows share a worker budget of `SWEEP_WORKER_FACTOR * kp`, rounded
/// up per row to a multiple of the group size and never below the minimum
/// group count. A fixed budget mirrors a cluster whose size does not change
/// with `delta_p`, and it leaves slack so decoding really does use the
/// earliest arrivals rather than waiting for every worker.
pub const SWEEP_WORKER_FACTOR: usize = 3;

// ---------------------------------------------------------------------------
// Configuration and results
// ---------------------------------------------------------------------------

/// Worker arrival-delay distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayModel {
    /// `shift + Exp(rate)` seconds, independent per worker.
    ShiftedExponential { shift: f64, rate: f64 },
    /// No delay: finish times are pure compute times, ties broken by
    /// worker index.
    Deterministic,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel::ShiftedExponential { shift: 1.0, rate: 1.0 }
    }
}

/// Everything one experiment needs.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Scheme layout (validated by [`derive_params`]).
    pub params: SchemeParams,
    /// Input density in `(0, 1]`.
    pub rho: f64,
    /// Shared dimension `beta` (rows of `A` and `B`).
    pub matrix_rows: usize,
    /// Width of both `A` and `B` (`alpha = gamma`).
    pub matrix_cols: usize,
    /// Arrival-delay distribution.
    pub delay_model: DelayModel,
    /// Worker multiply/add throughput per second.
    pub compute_rate: f64,
    /// Independent trials.
    pub trials: usize,
    /// Master seed; all randomness derives from it.
    pub seed: u64,
}

/// Metrics from a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Finish time of the first decodable arrival prefix.
    pub completion_time: f64,
    /// Length of that prefix.
    pub workers_finished: usize,
    /// `|C_hat - A^T B|_F / |A^T B|_F`.
    pub normalized_error: f64,
    /// Nonzeros stored across all workers' encoded `A` tiles.
    pub encoded_nnz_a: usize,
    /// Nonzeros stored across all workers' encoded `B` tiles.
    pub encoded_nnz_b: usize,
    /// Multiply/add operations summed over all workers.
    pub total_op_count: u64,
    /// Condition estimate of the interpolation system used to decode.
    pub vandermonde_condition: f64,
}

/// All trial records of one experiment, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// One record per trial, index-aligned with the trial number.
    pub records: Vec<TrialRecord>,
}

impl SimResult {
    fn mean(&self, f: impl Fn(&TrialRecord) -> f64) -> f64 {
        self.records.iter().map(f).sum::<f64>() / self.records.len() as f64
    }

    /// Mean completion time across trials.
    pub fn mean_completion_time(&self) -> f64 {
        self.mean(|r| r.completion_time)
    }

    /// Mean normalized error across trials.
    pub fn mean_normalized_error(&self) -> f64 {
        self.mean(|r| r.normalized_error)
    }

    /// Mean per-trial arrival-prefix length.
    pub fn mean_workers_finished(&self) -> f64 {
        self.mean(|r| r.workers_finished as f64)
    }

    /// Mean nonzeros of one worker's encoded tiles (`A` and `B` together).
    pub fn mean_worker_encoded_nnz(&self, n_workers: usize) -> f64 {
        self.mean(|r| (r.encoded_nnz_a + r.encoded_nnz_b) as f64 / n_workers as f64)
    }

    /// Mean multiply/add count of one worker.
    pub fn mean_worker_op_count(&self, n_workers: usize) -> f64 {
        self.mean(|r| r.total_op_count as f64 / n_workers as f64)
    }

    /// Per-trial records as CSV (one header row, reals with 12 significant
    /// digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "trial,completion_time,workers_finished,normalized_error,encoded_nnz_A,encoded_nnz_B,vandermonde_condition\n",
        );
        for (i, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                i,
                csv_real(r.completion_time),
                r.workers_finished,
                csv_real(r.normalized_error),
                r.encoded_nnz_a,
                r.encoded_nnz_b,
                csv_real(r.vandermonde_condition),
            ));
        }
        out
    }
}

/// 12-significant-digit decimal form used in every CSV this crate writes.
pub(crate) fn csv_real(x: f64) -> String {
    format!("{x:.11e}")
}

// ---------------------------------------------------------------------------
// Seed plumbing
// ---------------------------------------------------------------------------

/// Derive the seed of a named substream. Stable across runs and platforms;
/// distinct labels and indices decorrelate even for adjacent seeds.
pub fn substream_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = splitmix(z);
    z = splitmix(z ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Core pieces
// ---------------------------------------------------------------------------

/// `|c_hat - c_ref|_F / |c_ref|_F`.
pub fn normalized_error(c_hat: &BlockMatrix, c_ref: &BlockMatrix) -> Result<f64> {
    if c_hat.rows() != c_ref.rows() || c_hat.cols() != c_ref.cols() {
        return Err(Error::Shape {
            context: "normalized_error",
            left_rows: c_hat.rows(),
            left_cols: c_hat.cols(),
            right_rows: c_ref.rows(),
            right_cols: c_ref.cols(),
        });
    }
    let denom = c_ref.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff = BlockMatrix::scaled_sum(&[(1.0, c_hat), (-1.0, c_ref)])?;
    Ok(diff.frobenius_norm() / denom)
}

/// One delay per worker, in worker-index order.
pub fn sample_delays(model: DelayModel, n_workers: usize, rng: &mut impl Rng) -> Vec<f64> {
    match model {
        DelayModel::Deterministic => vec![0.0; n_workers],
        DelayModel::ShiftedExponential { shift, rate } => (0..n_workers)
            .map(|_| {
                let u: f64 = rng.gen(); // in [0, 1)
                shift + (-(1.0 - u).ln()) / rate
            })
            .collect(),
    }
}

/// Outcome of scanning an arrival schedule for the first decodable prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    /// Worker indices sorted by finish time (ties by index), truncated to
    /// the decodable prefix.
    pub survivors: Vec<usize>,
    /// Finish time of the last survivor.
    pub completion_time: f64,
}

/// Scan finish times (worker-index order, group-major layout) for the first
/// prefix whose per-group occupancy decodes. Workers with non-finite finish
/// times never arrive.
pub fn sample_completion(finish_times: &[f64], params: &SchemeParams) -> Result<Completion> {
    if finish_times.len() != params.n_workers {
        return Err(Error::Parameter {
            name: "finish_times",
            message: format!(
                "expected {} entries, got {}",
                params.n_workers,
                finish_times.len()
            ),
        });
    }
    let mut order: Vec<usize> = (0..finish_times.len()).collect();
    order.sort_by(|&a, &b| {
        finish_times[a]
            .partial_cmp(&finish_times[b])
            .expect("finish times are comparable")
            .then(a.cmp(&b))
    });

    let need_occ = params.eta - params.kappa;
    let need_groups = params.degree + 1;
    let mut occupancy = vec![0usize; params.c];
    let mut qualified = 0usize;
    for (arrived, &w) in order.iter().enumerate() {
        if !finish_times[w].is_finite() {
            break; // this worker (and everything after it) never arrives
        }
        let group = w / params.eta;
        occupancy[group] += 1;
        if occupancy[group] == need_occ {
            qualified += 1;
        }
        if qualified >= need_groups {
            let prefix = arrived + 1;
            return Ok(Completion {
                survivors: order[..prefix].to_vec(),
                completion_time: finish_times[w],
            });
        }
    }
    Err(Error::InfeasibleRun { n_workers: params.n_workers })
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

fn validate_config(config: &SimConfig) -> Result<()> {
    if config.trials == 0 {
        return Err(Error::Parameter {
            name: "trials",
            message: "must be at least 1".into(),
        });
    }
    if !(config.rho > 0.0 && config.rho <= 1.0) {
        return Err(Error::Parameter {
            name: "rho",
            message: format!("density must lie in (0, 1], got {}", config.rho),
        });
    }
    if !(config.compute_rate.is_finite() && config.compute_rate > 0.0) {
        return Err(Error::Parameter {
            name: "compute_rate",
            message: format!("must be positive and finite, got {}", config.compute_rate),
        });
    }
    let p = &config.params;
    if !config.matrix_rows.is_multiple_of(p.p) {
        return Err(Error::Parameter {
            name: "matrix_rows",
            message: format!("{} is not divisible by p={}", config.matrix_rows, p.p),
        });
    }
    if !config.matrix_cols.is_multiple_of(p.m) || !config.matrix_cols.is_multiple_of(p.n) {
        return Err(Error::Parameter {
            name: "matrix_cols",
            message: format!(
                "{} is not divisible by m={} and n={}",
                config.matrix_cols, p.m, p.n
            ),
        });
    }
    Ok(())
}

/// Run all trials of one experiment. The gradient-coding matrix is
/// constructed once; each trial draws its own inputs and delays from
/// substreams of the master seed and is independent of the others, so
/// trials run in parallel. Records are returned in trial order.
pub fn run_experiment(config: &SimConfig) -> Result<SimResult> {
    validate_config(config)?;
    let params = &config.params;
    let h = construct_gc_matrix(params.eta, params.kappa, substream_seed(config.seed, "gc", 0))?;
    let assignments = worker_assignments(params, &h)?;

    let records: Result<Vec<TrialRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, &h, &assignments, trial as u64))
        .collect();
    Ok(SimResult { records: records? })
}

fn run_trial(
    config: &SimConfig,
    h: &GcMatrix,
    assignments: &[crate::scheme::WorkerAssignment],
    trial: u64,
) -> Result<TrialRecord> {
    let params = &config.params;
    let a = BlockMatrix::random_sparse(
        config.matrix_rows,
        config.matrix_cols,
        config.rho,
        substream_seed(config.seed, "matrix", 2 * trial),
    )?;
    let b = BlockMatrix::random_sparse(
        config.matrix_rows,
        config.matrix_cols,
        config.rho,
        substream_seed(config.seed, "matrix", 2 * trial + 1),
    )?;
    let a_grid = partition_grid(&a, params.p, params.m)?;
    let b_grid = partition_grid(&b, params.p, params.n)?;
    let reference = transpose_multiply(&a.to_dense(), &b.to_dense())?.matrix;

    let results: Result<Vec<_>> = assignments
        .iter()
        .map(|w| worker_compute(w, &a_grid, &b_grid, params))
        .collect();
    let results = results?;
    let encoded_nnz_a = results.iter().map(|r| r.encoded_nnz_a).sum();
    let encoded_nnz_b = results.iter().map(|r| r.encoded_nnz_b).sum();
    let total_op_count: u64 = results.iter().map(|r| r.op_count).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, "delays", trial));
    let delays = sample_delays(config.delay_model, params.n_workers, &mut rng);
    let finish_times: Vec<f64> = results
        .iter()
        .zip(&delays)
        .map(|(r, d)| d + r.op_count as f64 / config.compute_rate)
        .collect();
    let completion = sample_completion(&finish_times, params)?;

    let survivors: Vec<_> = completion
        .survivors
        .iter()
        .map(|&w| results[w].clone())
        .collect();
    let report = decode(params, h, &survivors, InterpolationMode::ExactLowest)?;
    let error = normalized_error(&report.product, &reference)?;

    Ok(TrialRecord {
        completion_time: completion.completion_time,
        workers_finished: completion.survivors.len(),
        normalized_error: error,
        encoded_nnz_a,
        encoded_nnz_b,
        total_op_count,
        vandermonde_condition: report.vandermonde_condition,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// A sweep row that could not be run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    /// The `delta_p` value that was skipped.
    pub delta_p: usize,
    /// Why.
    pub reason: String,
}

/// One row of the stability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub delta_p: usize,
    pub tau: usize,
    pub degree: usize,
    pub condition: f64,
    pub mean_normalized_error: f64,
}

/// One row of the sparsity/speed sweep. `nnz` and `op_count` are per-worker
/// means (worker counts differ between rows).
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRow {
    pub delta_p: usize,
    pub mean_encoded_nnz: f64,
    pub mean_worker_op_count: f64,
    pub mean_completion_time: f64,
}

/// Rows plus the skipped `delta_p` values with reasons.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep<Row> {
    /// Completed rows, ascending in `delta_p`.
    pub rows: Vec<Row>,
    /// Skipped values with one reason each.
    pub skipped: Vec<SkippedRow>,
}

/// Scheme layout for one sweep row: `k_a = k_b = m = n = 1`, group count
/// `max(c_min, ceil(SWEEP_WORKER_FACTOR * kp / eta))`.
fn sweep_params(kp: usize, delta_p: usize, size: usize) -> std::result::Result<SchemeParams, String> {
    if delta_p == 0 || kp == 0 || delta_p > kp {
        return Err(format!("delta_p={delta_p} is not in 1..=kp ({kp})"));
    }
    let p = crate::scheme::lcm(delta_p, kp);
    if !size.is_multiple_of(p) {
        return Err(format!("matrix rows {size} not divisible by p={p}"));
    }
    let eta = p / delta_p;
    let degree = delta_p + delta_p - 2; // k_a = k_b = 1
    let c_min = degree + 1;
    let budget = SWEEP_WORKER_FACTOR * kp;
    let c = c_min.max(budget.div_ceil(eta));
    derive_params(1, 1, kp, delta_p, 1, 1, eta * c, PointRule::Equidistant)
        .map_err(|e| e.to_string())
}

fn sorted_deduped(list: &[usize]) -> Vec<usize> {
    let mut v = list.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Error-vs-threshold tradeoff across `delta_p` at fixed `kp`, with
/// `k_a = k_b = 1`, square `size x size` inputs of density `rho`, the
/// default delay model, and the minimum worker count per row.
pub fn stability_sweep(
    kp: usize,
    delta_p_list: &[usize],
    size: usize,
    rho: f64,
    seed: u64,
) -> Result<Sweep<StabilityRow>> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for dp in sorted_deduped(delta_p_list) {
        let params = match sweep_params(kp, dp, size) {
            Ok(p) => p,
            Err(reason) => {
                skipped.push(SkippedRow { delta_p: dp, reason });
                continue;
            }
        };
        let tau = analysis::recovery_threshold(&params)?
            .tau
            .expect("sweep rows always satisfy the minimum group count");
        // Canonical design conditioning of this row's interpolation degree:
        // the square system on degree+1 equidistant points. Per-trial decode
        // systems (arrival-dependent subsets) are at least this bad.
        let canonical = crate::scheme::equidistant_points(params.degree + 1);
        let condition = analysis::vandermonde_condition(&canonical, params.degree)?;
        let degree = params.degree;
        let config = SimConfig {
            params,
            rho,
            matrix_rows: size,
            matrix_cols: size,
            delay_model: DelayModel::default(),
            compute_rate: DEFAULT_COMPUTE_RATE,
            trials: DEFAULT_SWEEP_TRIALS,
            seed: substream_seed(seed, "stability-row", dp as u64),
        };
        let result = run_experiment(&config)?;
        rows.push(StabilityRow {
            delta_p: dp,
            tau,
            degree,
            condition,
            mean_normalized_error: result.mean_normalized_error(),
        });
    }
    Ok(Sweep { rows, skipped })
}

/// Encoded sparsity, per-worker work, and simulated completion time across
/// `delta_p` at fixed `kp`; same layout conventions as [`stability_sweep`].
pub fn speed_sweep(
    kp: usize,
    delta_p_list: &[usize],
    size: usize,
    rho: f64,
    seed: u64,
) -> Result<Sweep<SpeedRow>> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for dp in sorted_deduped(delta_p_list) {
        let params = match sweep_params(kp, dp, size) {
            Ok(p) => p,
            Err(reason) => {
                skipped.push(SkippedRow { delta_p: dp, reason });
                continue;
            }
        };
        let n_workers = params.n_workers;
        let config = SimConfig {
            params,
            rho,
            matrix_rows: size,
            matrix_cols: size,
            delay_model: DelayModel::default(),
            compute_rate: DEFAULT_COMPUTE_RATE,
            trials: DEFAULT_SWEEP_TRIALS,
            seed: substream_seed(seed, "speed-row", dp as u64),
        };
        let result = run_experiment(&config)?;
        rows.push(SpeedRow {
            delta_p: dp,
            mean_encoded_nnz: result.mean_worker_encoded_nnz(n_workers),
            mean_worker_op_count: result.mean_worker_op_count(n_workers),
            mean_completion_time: result.mean_completion_time(),
        });
    }
    Ok(Sweep { rows, skipped })
}

impl Sweep<StabilityRow> {
    /// CSV with one header row; reals use 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_p,tau,degree,condition,mean_normalized_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.delta_p,
                r.tau,
                r.degree,
                csv_real(r.condition),
                csv_real(r.mean_normalized_error),
            ));
        }
        out
    }
}

impl Sweep<SpeedRow> {
    /// CSV with one header row; reals use 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("delta_p,mean_encoded_nnz,mean_worker_op_count,mean_completion_time\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.delta_p,
                csv_real(r.mean_encoded_nnz),
                csv_real(r.mean_worker_op_count),
                csv_real(r.mean_completion_time),
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
