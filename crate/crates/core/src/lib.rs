//! Coded distributed matrix multiplication with grouped straggler
//! tolerance.
//!
//! The library simulates computing `A^T B` on a cluster of unreliable
//! workers. Both inputs are cut into block grids and encoded with
//! polynomial combinations; workers are organized in groups that share an
//! evaluation point, and within a group each worker covers a cyclic window
//! of encoded block products weighted by a gradient-coding matrix. Any
//! sufficiently large set of finished workers lets the master reconstruct
//! the exact product: enough survivors inside a group cancel the window
//! structure, and enough groups interpolate the remaining polynomial.
//!
//! Module map:
//!
//! - [`matrix`]: dense/sparse block matrices, partitioning, products with
//!   operation counts, Matrix Market I/O.
//! - [`gradcode`]: gradient-coding matrices with cyclic support windows and
//!   the combination vectors that cancel them.
//! - [`scheme`]: parameter derivation, the polynomial encoders, and the
//!   per-worker computation.
//! - [`decode`]: group combination, interpolation, coefficient extraction,
//!   and the interference oracle.
//! - [`analysis`]: recovery thresholds (closed form and brute force),
//!   baseline comparisons, storage accounting.
//! - [`sim`]: randomized straggler experiments, stability and speed sweeps,
//!   CSV export.

pub mod analysis;
pub mod decode;
pub mod error;
pub mod gradcode;
mod linalg;
pub mod matrix;
pub mod scheme;
pub mod sim;

pub use decode::{
    assemble, decode, exponent_audit, group_combine, interference_term,
    interpolate_and_extract, useful_exponent, DecodeReport, ExponentAudit, GroupValue,
    Interpolation, InterpolationMode,
};
pub use analysis::{
    baseline_thresholds, decodable, encoding_weight, occupancy_threshold_oracle,
    recovery_threshold, split_scheme_threshold, vandermonde_condition, Baselines, SchemeTag,
    ThresholdReport,
};
pub use error::{Error, Result};
pub use gradcode::{
    combine_vector, construct_gc_matrix, verify_gc_matrix, CombineVector, GcMatrix, GcReport,
    COMBINE_TOLERANCE,
};
pub use matrix::{
    multiply, partition_grid, read_matrix_market, transpose_multiply, write_matrix_market,
    BlockGrid, BlockMatrix, Product, SPARSE_KEEP_RATIO,
};
pub use scheme::{
    derive_params, encode_a, encode_b, encode_worker, worker_assignments, worker_compute,
    PointRule, SchemeParams, WorkerAssignment, WorkerEncoding, WorkerResult,
};
pub use sim::{
    normalized_error, run_experiment, sample_completion, sample_delays, speed_sweep,
    stability_sweep, substream_seed, Completion, DelayModel, SimConfig, SimResult, SkippedRow,
    SpeedRow, StabilityRow, Sweep, TrialRecord, DEFAULT_COMPUTE_RATE, DEFAULT_SWEEP_TRIALS,
};
