//! Scheme parameters, polynomial encoders, and the per-worker computation.
//!
//! The target product is `A^T B` for `A in R^{beta x alpha}` and
//! `B in R^{beta x gamma}`. `A` is cut into a `p x m` block grid and `B`
//! into `p x n`; each worker may store a `1/(k_a * kp)` fraction of `A` and
//! `1/(k_b * kp)` of `B`. Workers form `c` groups of `eta = p / delta_p`;
//! the whole group shares one evaluation point `x_i`, and slot `w` combines
//! a cyclic window of `kappa + 1 = p / kp` encoded products weighted by row
//! `w` of a gradient-coding matrix:
//!
//! ```text
//!   Abar^T(x, pt, mt) = sum_{l, s} x^(l + s*delta_p)              * A^T[delta_p*pt + l][k_a*mt + s]
//!   Bbar  (x, pt, nt) = sum_{l, u} x^(delta_p-1-l + u*delta_p*k_a) * B[delta_p*pt + l][k_b*nt + u]
//!   C_w   (x, mt, nt) = sum_{pt in window(w)} H[w][pt] * Abar^T(x, pt, mt) * Bbar(x, pt, nt)
//! ```
//!
//! The exponents are arranged so that along the diagonal `l = l'` every
//! useful block product `sum_l A^T[l][..] B[l][..]` lands on its own
//! polynomial coefficient; the decoder recovers those coefficients by
//! interpolation across groups (see the decode module for the exponent
//! layout and the interference analysis).

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gradcode::GcMatrix;
use crate::matrix::{multiply, BlockGrid, BlockMatrix};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// How the per-group evaluation points are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointRule {
    /// `x_i = -1 + 2i/(c-1)`: deterministic, spread over `[-1, 1]`.
    Equidistant,
    /// Seeded i.i.d. uniform draws from `[-1, 1]`, redrawn until distinct.
    UniformRandom { seed: u64 },
}

/// A fully derived and validated scheme configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    /// Column split of `A` (divides `m`).
    pub k_a: usize,
    /// Column split of `B` (divides `n`).
    pub k_b: usize,
    /// Storage split along the shared dimension.
    pub kp: usize,
    /// Blocks combined per encoded matrix along the shared dimension.
    pub delta_p: usize,
    /// Block-grid width of `A` (so `A^T` has `m` block rows).
    pub m: usize,
    /// Block-grid width of `B`.
    pub n: usize,
    /// Shared-dimension block count: `lcm(delta_p, kp)`.
    pub p: usize,
    /// Group size `p / delta_p`.
    pub eta: usize,
    /// Per-group straggler tolerance `p / kp - 1`.
    pub kappa: usize,
    /// Number of groups.
    pub c: usize,
    /// Total workers `eta * c`.
    pub n_workers: usize,
    /// Degree of the decoding polynomial: `k_a * k_b * delta_p + delta_p - 2`.
    pub degree: usize,
    /// Per-group evaluation points, length `c`, pairwise distinct.
    pub points: Vec<f64>,
}

impl SchemeParams {
    /// Minimum group count `degree + 1` required for decodability.
    pub fn min_groups(&self) -> usize {
        self.degree + 1
    }

    /// Fraction of `A` each worker stores: `1 / (k_a * kp)`.
    pub fn storage_fraction_a(&self) -> f64 {
        1.0 / (self.k_a * self.kp) as f64
    }

    /// Fraction of `B` each worker stores: `1 / (k_b * kp)`.
    pub fn storage_fraction_b(&self) -> f64 {
        1.0 / (self.k_b * self.kp) as f64
    }

    /// Block-product tasks per worker: `p*m*n / (kp*k_a*k_b)`.
    pub fn tasks_per_worker(&self) -> usize {
        (self.kappa + 1) * (self.m / self.k_a) * (self.n / self.k_b)
    }

    /// True when `delta_p` properly divides `kp`: `kappa` collapses to zero,
    /// whole groups must survive, and the scheme matches independent splits.
    pub fn degenerate_gc(&self) -> bool {
        self.kappa == 0 && self.delta_p < self.kp
    }
}

/// Derive all secondary quantities from the free parameters and validate.
#[allow(clippy::too_many_arguments)]
pub fn derive_params(
    k_a: usize,
    k_b: usize,
    kp: usize,
    delta_p: usize,
    m: usize,
    n: usize,
    n_workers: usize,
    rule: PointRule,
) -> Result<SchemeParams> {
    for (name, v) in [
        ("k_a", k_a),
        ("k_b", k_b),
        ("kp", kp),
        ("delta_p", delta_p),
        ("m", m),
        ("n", n),
        ("n_workers", n_workers),
    ] {
        if v == 0 {
            return Err(Error::Parameter { name, message: "must be at least 1".into() });
        }
    }
    if delta_p > kp {
        return Err(Error::Parameter {
            name: "delta_p",
            message: format!("must not exceed kp (got delta_p={delta_p}, kp={kp})"),
        });
    }
    if !m.is_multiple_of(k_a) {
        return Err(Error::Parameter {
            name: "m",
            message: format!("k_a={k_a} must divide m={m}"),
        });
    }
    if !n.is_multiple_of(k_b) {
        return Err(Error::Parameter {
            name: "n",
            message: format!("k_b={k_b} must divide n={n}"),
        });
    }

    let p = lcm(delta_p, kp);
    let eta = p / delta_p;
    let kappa = p / kp - 1;
    if !n_workers.is_multiple_of(eta) {
        return Err(Error::Parameter {
            name: "n_workers",
            message: format!("group size eta={eta} must divide n_workers={n_workers}"),
        });
    }
    let c = n_workers / eta;
    let degree = k_a * k_b * delta_p + delta_p - 2;
    let min_groups = degree + 1;
    if c < min_groups {
        return Err(Error::Infeasible(format!(
            "need at least {min_groups} groups ({} workers) for degree {degree}, got c={c} \
             (n_workers={n_workers})",
            min_groups * eta
        )));
    }

    let points = match rule {
        PointRule::Equidistant => equidistant_points(c),
        PointRule::UniformRandom { seed } => uniform_points(c, seed),
    };
    debug_assert!(points_distinct(&points));

    Ok(SchemeParams {
        k_a,
        k_b,
        kp,
        delta_p,
        m,
        n,
        p,
        eta,
        kappa,
        c,
        n_workers,
        degree,
        points,
    })
}

/// `c` points spread evenly over `[-1, 1]`; a single point sits at 0.
pub(crate) fn equidistant_points(c: usize) -> Vec<f64> {
    if c == 1 {
        return vec![0.0];
    }
    (0..c)
        .map(|i| -1.0 + 2.0 * i as f64 / (c - 1) as f64)
        .collect()
}

fn uniform_points(c: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<f64> = Vec::with_capacity(c);
    while points.len() < c {
        let x = rng.gen_range(-1.0..=1.0);
        if !points.contains(&x) {
            points.push(x);
        }
    }
    points
}

fn points_distinct(points: &[f64]) -> bool {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.windows(2).all(|w| w[0] != w[1])
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

// ---------------------------------------------------------------------------
// Assignments
// ---------------------------------------------------------------------------

/// Everything one worker needs to know: its group's point, its cyclic block
/// window, its output tile ranges, and its gradient-code row.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerAssignment {
    /// Group index `i` in `0..c`.
    pub group: usize,
    /// Slot `w` within the group, in `0..eta`.
    pub slot: usize,
    /// The group's shared evaluation point `x_i`.
    pub point: f64,
    /// Block-window indices `{w, .., w + kappa} mod eta`, length `kappa + 1`.
    pub p_indices: Vec<usize>,
    /// Output block-row tiles `0..m/k_a` (all workers cover all of them).
    pub m_indices: Vec<usize>,
    /// Output block-column tiles `0..n/k_b`.
    pub n_indices: Vec<usize>,
    /// Row `w` of the group's gradient-coding matrix.
    pub h_row: Vec<f64>,
}

/// Assignments for all `eta * c` workers in group-major order.
pub fn worker_assignments(params: &SchemeParams, h: &GcMatrix) -> Result<Vec<WorkerAssignment>> {
    if h.eta() != params.eta || h.kappa() != params.kappa {
        return Err(Error::Parameter {
            name: "gc_matrix",
            message: format!(
                "expected eta={}, kappa={}, got eta={}, kappa={}",
                params.eta,
                params.kappa,
                h.eta(),
                h.kappa()
            ),
        });
    }
    let mut out = Vec::with_capacity(params.n_workers);
    for group in 0..params.c {
        for slot in 0..params.eta {
            out.push(WorkerAssignment {
                group,
                slot,
                point: params.points[group],
                p_indices: (0..=params.kappa).map(|d| (slot + d) % params.eta).collect(),
                m_indices: (0..params.m / params.k_a).collect(),
                n_indices: (0..params.n / params.k_b).collect(),
                h_row: h.row(slot).to_vec(),
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Encoders
// ---------------------------------------------------------------------------

fn check_grid(grid: &BlockGrid, params: &SchemeParams, width: usize, which: &'static str) -> Result<()> {
    if grid.block_rows() != params.p || grid.block_cols() != width {
        return Err(Error::Parameter {
            name: which,
            message: format!(
                "expected a {} x {} block grid, got {} x {}",
                params.p,
                width,
                grid.block_rows(),
                grid.block_cols()
            ),
        });
    }
    Ok(())
}

fn check_index(value: usize, limit: usize, name: &'static str) -> Result<()> {
    if value >= limit {
        return Err(Error::Parameter {
            name,
            message: format!("index {value} out of range 0..{limit}"),
        });
    }
    Ok(())
}

/// Encoded transposed tile of `A` for window `p_tilde` and output tile
/// `m_tilde`:
/// `sum_{l, s} x^(l + s*delta_p) * A^T[delta_p*p_tilde + l][k_a*m_tilde + s]`.
///
/// `a_grid` is the `p x m` block grid of `A` itself; the combination is
/// formed over `A` blocks and transposed once at the end.
pub fn encode_a(
    a_grid: &BlockGrid,
    point: f64,
    p_tilde: usize,
    m_tilde: usize,
    params: &SchemeParams,
) -> Result<BlockMatrix> {
    check_grid(a_grid, params, params.m, "a_grid")?;
    check_index(p_tilde, params.eta, "p_tilde")?;
    check_index(m_tilde, params.m / params.k_a, "m_tilde")?;
    let mut terms = Vec::with_capacity(params.delta_p * params.k_a);
    for l in 0..params.delta_p {
        for s in 0..params.k_a {
            let coeff = point.powi((l + s * params.delta_p) as i32);
            terms.push((coeff, a_grid.block(params.delta_p * p_tilde + l, params.k_a * m_tilde + s)));
        }
    }
    Ok(BlockMatrix::scaled_sum(&terms)?.transpose())
}

/// Encoded tile of `B` for window `p_tilde` and output tile `n_tilde`:
/// `sum_{l, u} x^(delta_p - 1 - l + u*delta_p*k_a) * B[delta_p*p_tilde + l][k_b*n_tilde + u]`.
pub fn encode_b(
    b_grid: &BlockGrid,
    point: f64,
    p_tilde: usize,
    n_tilde: usize,
    params: &SchemeParams,
) -> Result<BlockMatrix> {
    check_grid(b_grid, params, params.n, "b_grid")?;
    check_index(p_tilde, params.eta, "p_tilde")?;
    check_index(n_tilde, params.n / params.k_b, "n_tilde")?;
    let mut terms = Vec::with_capacity(params.delta_p * params.k_b);
    for l in 0..params.delta_p {
        for u in 0..params.k_b {
            let coeff = point.powi((params.delta_p - 1 - l + u * params.delta_p * params.k_a) as i32);
            terms.push((coeff, b_grid.block(params.delta_p * p_tilde + l, params.k_b * n_tilde + u)));
        }
    }
    BlockMatrix::scaled_sum(&terms)
}

// ---------------------------------------------------------------------------
// Worker execution
// ---------------------------------------------------------------------------

/// The encoded tiles a single worker stores, keyed by `(p_tilde, tile)`.
#[derive(Debug, Clone)]
pub struct WorkerEncoding {
    /// Encoded transposed `A` tiles.
    pub enc_a: BTreeMap<(usize, usize), BlockMatrix>,
    /// Encoded `B` tiles.
    pub enc_b: BTreeMap<(usize, usize), BlockMatrix>,
}

impl WorkerEncoding {
    /// Stored scalar entries of the encoded `A` side (`rows * cols` summed).
    pub fn stored_entries_a(&self) -> usize {
        self.enc_a.values().map(BlockMatrix::entry_count).sum()
    }

    /// Stored scalar entries of the encoded `B` side.
    pub fn stored_entries_b(&self) -> usize {
        self.enc_b.values().map(BlockMatrix::entry_count).sum()
    }

    /// Nonzeros across encoded `A` tiles.
    pub fn nnz_a(&self) -> usize {
        self.enc_a.values().map(BlockMatrix::nnz).sum()
    }

    /// Nonzeros across encoded `B` tiles.
    pub fn nnz_b(&self) -> usize {
        self.enc_b.values().map(BlockMatrix::nnz).sum()
    }
}

/// One worker's finished outputs.
#[derive(Debug, Clone)]
pub struct WorkerResult {
    /// Group index.
    pub group: usize,
    /// Slot within the group.
    pub slot: usize,
    /// Output tiles keyed by `(m_tilde, n_tilde)`.
    pub outputs: BTreeMap<(usize, usize), BlockMatrix>,
    /// Multiply/add operations spent on block products.
    pub op_count: u64,
    /// Nonzeros stored across this worker's encoded `A` tiles.
    pub encoded_nnz_a: usize,
    /// Nonzeros stored across this worker's encoded `B` tiles.
    pub encoded_nnz_b: usize,
}

/// Materialize every encoded tile the worker stores. Tiles are shared
/// read-only across the worker's task triples.
pub fn encode_worker(
    assignment: &WorkerAssignment,
    a_grid: &BlockGrid,
    b_grid: &BlockGrid,
    params: &SchemeParams,
) -> Result<WorkerEncoding> {
    let mut enc_a = BTreeMap::new();
    let mut enc_b = BTreeMap::new();
    for &pt in &assignment.p_indices {
        for &mt in &assignment.m_indices {
            enc_a.insert((pt, mt), encode_a(a_grid, assignment.point, pt, mt, params)?);
        }
        for &nt in &assignment.n_indices {
            enc_b.insert((pt, nt), encode_b(b_grid, assignment.point, pt, nt, params)?);
        }
    }
    Ok(WorkerEncoding { enc_a, enc_b })
}

/// Run one worker: encode its tiles, multiply them pairwise over the cyclic
/// window, and combine with the gradient-code weights. `op_count` sums the
/// block-product operations.
pub fn worker_compute(
    assignment: &WorkerAssignment,
    a_grid: &BlockGrid,
    b_grid: &BlockGrid,
    params: &SchemeParams,
) -> Result<WorkerResult> {
    if a_grid.block_shape().0 != b_grid.block_shape().0 {
        return Err(Error::Shape {
            context: "worker_compute",
            left_rows: a_grid.block_shape().0,
            left_cols: a_grid.block_shape().1,
            right_rows: b_grid.block_shape().0,
            right_cols: b_grid.block_shape().1,
        });
    }
    let encoding = encode_worker(assignment, a_grid, b_grid, params)?;
    let mut outputs = BTreeMap::new();
    let mut op_count = 0u64;
    for &mt in &assignment.m_indices {
        for &nt in &assignment.n_indices {
            let mut products = Vec::with_capacity(assignment.p_indices.len());
            for &pt in &assignment.p_indices {
                let product = multiply(&encoding.enc_a[&(pt, mt)], &encoding.enc_b[&(pt, nt)])?;
                op_count += product.op_count;
                products.push((assignment.h_row[pt], product.matrix));
            }
            let terms: Vec<(f64, &BlockMatrix)> =
                products.iter().map(|(h, m)| (*h, m)).collect();
            outputs.insert((mt, nt), BlockMatrix::scaled_sum(&terms)?);
        }
    }
    Ok(WorkerResult {
        group: assignment.group,
        slot: assignment.slot,
        outputs,
        op_count,
        encoded_nnz_a: encoding.nnz_a(),
        encoded_nnz_b: encoding.nnz_b(),
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::partition_grid;

    /// Example configuration used throughout: k_a=k_b=1, kp=4, delta_p=3,
    /// 20 workers.
    fn example_params() -> SchemeParams {
        derive_params(1, 1, 4, 3, 1, 1, 20, PointRule::Equidistant).unwrap()
    }

    #[test]
    fn derived_quantities_for_the_example_configuration() {
        let p = example_params();
        assert_eq!((p.p, p.eta, p.kappa, p.c, p.degree), (12, 4, 2, 5, 4));
        assert_eq!(p.min_groups(), 5);
        assert_eq!(p.points.len(), 5);
        assert_eq!(p.points[0], -1.0);
        assert_eq!(p.points[4], 1.0);
        assert!(!p.degenerate_gc());
    }

    #[test]
    fn derived_quantities_for_a_wide_configuration() {
        let p = derive_params(1, 1, 15, 6, 1, 1, 5 * 25, PointRule::Equidistant).unwrap();
        assert_eq!((p.p, p.eta, p.kappa, p.degree), (30, 5, 1, 10));
    }

    #[test]
    fn divisor_delta_is_flagged_degenerate() {
        let p = derive_params(1, 1, 4, 2, 1, 1, 2 * 10, PointRule::Equidistant).unwrap();
        assert_eq!((p.p, p.eta, p.kappa), (4, 2, 0));
        assert!(p.degenerate_gc());
    }

    #[test]
    fn validation_errors_name_the_offender() {
        assert!(matches!(
            derive_params(1, 1, 4, 5, 1, 1, 20, PointRule::Equidistant),
            Err(Error::Parameter { name: "delta_p", .. })
        ));
        assert!(matches!(
            derive_params(2, 1, 4, 3, 3, 1, 20, PointRule::Equidistant),
            Err(Error::Parameter { name: "m", .. })
        ));
        assert!(matches!(
            derive_params(1, 1, 4, 3, 1, 1, 21, PointRule::Equidistant),
            Err(Error::Parameter { name: "n_workers", .. })
        ));
        // c = 4 < 5 required groups.
        assert!(matches!(
            derive_params(1, 1, 4, 3, 1, 1, 16, PointRule::Equidistant),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn random_points_are_distinct_and_seeded() {
        let a = derive_params(1, 1, 4, 3, 1, 1, 20, PointRule::UniformRandom { seed: 5 }).unwrap();
        let b = derive_params(1, 1, 4, 3, 1, 1, 20, PointRule::UniformRandom { seed: 5 }).unwrap();
        assert_eq!(a.points, b.points);
        assert!(points_distinct(&a.points));
        assert!(a.points.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn assignments_cover_cyclic_windows() {
        let params = example_params();
        let h = crate::gradcode::construct_gc_matrix(4, 2, 0).unwrap();
        let workers = worker_assignments(&params, &h).unwrap();
        assert_eq!(workers.len(), 20);
        // Worker (group 3, slot 2) has window {2, 3, 0} and point x_3.
        let w = &workers[3 * 4 + 2];
        assert_eq!((w.group, w.slot), (3, 2));
        assert_eq!(w.p_indices, vec![2, 3, 0]);
        assert_eq!(w.point, params.points[3]);
        assert_eq!(w.h_row, h.row(2));
        assert_eq!(w.m_indices, vec![0]);
    }

    #[test]
    fn assignments_reject_mismatched_gc_matrix() {
        let params = example_params();
        let wrong = crate::gradcode::construct_gc_matrix(4, 1, 0).unwrap();
        assert!(matches!(
            worker_assignments(&params, &wrong),
            Err(Error::Parameter { name: "gc_matrix", .. })
        ));
    }

    #[test]
    fn scalar_encoders_match_the_closed_form() {
        // delta_p = 2, k_a = k_b = 1, kp = 2, scalar blocks.
        let params = derive_params(1, 1, 2, 2, 1, 1, 3, PointRule::Equidistant).unwrap();
        assert_eq!((params.p, params.eta), (2, 1));
        let a = BlockMatrix::from_dense(2, 1, vec![3.0, 5.0]).unwrap();
        let b = BlockMatrix::from_dense(2, 1, vec![7.0, 11.0]).unwrap();
        let a_grid = partition_grid(&a, 2, 1).unwrap();
        let b_grid = partition_grid(&b, 2, 1).unwrap();
        let x = 0.75;
        // Abar = A_0 + x A_1; Bbar = x B_0 + B_1.
        let enc_a = encode_a(&a_grid, x, 0, 0, &params).unwrap();
        let enc_b = encode_b(&b_grid, x, 0, 0, &params).unwrap();
        assert!((enc_a.get(0, 0) - (3.0 + x * 5.0)).abs() < 1e-15);
        assert!((enc_b.get(0, 0) - (x * 7.0 + 11.0)).abs() < 1e-15);
    }

    #[test]
    fn encoder_weights_count_combined_blocks() {
        // Sparse blocks with disjoint patterns: the encoded tile's nonzero
        // count is the sum over the delta_p * k_a combined blocks.
        let params = derive_params(2, 1, 4, 3, 2, 1, 14 * 4, PointRule::Equidistant).unwrap();
        assert_eq!((params.p, params.eta), (12, 4));
        let a = BlockMatrix::identity(12 * 2); // beta = 24, alpha = 24... identity keeps blocks sparse
        let a_grid = partition_grid(&a, 12, 2).unwrap();
        let enc = encode_a(&a_grid, 0.5, 0, 0, &params).unwrap();
        // Combines delta_p * k_a = 6 blocks.
        assert_eq!(params.delta_p * params.k_a, 6);
        assert!(enc.is_sparse());
    }

    #[test]
    fn encode_rejects_out_of_range_indices() {
        let params = example_params();
        let a = BlockMatrix::zeros(24, 24);
        let grid = partition_grid(&a, 12, 1).unwrap();
        assert!(matches!(
            encode_a(&grid, 0.5, 4, 0, &params),
            Err(Error::Parameter { name: "p_tilde", .. })
        ));
        assert!(matches!(
            encode_a(&grid, 0.5, 0, 1, &params),
            Err(Error::Parameter { name: "m_tilde", .. })
        ));
        // Wrong grid shape for B.
        assert!(matches!(
            encode_b(&grid, 0.5, 0, 0, &derive_params(1, 2, 4, 3, 1, 2, 32, PointRule::Equidistant).unwrap()),
            Err(Error::Parameter { name: "b_grid", .. })
        ));
    }

    #[test]
    fn worker_output_matches_a_direct_evaluation() {
        // Scalar blocks so the polynomial identity can be checked by hand.
        let params = example_params();
        let h = crate::gradcode::construct_gc_matrix(4, 2, 0).unwrap();
        let workers = worker_assignments(&params, &h).unwrap();
        let a = BlockMatrix::random_sparse(12, 1, 1.0, 1).unwrap();
        let b = BlockMatrix::random_sparse(12, 1, 1.0, 2).unwrap();
        let a_grid = partition_grid(&a, 12, 1).unwrap();
        let b_grid = partition_grid(&b, 12, 1).unwrap();

        let w = &workers[2 * 4 + 1]; // group 2, slot 1
        let result = worker_compute(w, &a_grid, &b_grid, &params).unwrap();
        let x = w.point;

        let mut expected = 0.0;
        for &pt in &w.p_indices {
            let abar: f64 = (0..3).map(|l| x.powi(l as i32) * a.get(3 * pt + l, 0)).sum();
            let bbar: f64 = (0..3).map(|l| x.powi((2 - l) as i32) * b.get(3 * pt + l, 0)).sum();
            expected += w.h_row[pt] * abar * bbar;
        }
        let got = result.outputs[&(0, 0)].get(0, 0);
        assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn op_count_matches_the_reference_loop_on_dense_blocks() {
        // Block shape 2x2 everywhere: alpha = 2m, beta = 2p, gamma = 2n.
        let params = derive_params(1, 1, 4, 3, 1, 1, 20, PointRule::Equidistant).unwrap();
        let h = crate::gradcode::construct_gc_matrix(4, 2, 0).unwrap();
        let workers = worker_assignments(&params, &h).unwrap();
        let beta = 2 * params.p;
        let a = BlockMatrix::from_dense(beta, 2, (0..beta * 2).map(|i| i as f64).collect()).unwrap();
        let b = BlockMatrix::from_dense(beta, 2, (0..beta * 2).map(|i| (i as f64).cos()).collect()).unwrap();
        let a_grid = partition_grid(&a, params.p, 1).unwrap();
        let b_grid = partition_grid(&b, params.p, 1).unwrap();
        let result = worker_compute(&workers[0], &a_grid, &b_grid, &params).unwrap();
        // Each of the |window| * |m tiles| * |n tiles| products runs the
        // 2x2x2 triple loop with a multiply and an add per cell.
        let tasks = (params.kappa + 1) as u64;
        assert_eq!(result.op_count, tasks * (2 * 2 * 2 * 2));
    }

    #[test]
    fn stored_entry_counts_match_the_storage_fractions() {
        let params = derive_params(2, 2, 4, 3, 2, 2, 14 * 4, PointRule::Equidistant).unwrap();
        let (alpha, beta, gamma) = (24, 24, 24);
        let a = BlockMatrix::random_sparse(beta, alpha, 0.5, 3).unwrap();
        let b = BlockMatrix::random_sparse(beta, gamma, 0.5, 4).unwrap();
        let a_grid = partition_grid(&a, params.p, params.m).unwrap();
        let b_grid = partition_grid(&b, params.p, params.n).unwrap();
        let h = crate::gradcode::construct_gc_matrix(params.eta, params.kappa, 0).unwrap();
        let workers = worker_assignments(&params, &h).unwrap();
        let encoding = encode_worker(&workers[5], &a_grid, &b_grid, &params).unwrap();
        assert_eq!(encoding.stored_entries_a(), alpha * beta / (params.k_a * params.kp));
        assert_eq!(encoding.stored_entries_b(), beta * gamma / (params.k_b * params.kp));
    }
}
