//! Decoding: combine each group's survivors, interpolate across groups, and
//! read the product blocks off the useful polynomial coefficients.
//!
//! After the gradient-code combination inside group `i`, the group's value
//! for output tile `(mt, nt)` is a single polynomial evaluation
//!
//! ```text
//!   q(x_i) = sum_{pt} Abar^T(x_i, pt, mt) * Bbar(x_i, pt, nt)
//! ```
//!
//! whose coefficient at the *useful* exponent
//! `e(s, u) = delta_p - 1 + s*delta_p + u*delta_p*k_a` is exactly block
//! `(k_a*mt + s, k_b*nt + u)` of the `m x n` grid of `A^T B`. Every other
//! coefficient is interference: diagonal-offset products `A^T[l' + off] *
//! B[l']` with both indices inside the same `delta_p` window. Interference
//! exponents stay within the degree bound and never collide with useful
//! ones, so interpolating `q` from `degree + 1` distinct points recovers the
//! product exactly.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gradcode::{combine_vector, GcMatrix};
use crate::linalg;
use crate::matrix::{transpose_multiply, BlockGrid, BlockMatrix};
use crate::scheme::{SchemeParams, WorkerResult};

// ---------------------------------------------------------------------------
// Exponent layout
// ---------------------------------------------------------------------------

/// Exponent carrying block `(s, u)` of the per-tile product:
/// `delta_p - 1 + s*delta_p + u*delta_p*k_a`.
pub fn useful_exponent(k_a: usize, delta_p: usize, s: usize, u: usize) -> usize {
    delta_p - 1 + s * delta_p + u * delta_p * k_a
}

/// Exhaustive description of where useful and interference coefficients land.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentAudit {
    /// Useful exponents in `(s, u)` iteration order (`u` outer, `s` inner).
    pub useful: Vec<usize>,
    /// Sorted, deduplicated interference exponents.
    pub interference: Vec<usize>,
    /// Interpolation degree `k_a*k_b*delta_p + delta_p - 2`.
    pub degree: usize,
    /// Useful exponents are pairwise distinct.
    pub distinct_useful: bool,
    /// No interference exponent equals a useful one.
    pub disjoint: bool,
    /// Every exponent of either kind is at most `degree`.
    pub within_degree: bool,
}

/// Enumerate all useful and interference exponents for the given splits and
/// check the separation properties the decoder relies on.
pub fn exponent_audit(k_a: usize, k_b: usize, delta_p: usize) -> ExponentAudit {
    assert!(k_a >= 1 && k_b >= 1 && delta_p >= 1);
    let degree = k_a * k_b * delta_p + delta_p - 2;
    let mut useful = Vec::with_capacity(k_a * k_b);
    for u in 0..k_b {
        for s in 0..k_a {
            useful.push(useful_exponent(k_a, delta_p, s, u));
        }
    }
    let mut interference = Vec::new();
    for &e in &useful {
        for off in 1..delta_p {
            interference.push(e + off);
            // e >= delta_p - 1 >= off, so the negative offset never
            // underflows.
            interference.push(e - off);
        }
    }
    interference.sort_unstable();
    interference.dedup();

    let mut sorted = useful.clone();
    sorted.sort_unstable();
    let distinct_useful = sorted.windows(2).all(|w| w[0] != w[1]);
    let disjoint = interference
        .iter()
        .all(|e| sorted.binary_search(e).is_err());
    let within_degree = useful.iter().chain(&interference).all(|&e| e <= degree);

    ExponentAudit {
        useful,
        interference,
        degree,
        distinct_useful,
        disjoint,
        within_degree,
    }
}

// ---------------------------------------------------------------------------
// Group combination
// ---------------------------------------------------------------------------

/// One group's combined value: the polynomial `q` evaluated at the group's
/// point, one matrix per output tile.
#[derive(Debug, Clone)]
pub struct GroupValue {
    /// Group index.
    pub group: usize,
    /// The group's evaluation point.
    pub point: f64,
    /// Number of worker results consumed by the combination.
    pub survivors: usize,
    /// Combined tiles keyed by `(m_tilde, n_tilde)`.
    pub tiles: BTreeMap<(usize, usize), BlockMatrix>,
}

/// Combine one group's surviving workers with gradient-code weights so the
/// window structure cancels and a clean polynomial evaluation remains.
pub fn group_combine(
    params: &SchemeParams,
    h: &GcMatrix,
    results: &[WorkerResult],
) -> Result<GroupValue> {
    let refs: Vec<&WorkerResult> = results.iter().collect();
    combine_refs(params, h, &refs)
}

fn combine_refs(
    params: &SchemeParams,
    h: &GcMatrix,
    results: &[&WorkerResult],
) -> Result<GroupValue> {
    let first = results.first().ok_or(Error::Parameter {
        name: "results",
        message: "group combination needs at least one worker result".into(),
    })?;
    let group = first.group;
    if group >= params.c {
        return Err(Error::Parameter {
            name: "group",
            message: format!("group index {group} out of range 0..{}", params.c),
        });
    }
    let mut slots = Vec::with_capacity(results.len());
    for r in results {
        if r.group != group {
            return Err(Error::Parameter {
                name: "results",
                message: format!("mixed groups {group} and {} in one combination", r.group),
            });
        }
        if r.slot >= params.eta {
            return Err(Error::Parameter {
                name: "slot",
                message: format!("slot {} out of range 0..{}", r.slot, params.eta),
            });
        }
        if slots.contains(&r.slot) {
            return Err(Error::Parameter {
                name: "results",
                message: format!("duplicate result for worker slot {}", r.slot),
            });
        }
        slots.push(r.slot);
        if r.outputs.len() != first.outputs.len()
            || !r.outputs.keys().eq(first.outputs.keys())
        {
            return Err(Error::Parameter {
                name: "results",
                message: "workers disagree on output tile keys".into(),
            });
        }
    }
    let need = params.eta - params.kappa;
    if slots.len() < need {
        return Err(Error::InsufficientGroup {
            group,
            got: slots.len(),
            need,
        });
    }

    let combine = combine_vector(h, &slots)?;
    let mut tiles = BTreeMap::new();
    for key in first.outputs.keys() {
        let terms: Vec<(f64, &BlockMatrix)> = results
            .iter()
            .map(|r| (combine.coeffs[r.slot], &r.outputs[key]))
            .collect();
        tiles.insert(*key, BlockMatrix::scaled_sum(&terms)?);
    }
    Ok(GroupValue {
        group,
        point: params.points[group],
        survivors: slots.len(),
        tiles,
    })
}

// ---------------------------------------------------------------------------
// Interpolation and extraction
// ---------------------------------------------------------------------------

/// How the polynomial coefficients are recovered from group values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationMode {
    /// Exact interpolation through the `degree + 1` qualified groups with
    /// the lowest indices; any further groups are ignored.
    ExactLowest,
    /// Least-squares fit through every qualified group; with more than
    /// `degree + 1` groups this averages redundant evaluations.
    LeastSquaresAll,
}

/// Product blocks recovered from interpolated coefficients.
#[derive(Debug, Clone)]
pub struct Interpolation {
    /// Blocks of the `m x n` product grid keyed by
    /// `(k_a*mt + s, k_b*nt + u)`.
    pub blocks: BTreeMap<(usize, usize), BlockMatrix>,
    /// Estimated condition number of the interpolation system.
    pub condition: f64,
    /// Group indices actually used, ascending.
    pub groups_used: Vec<usize>,
    /// Worker results consumed by the used groups.
    pub survivors_used: usize,
}

/// Interpolate the tile polynomials from combined group values and extract
/// the useful coefficients.
pub fn interpolate_and_extract(
    params: &SchemeParams,
    groups: &[GroupValue],
    mode: InterpolationMode,
) -> Result<Interpolation> {
    let mut ordered: Vec<&GroupValue> = groups.iter().collect();
    ordered.sort_by_key(|g| g.group);
    for pair in ordered.windows(2) {
        if pair[0].group == pair[1].group {
            return Err(Error::Parameter {
                name: "groups",
                message: format!("duplicate value for group {}", pair[0].group),
            });
        }
    }
    let need = params.degree + 1;
    if ordered.len() < need {
        return Err(Error::InsufficientPoints {
            got: ordered.len(),
            need,
        });
    }
    if mode == InterpolationMode::ExactLowest {
        ordered.truncate(need);
    }

    let points: Vec<f64> = ordered.iter().map(|g| g.point).collect();
    let v = linalg::vandermonde(&points, params.degree);

    // One factorization serves every extracted coefficient.
    enum Solver {
        // Row e of V^{-1} solves V^T w = unit_e.
        Exact(linalg::PivotedLu),
        // Row e of the pseudoinverse is V * z with (V^T V) z = unit_e.
        LeastSquares {
            v: nalgebra::DMatrix<f64>,
            gram_lu: linalg::PivotedLu,
        },
    }
    let (solver, condition) = match mode {
        InterpolationMode::ExactLowest => (
            Solver::Exact(linalg::PivotedLu::new(v.transpose())?),
            linalg::condition_via_iteration(&v)?,
        ),
        InterpolationMode::LeastSquaresAll => (
            Solver::LeastSquares {
                gram_lu: linalg::PivotedLu::new(v.transpose() * &v)?,
                v: v.clone(),
            },
            linalg::condition_gram(&v)?,
        ),
    };
    let extraction_row = |e: usize| -> Result<Vec<f64>> {
        let mut unit = DVector::zeros(params.degree + 1);
        unit[e] = 1.0;
        let w = match &solver {
            Solver::Exact(lu) => lu.solve(&unit)?,
            Solver::LeastSquares { v, gram_lu } => v * gram_lu.solve(&unit)?,
        };
        Ok(w.iter().copied().collect())
    };

    let mut blocks = BTreeMap::new();
    for u in 0..params.k_b {
        for s in 0..params.k_a {
            let w = extraction_row(useful_exponent(params.k_a, params.delta_p, s, u))?;
            for mt in 0..params.m / params.k_a {
                for nt in 0..params.n / params.k_b {
                    let terms: Vec<(f64, &BlockMatrix)> = ordered
                        .iter()
                        .zip(&w)
                        .map(|(g, &wg)| (wg, &g.tiles[&(mt, nt)]))
                        .collect();
                    blocks.insert(
                        (params.k_a * mt + s, params.k_b * nt + u),
                        BlockMatrix::scaled_sum(&terms)?,
                    );
                }
            }
        }
    }
    Ok(Interpolation {
        blocks,
        condition,
        groups_used: ordered.iter().map(|g| g.group).collect(),
        survivors_used: ordered.iter().map(|g| g.survivors).sum(),
    })
}

/// Stitch extracted product blocks back into the full `A^T B`.
pub fn assemble(
    params: &SchemeParams,
    blocks: BTreeMap<(usize, usize), BlockMatrix>,
) -> Result<BlockMatrix> {
    let mut ordered = Vec::with_capacity(params.m * params.n);
    let mut blocks = blocks;
    for row in 0..params.m {
        for col in 0..params.n {
            let block = blocks.remove(&(row, col)).ok_or(Error::Parameter {
                name: "blocks",
                message: format!("missing product block ({row}, {col})"),
            })?;
            ordered.push(block);
        }
    }
    Ok(BlockGrid::from_blocks(params.m, params.n, ordered)?.assemble())
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// Outcome of a full decode.
#[derive(Debug, Clone)]
pub struct DecodeReport {
    /// The recovered `A^T B`.
    pub product: BlockMatrix,
    /// Group indices whose combined values entered the interpolation.
    pub groups_used: Vec<usize>,
    /// Worker results consumed by those groups.
    pub survivors_used: usize,
    /// Estimated condition number of the interpolation system.
    pub vandermonde_condition: f64,
    /// All recovered entries are finite and the system was well posed.
    pub success: bool,
}

/// Decode the product from an arbitrary set of surviving worker results.
///
/// Groups with fewer than `eta - kappa` survivors are set aside (they cannot
/// be combined); at least `degree + 1` qualified groups must remain.
pub fn decode(
    params: &SchemeParams,
    h: &GcMatrix,
    results: &[WorkerResult],
    mode: InterpolationMode,
) -> Result<DecodeReport> {
    let mut by_group: BTreeMap<usize, Vec<&WorkerResult>> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for r in results {
        if r.group >= params.c || r.slot >= params.eta {
            return Err(Error::Parameter {
                name: "results",
                message: format!(
                    "worker (group {}, slot {}) outside the {} x {} layout",
                    r.group, r.slot, params.c, params.eta
                ),
            });
        }
        if !seen.insert((r.group, r.slot)) {
            return Err(Error::Parameter {
                name: "results",
                message: format!("duplicate result for worker ({}, {})", r.group, r.slot),
            });
        }
        by_group.entry(r.group).or_default().push(r);
    }

    let need_per_group = params.eta - params.kappa;
    let qualified: Vec<(usize, &Vec<&WorkerResult>)> = by_group
        .iter()
        .filter(|(_, members)| members.len() >= need_per_group)
        .map(|(g, members)| (*g, members))
        .collect();
    let need = params.degree + 1;
    if qualified.len() < need {
        return Err(Error::InsufficientPoints {
            got: qualified.len(),
            need,
        });
    }
    let selected: &[(usize, &Vec<&WorkerResult>)] = match mode {
        InterpolationMode::ExactLowest => &qualified[..need],
        InterpolationMode::LeastSquaresAll => &qualified[..],
    };

    let mut groups = Vec::with_capacity(selected.len());
    for (_, members) in selected {
        groups.push(combine_refs(params, h, members)?);
    }
    let interpolation = interpolate_and_extract(params, &groups, mode)?;
    let condition = interpolation.condition;
    let groups_used = interpolation.groups_used.clone();
    let survivors_used = interpolation.survivors_used;
    let product = assemble(params, interpolation.blocks)?;
    let finite = product.iter_nonzero().all(|(_, _, v)| v.is_finite());
    Ok(DecodeReport {
        product,
        groups_used,
        survivors_used,
        vandermonde_condition: condition,
        success: finite && condition.is_finite(),
    })
}

// ---------------------------------------------------------------------------
// Interference oracle
// ---------------------------------------------------------------------------

/// Directly evaluate the interference part of the tile polynomial at `x`:
/// every diagonal-offset product `A^T[l' + off] * B[l']` whose two indices
/// share a `delta_p` window, weighted by `x^(e(s, u) + off)`.
///
/// Together with the useful part this reproduces the encoded evaluation
/// exactly; the decomposition is what the exponent separation audit keeps
/// honest.
pub fn interference_term(
    a_grid: &BlockGrid,
    b_grid: &BlockGrid,
    params: &SchemeParams,
    m_tilde: usize,
    n_tilde: usize,
    x: f64,
) -> Result<BlockMatrix> {
    let shape = (
        a_grid.block_shape().1, // alpha / m
        b_grid.block_shape().1, // gamma / n
    );
    let mut owned: Vec<(f64, BlockMatrix)> = Vec::new();
    for offset in 1..params.delta_p as isize {
        for signed in [offset, -offset] {
            for s in 0..params.k_a {
                for u in 0..params.k_b {
                    let e = useful_exponent(params.k_a, params.delta_p, s, u) as isize;
                    let coeff = x.powi((e + signed) as i32);
                    for l in 0..params.p as isize {
                        let shifted = l + signed;
                        if shifted < 0 || shifted >= params.p as isize {
                            continue;
                        }
                        // Both indices must sit in the same delta_p window.
                        if shifted / params.delta_p as isize != l / params.delta_p as isize {
                            continue;
                        }
                        let product = transpose_multiply(
                            a_grid.block(shifted as usize, params.k_a * m_tilde + s),
                            b_grid.block(l as usize, params.k_b * n_tilde + u),
                        )?;
                        owned.push((coeff, product.matrix));
                    }
                }
            }
        }
    }
    if owned.is_empty() {
        return Ok(BlockMatrix::zeros(shape.0, shape.1));
    }
    let terms: Vec<(f64, &BlockMatrix)> = owned.iter().map(|(c, m)| (*c, m)).collect();
    BlockMatrix::scaled_sum(&terms)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcode::construct_gc_matrix;
    use crate::matrix::partition_grid;
    use crate::scheme::{
        derive_params, encode_a, encode_b, worker_assignments, worker_compute, PointRule,
    };

    fn scalar(v: f64) -> BlockMatrix {
        BlockMatrix::from_dense(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn exponent_audit_separates_useful_from_interference() {
        let audit = exponent_audit(2, 2, 3);
        assert_eq!(audit.useful, vec![2, 5, 8, 11]);
        assert_eq!(audit.degree, 13);
        assert!(audit.distinct_useful && audit.disjoint && audit.within_degree);
        assert_eq!(
            audit.interference,
            vec![0, 1, 3, 4, 6, 7, 9, 10, 12, 13]
        );

        // No interference at all when whole windows collapse to one block.
        let trivial = exponent_audit(3, 2, 1);
        assert!(trivial.interference.is_empty());
        assert_eq!(trivial.useful, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn extraction_reads_the_linear_coefficient_of_a_known_polynomial() {
        // k_a = k_b = 1, delta_p = 2: the useful exponent is 1 and the
        // degree is 2. Feed q(x) = 3 + 5x + 7x^2 at the points {-1, 0, 1}.
        let params = derive_params(1, 1, 2, 2, 1, 1, 3, PointRule::Equidistant).unwrap();
        let q = |x: f64| 3.0 + 5.0 * x + 7.0 * x * x;
        let groups: Vec<GroupValue> = (0..3)
            .map(|g| GroupValue {
                group: g,
                point: params.points[g],
                survivors: 1,
                tiles: [((0, 0), scalar(q(params.points[g])))].into(),
            })
            .collect();
        let out = interpolate_and_extract(&params, &groups, InterpolationMode::ExactLowest).unwrap();
        assert!((out.blocks[&(0, 0)].get(0, 0) - 5.0).abs() < 1e-12);
        assert_eq!(out.groups_used, vec![0, 1, 2]);
        assert_eq!(out.survivors_used, 3);
        assert!(out.condition >= 1.0);
    }

    #[test]
    fn least_squares_mode_uses_every_group_consistently() {
        let params = derive_params(1, 1, 2, 2, 1, 1, 5, PointRule::Equidistant).unwrap();
        assert_eq!(params.c, 5);
        let q = |x: f64| 3.0 + 5.0 * x + 7.0 * x * x;
        let groups: Vec<GroupValue> = (0..5)
            .map(|g| GroupValue {
                group: g,
                point: params.points[g],
                survivors: 1,
                tiles: [((0, 0), scalar(q(params.points[g])))].into(),
            })
            .collect();
        let ls =
            interpolate_and_extract(&params, &groups, InterpolationMode::LeastSquaresAll).unwrap();
        assert!((ls.blocks[&(0, 0)].get(0, 0) - 5.0).abs() < 1e-12);
        assert_eq!(ls.groups_used, vec![0, 1, 2, 3, 4]);

        let exact =
            interpolate_and_extract(&params, &groups, InterpolationMode::ExactLowest).unwrap();
        assert_eq!(exact.groups_used, vec![0, 1, 2]);
    }

    /// Shared fixture: the overlapping configuration with p = 12, eta = 4,
    /// kappa = 2, c = 5 and random rectangular inputs.
    fn example_fixture() -> (
        crate::scheme::SchemeParams,
        GcMatrix,
        Vec<crate::scheme::WorkerAssignment>,
        BlockMatrix,
        BlockMatrix,
    ) {
        let params = derive_params(1, 1, 4, 3, 1, 1, 20, PointRule::Equidistant).unwrap();
        let h = construct_gc_matrix(params.eta, params.kappa, 7).unwrap();
        let workers = worker_assignments(&params, &h).unwrap();
        let a = BlockMatrix::random_sparse(12, 2, 1.0, 11).unwrap();
        let b = BlockMatrix::random_sparse(12, 3, 1.0, 12).unwrap();
        (params, h, workers, a, b)
    }

    fn run_all_workers(
        workers: &[crate::scheme::WorkerAssignment],
        a: &BlockMatrix,
        b: &BlockMatrix,
        params: &crate::scheme::SchemeParams,
    ) -> Vec<WorkerResult> {
        let a_grid = partition_grid(a, params.p, params.m).unwrap();
        let b_grid = partition_grid(b, params.p, params.n).unwrap();
        workers
            .iter()
            .map(|w| worker_compute(w, &a_grid, &b_grid, params).unwrap())
            .collect()
    }

    #[test]
    fn full_pipeline_recovers_the_product() {
        let (params, h, workers, a, b) = example_fixture();
        let results = run_all_workers(&workers, &a, &b, &params);
        let report = decode(&params, &h, &results, InterpolationMode::ExactLowest).unwrap();
        let reference = transpose_multiply(&a, &b).unwrap().matrix;
        let err = crate::matrix::BlockMatrix::scaled_sum(&[
            (1.0, &report.product),
            (-1.0, &reference),
        ])
        .unwrap()
        .frobenius_norm()
            / reference.frobenius_norm();
        assert!(err < 1e-9, "relative error {err:.3e}");
        assert!(report.success);
        assert_eq!(report.groups_used, vec![0, 1, 2, 3, 4]);
        assert_eq!(report.survivors_used, 20);
    }

    #[test]
    fn stragglers_within_tolerance_do_not_change_the_answer() {
        let (params, h, workers, a, b) = example_fixture();
        let all = run_all_workers(&workers, &a, &b, &params);
        let full = decode(&params, &h, &all, InterpolationMode::ExactLowest).unwrap();

        // Drop two workers from group 1 and two from group 3: each group
        // keeps eta - kappa = 2 survivors.
        let survivors: Vec<WorkerResult> = all
            .iter()
            .filter(|r| !(r.group == 1 && r.slot <= 1) && !(r.group == 3 && r.slot >= 2))
            .cloned()
            .collect();
        let partial = decode(&params, &h, &survivors, InterpolationMode::ExactLowest).unwrap();
        assert_eq!(partial.survivors_used, 20 - 4);

        let diff = BlockMatrix::scaled_sum(&[(1.0, &full.product), (-1.0, &partial.product)])
            .unwrap()
            .frobenius_norm()
            / full.product.frobenius_norm();
        assert!(diff < 1e-10, "survivor-set dependence {diff:.3e}");
    }

    #[test]
    fn too_few_survivors_in_a_group_is_an_error() {
        let (params, h, workers, a, b) = example_fixture();
        let all = run_all_workers(&workers, &a, &b, &params);
        let group0: Vec<WorkerResult> =
            all.iter().filter(|r| r.group == 0).cloned().collect();
        assert!(group_combine(&params, &h, &group0).is_ok());
        assert!(matches!(
            group_combine(&params, &h, &group0[..1]),
            Err(Error::InsufficientGroup { group: 0, got: 1, need: 2 })
        ));

        let mut duplicated = group0.clone();
        duplicated.push(group0[0].clone());
        assert!(matches!(
            group_combine(&params, &h, &duplicated),
            Err(Error::Parameter { name: "results", .. })
        ));
    }

    #[test]
    fn too_few_qualified_groups_is_an_error() {
        let (params, h, workers, a, b) = example_fixture();
        let all = run_all_workers(&workers, &a, &b, &params);
        // Group 4 keeps a single survivor: 1 < eta - kappa, so only four
        // groups qualify while five are needed.
        let survivors: Vec<WorkerResult> = all
            .iter()
            .filter(|r| r.group != 4 || r.slot == 0)
            .cloned()
            .collect();
        assert_eq!(survivors.len(), 17);
        assert!(matches!(
            decode(&params, &h, &survivors, InterpolationMode::ExactLowest),
            Err(Error::InsufficientPoints { got: 4, need: 5 })
        ));
    }

    #[test]
    fn encoded_evaluation_splits_into_useful_plus_interference() {
        // Scalar blocks, two output tiles on the A side: p = 6, delta_p = 2,
        // k_a = 2, k_b = 1, m = 2, n = 1.
        let params = derive_params(2, 1, 3, 2, 2, 1, 3 * 5, PointRule::Equidistant).unwrap();
        assert_eq!((params.p, params.eta, params.kappa), (6, 3, 1));
        let a = BlockMatrix::random_sparse(6, 2, 1.0, 21).unwrap();
        let b = BlockMatrix::random_sparse(6, 1, 1.0, 22).unwrap();
        let a_grid = partition_grid(&a, 6, 2).unwrap();
        let b_grid = partition_grid(&b, 6, 1).unwrap();
        let product = transpose_multiply(&a, &b).unwrap().matrix; // 2 x 1
        let product_grid = partition_grid(&product, 2, 1).unwrap();

        let x = 0.37;
        let (m_tilde, n_tilde) = (0, 0);
        let mut encoded = 0.0;
        for pt in 0..params.eta {
            let ea = encode_a(&a_grid, x, pt, m_tilde, &params).unwrap();
            let eb = encode_b(&b_grid, x, pt, n_tilde, &params).unwrap();
            encoded += crate::matrix::multiply(&ea, &eb).unwrap().matrix.get(0, 0);
        }

        let mut useful = 0.0;
        for s in 0..params.k_a {
            for u in 0..params.k_b {
                let e = useful_exponent(params.k_a, params.delta_p, s, u);
                useful += x.powi(e as i32)
                    * product_grid
                        .block(params.k_a * m_tilde + s, params.k_b * n_tilde + u)
                        .get(0, 0);
            }
        }
        let interference =
            interference_term(&a_grid, &b_grid, &params, m_tilde, n_tilde, x)
                .unwrap()
                .get(0, 0);
        let scale = encoded.abs().max(1.0);
        assert!(
            (encoded - useful - interference).abs() <= 1e-12 * scale,
            "decomposition residual {:.3e}",
            (encoded - useful - interference).abs()
        );
        assert!(interference.abs() > 1e-6, "fixture should exercise interference");
    }

    #[test]
    fn no_interference_when_windows_are_single_blocks() {
        let params = derive_params(2, 1, 3, 1, 2, 1, 3 * 4, PointRule::Equidistant).unwrap();
        assert_eq!(params.delta_p, 1);
        let a = BlockMatrix::random_sparse(3, 2, 1.0, 31).unwrap();
        let b = BlockMatrix::random_sparse(3, 1, 1.0, 32).unwrap();
        let a_grid = partition_grid(&a, 3, 2).unwrap();
        let b_grid = partition_grid(&b, 3, 1).unwrap();
        let term = interference_term(&a_grid, &b_grid, &params, 0, 0, 0.9).unwrap();
        assert_eq!(term.nnz(), 0);
    }

    #[test]
    fn assemble_requires_every_block() {
        let params = derive_params(1, 1, 2, 2, 2, 1, 3, PointRule::Equidistant).unwrap();
        let mut blocks = BTreeMap::new();
        blocks.insert((0, 0), scalar(1.0));
        assert!(matches!(
            assemble(&params, blocks),
            Err(Error::Parameter { name: "blocks", .. })
        ));
    }
}
