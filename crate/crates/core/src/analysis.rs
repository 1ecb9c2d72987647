//! Recovery thresholds, decodability, and the metrics used to compare
//! schemes.
//!
//! The central quantity is the recovery threshold `tau`: the smallest
//! worker count such that *any* set of `tau` finished workers decodes the
//! product. For the grouped scheme it is
//!
//! ```text
//!   tau = (p/delta_p - p/kp) * c + (p/kp) * (k_a*k_b*delta_p + delta_p - 2) + 1
//! ```
//!
//! because decoding needs `degree + 1` groups contributing at least
//! `eta - kappa` survivors each, and an adversary can spend
//! `(eta - kappa - 1)` workers in every other group without helping the
//! decoder. A brute-force oracle enumerates per-group occupancy vectors and
//! reproduces the closed form independently; decodability depends only on
//! occupancy because combined group values are survivor-independent.

use crate::error::{Error, Result};
use crate::linalg;
use crate::scheme::SchemeParams;

/// Hard cap on occupancy classes the brute-force oracle will enumerate.
/// Occupancy is permutation-invariant across groups, so the oracle walks
/// non-increasing vectors only: `C(c + eta, eta)` classes instead of
/// `(eta + 1)^c` raw vectors, which keeps the acceptance grid (groups into
/// the mid-twenties) enumerable.
const MAX_OCCUPANCY_CLASSES: u128 = 5_000_000;

// ---------------------------------------------------------------------------
// Threshold reports
// ---------------------------------------------------------------------------

/// Which coding scheme a [`ThresholdReport`] row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeTag {
    /// The grouped scheme implemented by this crate.
    GcEpc,
    /// Entangled polynomial code with storage split `kp` and column splits
    /// `k_a`, `k_b`; every worker has its own evaluation point.
    Epc,
    /// Inner-product partitioning only: `tau = 2p - 1`.
    MatDot,
    /// Entangled polynomial code without column redundancy
    /// (`tau = p*m*n + p - 1`).
    Ep,
    /// Pure column-split polynomial code (`tau = k_a * k_b`).
    Poly,
    /// Independent sub-codes over `delta_p`-block windows; requires
    /// `delta_p | kp`.
    Split,
}

impl SchemeTag {
    /// Stable lowercase tag used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeTag::GcEpc => "gc_epc",
            SchemeTag::Epc => "epc",
            SchemeTag::MatDot => "matdot",
            SchemeTag::Ep => "ep",
            SchemeTag::Poly => "poly",
            SchemeTag::Split => "split",
        }
    }
}

/// One scheme's threshold and cost summary at a given worker budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdReport {
    /// Scheme the row describes.
    pub scheme: SchemeTag,
    /// Column split of `A`.
    pub k_a: usize,
    /// Column split of `B`.
    pub k_b: usize,
    /// Storage split along the shared dimension.
    pub kp: usize,
    /// Blocks combined per encoded matrix.
    pub delta_p: usize,
    /// Shared-dimension block count.
    pub p: usize,
    /// Number of evaluation points (groups; equals `n_workers` for
    /// ungrouped schemes).
    pub c: usize,
    /// Total workers the row is evaluated against.
    pub n_workers: usize,
    /// Recovery threshold; `None` when the scheme cannot decode within
    /// `n_workers`.
    pub tau: Option<usize>,
    /// Degree of the decoding polynomial.
    pub degree: usize,
    /// Encoding weight of the `A` side.
    pub weight_a: usize,
    /// Encoding weight of the `B` side.
    pub weight_b: usize,
    /// Minimum number of evaluation points for decodability.
    pub c_min: usize,
}

impl ThresholdReport {
    /// Header matching [`ThresholdReport::csv_row`].
    pub const CSV_HEADER: &'static str =
        "scheme,kA,kB,kp,delta_p,p,c,N,tau,degree,weight_A,weight_B";

    /// One comma-separated row; an unachievable threshold prints as `N/A`.
    pub fn csv_row(&self) -> String {
        let tau = match self.tau {
            Some(t) => t.to_string(),
            None => "N/A".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scheme.as_str(),
            self.k_a,
            self.k_b,
            self.kp,
            self.delta_p,
            self.p,
            self.c,
            self.n_workers,
            tau,
            self.degree,
            self.weight_a,
            self.weight_b
        )
    }

    /// Re-evaluate the row against a worker budget: records `n_workers`
    /// (and, for ungrouped schemes, the matching point count) and blanks
    /// `tau` when it exceeds the budget.
    pub fn at_worker_budget(mut self, n_workers: usize) -> ThresholdReport {
        self.n_workers = n_workers;
        if matches!(
            self.scheme,
            SchemeTag::Epc | SchemeTag::MatDot | SchemeTag::Ep | SchemeTag::Poly
        ) {
            self.c = n_workers;
        }
        if self.tau.is_some_and(|t| t > n_workers) {
            self.tau = None;
        }
        self
    }
}

/// Threshold of the grouped scheme for a validated parameter set.
pub fn recovery_threshold(params: &SchemeParams) -> Result<ThresholdReport> {
    let c_min = params.degree + 1;
    if params.c < c_min {
        return Err(Error::Infeasible(format!(
            "need at least {c_min} groups for degree {}, got c={}",
            params.degree, params.c
        )));
    }
    let window = params.kappa + 1; // p / kp
    let tau = (params.eta - window) * params.c + window * params.degree + 1;
    debug_assert!(tau <= params.n_workers, "threshold exceeds worker count");
    Ok(ThresholdReport {
        scheme: SchemeTag::GcEpc,
        k_a: params.k_a,
        k_b: params.k_b,
        kp: params.kp,
        delta_p: params.delta_p,
        p: params.p,
        c: params.c,
        n_workers: params.n_workers,
        tau: Some(tau),
        degree: params.degree,
        weight_a: params.delta_p * params.k_a,
        weight_b: params.delta_p * params.k_b,
        c_min,
    })
}

/// The ungrouped reference schemes at matched storage parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Baselines {
    /// Inner-product split into `p` parts.
    pub matdot: ThresholdReport,
    /// `p x m` / `p x n` grid without column redundancy.
    pub ep: ThresholdReport,
    /// `kp` storage split with `k_a`, `k_b` column splits.
    pub epc: ThresholdReport,
    /// Column splits only.
    pub poly: ThresholdReport,
}

impl Baselines {
    /// The four rows in a stable order.
    pub fn rows(&self) -> [&ThresholdReport; 4] {
        [&self.matdot, &self.ep, &self.epc, &self.poly]
    }
}

/// Thresholds of the classical ungrouped schemes. Each row's worker budget
/// defaults to its own threshold (the minimum that decodes); use
/// [`ThresholdReport::at_worker_budget`] to place rows in a shared budget.
pub fn baseline_thresholds(
    k_a: usize,
    k_b: usize,
    kp: usize,
    p: usize,
    m: usize,
    n: usize,
) -> Result<Baselines> {
    for (name, v) in [("k_a", k_a), ("k_b", k_b), ("kp", kp), ("p", p), ("m", m), ("n", n)] {
        if v == 0 {
            return Err(Error::Parameter { name, message: "must be at least 1".into() });
        }
    }
    let ungrouped = |scheme, k_a, k_b, kp, tau: usize| ThresholdReport {
        scheme,
        k_a,
        k_b,
        kp,
        delta_p: kp,
        p: kp,
        c: tau,
        n_workers: tau,
        tau: Some(tau),
        degree: tau - 1,
        weight_a: kp * k_a,
        weight_b: kp * k_b,
        c_min: tau,
    };
    Ok(Baselines {
        matdot: ungrouped(SchemeTag::MatDot, 1, 1, p, 2 * p - 1),
        ep: ungrouped(SchemeTag::Ep, m, n, p, p * m * n + p - 1),
        epc: ungrouped(SchemeTag::Epc, k_a, k_b, kp, kp * k_a * k_b + kp - 1),
        poly: {
            let mut row = ungrouped(SchemeTag::Poly, k_a, k_b, 1, k_a * k_b);
            row.degree = k_a * k_b - 1;
            row
        },
    })
}

/// Threshold of the independent-split alternative: cut the `kp` storage
/// blocks into `kp / delta_p` disjoint windows, run one ungrouped code of
/// degree `D = k_a*k_b*delta_p + delta_p - 2` per window, and give each
/// window `c' = N * delta_p / kp` of the `N` workers. The adversary may
/// finish all workers outside one window plus `D` of its evaluations, so
/// `tau = N - c' + D + 1`.
pub fn split_scheme_threshold(
    k_a: usize,
    k_b: usize,
    kp: usize,
    delta_p: usize,
    n_workers: usize,
) -> Result<ThresholdReport> {
    for (name, v) in [
        ("k_a", k_a),
        ("k_b", k_b),
        ("kp", kp),
        ("delta_p", delta_p),
        ("n_workers", n_workers),
    ] {
        if v == 0 {
            return Err(Error::Parameter { name, message: "must be at least 1".into() });
        }
    }
    if !kp.is_multiple_of(delta_p) {
        return Err(Error::SplitInapplicable { delta_p, kp });
    }
    let sub_codes = kp / delta_p;
    if !n_workers.is_multiple_of(sub_codes) {
        return Err(Error::Parameter {
            name: "n_workers",
            message: format!(
                "the {sub_codes} independent sub-codes need equal shares of n_workers={n_workers}"
            ),
        });
    }
    let c_sub = n_workers / sub_codes;
    let degree = k_a * k_b * delta_p + delta_p - 2;
    let tau = (c_sub > degree).then_some(n_workers - c_sub + degree + 1);
    Ok(ThresholdReport {
        scheme: SchemeTag::Split,
        k_a,
        k_b,
        kp,
        delta_p,
        p: kp,
        c: c_sub,
        n_workers,
        tau,
        degree,
        weight_a: delta_p * k_a,
        weight_b: delta_p * k_b,
        c_min: degree + 1,
    })
}

/// Encoding weights (blocks combined per encoded matrix) for a scheme at
/// these parameters.
pub fn encoding_weight(params: &SchemeParams, scheme: SchemeTag) -> (usize, usize) {
    match scheme {
        SchemeTag::GcEpc | SchemeTag::Split => {
            (params.delta_p * params.k_a, params.delta_p * params.k_b)
        }
        SchemeTag::Epc | SchemeTag::Ep | SchemeTag::MatDot => {
            (params.kp * params.k_a, params.kp * params.k_b)
        }
        SchemeTag::Poly => (params.k_a, params.k_b),
    }
}

// ---------------------------------------------------------------------------
// Decodability and the brute-force oracle
// ---------------------------------------------------------------------------

/// Whether a per-group survivor count vector decodes: at least `degree + 1`
/// groups must each keep `eta - kappa` or more workers.
pub fn decodable(occupancy: &[usize], params: &SchemeParams) -> Result<bool> {
    if occupancy.len() != params.c {
        return Err(Error::Parameter {
            name: "occupancy",
            message: format!("expected {} groups, got {}", params.c, occupancy.len()),
        });
    }
    if let Some(&bad) = occupancy.iter().find(|&&o| o > params.eta) {
        return Err(Error::Parameter {
            name: "occupancy",
            message: format!("group occupancy {bad} exceeds group size {}", params.eta),
        });
    }
    let need_occ = params.eta - params.kappa;
    let qualified = occupancy.iter().filter(|&&o| o >= need_occ).count();
    Ok(qualified > params.degree)
}

/// Brute-force recovery threshold: `1 +` the largest total survivor count
/// over all *non-decodable* occupancy vectors. Decodability is invariant
/// under permuting groups, so only non-increasing occupancy vectors are
/// enumerated.
pub fn occupancy_threshold_oracle(params: &SchemeParams) -> Result<usize> {
    let classes = multiset_count(params.c, params.eta);
    if classes > MAX_OCCUPANCY_CLASSES {
        return Err(Error::OracleGuard(format!(
            "{classes} occupancy classes exceed the enumeration cap of {MAX_OCCUPANCY_CLASSES} \
             (c={}, eta={})",
            params.c, params.eta
        )));
    }

    let need_occ = params.eta - params.kappa;
    let need_groups = params.degree + 1;
    let mut best: Option<usize> = None;
    let mut occupancy = vec![0usize; params.c];
    enumerate_non_increasing(&mut occupancy, 0, params.eta, &mut |occ| {
        let qualified = occ.iter().filter(|&&o| o >= need_occ).count();
        if qualified < need_groups {
            let total: usize = occ.iter().sum();
            if best.is_none_or(|b| total > b) {
                best = Some(total);
            }
        }
    });
    let worst = best.ok_or_else(|| {
        Error::Infeasible("every occupancy vector decodes; threshold is vacuous".into())
    })?;
    Ok(worst + 1)
}

/// Number of non-increasing vectors in `{0..=eta}^c`.
fn multiset_count(c: usize, eta: usize) -> u128 {
    // C(c + eta, eta)
    let mut num: u128 = 1;
    for i in 0..eta as u128 {
        num = num.saturating_mul(c as u128 + eta as u128 - i);
    }
    let mut den: u128 = 1;
    for i in 1..=eta as u128 {
        den *= i;
    }
    num / den
}

fn enumerate_non_increasing(
    occupancy: &mut Vec<usize>,
    pos: usize,
    max_value: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos == occupancy.len() {
        visit(occupancy);
        return;
    }
    for v in 0..=max_value {
        occupancy[pos] = v;
        enumerate_non_increasing(occupancy, pos + 1, v, visit);
    }
}

// ---------------------------------------------------------------------------
// Conditioning
// ---------------------------------------------------------------------------

/// Condition estimate of the square Vandermonde on the first `degree + 1`
/// points; quantifies how hard the interpolation step is numerically.
pub fn vandermonde_condition(points: &[f64], degree: usize) -> Result<f64> {
    if points.len() < degree + 1 {
        return Err(Error::InsufficientPoints {
            got: points.len(),
            need: degree + 1,
        });
    }
    let chosen = &points[..degree + 1];
    for i in 0..chosen.len() {
        for j in i + 1..chosen.len() {
            if chosen[i] == chosen[j] {
                return Err(Error::Configuration(format!(
                    "evaluation points {i} and {j} coincide at {}",
                    chosen[i]
                )));
            }
        }
    }
    let v = linalg::vandermonde(chosen, degree);
    linalg::condition_via_iteration(&v)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{derive_params, PointRule};

    fn params(k_a: usize, k_b: usize, kp: usize, dp: usize, n: usize) -> SchemeParams {
        derive_params(k_a, k_b, kp, dp, k_a, k_b, n, PointRule::Equidistant).unwrap()
    }

    #[test]
    #[allow(clippy::type_complexity)]
    fn threshold_table_rows_reproduce_exactly() {
        // (k, kp, dp, n_workers) -> (tau_gc_epc, tau_epc, wt_epc, wt_gc_epc)
        let rows: [(usize, usize, usize, usize, usize, Option<usize>, usize, usize); 7] = [
            (1, 6, 4, 24, 21, Some(11), 6, 4),
            (1, 6, 3, 24, 17, Some(11), 6, 3),
            (1, 6, 2, 24, 19, Some(11), 6, 2),
            (1, 6, 3, 10, 10, None, 6, 3),
            (1, 4, 3, 64, 29, Some(7), 4, 3),
            (1, 8, 3, 64, 53, Some(15), 8, 3),
            (2, 4, 3, 64, 56, Some(19), 8, 6),
        ];
        for (k, kp, dp, n, tau, tau_epc, wt_epc, wt_gc) in rows {
            let p = params(k, k, kp, dp, n);
            let report = recovery_threshold(&p).unwrap();
            assert_eq!(report.tau, Some(tau), "gc_epc tau at k={k} kp={kp} dp={dp} N={n}");
            assert_eq!((report.weight_a, report.weight_b), (wt_gc, wt_gc));

            let epc = baseline_thresholds(k, k, kp, kp, 1, 1)
                .unwrap()
                .epc
                .at_worker_budget(n);
            assert_eq!(epc.tau, tau_epc, "epc tau at k={k} kp={kp} N={n}");
            assert_eq!((epc.weight_a, epc.weight_b), (wt_epc, wt_epc));
        }
    }

    #[test]
    fn named_threshold_examples() {
        // tau = c + 13 at c = 5 for the overlapping-window example.
        let p = params(1, 1, 4, 3, 20);
        assert_eq!(recovery_threshold(&p).unwrap().tau, Some(18));

        let b = baseline_thresholds(1, 1, 15, 4, 1, 1).unwrap();
        assert_eq!(b.matdot.tau, Some(7));
        assert_eq!(b.epc.tau, Some(29));
        assert_eq!(b.ep.tau, Some(7)); // m = n = 1 collapses to matdot
        assert_eq!(b.poly.tau, Some(1));

        let b2 = baseline_thresholds(2, 3, 5, 4, 2, 6).unwrap();
        assert_eq!(b2.poly.tau, Some(6));
        assert_eq!(b2.ep.tau, Some(4 * 2 * 6 + 3));
        assert_eq!((b2.epc.weight_a, b2.epc.weight_b), (10, 15));
    }

    #[test]
    fn infeasible_group_count_is_rejected() {
        let mut p = params(1, 1, 4, 3, 20);
        p.c = 4; // below c_min = 5; bypasses derive_params on purpose
        assert!(matches!(recovery_threshold(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn split_scheme_matches_the_worked_examples() {
        // kp=4, delta_p=2: two sub-codes of degree 2; N=4c gives tau=2c+3.
        for c in 3..8 {
            let r = split_scheme_threshold(1, 1, 4, 2, 4 * c).unwrap();
            assert_eq!(r.tau, Some(2 * c + 3));
        }
        assert_eq!(split_scheme_threshold(1, 1, 4, 2, 20).unwrap().tau, Some(13));

        // delta_p = kp: a single sub-code, threshold equals the ungrouped code.
        let whole = split_scheme_threshold(1, 1, 4, 4, 9).unwrap();
        assert_eq!(whole.tau, Some(4 + 4 - 1));

        assert!(matches!(
            split_scheme_threshold(1, 1, 4, 3, 20),
            Err(Error::SplitInapplicable { delta_p: 3, kp: 4 })
        ));
        // Too few evaluations per sub-code: no achievable threshold.
        assert_eq!(split_scheme_threshold(1, 1, 4, 2, 4).unwrap().tau, None);
    }

    #[test]
    fn decodability_follows_group_occupancy() {
        let p = params(1, 1, 4, 3, 20); // eta=4, kappa=2, degree=4, c=5
        assert!(!decodable(&[4, 4, 4, 4, 1], &p).unwrap());
        assert!(decodable(&[2, 2, 2, 2, 2], &p).unwrap());
        assert!(decodable(&[4, 4, 4, 4, 4], &p).unwrap());
        assert!(matches!(
            decodable(&[4, 4, 4, 4], &p),
            Err(Error::Parameter { name: "occupancy", .. })
        ));
        assert!(matches!(
            decodable(&[5, 4, 4, 4, 4], &p),
            Err(Error::Parameter { name: "occupancy", .. })
        ));
    }

    #[test]
    fn decodability_is_monotone_in_occupancy() {
        let p = params(1, 1, 4, 3, 20);
        let mut occ = vec![2, 2, 2, 2, 1];
        assert!(!decodable(&occ, &p).unwrap());
        occ[4] = 2;
        assert!(decodable(&occ, &p).unwrap());
        occ[0] = 4;
        assert!(decodable(&occ, &p).unwrap());
    }

    #[test]
    fn oracle_matches_formula_on_spot_checks() {
        // Overlapping windows, kappa = 2.
        let p1 = params(1, 1, 4, 3, 20);
        assert_eq!(occupancy_threshold_oracle(&p1).unwrap(), 18);

        // Whole-group regime from the threshold table.
        let p2 = params(1, 1, 6, 3, 10);
        assert_eq!(occupancy_threshold_oracle(&p2).unwrap(), 10);

        // Single-worker groups: the oracle reduces to plain interpolation
        // counting, tau = degree + 1 = 3 = 2p - 1 at p = 2.
        let p3 = params(1, 1, 2, 2, 3);
        assert_eq!(occupancy_threshold_oracle(&p3).unwrap(), 3);
        assert_eq!(recovery_threshold(&p3).unwrap().tau, Some(3));
    }

    #[test]
    fn oracle_guard_refuses_oversized_enumerations() {
        let mut p = params(1, 1, 4, 3, 20);
        p.c = 4000;
        p.n_workers = 16000;
        p.points = vec![0.0; 4000];
        assert!(matches!(
            occupancy_threshold_oracle(&p),
            Err(Error::OracleGuard(_))
        ));
    }

    #[test]
    fn oracle_certificate_is_semantically_sound() {
        use crate::decode::{decode, InterpolationMode};
        use crate::gradcode::construct_gc_matrix;
        use crate::matrix::{partition_grid, transpose_multiply, BlockMatrix};
        use crate::scheme::{worker_assignments, worker_compute};

        // Small overlapping configuration: p=6, eta=3, kappa=1, degree=2,
        // c=3, tau = (3-2)*3 + 2*2 + 1 = 8.
        let p = params(1, 1, 3, 2, 9);
        let tau = recovery_threshold(&p).unwrap().tau.unwrap();
        assert_eq!(tau, 8);
        assert_eq!(occupancy_threshold_oracle(&p).unwrap(), tau);

        let h = construct_gc_matrix(p.eta, p.kappa, 3).unwrap();
        let workers = worker_assignments(&p, &h).unwrap();
        let a = BlockMatrix::random_sparse(6, 2, 1.0, 41).unwrap();
        let b = BlockMatrix::random_sparse(6, 2, 1.0, 42).unwrap();
        let a_grid = partition_grid(&a, 6, 1).unwrap();
        let b_grid = partition_grid(&b, 6, 1).unwrap();
        let results: Vec<_> = workers
            .iter()
            .map(|w| worker_compute(w, &a_grid, &b_grid, &p).unwrap())
            .collect();
        let reference = transpose_multiply(&a, &b).unwrap().matrix;

        // A decodable occupancy decodes for both extreme slot assignments.
        let occ_good = [2, 2, 2];
        assert!(decodable(&occ_good, &p).unwrap());
        for take_low in [true, false] {
            let survivors: Vec<_> = results
                .iter()
                .filter(|r| {
                    let keep = occ_good[r.group];
                    if take_low { r.slot < keep } else { r.slot >= p.eta - keep }
                })
                .cloned()
                .collect();
            let got = decode(&p, &h, &survivors, InterpolationMode::ExactLowest)
                .unwrap()
                .product;
            let err = BlockMatrix::scaled_sum(&[(1.0, &got), (-1.0, &reference)])
                .unwrap()
                .frobenius_norm()
                / reference.frobenius_norm();
            assert!(err < 1e-10, "decodable occupancy failed to decode: {err:.2e}");
        }

        // A non-decodable occupancy with tau - 1 total survivors must fail.
        let occ_bad = [3, 3, 1];
        assert_eq!(occ_bad.iter().sum::<usize>(), tau - 1);
        assert!(!decodable(&occ_bad, &p).unwrap());
        let survivors: Vec<_> = results
            .iter()
            .filter(|r| r.slot < occ_bad[r.group])
            .cloned()
            .collect();
        assert!(matches!(
            decode(&p, &h, &survivors, InterpolationMode::ExactLowest),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn weights_by_scheme() {
        let p = params(1, 1, 6, 3, 10);
        assert_eq!(encoding_weight(&p, SchemeTag::GcEpc), (3, 3));
        assert_eq!(encoding_weight(&p, SchemeTag::Epc), (6, 6));
        let p7 = params(2, 2, 4, 3, 64);
        assert_eq!(encoding_weight(&p7, SchemeTag::GcEpc), (6, 6));
        assert_eq!(encoding_weight(&p7, SchemeTag::Epc), (8, 8));
        assert_eq!(encoding_weight(&p7, SchemeTag::Poly), (2, 2));
    }

    #[test]
    fn vandermonde_condition_basics_and_growth() {
        let pts: Vec<f64> = (0..27).map(|i| -1.0 + 2.0 * i as f64 / 26.0).collect();
        assert_eq!(vandermonde_condition(&pts, 0).unwrap(), 1.0);
        // [[1, -1], [1, 1]] has both singular values sqrt(2).
        let c1 = vandermonde_condition(&[-1.0, 1.0], 1).unwrap();
        assert!((c1 - 1.0).abs() < 1e-9);

        let low = vandermonde_condition(&pts, 2).unwrap();
        let high = vandermonde_condition(&pts, 26).unwrap();
        assert!(
            high / low >= 1e8,
            "conditioning should explode with degree: {low:.3e} vs {high:.3e}"
        );

        assert!(matches!(
            vandermonde_condition(&[0.5, 0.5, 1.0], 2),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(
            vandermonde_condition(&pts, 27),
            Err(Error::InsufficientPoints { got: 27, need: 28 })
        ));
    }

    #[test]
    fn special_case_reductions() {
        // delta_p = kp: matches the ungrouped storage-split code for any c.
        for (k, kp, n) in [(1usize, 3usize, 6usize), (2, 2, 11), (1, 5, 10)] {
            let p = params(k, k, kp, kp, n);
            let expected = kp * k * k + kp - 1;
            assert_eq!(recovery_threshold(&p).unwrap().tau, Some(expected));
        }

        // delta_p = 1, m = n = 1, p = kp: replication with grouped points,
        // tau = (p - 1) c + 1.
        for (kp, c) in [(3usize, 2usize), (4, 3), (6, 2)] {
            let p = derive_params(1, 1, kp, 1, 1, 1, kp * c, PointRule::Equidistant).unwrap();
            assert_eq!(p.p, kp);
            assert_eq!(
                recovery_threshold(&p).unwrap().tau,
                Some((kp - 1) * c + 1)
            );
        }

        // delta_p = kp = 1: plain column-split polynomial code, tau = kA*kB.
        for (ka, kb, c) in [(2usize, 3usize, 7usize), (4, 2, 8), (1, 1, 1)] {
            let p = derive_params(ka, kb, 1, 1, ka, kb, c, PointRule::Equidistant).unwrap();
            assert_eq!(recovery_threshold(&p).unwrap().tau, Some(ka * kb));
        }
    }

    #[test]
    fn csv_rows_serialize_with_placeholder_for_unachievable() {
        let p = params(1, 1, 6, 3, 10);
        let gc = recovery_threshold(&p).unwrap();
        assert_eq!(
            gc.csv_row(),
            "gc_epc,1,1,6,3,6,5,10,10,4,3,3"
        );
        let epc = baseline_thresholds(1, 1, 6, 6, 1, 1)
            .unwrap()
            .epc
            .at_worker_budget(10);
        assert_eq!(epc.csv_row(), "epc,1,1,6,6,6,10,10,N/A,10,6,6");
        assert_eq!(
            ThresholdReport::CSV_HEADER,
            "scheme,kA,kB,kp,delta_p,p,c,N,tau,degree,weight_A,weight_B"
        );
    }
}
