//! Gradient-coding matrices for straggler-tolerant worker groups.
//!
//! A group of `eta` workers shares one evaluation point; worker `w` computes
//! a combination of its tasks weighted by row `w` of an `eta x eta` matrix
//! `H`. `H` must satisfy two properties:
//!
//! 1. **support** — row `i` is nonzero exactly on the cyclic window
//!    `{i, i+1, ..., i+kappa} (mod eta)`, so each worker touches `kappa + 1`
//!    task slices;
//! 2. **span** — the all-ones row vector lies in the span of *any*
//!    `eta - kappa` rows, so any that many survivors can reconstruct the
//!    group's plain (unweighted) task sum.
//!
//! Construction tries a circulant family first: pick `kappa` roots of unity
//! (excluding 1, closed under conjugation), expand the real generator
//! polynomial, and cyclically shift its coefficients. Because the generator
//! divides `1 + z + ... + z^(eta-1)`, the ones vector is in the row space,
//! and independence of every row subset is checked exhaustively. Some sizes
//! admit no such circulant — the generator may have a zero coefficient
//! (eta = 4, kappa = 2 forces `z^2 + 1`), and odd `eta` with odd `kappa` has
//! no conjugation-closed root set — so a seeded fallback draws a generic
//! `kappa x eta` annihilator `K` with `K 1 = 0` and fills each row's window
//! from `K`'s kernel. Every candidate from either family must pass the full
//! verification before it is returned.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::min_norm_least_squares;

/// Max-norm residual allowed when reproducing the all-ones row.
pub const COMBINE_TOLERANCE: f64 = 1e-9;

/// Bounded retry budget for construction.
const MAX_ATTEMPTS: usize = 64;

/// Entries smaller than this (relative to the row maximum of 1) break the
/// support property.
const SUPPORT_TOL: f64 = 1e-12;

/// Reject candidates whose combine vectors blow up; they would amplify
/// floating-point noise downstream.
const COMBINE_NORM_GUARD: f64 = 1e6;

/// Subset guard for the exhaustive span verification.
const MAX_SUBSETS: u128 = 5_000_000;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A gradient-coding matrix with cyclic support of width `kappa + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcMatrix {
    eta: usize,
    kappa: usize,
    /// Row-major `eta * eta` entries.
    entries: Vec<f64>,
}

/// Outcome of [`verify_gc_matrix`].
#[derive(Debug, Clone)]
pub struct GcReport {
    /// Row supports are exactly the cyclic windows.
    pub support_ok: bool,
    /// Every `eta - kappa` row subset reproduces the all-ones row.
    pub span_ok: bool,
    /// Largest combine residual (max norm) seen over all subsets.
    pub worst_residual: f64,
    /// A subset that failed, when one exists.
    pub failing_subset: Option<Vec<usize>>,
}

/// Coefficients reconstructing the plain task sum from surviving workers.
#[derive(Debug, Clone)]
pub struct CombineVector {
    /// Length-`eta` vector, zero outside the survivor set.
    pub coeffs: Vec<f64>,
    /// Sorted survivor indices the vector is supported on.
    pub support: Vec<usize>,
    /// Max-norm residual of `g^T H - 1^T`.
    pub residual: f64,
}

impl GcMatrix {
    /// Group size.
    pub fn eta(&self) -> usize {
        self.eta
    }

    /// Straggler tolerance (support width minus one).
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.eta + j]
    }

    /// Row `i` as a slice of length `eta`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.eta..(i + 1) * self.eta]
    }

    /// Whether `(i, j)` lies in row `i`'s cyclic support window.
    pub fn in_support(&self, i: usize, j: usize) -> bool {
        (j + self.eta - i) % self.eta <= self.kappa
    }

    /// Plain-text form: a `eta kappa` line, then `eta` rows of `eta`
    /// decimals. Round-trips exactly through [`GcMatrix::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.eta, self.kappa);
        for i in 0..self.eta {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse the format produced by [`GcMatrix::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (ln, head) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, message: "empty gradient-code table".into() })?;
        let fields: Vec<&str> = head.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line: ln, message: "expected 'eta kappa'".into() });
        }
        let eta: usize = fields[0]
            .parse()
            .map_err(|_| Error::Parse { line: ln, message: format!("bad eta '{}'", fields[0]) })?;
        let kappa: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse { line: ln, message: format!("bad kappa '{}'", fields[1]) })?;
        if kappa >= eta {
            return Err(Error::Parse { line: ln, message: format!("kappa {kappa} must be < eta {eta}") });
        }
        let mut entries = Vec::with_capacity(eta * eta);
        for _ in 0..eta {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| Error::Parse { line: ln, message: format!("expected {eta} rows") })?;
            let vals: Vec<&str> = row.split_whitespace().collect();
            if vals.len() != eta {
                return Err(Error::Parse { line: ln, message: format!("expected {eta} values, got {}", vals.len()) });
            }
            for v in vals {
                entries.push(v.parse().map_err(|_| Error::Parse {
                    line: ln,
                    message: format!("'{v}' is not a real number"),
                })?);
            }
        }
        Ok(GcMatrix { eta, kappa, entries })
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Build a verified gradient-coding matrix for `(eta, kappa)`.
///
/// Deterministic for a given seed. Tries the circulant generator-polynomial
/// family in seed-shuffled order, then seeded generic kernel draws, up to 64
/// candidates in total; every candidate is verified exhaustively before
/// being accepted, and each row is rescaled so its largest magnitude is 1.
pub fn construct_gc_matrix(eta: usize, kappa: usize, seed: u64) -> Result<GcMatrix> {
    if eta == 0 || kappa >= eta {
        return Err(Error::Parameter {
            name: "kappa",
            message: format!("need 0 <= kappa < eta, got kappa={kappa}, eta={eta}"),
        });
    }
    // Exact closed forms for the two boundary widths.
    if kappa == 0 {
        return Ok(identity_gc(eta));
    }
    if kappa == eta - 1 {
        let m = GcMatrix { eta, kappa, entries: vec![1.0; eta * eta] };
        debug_assert!(verify_gc_matrix(&m).map(|r| r.span_ok && r.support_ok).unwrap_or(false));
        return Ok(m);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    let mut worst = GcReport {
        support_ok: false,
        span_ok: false,
        worst_residual: f64::INFINITY,
        failing_subset: None,
    };

    let mut candidates = circulant_generators(eta, kappa);
    candidates.shuffle(&mut rng);
    for coeffs in candidates {
        if attempts >= MAX_ATTEMPTS {
            break;
        }
        attempts += 1;
        if let Some(found) = try_candidate(circulant_from(eta, kappa, &coeffs), &mut worst)? {
            return Ok(found);
        }
    }
    while attempts < MAX_ATTEMPTS {
        attempts += 1;
        let Some(candidate) = kernel_candidate(eta, kappa, &mut rng) else {
            continue;
        };
        if let Some(found) = try_candidate(candidate, &mut worst)? {
            return Ok(found);
        }
    }

    Err(Error::GcConstruction {
        eta,
        kappa,
        attempts,
        subset: worst.failing_subset.unwrap_or_default(),
        residual: worst.worst_residual,
    })
}

fn identity_gc(eta: usize) -> GcMatrix {
    let mut entries = vec![0.0; eta * eta];
    for i in 0..eta {
        entries[i * eta + i] = 1.0;
    }
    GcMatrix { eta, kappa: 0, entries }
}

/// Run the full verification on a candidate; keep the worst failure for
/// error reporting.
fn try_candidate(candidate: GcMatrix, worst: &mut GcReport) -> Result<Option<GcMatrix>> {
    let report = verify_gc_matrix(&candidate)?;
    if report.support_ok && report.span_ok && combine_norms_bounded(&candidate) {
        return Ok(Some(candidate));
    }
    if worst.failing_subset.is_none() || report.failing_subset.is_some() {
        *worst = report;
    }
    Ok(None)
}

/// All conjugation-closed root multisets of size `kappa`, as real generator
/// coefficient vectors `g_0..g_kappa` with nonzero ends. Roots come from the
/// nontrivial `eta`-th roots of unity: conjugate pairs `(t, eta - t)` and,
/// for even `eta`, the real root -1. Candidates with a vanishing interior
/// coefficient are filtered out later by the support check; sizes where the
/// parity cannot work yield an empty list.
fn circulant_generators(eta: usize, kappa: usize) -> Vec<Vec<f64>> {
    let pair_count = (eta - 1) / 2;
    let needs_minus_one = kappa % 2 == 1;
    if needs_minus_one && !eta.is_multiple_of(2) {
        return Vec::new();
    }
    let pairs_needed = kappa / 2;
    if pairs_needed > pair_count {
        return Vec::new();
    }
    let mut out = Vec::new();
    for_each_subset(pair_count, pairs_needed, &mut |pair_idx| {
        let mut poly = vec![1.0];
        if needs_minus_one {
            poly = poly_mul(&poly, &[1.0, 1.0]); // z + 1
        }
        for &p in pair_idx {
            let t = (p + 1) as f64;
            let cos = (2.0 * std::f64::consts::PI * t / eta as f64).cos();
            poly = poly_mul(&poly, &[1.0, -2.0 * cos, 1.0]); // z^2 - 2cos z + 1
        }
        out.push(poly);
    });
    out
}

/// Coefficient convolution; both inputs ordered constant-first.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Circulant matrix from generator coefficients, rows rescaled to max 1.
fn circulant_from(eta: usize, kappa: usize, coeffs: &[f64]) -> GcMatrix {
    debug_assert_eq!(coeffs.len(), kappa + 1);
    let scale = 1.0 / coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut entries = vec![0.0; eta * eta];
    for i in 0..eta {
        for (d, &g) in coeffs.iter().enumerate() {
            entries[i * eta + (i + d) % eta] = g * scale;
        }
    }
    GcMatrix { eta, kappa, entries }
}

/// Fallback family: draw a generic `kappa x eta` annihilator `K` with zero
/// row sums, then give each row the unique kernel vector on its window with
/// a leading 1. The ones vector lies in `ker K` by construction; generic
/// draws make every `eta - kappa` row subset a basis of that kernel, which
/// the caller verifies. Returns `None` when the draw is degenerate.
fn kernel_candidate(eta: usize, kappa: usize, rng: &mut ChaCha8Rng) -> Option<GcMatrix> {
    let mut k = DMatrix::from_fn(kappa, eta, |_, _| rng.gen_range(-1.0..1.0));
    for r in 0..kappa {
        let mean = k.row(r).sum() / eta as f64;
        for c in 0..eta {
            k[(r, c)] -= mean;
        }
    }
    let mut entries = vec![0.0; eta * eta];
    for i in 0..eta {
        let window: Vec<usize> = (1..=kappa).map(|d| (i + d) % eta).collect();
        let sub = DMatrix::from_fn(kappa, kappa, |r, c| k[(r, window[c])]);
        let rhs = -DVector::from_fn(kappa, |r, _| k[(r, i)]);
        let tail = sub.lu().solve(&rhs)?;
        let mut row = vec![0.0; eta];
        row[i] = 1.0;
        for (d, &j) in window.iter().enumerate() {
            row[j] = tail[d];
        }
        let scale = 1.0 / row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (slot, v) in entries[i * eta..(i + 1) * eta].iter_mut().zip(&row) {
            *slot = v * scale;
        }
    }
    Some(GcMatrix { eta, kappa, entries })
}

/// Reject candidates whose subset combine vectors are enormous.
fn combine_norms_bounded(m: &GcMatrix) -> bool {
    let mut ok = true;
    for_each_subset(m.eta, m.eta - m.kappa, &mut |subset| {
        if ok {
            match combine_vector(m, subset) {
                Ok(g) => {
                    if g.coeffs.iter().any(|c| c.abs() > COMBINE_NORM_GUARD) {
                        ok = false;
                    }
                }
                Err(_) => ok = false,
            }
        }
    });
    ok
}

// ---------------------------------------------------------------------------
// Verification and combining
// ---------------------------------------------------------------------------

/// Exhaustively check both defining properties of a gradient-coding matrix.
///
/// The span check solves a least-squares system for every `eta - kappa` row
/// subset; the number of subsets is guarded to keep the check tractable.
pub fn verify_gc_matrix(m: &GcMatrix) -> Result<GcReport> {
    let subset_count = binomial(m.eta, m.eta - m.kappa);
    if subset_count > MAX_SUBSETS {
        return Err(Error::OracleGuard(format!(
            "span verification would enumerate {subset_count} subsets (limit {MAX_SUBSETS})"
        )));
    }

    let mut support_ok = true;
    for i in 0..m.eta {
        for j in 0..m.eta {
            let inside = m.in_support(i, j);
            let nonzero = m.get(i, j).abs() > SUPPORT_TOL;
            if inside != nonzero {
                support_ok = false;
            }
        }
    }

    let mut span_ok = true;
    let mut worst_residual: f64 = 0.0;
    let mut failing_subset = None;
    for_each_subset(m.eta, m.eta - m.kappa, &mut |subset| {
        let residual = match combine_vector(m, subset) {
            Ok(g) => g.residual,
            Err(Error::SpanViolation { residual, .. }) => residual,
            Err(_) => f64::INFINITY,
        };
        if residual > worst_residual {
            worst_residual = residual;
        }
        if residual > COMBINE_TOLERANCE && failing_subset.is_none() {
            span_ok = false;
            failing_subset = Some(subset.to_vec());
        }
    });

    Ok(GcReport { support_ok, span_ok, worst_residual, failing_subset })
}

/// Coefficients `g` supported on `survivors` with `g^T H = 1^T`.
///
/// When more than `eta - kappa` survivors are offered, only the first
/// `eta - kappa` (in index order) are used: construction certifies every
/// subset of exactly that size, while larger sets can be numerically
/// near-degenerate even though a bounded exact solution always exists.
/// Solves the restricted system by minimal-norm least squares and rejects
/// solutions whose max-norm residual exceeds [`COMBINE_TOLERANCE`].
pub fn combine_vector(m: &GcMatrix, survivors: &[usize]) -> Result<CombineVector> {
    let mut support: Vec<usize> = survivors.to_vec();
    support.sort_unstable();
    support.dedup();
    if support.last().is_some_and(|&s| s >= m.eta) || support.is_empty() {
        return Err(Error::Parameter {
            name: "survivors",
            message: format!("survivor indices must be a nonempty subset of 0..{}", m.eta),
        });
    }
    support.truncate(m.eta - m.kappa);

    // g^T H = 1^T restricted to the survivor rows: columns of the system are
    // those rows of H.
    let system = DMatrix::from_fn(m.eta, support.len(), |r, c| m.get(support[c], r));
    let ones = DVector::from_element(m.eta, 1.0);
    let solution = min_norm_least_squares(&system, &ones)?;

    let residual = (&system * &solution - &ones).amax();
    if residual > COMBINE_TOLERANCE {
        return Err(Error::SpanViolation {
            survivors: support,
            residual,
            tolerance: COMBINE_TOLERANCE,
        });
    }
    let mut coeffs = vec![0.0; m.eta];
    for (slot, &s) in support.iter().enumerate() {
        coeffs[s] = solution[slot];
    }
    Ok(CombineVector { coeffs, support, residual })
}

// ---------------------------------------------------------------------------
// Combinatorial helpers
// ---------------------------------------------------------------------------

/// Visit every size-`k` subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // Advance the rightmost index that can still move.
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] + (k - pos) < n {
                idx[pos] += 1;
                for later in pos + 1..k {
                    idx[later] = idx[later - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return;
            }
        }
        if k == 0 {
            return;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
