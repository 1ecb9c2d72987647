//! Small dense linear-algebra helpers shared by the coding modules.
//!
//! Everything here operates on systems no larger than a few dozen rows
//! (gradient-code row subsets, interpolation Vandermondes), so clarity and
//! robustness win over speed. Least-squares solves go through an SVD
//! pseudo-inverse, which yields the minimal-norm solution even for
//! rank-deficient systems; linear solves use partially pivoted LU; the
//! condition estimator runs power iteration so it stays independent of the
//! dense singular-value decomposition used to cross-check it in tests.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for pseudo-inverse solves.
const RANK_EPS: f64 = 1e-12;

/// Rayleigh-quotient stagnation threshold for the power iterations. Chosen
/// well inside the 1% accuracy the condition estimate promises.
const ITER_REL_TOL: f64 = 1e-9;
const ITER_CAP: usize = 100_000;

/// Vandermonde matrix: row `r` holds `points[r]^0 .. points[r]^degree`.
pub(crate) fn vandermonde(points: &[f64], degree: usize) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), degree + 1, |r, j| points[r].powi(j as i32))
}

/// Minimal-norm least-squares solution of `A x = b` via SVD.
pub(crate) fn min_norm_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    svd.solve(b, RANK_EPS * sigma_max.max(1.0))
        .map_err(|e| Error::Configuration(format!("SVD solve failed: {e}")))
}

/// Partially pivoted LU factorization of a square system, reusable across
/// many right-hand sides.
pub(crate) struct PivotedLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl PivotedLu {
    pub(crate) fn new(m: DMatrix<f64>) -> Result<Self> {
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::Configuration(
                "linear system is singular to working precision".into(),
            ));
        }
        Ok(PivotedLu { lu })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu
            .solve(b)
            .ok_or_else(|| Error::Configuration("linear solve failed on a singular system".into()))
    }
}

/// 2-norm condition number of a square matrix, estimated by power iteration:
/// the largest singular value from iterating `V^T V`, the smallest from
/// iterating `(V^T V)^{-1}` through LU solves. Stops once the Rayleigh
/// quotient stagnates; accurate to well under 1% on the interpolation
/// systems this crate builds.
pub(crate) fn condition_via_iteration(v: &DMatrix<f64>) -> Result<f64> {
    let n = v.nrows();
    assert_eq!(n, v.ncols(), "condition estimate expects a square matrix");
    if n == 1 {
        let x = v[(0, 0)].abs();
        if x == 0.0 {
            return Err(Error::Configuration("1x1 system is exactly zero".into()));
        }
        return Ok(1.0);
    }

    let vt = v.transpose();
    let sigma_max = {
        let apply = |z: &DVector<f64>| &vt * (v * z);
        power_iterate(n, apply)?.sqrt()
    };
    let sigma_min = {
        let lu = PivotedLu::new(v.clone())?;
        let lu_t = PivotedLu::new(vt.clone())?;
        let apply = |z: &DVector<f64>| {
            let y = lu_t.solve(z).expect("factorized system stays solvable");
            lu.solve(&y).expect("factorized system stays solvable")
        };
        1.0 / power_iterate(n, apply)?.sqrt()
    };
    Ok(sigma_max / sigma_min)
}

/// Spectral condition number of a rectangular full-column-rank matrix,
/// estimated through its Gram matrix `G = M^T M`: power iteration gives the
/// largest eigenvalue of `G`, inverse iteration through an LU of `G` the
/// smallest, and `cond(M)` is the square root of their ratio.
pub(crate) fn condition_gram(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.ncols();
    if n == 0 {
        return Err(Error::Configuration("empty matrix has no condition number".into()));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let gram = m.transpose() * m;
    let lambda_max = power_iterate(n, |z| &gram * z)?;
    let lu = PivotedLu::new(gram.clone())?;
    let inv_lambda_min =
        power_iterate(n, |z| lu.solve(z).expect("factorized system stays solvable"))?;
    Ok((lambda_max * inv_lambda_min).max(0.0).sqrt())
}

/// Largest eigenvalue of the symmetric positive operator `apply`.
fn power_iterate(n: usize, apply: impl Fn(&DVector<f64>) -> DVector<f64>) -> Result<f64> {
    // Deterministic start with uneven components so it is not orthogonal to
    // the leading eigenvector of the structured systems we feed in.
    let mut z = DVector::from_fn(n, |i, _| 1.0 + 0.5 * (i as f64 + 1.0) / n as f64);
    z /= z.norm();
    let mut lambda = 0.0;
    let mut stable = 0;
    for _ in 0..ITER_CAP {
        let w = apply(&z);
        let next = z.dot(&w);
        if !next.is_finite() || next <= 0.0 {
            return Err(Error::Configuration(
                "power iteration collapsed; system is numerically singular".into(),
            ));
        }
        let rel = (next - lambda).abs() / next;
        lambda = next;
        z = &w / w.norm();
        stable = if rel <= ITER_REL_TOL { stable + 1 } else { 0 };
        if stable >= 3 {
            return Ok(lambda);
        }
    }
    // Stagnation was never clean, but the estimate has long since settled
    // beyond the promised accuracy.
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vandermonde_rows_are_point_powers() {
        let v = vandermonde(&[-1.0, 0.0, 2.0], 2);
        assert_eq!(v[(0, 2)], 1.0);
        assert_eq!(v[(1, 0)], 1.0);
        assert_eq!(v[(1, 2)], 0.0);
        assert_eq!(v[(2, 2)], 4.0);
    }

    #[test]
    fn min_norm_solution_of_underdetermined_system() {
        // x + y = 2 has minimal-norm solution (1, 1).
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_element(1, 2.0);
        let x = min_norm_least_squares(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn condition_estimate_matches_dense_svd_reference() {
        // Hand-checkable 2x2: diag(3, 1/3) rotated does not change σ.
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0 / 3.0]);
        let cond = condition_via_iteration(&m).unwrap();
        assert!((cond - 9.0).abs() / 9.0 < 1e-6);

        // Independent dense reference on interpolation systems of growing size.
        for n in [3usize, 6, 11, 21, 27] {
            let pts: Vec<f64> = (0..n)
                .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
                .collect();
            let v = vandermonde(&pts, n - 1);
            let est = condition_via_iteration(&v).unwrap();
            let sv = v.clone().svd(false, false).singular_values;
            let reference = sv.max() / sv.min();
            assert!(
                (est - reference).abs() / reference < 0.01,
                "n={n}: estimate {est:.6e} vs reference {reference:.6e}"
            );
        }
    }

    #[test]
    fn gram_condition_agrees_with_the_square_estimate_and_svd() {
        let pts: Vec<f64> = (0..7).map(|i| -1.0 + 2.0 * i as f64 / 6.0).collect();
        let square = vandermonde(&pts, 6);
        let via_gram = condition_gram(&square).unwrap();
        let via_lu = condition_via_iteration(&square).unwrap();
        assert!((via_gram - via_lu).abs() / via_lu < 0.01);

        // Tall system: reference is the dense SVD ratio.
        let tall = vandermonde(&pts, 3);
        let est = condition_gram(&tall).unwrap();
        let sv = tall.clone().svd(false, false).singular_values;
        let reference = sv.max() / sv.min();
        assert!((est - reference).abs() / reference < 0.01);
    }

    #[test]
    fn lu_solves_and_flags_singularity() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let lu = PivotedLu::new(m).unwrap();
        let x = lu.solve(&DVector::from_column_slice(&[3.0, 4.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(PivotedLu::new(singular).is_err());
    }
}
