//! Dense linear algebra with relative tolerances.
//!
//! Rank decisions are made against `rel_tol * sigma_max`, never against an
//! absolute threshold, so a matrix and any nonzero multiple of it get the same
//! verdict. All decompositions go through the SVD.

use nalgebra::{DMatrix, DVector, SVD};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative rank threshold.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub tolerance_used: f64,
}

impl RankReport {
    /// Smallest singular value above the threshold divided by the largest one
    /// below it. Useful as a margin in reports; `None` when one side is empty.
    pub fn gap(&self) -> Option<f64> {
        let above = self.singular_values.get(self.rank.checked_sub(1)?)?;
        let below = self.singular_values.get(self.rank)?;
        Some(if *below == 0.0 { f64::INFINITY } else { above / below })
    }
}

fn check_input(m: &Matrix, rel_tol: f64) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid("matrix must be nonempty"));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// SVD of `m` padded with zero rows up to a square matrix when it is wide,
/// so that `v_t` always carries a full basis of the domain. Singular values
/// come back sorted descending along with matching rows of `v_t`.
fn full_svd(m: &Matrix) -> (Vec<f64>, Matrix) {
    let (rows, cols) = m.shape();
    let padded = if rows < cols {
        let mut p = Matrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut sorted_vt = Matrix::zeros(v_t.nrows(), v_t.ncols());
    for (dst, &src) in order.iter().enumerate() {
        sorted_vt.set_row(dst, &v_t.row(src));
    }
    (sv, sorted_vt)
}

fn report_from(sv: &[f64], keep: usize, rel_tol: f64) -> RankReport {
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let tol = rel_tol * sigma_max;
    let singular_values: Vec<f64> = sv.iter().take(keep).copied().collect();
    let rank = singular_values.iter().filter(|&&s| s > tol).count();
    RankReport { rank, singular_values, tolerance_used: tol }
}

pub fn rank(m: &Matrix, rel_tol: f64) -> Result<RankReport> {
    check_input(m, rel_tol)?;
    let (sv, _) = full_svd(m);
    Ok(report_from(&sv, m.nrows().min(m.ncols()), rel_tol))
}

/// Orthonormal basis of the numerical kernel together with the rank report
/// that produced it.
pub fn nullspace_with_report(m: &Matrix, rel_tol: f64) -> Result<(Vec<Vector>, RankReport)> {
    check_input(m, rel_tol)?;
    let (sv, v_t) = full_svd(m);
    let report = report_from(&sv, m.nrows().min(m.ncols()), rel_tol);
    let basis = (report.rank..m.ncols())
        .map(|i| {
            let mut v: Vector = v_t.row(i).transpose();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok((basis, report))
}

pub fn nullspace(m: &Matrix, rel_tol: f64) -> Result<Vec<Vector>> {
    nullspace_with_report(m, rel_tol).map(|(basis, _)| basis)
}

/// Flip `v` so its first component with non-negligible magnitude is positive.
pub fn fix_sign(v: &mut Vector) {
    let scale = v.amax();
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12 * scale) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Minimum-norm least squares solution of `a x = b` with the relative
/// singular-value cutoff `rel_tol`. Returns `(x, ||a x - b||)`.
pub fn lstsq(a: &Matrix, b: &Vector, rel_tol: f64) -> Result<(Vector, f64)> {
    check_input(a, rel_tol)?;
    if b.len() != a.nrows() {
        return Err(Error::invalid(format!("rhs has {} rows, matrix has {}", b.len(), a.nrows())));
    }
    let svd = SVD::new(a.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let eps = rel_tol * sigma_max;
    let x = svd.solve(b, eps.max(f64::MIN_POSITIVE)).map_err(|e| Error::invalid(e.to_string()))?;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

/// Inverse via LU, rejecting matrices whose numerical rank is deficient.
pub fn checked_inverse(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::invalid("inverse of a non-square matrix"));
    }
    let report = rank(m, rel_tol)?;
    if report.rank < m.nrows() {
        return Err(Error::invalid(format!("matrix is numerically singular (rank {} < {})", report.rank, m.nrows())));
    }
    m.clone().try_inverse().ok_or_else(|| Error::invalid("matrix is singular"))
}

/// Stack matrices vertically. All blocks must share a column count.
pub fn vstack(blocks: &[Matrix]) -> Matrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), b.shape()).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Columns of `m` as a matrix whose columns are the given vectors.
pub fn from_columns(cols: &[Vector]) -> Matrix {
    Matrix::from_columns(cols)
}

/// Rows of `m` as nested vectors, for reports.
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `serialize_with` adapter writing a matrix as a list of rows.
pub fn serialize_rows<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(to_rows(m))
}

/// Largest residual of projecting the columns of `b` onto the column space of
/// `a`, relative to each column's norm (floored at 1).
pub fn column_space_residual(a: &Matrix, b: &Matrix, rel_tol: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for j in 0..b.ncols() {
        let col: Vector = b.column(j).into_owned();
        let (_, res) = lstsq(a, &col, rel_tol)?;
        worst = worst.max(res / col.norm().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_full_rank() {
        let r = rank(&Matrix::identity(3, 3), 1e-9).unwrap();
        assert_eq!(r.rank, 3);
        assert_eq!(r.singular_values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let r = rank(&Matrix::zeros(2, 2), 1e-9).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.tolerance_used, 0.0);
        assert_eq!(nullspace(&Matrix::zeros(2, 2), 1e-9).unwrap().len(), 2);
    }

    #[test]
    fn gig_condition_a_matrix_is_regular() {
        // det = 0.5 * -0.375 - 1.5 * -0.25 = 0.1875
        let m = Matrix::from_row_slice(2, 2, &[0.5, 1.5, -0.25, -0.375]);
        assert!((m.determinant() - 0.1875).abs() < 1e-15);
        assert_eq!(rank(&m, 1e-9).unwrap().rank, 2);
    }

    #[test]
    fn nullspace_of_regular_diagonal_is_empty() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![-0.5, 1.0]));
        assert!(nullspace(&m, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn nullspace_of_wide_row() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let ns = nullspace(&m, 1e-9).unwrap();
        assert_eq!(ns.len(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ns[0][0] - s).abs() < 1e-12);
        assert!((ns[0][1] + s).abs() < 1e-12);
    }

    #[test]
    fn non_finite_entries_rejected() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(rank(&m, 1e-9), Err(Error::InvalidInput(_))));
        assert!(nullspace(&m, 1e-9).is_err());
    }

    #[test]
    fn bad_tolerance_rejected() {
        let m = Matrix::identity(2, 2);
        assert!(rank(&m, 0.0).is_err());
        assert!(rank(&m, 1.0).is_err());
    }

    #[test]
    fn rank_threshold_is_scale_invariant() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert_eq!(rank(&m, 1e-9).unwrap().rank, 1);
        assert_eq!(rank(&(m * 1e8), 1e-9).unwrap().rank, 1);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = Vector::from_vec(vec![2.0, -1.0, 1.0]);
        let (x, res) = lstsq(&a, &b, 1e-12).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
        assert!(res < 1e-12);
    }
}
