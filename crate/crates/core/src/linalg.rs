use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailure("matrix is not positive definite".into()))?;
    Ok(chol.solve(rhs))
}

pub(crate) fn solve_spd_matrix(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailure("matrix is not positive definite".into()))?;
    Ok(chol.solve(rhs))
}

pub(crate) fn solve_general(m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let x = m
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::FactorizationFailure("singular Newton system".into()))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::FactorizationFailure("non-finite Newton direction".into()))
    }
}

/// Numerical column rank from a column-pivoted QR with tolerance `rel_tol·‖A‖_F`.
pub(crate) fn column_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let scale = a.norm();
    if scale == 0.0 {
        return 0;
    }
    let r = a.clone().col_piv_qr().r();
    let k = r.nrows().min(r.ncols());
    (0..k).filter(|&i| r[(i, i)].abs() > rel_tol * scale).count()
}
