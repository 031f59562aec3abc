//! Small dense complex solves with one step of iterative refinement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Solution of `A x = b` for each column of `b`, with the 1-norm
/// condition number of `A`.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: CMatrix,
    pub condition: f64,
}

fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn solve(a: &CMatrix, b: &CMatrix, what: &str) -> Result<Solved> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(Error::Singular(format!("{what}: shape mismatch")));
    }
    let lu = a.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what}: matrix is singular")))?;
    let condition = norm1(a) * norm1(&inv);
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::Singular(format!("{what}: condition number {condition:.3e}")));
    }
    let mut x = lu.solve(b).ok_or_else(|| Error::Singular(format!("{what}: matrix is singular")))?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(Solved { x, condition })
}

pub fn solve_vec(a: &CMatrix, b: &CVector, what: &str) -> Result<(CVector, f64)> {
    let bm = CMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let s = solve(a, &bm, what)?;
    Ok((s.x.column(0).into_owned(), s.condition))
}

/// Real symmetric solve, same refinement.
pub fn solve_real(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or_else(|| Error::Singular(format!("{what}: matrix is singular")))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what}: non-finite solution")));
    }
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

/// Eigenvalues of a hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_solve_and_eigenvalues() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let b = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0)]);
        let (x, cond) = solve_vec(&a, &b, "test").unwrap();
        assert!((&a * &x - &b).norm() < 1e-15);
        assert!(cond > 1.0);
        let ev = hermitian_eigenvalues(&a);
        // trace 5, determinant 5
        assert!((ev[0] + ev[1] - 5.0).abs() < 1e-14);
        assert!((ev[0] * ev[1] - 5.0).abs() < 1e-13);
        let singular = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(solve_vec(&singular, &b, "s"), Err(Error::Singular(_))));
    }
}
