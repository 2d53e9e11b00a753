//! Small dense solves with a condition estimate, shared by the rate-form
//! assemblers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Condition threshold above which a mass/block matrix is treated as
/// singular for rate-form integration.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Solves `A x = b` by LU with partial pivoting and returns the solution
/// together with a 1-norm condition estimate `‖A‖₁·‖A⁻¹‖₁`.
///
/// Returns `None` when the factorization fails outright; callers compare
/// the estimate against [`SINGULAR_CONDITION`] to decide solvability.
pub fn solve_with_condition(a: &DMatrix<f64>, b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = a.nrows();
    let norm_a = one_norm(a);
    let lu = a.clone().lu();
    let inv = lu.try_inverse()?;
    let cond = norm_a * one_norm(&inv);
    if !cond.is_finite() {
        return None;
    }
    let x = lu.solve(&DVector::from_column_slice(b))?;
    debug_assert_eq!(x.len(), n);
    Some((x.iter().copied().collect(), cond))
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for c in 0..a.ncols() {
        let mut sum = 0.0;
        for r in 0..a.nrows() {
            sum += a[(r, c)].abs();
        }
        best = best.max(sum);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_well_conditioned_system() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let (x, cond) = solve_with_condition(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!(cond < 10.0);
    }

    #[test]
    fn reports_singularity() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0]);
        let out = solve_with_condition(&a, &[1.0, 1.0]);
        assert!(out.is_none() || out.unwrap().1 > SINGULAR_CONDITION);
    }
}
