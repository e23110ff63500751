//! Jacobi-preconditioned conjugate gradients for the assembled SPD operators.

use super::SparseOperator;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Iteration cap as a multiple of the unknown count.
const ITERATION_FACTOR: usize = 10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `op x = rhs` from a zero initial guess.
pub fn solve_spd(op: &SparseOperator, rhs: &ScalarField, tol: f64) -> Result<ScalarField> {
    let x = solve_raw(op, rhs.values(), None, tol)?;
    ScalarField::new(*rhs.grid(), x)
}

/// As [`solve_spd`], starting from `guess`.
pub fn solve_spd_from(op: &SparseOperator, rhs: &ScalarField, guess: &ScalarField, tol: f64) -> Result<ScalarField> {
    rhs.same_grid(guess)?;
    let x = solve_raw(op, rhs.values(), Some(guess.values()), tol)?;
    ScalarField::new(*rhs.grid(), x)
}

/// Stops once `‖rhs - op x‖₂ <= tol ‖rhs‖₂`.
pub fn solve_raw(op: &SparseOperator, rhs: &[f64], guess: Option<&[f64]>, tol: f64) -> Result<Vec<f64>> {
    assert!(tol > 0.0, "linear tolerance must be positive");
    let n = op.dimension();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag: Vec<f64> = op.diag().iter().map(|d| 1.0 / d).collect();

    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        Some(g) => return Err(Error::DimensionMismatch { expected: n, found: g.len() }),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    op.mul_into(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let target = tol * rhs_norm;
    let mut res_norm = dot(&r, &r).sqrt();
    if res_norm <= target {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let cap = ITERATION_FACTOR * n;
    for iteration in 1..=cap {
        op.mul_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        if !alpha.is_finite() {
            // breakdown: the operator is not SPD along p
            return Err(Error::LinearSolve { iterations: iteration, residual: res_norm / rhs_norm });
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res_norm = dot(&r, &r).sqrt();
        if res_norm <= target {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolve { iterations: cap, residual: res_norm / rhs_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::assemble;
    use crate::grid::Grid;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_solve(op: &SparseOperator, rhs: &[f64]) -> Vec<f64> {
        let n = op.dimension();
        let m = DMatrix::from_fn(n, n, |r, c| op.get(r, c));
        let chol = m.cholesky().expect("SPD");
        chol.solve(&DVector::from_column_slice(rhs)).iter().copied().collect()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = Grid::line(5, 1.0).unwrap();
        let op = assemble(&ScalarField::constant(g, 1.0)).unwrap();
        let x = solve_spd(&op, &ScalarField::zeros(g), 1e-10).unwrap();
        assert!(x.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_fixture() {
        let g = Grid::line(4, 1.0).unwrap();
        let op = SparseOperator::diagonal(&[2.0; 4]);
        let x = solve_spd(&op, &ScalarField::constant(g, 4.0), 1e-12).unwrap();
        assert!(x.values().iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn three_node_operator_matches_dense() {
        let g = Grid::line(3, 1.0).unwrap();
        let op = assemble(&ScalarField::constant(g, 1.0)).unwrap();
        let rhs = ScalarField::constant(g, 1.0);
        let x = solve_spd(&op, &rhs, 1e-14).unwrap();
        let exact = dense_solve(&op, rhs.values());
        for (a, b) in x.values().iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn random_small_instances_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let g = if trial % 2 == 0 {
                Grid::line(rng.gen_range(3..=64), rng.gen_range(0.5..3.0)).unwrap()
            } else {
                Grid::rectangle(rng.gen_range(3..=8), rng.gen_range(3..=8), 1.0, rng.gen_range(0.5..2.0)).unwrap()
            };
            let d = ScalarField::new(g, (0..g.len()).map(|_| rng.gen_range(1e-3..5.0)).collect()).unwrap();
            let rhs: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let op = assemble(&d).unwrap();
            let x = solve_raw(&op, &rhs, None, 1e-12).unwrap();
            let exact = dense_solve(&op, &rhs);
            let scale = exact.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let err = x.iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= 1e-8 * scale, "trial {trial}: err {err} scale {scale}");
        }
    }

    #[test]
    fn residual_meets_tolerance() {
        let g = Grid::unit(2, 20).unwrap();
        let d = ScalarField::from_fn(g, |[x, y]| 0.05 + x * y).unwrap();
        let op = assemble(&d).unwrap();
        let rhs = ScalarField::from_fn(g, |[x, y]| (7.0 * x).sin() + y).unwrap();
        let x = solve_spd(&op, &rhs, 1e-9).unwrap();
        let ax = op.mul(x.values()).unwrap();
        let res: f64 = ax.iter().zip(rhs.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm: f64 = rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-9 * norm * 1.0001);
    }

    #[test]
    fn breakdown_reports_residual() {
        let op = SparseOperator::diagonal(&[1.0, -1.0]);
        match solve_raw(&op, &[1.0, 1.0], None, 1e-12) {
            Err(Error::LinearSolve { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!((residual - 1.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let g = Grid::line(40, 1.0).unwrap();
        let op = assemble(&ScalarField::constant(g, 1.0)).unwrap();
        let rhs: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        match solve_raw(&op, &rhs, None, 1e-300) {
            Err(Error::LinearSolve { iterations, residual }) => {
                assert_eq!(iterations, 400);
                assert!(residual < 1e-10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
