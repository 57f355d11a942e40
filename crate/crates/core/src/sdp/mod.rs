//! Dense semidefinite programming over Hermitian blocks.

mod cone;
mod program;
mod solver;

pub use program::{BlockId, ConicProgram, LinearExpr, ScalarId, Sense};
pub use solver::{iteration_csv, realify, solve, IterationRecord, SolverOptions, SolverReport, SolverStatus};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianOperator;
    use num_complex::Complex64;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // min t s.t. t I - diag(1,3) = X >= 0
        let mut p = ConicProgram::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        let t = p.add_scalar("t");
        p.set_objective(LinearExpr::new().scalar(t, 1.0), 0.0);
        let d = 2;
        for i in 0..d {
            for j in 0..d {
                // entrywise X_ij = t delta_ij - diag(1,3)_ij via Hermitian basis pairing
                if i > j {
                    continue;
                }
                let mut e = nalgebra::DMatrix::<Complex64>::zeros(d, d);
                if i == j {
                    e[(i, i)] = Complex64::new(1.0, 0.0);
                    let rhs = -[1.0, 3.0][i];
                    p.add_eq(
                        LinearExpr::new()
                            .block(x, HermitianOperator::from_matrix(e).unwrap())
                            .scalar(t, -1.0),
                        rhs,
                    );
                } else {
                    e[(i, j)] = Complex64::new(0.5, 0.0);
                    e[(j, i)] = Complex64::new(0.5, 0.0);
                    p.add_eq(LinearExpr::new().block(x, HermitianOperator::from_matrix(e.clone()).unwrap()), 0.0);
                    e[(i, j)] = Complex64::new(0.0, 0.5);
                    e[(j, i)] = Complex64::new(0.0, -0.5);
                    p.add_eq(LinearExpr::new().block(x, HermitianOperator::from_matrix(e).unwrap()), 0.0);
                }
            }
        }
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal, "{}", r.message);
        assert!((r.objective - 3.0).abs() < 1e-7, "{}", r.objective);
        assert!((r.scalar_values[0] - 3.0).abs() < 1e-7);
    }

    #[test]
    fn max_overlap_with_projector() {
        let mut p = ConicProgram::new(Sense::Maximize);
        let x = p.add_block("X", 2);
        p.set_objective(LinearExpr::new().block(x, HermitianOperator::diag(&[1.0, 0.0])), 0.0);
        p.add_eq(LinearExpr::new().block(x, HermitianOperator::identity(2)), 1.0);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-7);
        assert!(r.block_values[0].max_abs_diff(&HermitianOperator::diag(&[1.0, 0.0])) < 1e-4);
        assert!(r.duality_gap <= 1e-8);
        assert!(r.primal_residual <= 1e-9 && r.dual_residual <= 1e-9);
    }

    #[test]
    fn complex_coefficients() {
        // max Re Tr(X sigma_y), Tr X = 1 -> 1
        let y = HermitianOperator::from_matrix(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
        ))
        .unwrap();
        let mut p = ConicProgram::new(Sense::Maximize);
        let x = p.add_block("X", 2);
        p.set_objective(LinearExpr::new().block(x, y.clone()), 0.0);
        p.add_eq(LinearExpr::new().block(x, HermitianOperator::identity(2)), 1.0);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal, "{}\n{}", r.message, r.log_csv());
        assert!((r.objective - 1.0).abs() < 1e-7);
        assert!((r.block_values[0].pair(&y) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inequalities_and_duals() {
        // min Tr X s.t. X_00 >= 2 (as -X_00 <= -2), X >= 0 -> 2, dual u = 1
        let mut p = ConicProgram::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.set_objective(LinearExpr::new().block(x, HermitianOperator::identity(2)), 0.0);
        p.add_ge(LinearExpr::new().block(x, HermitianOperator::diag(&[1.0, 0.0])), 2.0);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-7);
        assert!((r.ineq_duals[0] - 1.0).abs() < 1e-6);
        // dual slack Z = I - diag(1,0)
        assert!(r.block_duals[0].max_abs_diff(&HermitianOperator::diag(&[0.0, 1.0])) < 1e-6);
    }

    #[test]
    fn detects_infeasibility() {
        // X >= 0, Tr X = -1
        let mut p = ConicProgram::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.set_objective(LinearExpr::new().block(x, HermitianOperator::identity(2)), 0.0);
        p.add_eq(LinearExpr::new().block(x, HermitianOperator::identity(2)), -1.0);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolverStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min -t s.t. t <= X_00, X >= 0 (no upper bound)
        let mut p = ConicProgram::new(Sense::Minimize);
        let x = p.add_block("X", 1);
        let t = p.add_scalar("t");
        p.set_objective(LinearExpr::new().scalar(t, -1.0), 0.0);
        p.add_le(
            LinearExpr::new().scalar(t, 1.0).block(x, HermitianOperator::diag(&[-1.0])),
            0.0,
        );
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolverStatus::Unbounded);
    }

    #[test]
    fn iteration_cap_is_not_optimal() {
        let mut p = ConicProgram::new(Sense::Maximize);
        let x = p.add_block("X", 3);
        p.set_objective(LinearExpr::new().block(x, HermitianOperator::diag(&[1.0, 2.0, 3.0])), 0.0);
        p.add_eq(LinearExpr::new().block(x, HermitianOperator::identity(3)), 1.0);
        let r = solve(
            &p,
            &SolverOptions {
                max_iter: 2,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        assert_eq!(r.status, SolverStatus::MaxIter);
        assert!(r.log_csv().starts_with("iter,mu,primal_res,dual_res,gap\n"));
        assert_eq!(r.log.len(), 3);
    }

    #[test]
    fn malformed_program_rejected() {
        let mut p = ConicProgram::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_eq(LinearExpr::new().block(x, HermitianOperator::identity(3)), 1.0);
        assert!(matches!(solve(&p, &opts()), Err(crate::Error::MalformedProgram(_))));
        let empty = ConicProgram::new(Sense::Minimize);
        assert!(matches!(solve(&empty, &opts()), Err(crate::Error::MalformedProgram(_))));
    }

    #[test]
    fn realify_examples() {
        let r = realify(&HermitianOperator::diag(&[1.0, 2.0]));
        assert_eq!(r, nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 1.0, 2.0])));
        let m = HermitianOperator::from_matrix(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 0.0)],
        ))
        .unwrap();
        let r = realify(&m);
        let expect = nalgebra::DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(r, expect);
    }
}
