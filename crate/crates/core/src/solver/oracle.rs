//! Independent primal oracle for tiny instances.
//!
//! `min <C, pi> + (eps/2)|pi|^2` over the bistochastic polytope is the
//! Euclidean projection of `-C/eps` onto that polytope. Dykstra's
//! alternating projection between the affine marginal constraints and the
//! nonnegative orthant converges to it.

use super::{marginal_residual, primal_objective, Coupling, QotProblem};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use ndarray::Array2;

pub const ORACLE_MAX_N: usize = 8;
const RESIDUAL_TOL: f64 = 1e-10;
const STALL_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 20_000_000;

/// Projection onto `{X : X 1 = 1/n, X^T 1 = 1/n}`.
fn project_marginals(x: &mut Array2<f64>) {
    let n = x.nrows();
    let nf = n as f64;
    let target = 1.0 / nf;
    let rows: Vec<f64> = x.rows().into_iter().map(|r| r.sum()).collect();
    let cols: Vec<f64> = x.columns().into_iter().map(|c| c.sum()).collect();
    let total: f64 = rows.iter().sum();
    for i in 0..n {
        for j in 0..n {
            x[[i, j]] += -(rows[i] - target) / nf - (cols[j] - target) / nf + (total - 1.0) / (nf * nf);
        }
    }
}

/// Returns the optimal plan and the primal objective.
pub fn brute_force_solve(problem: &QotProblem) -> Result<(Coupling, f64)> {
    let n = problem.len();
    if n > ORACLE_MAX_N {
        return Err(Error::TooLarge { n, max: ORACLE_MAX_N });
    }
    let mut x = problem.cost().mapv(|c| -c / problem.epsilon());
    let mut p = Array2::<f64>::zeros((n, n));
    let mut q = Array2::<f64>::zeros((n, n));
    let mut y;
    for sweep in 0..MAX_SWEEPS {
        y = &x + &p;
        project_marginals(&mut y);
        p = &x + &p - &y;
        let shifted = &y + &q;
        let next = shifted.mapv(|v| v.max(0.0));
        q = shifted - &next;
        let change = (&next - &x).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        x = next;
        if sweep % 64 == 0 || change <= STALL_TOL {
            let coupling = Coupling { plan: CsrMatrix::from_dense_filtered(&x, |v| v > 0.0) };
            if marginal_residual(problem, &coupling) <= RESIDUAL_TOL && change <= STALL_TOL {
                let objective = primal_objective(problem, &coupling);
                return Ok((coupling, objective));
            }
        }
    }
    let coupling = Coupling { plan: CsrMatrix::from_dense_filtered(&x, |v| v > 0.0) };
    Err(Error::NonConvergence { iterations: MAX_SWEEPS, residual: marginal_residual(problem, &coupling) })
}
