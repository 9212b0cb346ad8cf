//! Semismooth Newton ascent on the dual.
//!
//! The generalized Hessian of `F` is `-(D + S)/eps`, where `S` is the
//! active-set indicator `sigma_ij = 1{u_i + u_j > C_ij}` and `D` its row
//! counts. `D + S` is positive semidefinite, so each step solves the
//! regularized system `(D + S + delta I) d = eps * grad F` by
//! Jacobi-preconditioned conjugate gradients on the sparse active set and
//! backtracks with an Armijo test.

use super::{compensated_sum, dual_objective, recover_plan, DualPotential, QotProblem, QotSolution, SolveReport};
use crate::error::{Error, Result};

const ARMIJO_SLOPE: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const REGULARIZATION: f64 = 1e-10;
const CG_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub init: Option<DualPotential>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, init: None }
    }
}

impl SolveOptions {
    pub fn with_init(mut self, init: DualPotential) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Active entries of `u (+) u - C` in CSR layout.
struct ActiveSet {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    diag_active: Vec<bool>,
    row_slack: Vec<f64>,
}

impl ActiveSet {
    fn build(problem: &QotProblem, u: &[f64]) -> Self {
        let n = problem.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut diag_active = vec![false; n];
        let mut row_slack = Vec::with_capacity(n);
        indptr.push(0);
        let mut buf = Vec::new();
        for i in 0..n {
            buf.clear();
            for (j, (c, uj)) in problem.cost.row(i).iter().zip(u).enumerate() {
                let s = u[i] + uj - c;
                if s > 0.0 {
                    indices.push(j);
                    buf.push(s);
                    if j == i {
                        diag_active[i] = true;
                    }
                }
            }
            row_slack.push(compensated_sum(buf.iter().copied()));
            indptr.push(indices.len());
        }
        Self { indptr, indices, diag_active, row_slack }
    }

    fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// `(D + S + delta I) x`.
    fn apply(&self, x: &[f64], delta: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
            let s: f64 = row.iter().map(|&j| x[j]).sum();
            *o = (row.len() as f64 + delta) * x[i] + s;
        }
    }
}

fn gradient_from(problem: &QotProblem, active: &ActiveSet) -> Vec<f64> {
    let m = problem.marginal();
    active.row_slack.iter().map(|s| m - s / problem.epsilon).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(active: &ActiveSet, delta: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let precond: Vec<f64> = (0..n)
        .map(|i| 1.0 / (active.degree(i) as f64 + delta + if active.diag_active[i] { 1.0 } else { 0.0 }))
        .collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = CG_REL_TOL * dot(rhs, rhs).sqrt();
    let mut ap = vec![0.0; n];
    for _ in 0..(2 * n).max(50) {
        if dot(&r, &r).sqrt() <= target {
            break;
        }
        active.apply(&p, delta, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Raises `u_i` just past the smallest threshold at which row `i` gains an
/// active entry. Returns the number of repaired rows.
fn repair_empty_rows(problem: &QotProblem, u: &mut [f64]) -> Result<usize> {
    let n = problem.len();
    let mut repaired = 0;
    for i in 0..n {
        let row = problem.cost.row(i);
        let empty = row.iter().zip(u.iter()).all(|(c, uj)| u[i] + uj - c <= 0.0);
        if !empty {
            continue;
        }
        let mut threshold = row[i] / 2.0;
        for (j, (c, uj)) in row.iter().zip(u.iter()).enumerate() {
            if j != i {
                threshold = threshold.min(c - uj);
            }
        }
        let raised = threshold + 1e-12 * (1.0 + threshold.abs());
        if !raised.is_finite() {
            return Err(Error::DegenerateActiveSet { row: i });
        }
        u[i] = raised;
        if row.iter().zip(u.iter()).all(|(c, uj)| u[i] + uj - c <= 0.0) {
            return Err(Error::DegenerateActiveSet { row: i });
        }
        repaired += 1;
    }
    Ok(repaired)
}

/// Maximizes the dual until the marginal residual `max_i |grad_i|` is at
/// most `tol`.
pub fn solve_semismooth_newton(problem: &QotProblem, options: &SolveOptions) -> Result<QotSolution> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = problem.len();
    let mut u = match &options.init {
        Some(init) if init.0.len() == n => init.0.clone(),
        Some(_) => return Err(Error::InvalidParameter("initial potential has the wrong length".into())),
        None => super::default_init(problem).0,
    };
    let mut report = SolveReport::default();
    report.repaired_rows += repair_empty_rows(problem, &mut u)?;

    let eps = problem.epsilon;
    let mut objective = dual_objective(problem, &u);
    for iter in 0..=options.max_iter {
        let active = ActiveSet::build(problem, &u);
        let grad = gradient_from(problem, &active);
        let residual = max_abs(&grad);
        report.iterations = iter;
        report.residual = residual;
        report.objective_trace.push(objective);
        report.active_set_sizes.push(active.nnz());
        if residual <= options.tol {
            let coupling = recover_plan(problem, &u);
            return Ok(QotSolution { potential: DualPotential(u), coupling, report });
        }
        if iter == options.max_iter {
            break;
        }

        let trace: f64 = (0..n).map(|i| active.degree(i) as f64 + if active.diag_active[i] { 1.0 } else { 0.0 }).sum();
        let delta = REGULARIZATION * trace / n as f64;
        let rhs: Vec<f64> = grad.iter().map(|g| eps * g).collect();
        let direction = conjugate_gradient(&active, delta, &rhs);
        let slope = dot(&grad, &direction);

        // Ascent below this level is invisible in the objective.
        let noise = 1e-13 * (1.0 + objective.abs());
        let mut t = 1.0;
        let mut accepted = None;
        let mut trial = vec![0.0; n];
        for _ in 0..MAX_BACKTRACKS {
            if t * slope <= noise {
                break;
            }
            for i in 0..n {
                trial[i] = u[i] + t * direction[i];
            }
            let value = dual_objective(problem, &trial);
            if value >= objective + ARMIJO_SLOPE * t * slope {
                accepted = Some(value);
                break;
            }
            t *= BACKTRACK;
        }
        match accepted {
            Some(value) => {
                u.copy_from_slice(&trial);
                objective = value;
            }
            None => {
                // Round-off regime: accept the full step if it reduces the residual.
                for i in 0..n {
                    trial[i] = u[i] + direction[i];
                }
                let next = ActiveSet::build(problem, &trial);
                if max_abs(&gradient_from(problem, &next)) < residual {
                    u.copy_from_slice(&trial);
                    objective = objective.max(dual_objective(problem, &u));
                    report.fallback_steps += 1;
                    t = 1.0;
                } else {
                    return Err(Error::NonConvergence { iterations: iter, residual });
                }
            }
        }
        report.step_lengths.push(t);
        report.repaired_rows += repair_empty_rows(problem, &mut u)?;
        if report.repaired_rows > 0 {
            objective = dual_objective(problem, &u);
        }
    }
    Err(Error::NonConvergence { iterations: options.max_iter, residual: report.residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{marginal_residual, primal_objective};
    use ndarray::{array, Array2};

    #[test]
    fn two_point_closed_form() {
        let p = QotProblem::new(array![[0.0, 1.0], [1.0, 0.0]], 4.0).unwrap();
        let sol = solve_semismooth_newton(&p, &SolveOptions::default().with_tol(1e-13)).unwrap();
        for u in &sol.potential.0 {
            assert!((u - 0.75).abs() < 1e-12);
        }
        assert!((sol.coupling.get(0, 0) - 0.375).abs() < 1e-12);
        assert!((sol.coupling.get(1, 0) - 0.125).abs() < 1e-12);
        assert!((primal_objective(&p, &sol.coupling) - 0.875).abs() < 1e-12);
    }

    #[test]
    fn identical_points_give_uniform_plan() {
        let p = QotProblem::new(Array2::zeros((3, 3)), 0.9).unwrap();
        let sol = solve_semismooth_newton(&p, &SolveOptions::default().with_tol(1e-14)).unwrap();
        for u in &sol.potential.0 {
            assert!((u - 0.05).abs() < 1e-13);
        }
        for v in sol.coupling.plan.values() {
            assert!((v - 1.0 / 9.0).abs() < 1e-13);
        }
    }

    #[test]
    fn repairs_a_negative_start() {
        let p = QotProblem::new(array![[0.0, 1.0], [1.0, 0.0]], 4.0).unwrap();
        let opts = SolveOptions::default().with_init(DualPotential(vec![-3.0, -2.0]));
        let sol = solve_semismooth_newton(&p, &opts).unwrap();
        assert!(sol.report.repaired_rows >= 1);
        assert!(marginal_residual(&p, &sol.coupling) <= 1e-8);
    }

    #[test]
    fn reports_nonconvergence() {
        let p = QotProblem::new(array![[0.0, 1.0], [1.0, 0.0]], 4.0).unwrap();
        let opts = SolveOptions { tol: 1e-8, max_iter: 0, init: Some(DualPotential(vec![0.1, 0.1])) };
        assert!(matches!(solve_semismooth_newton(&p, &opts), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn rejects_bad_options() {
        let p = QotProblem::new(array![[0.0]], 1.0).unwrap();
        assert!(solve_semismooth_newton(&p, &SolveOptions { tol: 0.0, ..Default::default() }).is_err());
        let opts = SolveOptions::default().with_init(DualPotential(vec![0.0, 0.0]));
        assert!(solve_semismooth_newton(&p, &opts).is_err());
    }
}
