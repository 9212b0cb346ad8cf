//! Symmetric quadratically regularised optimal transport between the
//! uniform empirical measure and itself.
//!
//! The primal problem is `min <C, pi> + (eps/2) |pi|^2` over bistochastic
//! couplings with marginals `1/N`. The solver works on the single-potential
//! dual
//!
//! ```text
//! F(u) = (1/N) sum_i u_i - 1/(4 eps) sum_ij [u_i + u_j - C_ij]_+^2
//! ```
//!
//! and recovers the plan as `pi = [u (+) u - C]_+ / eps`. At the optimum the
//! primal value equals `2 F(u)`.

mod newton;
mod oracle;

pub use newton::{solve_semismooth_newton, SolveOptions};
pub use oracle::{brute_force_solve, ORACLE_MAX_N};

use crate::error::{invalid, Result};
use crate::geometry::CostMatrix;
use crate::sparse::CsrMatrix;
use ndarray::Array2;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct QotProblem {
    cost: Array2<f64>,
    epsilon: f64,
}

impl QotProblem {
    /// Validates a square, symmetric, finite cost and `epsilon > 0`.
    pub fn new(cost: Array2<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        let n = cost.nrows();
        if n == 0 || cost.ncols() != n {
            return Err(invalid("cost matrix must be square and nonempty"));
        }
        for i in 0..n {
            for j in 0..=i {
                let c = cost[[i, j]];
                if !c.is_finite() || c != cost[[j, i]] {
                    return Err(invalid(format!("cost is not finite and symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { cost, epsilon })
    }

    pub fn from_cost(cost: &CostMatrix, epsilon: f64) -> Result<Self> {
        Self::new(cost.matrix().clone(), epsilon)
    }

    pub fn len(&self) -> usize {
        self.cost.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.nrows() == 0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }

    /// Mass per point, `1/N`.
    pub fn marginal(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.cost.clone(), epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential(pub Vec<f64>);

impl DualPotential {
    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// `max - min` over entries.
    pub fn spread(&self) -> f64 {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Sparse symmetric transport plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub plan: CsrMatrix,
}

impl Coupling {
    pub fn len(&self) -> usize {
        self.plan.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.dim() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan.get(i, j)
    }

    /// Index pairs with positive mass.
    pub fn support(&self) -> Vec<(usize, usize)> {
        (0..self.len()).flat_map(|i| self.plan.row(i).map(move |(j, _)| (i, j))).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub objective_trace: Vec<f64>,
    pub active_set_sizes: Vec<usize>,
    pub step_lengths: Vec<f64>,
    pub repaired_rows: usize,
    /// Steps accepted on residual decrease after the Armijo test failed
    /// at round-off level.
    pub fallback_steps: usize,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QotSolution {
    pub potential: DualPotential,
    pub coupling: Coupling,
    pub report: SolveReport,
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn dual_objective(problem: &QotProblem, u: &[f64]) -> f64 {
    let n = problem.len();
    assert_eq!(u.len(), n);
    let linear = compensated_sum(u.iter().copied()) / n as f64;
    let quad = compensated_sum((0..n).map(|i| {
        let row = problem.cost.row(i);
        let ui = u[i];
        compensated_sum(row.iter().zip(u).map(|(c, uj)| {
            let s = ui + uj - c;
            if s > 0.0 {
                s * s
            } else {
                0.0
            }
        }))
    }));
    linear - quad / (4.0 * problem.epsilon)
}

/// `1/N - (1/eps) sum_j [u_i + u_j - C_ij]_+`.
pub fn dual_gradient(problem: &QotProblem, u: &[f64]) -> Vec<f64> {
    let n = problem.len();
    let m = problem.marginal();
    (0..n)
        .map(|i| {
            let row = problem.cost.row(i);
            let s = compensated_sum(row.iter().zip(u).map(|(c, uj)| (u[i] + uj - c).max(0.0)));
            m - s / problem.epsilon
        })
        .collect()
}

/// `pi_ij = (u_i + u_j - C_ij)_+ / eps`; ties `u_i + u_j = C_ij` are inactive.
pub fn recover_plan(problem: &QotProblem, u: &[f64]) -> Coupling {
    let n = problem.len();
    let eps = problem.epsilon;
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    for i in 0..n {
        for (j, c) in problem.cost.row(i).iter().enumerate() {
            let s = u[i] + u[j] - c;
            if s > 0.0 {
                indices.push(j);
                values.push(s / eps);
            }
        }
        indptr.push(indices.len());
    }
    Coupling { plan: CsrMatrix::from_parts(n, indptr, indices, values) }
}

/// `max_j |sum_i pi_ij - 1/N|`.
pub fn marginal_residual(problem: &QotProblem, coupling: &Coupling) -> f64 {
    let m = problem.marginal();
    coupling.plan.col_sums().iter().map(|s| (s - m).abs()).fold(0.0, f64::max)
}

/// `<C, pi> + (eps/2) |pi|^2`.
pub fn primal_objective(problem: &QotProblem, coupling: &Coupling) -> f64 {
    let n = coupling.len();
    compensated_sum((0..n).flat_map(|i| {
        coupling
            .plan
            .row(i)
            .map(move |(j, p)| problem.cost[[i, j]] * p + 0.5 * problem.epsilon * p * p)
    }))
}

/// Jacobi-style step `(sum_j (u_i + u_j - c_ij)_+ - eps/N) / G_ii` where
/// `G_ii` counts the active entries of row `i` and `N` is the number of
/// points in the problem. Newton moves `u_i <- u_i - step_i`. Rows with
/// an empty active set yield `None`.
pub fn diagonal_update_step(problem: &QotProblem, u: &[f64]) -> Vec<Option<f64>> {
    let n = problem.len();
    let target = problem.epsilon / n as f64;
    (0..n)
        .map(|i| {
            let mut count = 0usize;
            let mut sum = 0.0;
            for (c, uj) in problem.cost.row(i).iter().zip(u) {
                let s = u[i] + uj - c;
                if s > 0.0 {
                    count += 1;
                    sum += s;
                }
            }
            (count > 0).then(|| (sum - target) / count as f64)
        })
        .collect()
}

/// Starting point `max_j C_ij / N` used when no scaling ansatz is available.
pub fn default_init(problem: &QotProblem) -> DualPotential {
    let n = problem.len() as f64;
    DualPotential(
        problem
            .cost
            .rows()
            .into_iter()
            .map(|r| r.iter().copied().fold(0.0, f64::max) / n)
            .collect(),
    )
}
