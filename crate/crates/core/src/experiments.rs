//! Experiment grids: potential scaling on spheres, operator convergence on
//! the torus, exactness on the equispaced circle and constraint validity.
//!
//! Every grid cell draws its points from its own stream
//! `cell_seed(config.seed, cell_index)`, cells run on the rayon pool and rows
//! come back in grid order, so the output does not depend on the number of
//! workers. A failing cell yields a row with an error status instead of
//! aborting the grid.

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    cost_matrix, equispaced_circle, sample_sphere, sample_torus, with_base_point, CostScale, ManifoldSpec,
    TestFunction,
};
use crate::graph::{apply_row, evaluate_field, plugin_weights, operator_limit, weights_from_coupling, OperatorEstimate};
use crate::rng::cell_seed;
use crate::scaling::{
    admissible_epsilon_window, circle_threshold, constraint_expansion, empirical_constraint_statistic,
    ScalingConstants,
};
use crate::solver::{solve_semismooth_newton, QotProblem, SolveOptions};
use crate::stats::{ols, LinearFit};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

pub const SCHEMA_LINE: &str = "#schema=1";

/// How the `eps` values of a grid are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonGrid {
    Values(Vec<f64>),
    /// `eps = constant * N^alpha`.
    Powers { alphas: Vec<f64>, constant: f64 },
    /// Circle only: `eps = 16 pi^2 k^3 / (3N)` targets `k` neighbours a side.
    Neighbors(Vec<f64>),
}

impl EpsilonGrid {
    pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min > 0.0 && max >= min) || count == 0 {
            return Err(invalid("log grid needs 0 < min <= max and count >= 1"));
        }
        if count == 1 {
            return Ok(Self::Values(vec![min]));
        }
        let (a, b) = (min.ln(), max.ln());
        Ok(Self::Values((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()))
    }

    fn len(&self) -> usize {
        match self {
            Self::Values(v) | Self::Neighbors(v) => v.len(),
            Self::Powers { alphas, .. } => alphas.len(),
        }
    }

    /// `(eps, alpha)` of entry `i` at sample size `n`.
    fn at(&self, i: usize, n: usize) -> (f64, Option<f64>) {
        match self {
            Self::Values(v) => (v[i], None),
            Self::Powers { alphas, constant } => (constant * (n as f64).powf(alphas[i]), Some(alphas[i])),
            Self::Neighbors(k) => (16.0 * PI * PI * k[i].powi(3) / (3.0 * n as f64), None),
        }
    }
}

/// Which weights feed the operator at the base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Row-normalized solved plan.
    #[default]
    Solved,
    /// `(N+1)(K - c_0j)_+ / eps` with no solve.
    Plugin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Intrinsic dimension for sphere experiments.
    pub d: usize,
    pub n_list: Vec<usize>,
    pub eps: EpsilonGrid,
    pub repeats: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub scale: CostScale,
    pub major: f64,
    pub minor: f64,
    pub base_point: Vec<f64>,
    pub function: TestFunction,
    pub weights: WeightMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            n_list: vec![1000],
            eps: EpsilonGrid::Values(vec![1.0]),
            repeats: 1,
            seed: 42,
            tol: 1e-8,
            max_iter: 100,
            scale: CostScale::Unit,
            major: 1.0,
            minor: 0.5,
            base_point: vec![0.0, 0.5, 0.0],
            function: TestFunction::WeightedQuadratic,
            weights: WeightMode::Solved,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.eps.len() == 0 {
            return Err(invalid("N list and eps grid must be nonempty"));
        }
        if self.repeats == 0 {
            return Err(invalid("repeats must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if let EpsilonGrid::Values(v) | EpsilonGrid::Neighbors(v) = &self.eps {
            if v.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(invalid("eps grid entries must be positive and finite"));
            }
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, max_iter: self.max_iter, init: None }
    }
}

fn status(result: &Result<()>, admissible: bool) -> String {
    let base = match result {
        Ok(()) => "ok",
        Err(e) => e.status_token(),
    };
    if admissible {
        base.to_string()
    } else {
        format!("{base}-inadmissible")
    }
}

fn is_admissible(d: usize, n: usize, eps: f64) -> bool {
    admissible_epsilon_window(d, n).map(|w| w.contains(eps)).unwrap_or(false)
}

/// Fixed-width float formatting, 17 significant digits.
fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// A row type with a fixed CSV header.
pub trait CsvRow {
    const HEADER: &'static str;
    fn to_csv(&self) -> String;
}

pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "{}", R::HEADER)?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereRow {
    pub d: usize,
    pub n: usize,
    pub epsilon: f64,
    pub mean_potential: f64,
    pub seed: u64,
    pub status: String,
}

impl CsvRow for SphereRow {
    const HEADER: &'static str = "d,N,epsilon,mean_potential,seed,status";
    fn to_csv(&self) -> String {
        format!("{},{},{},{},{},{}", self.d, self.n, f(self.epsilon), f(self.mean_potential), self.seed, self.status)
    }
}

/// Mean optimal potential on a fresh sample of `S^d` for every `(N, eps)`.
pub fn run_sphere_scaling(config: &ExperimentConfig) -> Result<Vec<SphereRow>> {
    config.validate()?;
    let manifold = ManifoldSpec::sphere(config.d)?;
    let constants = ScalingConstants::for_manifold(&manifold);
    let cells: Vec<(usize, usize)> =
        config.n_list.iter().flat_map(|&n| (0..config.eps.len()).map(move |i| (n, i))).collect();
    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(index, &(n, i))| {
            let (eps, _) = config.eps.at(i, n);
            let seed = cell_seed(config.seed, index as u64);
            let mut mean = f64::NAN;
            let result = (|| {
                let cloud = sample_sphere(config.d, n, seed)?;
                let problem = QotProblem::from_cost(&cost_matrix(&cloud, config.scale), eps)?;
                let init = constants.ansatz_potential(eps, n, config.scale);
                let sol = solve_semismooth_newton(&problem, &config.solve_options().with_init(init))?;
                mean = sol.potential.mean();
                Ok(())
            })();
            SphereRow {
                d: config.d,
                n,
                epsilon: eps,
                mean_potential: mean,
                seed,
                status: status(&result, is_admissible(config.d, n, eps)),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusRow {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub repeat: usize,
    pub estimate: f64,
    pub limit_oracle: f64,
    pub seed: u64,
    pub status: String,
}

impl CsvRow for TorusRow {
    const HEADER: &'static str = "N,alpha,epsilon,repeat,estimate,limit_oracle,seed,status";
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            f(self.alpha),
            f(self.epsilon),
            self.repeat,
            f(self.estimate),
            f(self.limit_oracle),
            self.seed,
            self.status
        )
    }
}

/// Rescaled operator estimates `-2 (Delta g)(x0) / K` on the torus for several
/// test functions sharing each solve. Returns one row list per function.
pub fn run_torus_convergence_multi(config: &ExperimentConfig, functions: &[TestFunction]) -> Result<Vec<Vec<TorusRow>>> {
    config.validate()?;
    if functions.is_empty() {
        return Err(invalid("at least one test function is required"));
    }
    let manifold = ManifoldSpec::torus(config.major, config.minor)?;
    manifold.check_on_manifold(&config.base_point)?;
    let constants = ScalingConstants::for_manifold(&manifold);
    let limits: Vec<f64> =
        functions.iter().map(|g| operator_limit(&manifold, &config.base_point, *g)).collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for &n in &config.n_list {
        for i in 0..config.eps.len() {
            for r in 0..config.repeats {
                cells.push((n, i, r));
            }
        }
    }
    let per_cell: Vec<(TorusRow, Vec<f64>)> = cells
        .par_iter()
        .enumerate()
        .map(|(index, &(n, i, repeat))| {
            let (eps, alpha) = config.eps.at(i, n);
            let seed = cell_seed(config.seed, index as u64);
            let k = constants.k_eps_n(eps, n as f64);
            let mut estimates = vec![f64::NAN; functions.len()];
            let result = (|| {
                let cloud = with_base_point(&sample_torus(config.major, config.minor, n, seed)?, &config.base_point)?;
                let cost = cost_matrix(&cloud, CostScale::Unit);
                let row: Vec<(usize, f64)> = match config.weights {
                    WeightMode::Solved => {
                        let problem = QotProblem::from_cost(&cost, eps)?;
                        let init = constants.ansatz_potential(eps, n + 1, CostScale::Unit);
                        let sol = solve_semismooth_newton(&problem, &config.solve_options().with_init(init))?;
                        weights_from_coupling(&sol.coupling)?.row(0).collect()
                    }
                    WeightMode::Plugin => {
                        let row = plugin_weights(cost.matrix().row(0).as_slice().expect("contiguous"), k, eps);
                        if row.len() < 2 {
                            return Err(Error::NoActiveNeighbor);
                        }
                        row
                    }
                };
                for (slot, g) in estimates.iter_mut().zip(functions) {
                    let values = evaluate_field(&cloud, *g);
                    *slot = OperatorEstimate::new(apply_row(row.iter().copied(), &values, 0), k, 0)?.rescaled;
                }
                Ok(())
            })();
            let row = TorusRow {
                n,
                alpha: alpha.unwrap_or(f64::NAN),
                epsilon: eps,
                repeat,
                estimate: f64::NAN,
                limit_oracle: f64::NAN,
                seed,
                status: status(&result, is_admissible(2, n, eps)),
            };
            (row, estimates)
        })
        .collect();
    Ok((0..functions.len())
        .map(|fi| {
            per_cell
                .iter()
                .map(|(row, est)| TorusRow { estimate: est[fi], limit_oracle: limits[fi], ..row.clone() })
                .collect()
        })
        .collect())
}

pub fn run_torus_convergence(config: &ExperimentConfig) -> Result<Vec<TorusRow>> {
    Ok(run_torus_convergence_multi(config, &[config.function])?.remove(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleRow {
    pub n: usize,
    pub epsilon: f64,
    pub k_exact: usize,
    pub y_exact: f64,
    pub y_closed: f64,
    pub rel_err: f64,
    pub status: String,
    /// `2 * mean(u)` from the Newton solve.
    pub y_solved: f64,
    pub potential_spread: f64,
}

impl CsvRow for CircleRow {
    const HEADER: &'static str = "N,epsilon,k_exact,y_exact,y_closed,rel_err,status,y_solved,potential_spread";
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            f(self.epsilon),
            self.k_exact,
            f(self.y_exact),
            f(self.y_closed),
            f(self.rel_err),
            self.status,
            f(self.y_solved),
            f(self.potential_spread)
        )
    }
}

/// Spread of the solved potential above which the symmetry check fails.
pub const CIRCLE_SPREAD_TOL: f64 = 1e-8;

/// Solved, exact and closed-form thresholds on the equispaced circle.
pub fn run_circle_exact(config: &ExperimentConfig) -> Result<Vec<CircleRow>> {
    config.validate()?;
    if config.n_list.iter().any(|&n| n < 2) {
        return Err(invalid("circle needs N >= 2"));
    }
    let cells: Vec<(usize, usize)> =
        config.n_list.iter().flat_map(|&n| (0..config.eps.len()).map(move |i| (n, i))).collect();
    Ok(cells
        .par_iter()
        .map(|&(n, i)| {
            let (eps, _) = config.eps.at(i, n);
            let mut row = CircleRow {
                n,
                epsilon: eps,
                k_exact: 0,
                y_exact: f64::NAN,
                y_closed: f64::NAN,
                rel_err: f64::NAN,
                status: String::new(),
                y_solved: f64::NAN,
                potential_spread: f64::NAN,
            };
            let result = (|| {
                let t = circle_threshold(n, eps)?;
                row.k_exact = t.k_exact;
                row.y_exact = t.y_exact;
                row.y_closed = t.y_closed;
                row.rel_err = t.rel_err();
                let cloud = equispaced_circle(n)?;
                let problem = QotProblem::from_cost(&cost_matrix(&cloud, CostScale::Unit), eps)?;
                let sol = solve_semismooth_newton(&problem, &config.solve_options())?;
                row.y_solved = 2.0 * sol.potential.mean();
                row.potential_spread = sol.potential.spread();
                Ok(())
            })();
            row.status = status(&result, is_admissible(1, n, eps));
            if result.is_ok() && row.potential_spread > CIRCLE_SPREAD_TOL {
                row.status = format!("asymmetric-{}", row.status);
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityRow {
    pub d: usize,
    pub n: usize,
    pub epsilon: f64,
    pub repeat: usize,
    pub empirical: f64,
    pub leading: f64,
    pub correction: f64,
    pub status: String,
}

impl CsvRow for ValidityRow {
    const HEADER: &'static str = "d,N,epsilon,repeat,empirical,leading,correction,status";
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.d,
            self.n,
            f(self.epsilon),
            self.repeat,
            f(self.empirical),
            f(self.leading),
            f(self.correction),
            self.status
        )
    }
}

/// Empirical constraint statistic at the pole of `S^d` with `K = K(eps, N)`,
/// next to the analytic expansion. `correction` sums the discrete and
/// curvature terms.
pub fn run_constraint_validity(config: &ExperimentConfig) -> Result<Vec<ValidityRow>> {
    config.validate()?;
    let manifold = ManifoldSpec::sphere(config.d)?;
    let constants = ScalingConstants::for_manifold(&manifold);
    let mut pole = vec![0.0; config.d + 1];
    pole[config.d] = 1.0;
    let curv = manifold.curvature();
    let (s, omega) = (curv.scalar_curvature_at(&pole)?, curv.omega_at(&pole)?);
    let cap = 0.5 * manifold.min_curvature_radius();
    let mut cells = Vec::new();
    for &n in &config.n_list {
        for i in 0..config.eps.len() {
            for r in 0..config.repeats {
                cells.push((n, i, r));
            }
        }
    }
    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(index, &(n, i, repeat))| {
            let (eps, _) = config.eps.at(i, n);
            let seed = cell_seed(config.seed, index as u64);
            let k = constants.k_eps_n(eps, n as f64);
            let terms = constraint_expansion(&constants, s, omega, k, eps, n, None).expect("no cap requested");
            let mut empirical = f64::NAN;
            let result = (|| {
                empirical = empirical_constraint_statistic(config.d, n, eps, seed)?;
                if k.sqrt() > cap {
                    return Err(Error::CapViolation { radius: k.sqrt(), cap });
                }
                Ok(())
            })();
            ValidityRow {
                d: config.d,
                n,
                epsilon: eps,
                repeat,
                empirical,
                leading: terms.leading,
                correction: terms.discrete_correction + terms.curvature_correction,
                status: status(&result, is_admissible(config.d, n, eps)),
            }
        })
        .collect())
}

/// Which points of a sweep enter a log-log fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    All,
    /// Longest run of the largest-`x` points whose fit reaches `min_r2`.
    LargestSuffix { min_r2: f64, min_points: usize },
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self::LargestSuffix { min_r2: 0.999, min_points: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub fit: LinearFit,
    /// Half-open range of the sorted points used.
    pub window: (usize, usize),
}

/// OLS of `log y` on `log x` over the selected window. Points with
/// nonpositive or non-finite coordinates are dropped first.
pub fn fit_loglog_slope(x: &[f64], y: &[f64], policy: WindowPolicy) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(invalid("x and y lengths differ"));
    }
    let mut pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 4 {
        return Err(Error::DegenerateWindow(format!("{} usable points, need 4", pts.len())));
    }
    let fit_range = |lo: usize| -> Result<LinearFit> {
        let (lx, ly): (Vec<f64>, Vec<f64>) = pts[lo..].iter().copied().unzip();
        ols(&lx, &ly)
    };
    match policy {
        WindowPolicy::All => Ok(SlopeFit { fit: fit_range(0)?, window: (0, pts.len()) }),
        WindowPolicy::LargestSuffix { min_r2, min_points } => {
            let min_points = min_points.max(4);
            if pts.len() < min_points {
                return Err(Error::DegenerateWindow(format!("{} points, need {min_points}", pts.len())));
            }
            for lo in 0..=pts.len() - min_points {
                let fit = fit_range(lo)?;
                if fit.r_squared >= min_r2 {
                    return Ok(SlopeFit { fit, window: (lo, pts.len()) });
                }
            }
            Err(Error::DegenerateWindow(format!("no suffix of at least {min_points} points reaches R^2 >= {min_r2}")))
        }
    }
}
