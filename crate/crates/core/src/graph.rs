//! Graph operator built from an optimal coupling.
//!
//! Row-normalizing the plan gives the weights `W_ij = pi_ij / sum_j pi_ij`
//! and the operator `(Delta g)(x_i) = sum_j W_ij (g(x_i) - g(x_j))`. With the
//! point scale `K`, `-2 Delta g / K` approximates a second-order
//! differential operator at the base point.

use crate::error::{invalid, Error, Result};
use crate::geometry::{ManifoldSpec, PointCloud, TestFunction};
use crate::scaling::circle_threshold;
use crate::solver::Coupling;
use crate::sparse::CsrMatrix;
use std::f64::consts::PI;

/// Row-stochastic weights with the sparsity of the source coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub weights: CsrMatrix,
}

impl WeightMatrix {
    pub fn len(&self) -> usize {
        self.weights.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.row(i)
    }
}

pub fn weights_from_coupling(coupling: &Coupling) -> Result<WeightMatrix> {
    let sums = coupling.plan.row_sums();
    if let Some(i) = sums.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ZeroRow(i));
    }
    Ok(WeightMatrix { weights: coupling.plan.map_rows(|i, v| v / sums[i]) })
}

/// Plug-in weights `(N+1)(K - c_0j)_+ / eps` of the base row, where `N+1` is
/// the number of costs given. These are not normalized.
pub fn plugin_weights(base_costs: &[f64], k: f64, epsilon: f64) -> Vec<(usize, f64)> {
    let m = base_costs.len() as f64;
    base_costs
        .iter()
        .enumerate()
        .filter(|(_, c)| k > **c)
        .map(|(j, c)| (j, m * (k - c) / epsilon))
        .collect()
}

/// `sum_j w_j (g_base - g_j)` over a sparse weight row.
pub fn apply_row(row: impl IntoIterator<Item = (usize, f64)>, values: &[f64], base: usize) -> f64 {
    let g0 = values[base];
    row.into_iter().map(|(j, w)| w * (g0 - values[j])).sum()
}

/// `sum_j W_bj (g(x_b) - g(x_j))` with `values[j] = g(x_j)`.
pub fn apply_operator(w: &WeightMatrix, values: &[f64], base: usize) -> Result<f64> {
    if values.len() != w.len() || base >= w.len() {
        return Err(invalid("field values and base index must match the weight matrix"));
    }
    Ok(apply_row(w.row(base), values, base))
}

/// Values of a test function at every point of a cloud.
pub fn evaluate_field(cloud: &PointCloud, g: TestFunction) -> Vec<f64> {
    cloud.points().rows().into_iter().map(|r| g.value(r.as_slice().expect("rows are contiguous"))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorEstimate {
    pub raw: f64,
    /// `-2 raw / k`.
    pub rescaled: f64,
    pub k: f64,
    pub base: usize,
}

impl OperatorEstimate {
    pub fn new(raw: f64, k: f64, base: usize) -> Result<Self> {
        if !(k > 0.0) {
            return Err(invalid(format!("scale K must be positive, got {k}")));
        }
        Ok(Self { raw, rescaled: -2.0 * raw / k, k, base })
    }
}

pub fn rescaled_estimate(w: &WeightMatrix, values: &[f64], base: usize, k: f64) -> Result<OperatorEstimate> {
    OperatorEstimate::new(apply_operator(w, values, base)?, k, base)
}

/// Limit of the rescaled operator at `x0`:
/// `d <grad g, mean_II / 2> + (1/2) sum_i t_i^T Hess g t_i` over an
/// orthonormal tangent basis `t_i`.
pub fn operator_limit(manifold: &ManifoldSpec, x0: &[f64], g: TestFunction) -> Result<f64> {
    let curv = manifold.curvature();
    let frame = curv.local_frame(x0)?;
    let mean_ii = curv.mean_ii_at(x0)?;
    let d = manifold.intrinsic_dim() as f64;
    let grad = g.gradient(x0);
    let hess = g.hessian(x0);
    let drift: f64 = grad.iter().zip(&mean_ii).map(|(a, b)| a * b / 2.0).sum::<f64>() * d;
    let diffusion: f64 = frame
        .tangents
        .iter()
        .map(|t| {
            let ht = hess.dot(&ndarray::ArrayView1::from(t.as_slice()));
            t.iter().zip(ht.iter()).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum();
    Ok(drift + 0.5 * diffusion)
}

/// `eps^{-2/3} N^{4/3} (Delta g)(0, 1)` on `N` equispaced circle points, with
/// the exact constant potential of the circle problem under unit cost.
pub fn circle_operator_profile(n: usize, epsilon: f64, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let t = circle_threshold(n, epsilon)?;
    if t.k_exact == 0 {
        return Err(Error::NoActiveNeighbor);
    }
    let y = t.y_exact;
    let nf = n as f64;
    let point = |j: usize| {
        let a = PI / 2.0 + 2.0 * PI * j as f64 / nf;
        (a.cos(), a.sin())
    };
    let g0 = g(0.0, 1.0);
    // W_0j = N pi_0j = N (y - D_j)_+ / eps; pair j with N - j so odd terms cancel
    let mut sum = 0.0;
    for j in 1..=t.k_exact.min(n / 2) {
        let dj = (2.0 * (PI * j as f64 / nf).sin()).powi(2);
        let w = nf * (y - dj).max(0.0) / epsilon;
        let (a, b) = point(j);
        let (c, e) = point(n - j);
        if 2 * j == n {
            sum += w * (g0 - g(a, b));
        } else {
            sum += w * ((g0 - g(a, b)) + (g0 - g(c, e)));
        }
    }
    Ok(epsilon.powf(-2.0 / 3.0) * nf.powf(4.0 / 3.0) * sum)
}
