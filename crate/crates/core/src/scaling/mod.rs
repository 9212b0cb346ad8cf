//! Closed-form scaling of the optimal potentials with `eps` and `N`.
//!
//! With squared-distance cost (scale 1) the sum `u_i + u_j` at the optimum is
//! close to the constant `K(eps, N) = C_d eps^{2/(d+2)} N^{-4/(d+2)}`, where
//! `C_d` makes the expected marginal constraint hold at first order.

mod circle;
mod expansion;
mod moments;
mod order_stats;

pub use circle::{circle_threshold, circle_threshold_closed_form, CircleThreshold};
pub use expansion::{
    check_cap, constraint_expansion, constraint_statistic, empirical_constraint_statistic, ExpansionTerms,
};
pub use moments::{
    fourth_moment_leading, sphere_fourth_moment, sphere_fourth_moment_quadrature, BallMoment, CapEstimate,
    MomentOracle, SphereCapSampler,
};
pub use order_stats::{
    order_statistic_moment, order_statistic_partial_sum, order_statistic_partial_sum_leading, PartialSum,
};

use crate::error::{invalid, Error, Result};
use crate::geometry::{unit_sphere_area, CostScale, ManifoldSpec};
use crate::solver::DualPotential;

/// `2/(2+d)`: exponent of `eps` in the continuous potential.
pub fn continuous_exponent(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    Ok(2.0 / (2.0 + d as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConstants {
    pub d: usize,
    pub vol: f64,
    /// `|S^{d-1}|`.
    pub sphere_area: f64,
    /// `(vol d / |S^{d-1}|)^{2/d}`, the scale of squared distances to the
    /// `j`-th nearest neighbour.
    pub kappa_d: f64,
    /// `(vol d (d+2) / (2 |S^{d-1}|))^{2/(d+2)}`.
    pub c_d: f64,
}

impl ScalingConstants {
    pub fn new(d: usize, vol: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(vol > 0.0 && vol.is_finite()) {
            return Err(invalid(format!("volume must be positive, got {vol}")));
        }
        let df = d as f64;
        let sphere_area = unit_sphere_area(d - 1);
        let kappa_d = (vol * df / sphere_area).powf(2.0 / df);
        let c_d = (vol * df * (df + 2.0) / (2.0 * sphere_area)).powf(2.0 / (df + 2.0));
        Ok(Self { d, vol, sphere_area, kappa_d, c_d })
    }

    pub fn for_manifold(manifold: &ManifoldSpec) -> Self {
        Self::new(manifold.intrinsic_dim(), manifold.volume()).expect("manifold constants are valid")
    }

    /// `K(eps, N) = C_d eps^{2/(d+2)} N^{-4/(d+2)}`.
    pub fn k_eps_n(&self, epsilon: f64, n: f64) -> f64 {
        let df = self.d as f64;
        self.c_d * epsilon.powf(2.0 / (df + 2.0)) * n.powf(-4.0 / (df + 2.0))
    }

    /// Constant starting potential for a cost `gamma |x - y|^2`. The problem
    /// with cost `gamma D` and `eps` is `gamma` times the problem with cost
    /// `D` and `eps / gamma`, whose potentials sum to about `K`.
    pub fn ansatz_potential(&self, epsilon: f64, n_points: usize, scale: CostScale) -> DualPotential {
        let gamma = scale.value();
        let value = gamma * self.k_eps_n(epsilon / gamma, n_points as f64) / 2.0;
        DualPotential::constant(n_points, value)
    }
}

/// The window `N^{1-2/d} < eps < N^2` in which the first-order potential
/// satisfies the constraints in expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonWindow {
    pub lower: f64,
    pub upper: f64,
}

impl EpsilonWindow {
    pub fn contains(&self, epsilon: f64) -> bool {
        self.lower < epsilon && epsilon < self.upper
    }
}

pub fn admissible_epsilon_window(d: usize, n: usize) -> Result<EpsilonWindow> {
    if d == 0 || n < 2 {
        return Err(invalid("window needs d >= 1 and N >= 2"));
    }
    let nf = n as f64;
    Ok(EpsilonWindow { lower: nf.powf(1.0 - 2.0 / d as f64), upper: nf * nf })
}

/// Epanechnikov bandwidth `(eps N^{-2})^{1/(2+d)}` equivalent to the plan.
pub fn bandwidth_equivalent(epsilon: f64, n: f64, d: usize) -> Result<f64> {
    if !(epsilon > 0.0 && n > 0.0) || d == 0 {
        return Err(invalid("bandwidth needs eps > 0, N > 0 and d >= 1"));
    }
    Ok((epsilon / (n * n)).powf(1.0 / (2.0 + d as f64)))
}

/// `N^{(3d+2)/(2d(d+2))} (log N)^{p_d (d+2)/2}` with `p_2 = 3/4` and
/// `p_d = 1/d` for `d >= 3`.
pub fn spectral_epsilon_schedule(n: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter("spectral schedule needs d >= 2".into()));
    }
    if !(n >= 3.0) {
        return Err(invalid("spectral schedule needs N >= 3"));
    }
    let df = d as f64;
    let p_d = if d == 2 { 0.75 } else { 1.0 / df };
    let exponent = (3.0 * df + 2.0) / (2.0 * df * (df + 2.0));
    Ok(n.powf(exponent) * n.ln().powf(p_d * (df + 2.0) / 2.0))
}
