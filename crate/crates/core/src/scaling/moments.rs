//! Small-ball moments of the uniform law on a manifold around `x0`.
//!
//! Coordinates are those of the aligned frame: `x0` at the origin, the
//! tangent space on the first `d` axes and the normal on the rest.

use super::check_cap;
use crate::error::{invalid, Result};
use crate::geometry::ManifoldSpec;
use crate::rng::rng_from_seed;
use crate::stats::adaptive_simpson;
use ndarray::Array2;
use rand::Rng;
use std::f64::consts::PI;

/// Leading and second-order terms of `E[f(X) 1{|X - x0| <= r}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMoment {
    pub leading: f64,
    pub second_order: f64,
}

impl BallMoment {
    pub fn total(&self) -> f64 {
        self.leading + self.second_order
    }
}

#[derive(Debug, Clone)]
pub struct MomentOracle {
    manifold: ManifoldSpec,
    d: usize,
    vol: f64,
    sphere_area: f64,
    scalar_curvature: f64,
    omega: f64,
    allow_large_radius: bool,
}

impl MomentOracle {
    pub fn new(manifold: &ManifoldSpec, x0: &[f64]) -> Result<Self> {
        let curv = manifold.curvature();
        Ok(Self {
            manifold: *manifold,
            d: manifold.intrinsic_dim(),
            vol: manifold.volume(),
            sphere_area: manifold.tangent_sphere_area(),
            scalar_curvature: curv.scalar_curvature_at(x0)?,
            omega: curv.omega_at(x0)?,
            allow_large_radius: false,
        })
    }

    /// Lifts the half-curvature-radius cap on `r`.
    pub fn allow_large_radius(mut self, allow: bool) -> Self {
        self.allow_large_radius = allow;
        self
    }

    fn check(&self, r: f64) -> Result<()> {
        if !(r > 0.0) {
            return Err(invalid(format!("radius must be positive, got {r}")));
        }
        check_cap(&self.manifold, r, self.allow_large_radius)
    }

    /// `f0` and `laplacian_f0` are `f(x0)` and its Laplace-Beltrami value.
    pub fn ball_moment(&self, f0: f64, laplacian_f0: f64, r: f64) -> Result<BallMoment> {
        self.check(r)?;
        let d = self.d as f64;
        let leading = self.sphere_area / (d * self.vol) * f0 * r.powf(d);
        let bracket = laplacian_f0 / (2.0 * self.vol)
            + self.scalar_curvature * f0 / (6.0 * self.vol)
            + d * (d + 2.0) * self.omega * f0 / (24.0 * self.vol);
        let second_order = self.sphere_area / (d * (d + 2.0)) * bracket * r.powf(d + 2.0);
        Ok(BallMoment { leading, second_order })
    }

    /// Leading term of `E[f(X) (X - x0)(X - x0)^T 1{|X - x0| <= r}]`:
    /// `|S^{d-1}| f r^{d+2} / (d (d+2) vol)` on the tangent block, zero elsewhere.
    pub fn covariance_leading(&self, f0: f64, r: f64) -> Result<Array2<f64>> {
        self.check(r)?;
        let d = self.d as f64;
        let p = self.manifold.ambient_dim();
        let v = self.sphere_area / (d * (d + 2.0) * self.vol) * f0 * r.powf(d + 2.0);
        let mut m = Array2::zeros((p, p));
        for i in 0..self.d {
            m[[i, i]] = v;
        }
        Ok(m)
    }

    /// Leading term of `E[f(X) prod_{a in idx} (X - x0)_a 1{|X - x0| <= r}]`:
    /// `f r^{d+4} C_idx / ((d+4) vol)`. Indices are zero-based.
    pub fn fourth_moment_leading(&self, f0: f64, r: f64, idx: [usize; 4]) -> Result<f64> {
        self.check(r)?;
        if idx.iter().any(|&i| i >= self.manifold.ambient_dim()) {
            return Err(invalid(format!("index out of range in {idx:?}")));
        }
        let d = self.d as f64;
        Ok(f0 * r.powf(d + 4.0) * sphere_fourth_moment(self.d, idx) / ((d + 4.0) * self.vol))
    }
}

/// Free-function form of [`MomentOracle::fourth_moment_leading`].
pub fn fourth_moment_leading(manifold: &ManifoldSpec, x0: &[f64], f0: f64, r: f64, idx: [usize; 4]) -> Result<f64> {
    MomentOracle::new(manifold, x0)?.fourth_moment_leading(f0, r, idx)
}

/// `int_{S^{d-1}} theta_k theta_l theta_m theta_n` by the pairing identity
/// `|S^{d-1}| (d_kl d_mn + d_km d_ln + d_kn d_lm) / (d (d+2))`. Indices at or
/// beyond `d` are normal directions and give 0.
pub fn sphere_fourth_moment(d: usize, idx: [usize; 4]) -> f64 {
    if idx.iter().any(|&i| i >= d) {
        return 0.0;
    }
    let [k, l, m, n] = idx;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let pairings = delta(k, l) * delta(m, n) + delta(k, m) * delta(l, n) + delta(k, n) * delta(l, m);
    let df = d as f64;
    crate::geometry::unit_sphere_area(d - 1) * pairings / (df * (df + 2.0))
}

/// Quadrature of the same integral in polar or spherical coordinates.
pub fn sphere_fourth_moment_quadrature(d: usize, idx: [usize; 4], tol: f64) -> Result<f64> {
    if idx.iter().any(|&i| i >= d) {
        return Ok(0.0);
    }
    let prod = |theta: &[f64]| idx.iter().map(|&i| theta[i]).product::<f64>();
    // split periodic ranges so that Simpson cannot terminate on a symmetric
    // first estimate
    let pieces = 8;
    let integrate = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64| -> f64 {
        let h = (b - a) / pieces as f64;
        (0..pieces).map(|i| adaptive_simpson(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / pieces as f64)).sum()
    };
    match d {
        1 => Ok(prod(&[1.0]) + prod(&[-1.0])),
        2 => Ok(integrate(&|t: f64| prod(&[t.cos(), t.sin()]), 0.0, 2.0 * PI, tol)),
        3 => {
            let inner = |phi: f64| {
                let (s, c) = phi.sin_cos();
                s * integrate(&|psi: f64| prod(&[s * psi.cos(), s * psi.sin(), c]), 0.0, 2.0 * PI, tol / 10.0)
            };
            Ok(integrate(&inner, 0.0, PI, tol))
        }
        _ => Err(invalid("quadrature cross-check supports d <= 3")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte Carlo over the cap `|X - x0| <= r` of the unit two-sphere.
///
/// On `S^2` the height is uniform, so the cap is sampled exactly by drawing
/// the height uniformly on `[1 - r^2/2, 1]`, and its probability is `r^2/4`.
/// The integrand receives `X - x0` with tangential coordinates first.
#[derive(Debug, Clone, Copy)]
pub struct SphereCapSampler {
    pub radius: f64,
}

impl SphereCapSampler {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 2.0) {
            return Err(invalid(format!("cap radius must lie in (0, 2], got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn probability(&self) -> f64 {
        self.radius * self.radius / 4.0
    }

    /// Estimates `E[g(X - x0) 1{|X - x0| <= r}]`.
    pub fn estimate(&self, samples: usize, seed: u64, g: impl Fn([f64; 3]) -> f64) -> CapEstimate {
        let mut rng = rng_from_seed(seed);
        let lo = 1.0 - self.radius * self.radius / 2.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..samples {
            let z: f64 = rng.random_range(lo..=1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let v = g([rho * phi.cos(), rho * phi.sin(), z - 1.0]);
            let delta = v - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (v - mean);
        }
        let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
        let p = self.probability();
        CapEstimate { mean: p * mean, stderr: p * (var / samples as f64).sqrt() }
    }
}
