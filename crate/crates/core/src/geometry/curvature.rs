//! Closed-form extrinsic and intrinsic curvature of the supported
//! hypersurfaces.
//!
//! Every supported manifold has codimension one, so the second fundamental
//! form at `x` is `II(a, b) = (sum_k kappa_k <a, t_k> <b, t_k>) n` for the
//! principal directions `t_k`, principal curvatures `kappa_k`, and unit
//! normal `n`. The averaged quantities follow from the sphere moments
//! `E[theta_i^2] = 1/d` and `E[theta_i^2 theta_j^2] = (1 + 2 delta_ij)/(d(d+2))`.

use super::{ManifoldKind, ManifoldSpec};
use crate::error::Result;

/// Principal frame at a point of a hypersurface.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    pub point: Vec<f64>,
    /// Orthonormal principal directions, one per intrinsic dimension.
    pub tangents: Vec<Vec<f64>>,
    pub normal: Vec<f64>,
    /// Principal curvatures measured against `normal`.
    pub principal: Vec<f64>,
}

impl LocalFrame {
    /// `II(theta, theta)` for a tangent vector given in principal coordinates.
    pub fn second_fundamental_form(&self, theta: &[f64]) -> Vec<f64> {
        let scale: f64 = self.principal.iter().zip(theta).map(|(k, t)| k * t * t).sum();
        self.normal.iter().map(|n| scale * n).collect()
    }

    /// Shape operator `sum_k kappa_k t_k t_k^T` as a dense ambient matrix.
    pub fn shape_operator(&self) -> ndarray::Array2<f64> {
        let p = self.point.len();
        let mut s = ndarray::Array2::zeros((p, p));
        for (t, k) in self.tangents.iter().zip(&self.principal) {
            for a in 0..p {
                for b in 0..p {
                    s[[a, b]] += k * t[a] * t[b];
                }
            }
        }
        s
    }
}

/// Analytic curvature oracles of a [`ManifoldSpec`].
#[derive(Debug, Clone, Copy)]
pub struct CurvatureData {
    manifold: ManifoldSpec,
}

impl CurvatureData {
    pub(super) fn new(manifold: ManifoldSpec) -> Self {
        Self { manifold }
    }

    pub fn vol(&self) -> f64 {
        self.manifold.volume()
    }

    /// `|S^{d-1}|`.
    pub fn sphere_area(&self) -> f64 {
        self.manifold.tangent_sphere_area()
    }

    pub fn local_frame(&self, x: &[f64]) -> Result<LocalFrame> {
        self.manifold.check_on_manifold(x)?;
        Ok(match self.manifold.kind() {
            ManifoldKind::Sphere { .. } | ManifoldKind::EquispacedCircle { .. } => sphere_frame(x),
            ManifoldKind::Torus { major, minor } => torus_frame(x, major, minor),
        })
    }

    pub fn principal_curvatures_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.local_frame(x)?.principal)
    }

    /// Scalar curvature from the Gauss equation, `sum_{i != j} kappa_i kappa_j`.
    pub fn scalar_curvature_at(&self, x: &[f64]) -> Result<f64> {
        let k = self.principal_curvatures_at(x)?;
        let sum: f64 = k.iter().sum();
        let sq: f64 = k.iter().map(|v| v * v).sum();
        Ok(sum * sum - sq)
    }

    /// `omega(x)`: sphere average of `|II(theta, theta)|^2`.
    pub fn omega_at(&self, x: &[f64]) -> Result<f64> {
        let k = self.principal_curvatures_at(x)?;
        let d = k.len() as f64;
        let sum: f64 = k.iter().sum();
        let sq: f64 = k.iter().map(|v| v * v).sum();
        Ok((2.0 * sq + sum * sum) / (d * (d + 2.0)))
    }

    /// Sphere average of `II(theta, theta)`, i.e. the mean curvature vector
    /// divided by `d`.
    pub fn mean_ii_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let frame = self.local_frame(x)?;
        let d = frame.principal.len() as f64;
        let h: f64 = frame.principal.iter().sum::<f64>() / d;
        Ok(frame.normal.iter().map(|n| h * n).collect())
    }
}

fn sphere_frame(x: &[f64]) -> LocalFrame {
    let p = x.len();
    // Skip the axis most aligned with x; the rest are independent of x.
    let skip = (0..p).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap();
    let mut basis: Vec<Vec<f64>> = vec![x.to_vec()];
    let mut tangents = Vec::with_capacity(p - 1);
    for axis in (0..p).filter(|&a| a != skip) {
        let mut v = vec![0.0; p];
        v[axis] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v.clone());
        tangents.push(v);
    }
    LocalFrame {
        point: x.to_vec(),
        tangents,
        normal: x.iter().map(|v| -v).collect(),
        principal: vec![1.0; p - 1],
    }
}

fn torus_frame(x: &[f64], major: f64, minor: f64) -> LocalFrame {
    let phi = x[1].atan2(x[0]);
    let rho = x[0].hypot(x[1]);
    let v = x[2].atan2(rho - major);
    let (sp, cp) = phi.sin_cos();
    let (sv, cv) = v.sin_cos();
    LocalFrame {
        point: x.to_vec(),
        tangents: vec![vec![-sp, cp, 0.0], vec![-sv * cp, -sv * sp, cv]],
        // Points toward the center of the tube.
        normal: vec![-cv * cp, -cv * sp, -sv],
        principal: vec![cv / (major + minor * cv), 1.0 / minor],
    }
}
