//! Manifolds used by the experiments, their analytic curvature, samplers,
//! cost matrices, and the frame alignment that puts a base point in
//! standard position.

mod cloud;
mod curvature;
mod field;
mod frame;

pub use cloud::{
    cost_matrix, equispaced_circle, sample_sphere, sample_torus, sample_torus_with_stats, with_base_point, CostMatrix,
    CostScale, PointCloud, TorusSampleStats,
};
pub use curvature::{CurvatureData, LocalFrame};
pub use field::TestFunction;
pub use frame::{align_frame, FrameAlignment};

use crate::error::{invalid, Error, Result};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::fmt;

/// Residual tolerance for accepting a user-supplied point as on-manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldKind {
    /// Unit sphere `S^d` in `R^{d+1}`.
    Sphere { d: usize },
    /// Torus of revolution around the z-axis.
    Torus { major: f64, minor: f64 },
    /// `n` equispaced points on the unit circle.
    EquispacedCircle { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    ambient_dim: usize,
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ManifoldKind::Sphere { d } => write!(f, "sphere(d={d})"),
            ManifoldKind::Torus { major, minor } => write!(f, "torus(R={major}, r={minor})"),
            ManifoldKind::EquispacedCircle { n } => write!(f, "equispaced-circle(n={n})"),
        }
    }
}

/// Surface area of the unit sphere `S^k` embedded in `R^{k+1}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

impl ManifoldSpec {
    pub fn sphere(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("sphere dimension must be at least 1"));
        }
        Ok(Self { kind: ManifoldKind::Sphere { d }, ambient_dim: d + 1 })
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && major > minor && major.is_finite()) {
            return Err(invalid(format!("torus radii must satisfy R > r > 0, got R={major}, r={minor}")));
        }
        Ok(Self { kind: ManifoldKind::Torus { major, minor }, ambient_dim: 3 })
    }

    pub fn equispaced_circle(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("equispaced circle needs at least 2 points"));
        }
        Ok(Self { kind: ManifoldKind::EquispacedCircle { n }, ambient_dim: 2 })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere { d } => d,
            ManifoldKind::Torus { .. } => 2,
            ManifoldKind::EquispacedCircle { .. } => 1,
        }
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { d } => unit_sphere_area(d),
            ManifoldKind::Torus { major, minor } => 4.0 * PI * PI * major * minor,
            ManifoldKind::EquispacedCircle { .. } => 2.0 * PI,
        }
    }

    /// `|S^{d-1}|` for the intrinsic dimension `d`.
    pub fn tangent_sphere_area(&self) -> f64 {
        unit_sphere_area(self.intrinsic_dim() - 1)
    }

    /// Smallest radius of curvature over the manifold.
    pub fn min_curvature_radius(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { .. } | ManifoldKind::EquispacedCircle { .. } => 1.0,
            // |cos v / (R + r cos v)| peaks at the inner equator.
            ManifoldKind::Torus { major, minor } => minor.min(major - minor),
        }
    }

    /// Distance from the implicit equation: `| |x| - 1 |` for spheres and
    /// `|(rho - R)^2 + z^2 - r^2|` for the torus.
    pub fn residual(&self, x: &[f64]) -> f64 {
        if x.len() != self.ambient_dim {
            return f64::INFINITY;
        }
        match self.kind {
            ManifoldKind::Sphere { .. } | ManifoldKind::EquispacedCircle { .. } => {
                (x.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs()
            }
            ManifoldKind::Torus { major, minor } => {
                let rho = x[0].hypot(x[1]);
                ((rho - major).powi(2) + x[2] * x[2] - minor * minor).abs()
            }
        }
    }

    pub fn check_on_manifold(&self, x: &[f64]) -> Result<()> {
        let residual = self.residual(x);
        if residual > ON_MANIFOLD_TOL {
            return Err(Error::OffManifold { residual });
        }
        Ok(())
    }

    pub fn curvature(&self) -> CurvatureData {
        CurvatureData::new(*self)
    }
}
