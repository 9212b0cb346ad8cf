use super::ManifoldSpec;
use crate::error::{invalid, Result};
use crate::rng::rng_from_seed;
use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::io::Write;

/// Sample points embedded in `R^p`, optionally with a distinguished base
/// point stored in row 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Array2<f64>,
    base_point_index: Option<usize>,
    manifold: ManifoldSpec,
    seed: u64,
}

impl PointCloud {
    pub fn new(points: Array2<f64>, manifold: ManifoldSpec, seed: u64) -> Result<Self> {
        if points.ncols() != manifold.ambient_dim() {
            return Err(invalid(format!(
                "points have {} columns, manifold needs {}",
                points.ncols(),
                manifold.ambient_dim()
            )));
        }
        Ok(Self { points, base_point_index: None, manifold, seed })
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn base_point_index(&self) -> Option<usize> {
        self.base_point_index
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Largest implicit-equation residual over all rows.
    pub fn max_residual(&self) -> f64 {
        self.points
            .rows()
            .into_iter()
            .map(|r| self.manifold.residual(r.as_slice().unwrap()))
            .fold(0.0, f64::max)
    }

    /// CSV with header `idx,x0,..,x{p-1}` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.ambient_dim()).map(|k| format!("x{k}")).collect();
        writeln!(out, "idx,{}", header.join(","))?;
        for (i, row) in self.points.rows().into_iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{i},{}", vals.join(","))?;
        }
        Ok(())
    }
}

/// `n` i.i.d. uniform points on the unit sphere `S^d` (normalized Gaussians).
pub fn sample_sphere(d: usize, n: usize, seed: u64) -> Result<PointCloud> {
    let manifold = ManifoldSpec::sphere(d)?;
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let p = d + 1;
    let mut rng = rng_from_seed(seed);
    let mut points = Array2::<f64>::zeros((n, p));
    for mut row in points.rows_mut() {
        loop {
            for v in row.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = row.dot(&row).sqrt();
            if norm > 1e-300 {
                row.mapv_inplace(|v| v / norm);
                break;
            }
        }
    }
    PointCloud::new(points, manifold, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusSampleStats {
    pub proposals: u64,
    pub accepted: u64,
}

/// `n` i.i.d. points uniform in surface area on the torus of radii
/// `major > minor`, by rejection from the angle square.
pub fn sample_torus(major: f64, minor: f64, n: usize, seed: u64) -> Result<PointCloud> {
    sample_torus_with_stats(major, minor, n, seed).map(|(c, _)| c)
}

pub fn sample_torus_with_stats(major: f64, minor: f64, n: usize, seed: u64) -> Result<(PointCloud, TorusSampleStats)> {
    let manifold = ManifoldSpec::torus(major, minor)?;
    let mut rng = rng_from_seed(seed);
    let mut points = Array2::zeros((n, 3));
    let mut stats = TorusSampleStats { proposals: 0, accepted: 0 };
    for mut row in points.rows_mut() {
        loop {
            stats.proposals += 1;
            let u = rng.random::<f64>() * 2.0 * PI;
            let v = rng.random::<f64>() * 2.0 * PI;
            // area element is proportional to R + r cos v
            if rng.random::<f64>() * (major + minor) < major + minor * v.cos() {
                let ring = major + minor * v.cos();
                row[0] = ring * u.cos();
                row[1] = ring * u.sin();
                row[2] = minor * v.sin();
                stats.accepted += 1;
                break;
            }
        }
    }
    Ok((PointCloud::new(points, manifold, seed)?, stats))
}

/// Points `(cos(2 pi j/n), sin(2 pi j/n))`, `j = 0..n`.
pub fn equispaced_circle(n: usize) -> Result<PointCloud> {
    let manifold = ManifoldSpec::equispaced_circle(n)?;
    let mut points = Array2::zeros((n, 2));
    for (j, mut row) in points.rows_mut().into_iter().enumerate() {
        let angle = 2.0 * PI * j as f64 / n as f64;
        row[0] = angle.cos();
        row[1] = angle.sin();
    }
    PointCloud::new(points, manifold, 0)
}

/// Prepends `x0` to the cloud. The returned cloud has `len + 1` rows and
/// base point index 0.
pub fn with_base_point(cloud: &PointCloud, x0: &[f64]) -> Result<PointCloud> {
    if x0.len() != cloud.ambient_dim() {
        return Err(invalid("base point has the wrong dimension"));
    }
    cloud.manifold.check_on_manifold(x0)?;
    let n = cloud.len();
    let mut points = Array2::zeros((n + 1, cloud.ambient_dim()));
    points.row_mut(0).assign(&ArrayView1::from(x0));
    points.slice_mut(ndarray::s![1.., ..]).assign(&cloud.points);
    Ok(PointCloud { points, base_point_index: Some(0), manifold: cloud.manifold, seed: cloud.seed })
}

/// Scale applied to squared Euclidean distances in the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostScale {
    /// `C_ij = |x_i - x_j|^2 / 2`.
    Half,
    /// `C_ij = |x_i - x_j|^2`.
    #[default]
    Unit,
}

impl CostScale {
    pub fn value(self) -> f64 {
        match self {
            CostScale::Half => 0.5,
            CostScale::Unit => 1.0,
        }
    }

    pub fn from_value(gamma: f64) -> Result<Self> {
        if gamma == 0.5 {
            Ok(CostScale::Half)
        } else if gamma == 1.0 {
            Ok(CostScale::Unit)
        } else {
            Err(invalid(format!("cost scale must be 0.5 or 1, got {gamma}")))
        }
    }
}

/// Dense symmetric cost matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub(crate) matrix: Array2<f64>,
    scale: CostScale,
}

impl CostMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn scale(&self) -> CostScale {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.matrix
    }
}

pub fn cost_matrix(cloud: &PointCloud, scale: CostScale) -> CostMatrix {
    let n = cloud.len();
    let g = scale.value();
    let pts = &cloud.points;
    let mut matrix = Array2::zeros((n, n));
    for i in 0..n {
        let xi = pts.row(i);
        for j in (i + 1)..n {
            let sq: f64 = xi.iter().zip(pts.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            let c = g * sq;
            matrix[[i, j]] = c;
            matrix[[j, i]] = c;
        }
    }
    CostMatrix { matrix, scale }
}
