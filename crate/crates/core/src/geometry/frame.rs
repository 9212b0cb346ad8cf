use super::{LocalFrame, ManifoldSpec, PointCloud};
use crate::error::Result;
use ndarray::{Array1, Array2};

/// Rigid motion `x -> rotation * (x - x0)` that sends `x0` to the origin,
/// its principal directions to `e_1..e_d`, and its normal to `e_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlignment {
    pub rotation: Array2<f64>,
    pub translation: Array1<f64>,
    pub tangent_dim: usize,
    /// Principal curvatures against the aligned normal `e_p`.
    pub principal_curvatures: Vec<f64>,
    /// The frame at `x0` before alignment.
    pub source_frame: LocalFrame,
}

impl FrameAlignment {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = self.rotation.dot(&Array1::from(x.to_vec())) + &self.translation;
        v.to_vec()
    }

    pub fn apply_cloud(&self, cloud: &PointCloud) -> Array2<f64> {
        let mut out = cloud.points().dot(&self.rotation.t());
        for mut row in out.rows_mut() {
            row += &self.translation;
        }
        out
    }

    /// Aligned-frame vector from an ambient direction (no translation).
    pub fn rotate(&self, v: &[f64]) -> Vec<f64> {
        self.rotation.dot(&Array1::from(v.to_vec())).to_vec()
    }

    /// Shape operator at `x0` expressed in the aligned frame.
    pub fn aligned_shape_operator(&self) -> Array2<f64> {
        let s = self.source_frame.shape_operator();
        self.rotation.dot(&s).dot(&self.rotation.t())
    }
}

pub fn align_frame(manifold: &ManifoldSpec, x0: &[f64]) -> Result<FrameAlignment> {
    let frame = manifold.curvature().local_frame(x0)?;
    let p = manifold.ambient_dim();
    let d = manifold.intrinsic_dim();
    let mut rotation = Array2::zeros((p, p));
    for (i, t) in frame.tangents.iter().enumerate() {
        for a in 0..p {
            rotation[[i, a]] = t[a];
        }
    }
    for a in 0..p {
        rotation[[d, a]] = frame.normal[a];
    }
    let mut principal = frame.principal.clone();
    if determinant(&rotation) < 0.0 {
        for a in 0..p {
            rotation[[d, a]] = -rotation[[d, a]];
        }
        principal.iter_mut().for_each(|k| *k = -*k);
    }
    let translation = -rotation.dot(&Array1::from(x0.to_vec()));
    Ok(FrameAlignment { rotation, translation, tangent_dim: d, principal_curvatures: principal, source_frame: frame })
}

fn determinant(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[[x, col]].abs().total_cmp(&a[[y, col]].abs())).unwrap();
        if a[[pivot, col]] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            det = -det;
        }
        det *= a[[col, col]];
        for r in (col + 1)..n {
            let f = a[[r, col]] / a[[col, col]];
            for k in col..n {
                a[[r, k]] -= f * a[[col, k]];
            }
        }
    }
    det
}
