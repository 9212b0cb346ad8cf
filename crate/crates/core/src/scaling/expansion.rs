//! Expected marginal constraint at the base point when every potential sum
//! is replaced by the constant `K`:
//!
//! ```text
//! E[(N+1)/eps sum_{j=0}^N (K - |X_j - x0|^2)_+]
//! ```
//!
//! The small-ball expansion groups this into a leading term that is 1 at
//! `K = K(eps, N)`, discrete corrections of relative order `1/N` and
//! `(N+1) K / eps`, and a curvature term of relative order `K`.

use super::ScalingConstants;
use crate::error::{Error, Result};
use crate::geometry::{sample_sphere, with_base_point, ManifoldSpec};

/// Rejects small-ball radii above half the smallest curvature radius.
pub fn check_cap(manifold: &ManifoldSpec, radius: f64, allow_override: bool) -> Result<()> {
    let cap = 0.5 * manifold.min_curvature_radius();
    if !allow_override && radius > cap {
        return Err(Error::CapViolation { radius, cap });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTerms {
    /// `(N^2/eps) (|S^{d-1}|/vol) K^{1+d/2} (1/d - 1/(d+2))`.
    pub leading: f64,
    /// Base-point term `(N+1) K / eps` plus the `N(N+1) - N^2` excess.
    pub discrete_correction: f64,
    /// Scalar-curvature and `omega` terms, relative size `O(K)`.
    pub curvature_correction: f64,
    /// Size tag `K^2` of the neglected remainder.
    pub remainder_order: f64,
}

impl ExpansionTerms {
    pub fn total(&self) -> f64 {
        self.leading + self.discrete_correction + self.curvature_correction
    }

    /// `(term, value, order)` rows for CSV reports.
    pub fn rows(&self) -> [(&'static str, f64, &'static str); 4] {
        [
            ("leading", self.leading, "1"),
            ("discrete_correction", self.discrete_correction, "K/eps*N"),
            ("curvature_correction", self.curvature_correction, "K"),
            ("remainder", self.remainder_order, "K^2"),
        ]
    }
}

/// `cap` bounds `sqrt(K)`; pass `None` to skip the check.
pub fn constraint_expansion(
    constants: &ScalingConstants,
    scalar_curvature: f64,
    omega: f64,
    k: f64,
    epsilon: f64,
    n: usize,
    cap: Option<f64>,
) -> Result<ExpansionTerms> {
    if let Some(cap) = cap {
        if k.sqrt() > cap {
            return Err(Error::CapViolation { radius: k.sqrt(), cap });
        }
    }
    let d = constants.d as f64;
    let nf = n as f64;
    let ratio = constants.sphere_area / constants.vol;
    let ball = ratio * k.powf(1.0 + d / 2.0);
    let leading = nf * nf / epsilon * ball * (1.0 / d - 1.0 / (d + 2.0));
    let discrete_correction = (nf + 1.0) * k / epsilon + nf / epsilon * ball * (2.0 / (d * (d + 2.0)));
    let bracket = scalar_curvature * k / 6.0 + d * (d + 2.0) * omega * k / 24.0;
    let curvature_correction = nf * (nf + 1.0) / epsilon * ball / (d * (d + 2.0)) * bracket;
    Ok(ExpansionTerms { leading, discrete_correction, curvature_correction, remainder_order: k * k })
}

/// `(M/eps) sum_j (K - D_j)_+` over the `M` squared distances from the base
/// point, the base point itself included.
pub fn constraint_statistic(sq_distances: &[f64], k: f64, epsilon: f64) -> f64 {
    let m = sq_distances.len() as f64;
    m / epsilon * sq_distances.iter().map(|d| (k - d).max(0.0)).sum::<f64>()
}

/// The statistic for `N` uniform points on the unit `S^d` plus the pole,
/// with `K = K(eps, N)`.
pub fn empirical_constraint_statistic(d: usize, n: usize, epsilon: f64, seed: u64) -> Result<f64> {
    let manifold = ManifoldSpec::sphere(d)?;
    let k = ScalingConstants::for_manifold(&manifold).k_eps_n(epsilon, n as f64);
    let mut pole = vec![0.0; d + 1];
    pole[d] = 1.0;
    let cloud = with_base_point(&sample_sphere(d, n, seed)?, &pole)?;
    let x0 = cloud.point(0);
    let dist: Vec<f64> = cloud
        .points()
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(x0.iter()).map(|(a, b)| (a - b).powi(2)).sum())
        .collect();
    Ok(constraint_statistic(&dist, k, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn leading_term_is_one_at_k_eps_n() {
        for (d, vol) in [(1, 2.0 * PI), (2, 4.0 * PI), (3, 2.0 * PI * PI), (2, 2.0 * PI * PI)] {
            let c = ScalingConstants::new(d, vol).unwrap();
            for (n, eps) in [(100usize, 50.0), (1000, 3981.0), (5000, 1e5)] {
                let k = c.k_eps_n(eps, n as f64);
                let t = constraint_expansion(&c, 0.0, 0.0, k, eps, n, None).unwrap();
                assert!((t.leading - 1.0).abs() < 1e-12, "d={d} n={n}: {}", t.leading);
            }
        }
    }

    #[test]
    fn sphere_curvature_term_has_order_k() {
        let c = ScalingConstants::new(2, 4.0 * PI).unwrap();
        let n = 1000;
        let eps = (n as f64).powf(1.2);
        let k = c.k_eps_n(eps, n as f64);
        assert!((k - 0.178).abs() < 1e-3);
        let t = constraint_expansion(&c, 2.0, 1.0, k, eps, n, Some(0.5)).unwrap();
        // bracket 2K/3, prefactor (N+1)/N * 4/8
        let expected = (n as f64 + 1.0) / n as f64 * k / 3.0;
        assert!((t.curvature_correction - expected).abs() < 1e-12);
        assert!((t.remainder_order - k * k).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let c = ScalingConstants::new(2, 4.0 * PI).unwrap();
        assert!(matches!(
            constraint_expansion(&c, 2.0, 1.0, 0.36, 1.0, 10, Some(0.5)),
            Err(Error::CapViolation { .. })
        ));
        let s = ManifoldSpec::sphere(2).unwrap();
        assert!(check_cap(&s, 0.6, false).is_err());
        assert!(check_cap(&s, 0.6, true).is_ok());
        assert!(check_cap(&s, 0.5, false).is_ok());
    }

    #[test]
    fn statistic_counts_the_base_point() {
        // only the base point itself is active
        let v = constraint_statistic(&[0.0, 5.0, 5.0], 1.0, 2.0);
        assert_eq!(v, 1.5);
    }
}
