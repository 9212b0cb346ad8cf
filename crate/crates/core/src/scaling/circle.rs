//! Threshold of the constant potential on `N` equispaced circle points.
//!
//! With squared distances `D_j = (2 sin(pi j / N))^2` and `y = 2u`, the
//! marginal constraint reads `sum_j (y - D_j)_+ = eps / N`.

use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleThreshold {
    /// Active neighbours on each side of a point.
    pub k_exact: usize,
    pub y_exact: f64,
    pub k_closed: f64,
    pub y_closed: f64,
}

impl CircleThreshold {
    pub fn rel_err(&self) -> f64 {
        (self.y_closed / self.y_exact - 1.0).abs()
    }
}

/// `k = (3 eps N / (16 pi^2))^{1/3}` and `y = (4 pi^2 / N^2) k^2`.
pub fn circle_threshold_closed_form(n: f64, epsilon: f64) -> (f64, f64) {
    let k = (3.0 * epsilon * n / (16.0 * PI * PI)).cbrt();
    (k, 4.0 * PI * PI / (n * n) * k * k)
}

/// Sorted squared distances from one point to all `n` points, itself first.
pub(crate) fn circle_sq_distances(n: usize) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n).map(|j| (2.0 * (PI * j as f64 / n as f64).sin()).powi(2)).collect();
    d[0] = 0.0;
    d.sort_by(f64::total_cmp);
    d
}

/// Solves the piecewise-linear equation by scanning the sorted distances.
pub fn circle_threshold(n: usize, epsilon: f64) -> Result<CircleThreshold> {
    if n < 2 {
        return Err(invalid("circle needs at least 2 points"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = circle_sq_distances(n);
    let target = epsilon / n as f64;
    let mut prefix = 0.0;
    let mut y = f64::NAN;
    let mut active = 0;
    for m in 1..=n {
        prefix += d[m - 1];
        let cand = (target + prefix) / m as f64;
        if m == n || cand <= d[m] {
            y = cand;
            active = m;
            break;
        }
    }
    if y >= 4.0 {
        return Err(Error::ThresholdTooLarge(y));
    }
    let (k_closed, y_closed) = circle_threshold_closed_form(n as f64, epsilon);
    Ok(CircleThreshold { k_exact: (active - 1) / 2, y_exact: y, k_closed, y_closed })
}
