//! Moments `E[U_(j:N)^{2/d}]` of uniform order statistics.
//!
//! `U_(j:N)` is Beta(j, N+1-j), so
//! `E[U^a] = Gamma(a+j) Gamma(N+1) / (Gamma(a+N+1) Gamma(j))
//!         = prod_{m=j}^{N} m / (m + a)`.

use crate::error::{invalid, Result};
use statrs::function::gamma::ln_gamma;

/// Beyond this many factors the product is replaced by log-Gamma.
const PRODUCT_LIMIT: usize = 1 << 20;

fn check(j: usize, n: usize, d: usize) -> Result<()> {
    if d == 0 || j == 0 || j > n {
        return Err(invalid(format!("order statistic needs 1 <= j <= N and d >= 1, got j={j} N={n} d={d}")));
    }
    Ok(())
}

pub fn order_statistic_moment(j: usize, n: usize, d: usize) -> Result<f64> {
    check(j, n, d)?;
    let a = 2.0 / d as f64;
    let log = if n - j < PRODUCT_LIMIT {
        -(j..=n).map(|m| (a / m as f64).ln_1p()).sum::<f64>()
    } else {
        ln_gamma_shift(j as f64, a) - ln_gamma_shift(n as f64 + 1.0, a)
    };
    Ok(log.exp())
}

/// `ln Gamma(x + a) - ln Gamma(x)` without cancelling two large logs.
fn ln_gamma_shift(x: f64, a: f64) -> f64 {
    if x < 10.0 {
        return ln_gamma(x + a) - ln_gamma(x);
    }
    // Stirling series for both terms, with the leading parts combined
    let y = x + a;
    let series = |z: f64| {
        let z2 = z * z;
        1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2) - 1.0 / (1680.0 * z * z2 * z2 * z2)
    };
    (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a + series(y) - series(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSum {
    pub exact: f64,
    /// `(N+1)^{-2/d} d/(d+2) k^{(d+2)/d}`.
    pub leading: f64,
}

/// `sum_{j=1}^k E[U_(j:N)^{2/d}]` via the ratio `E_{j+1}/E_j = (j + 2/d)/j`.
pub fn order_statistic_partial_sum(k: usize, n: usize, d: usize) -> Result<PartialSum> {
    check(k, n, d)?;
    let a = 2.0 / d as f64;
    let mut term = order_statistic_moment(1, n, d)?;
    let mut exact = 0.0;
    for j in 1..=k {
        exact += term;
        term *= (j as f64 + a) / j as f64;
    }
    Ok(PartialSum { exact, leading: order_statistic_partial_sum_leading(k, n, d) })
}

pub fn order_statistic_partial_sum_leading(k: usize, n: usize, d: usize) -> f64 {
    let df = d as f64;
    (n as f64 + 1.0).powf(-2.0 / df) * df / (df + 2.0) * (k as f64).powf((df + 2.0) / df)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((order_statistic_moment(3, 9, 2).unwrap() - 0.3).abs() < 1e-15);
        assert!((order_statistic_moment(1, 1, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((order_statistic_moment(1, 2, 4).unwrap() - 8.0 / 15.0).abs() < 1e-15);
        assert!(order_statistic_moment(0, 5, 2).is_err());
        assert!(order_statistic_moment(6, 5, 2).is_err());
    }

    #[test]
    fn ratio_recurrence() {
        for d in 1..=4 {
            let a = 2.0 / d as f64;
            for j in 1..60 {
                let r = order_statistic_moment(j + 1, 60, d).unwrap() / order_statistic_moment(j, 60, d).unwrap();
                assert!((r / ((j as f64 + a) / j as f64) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_sums_in_closed_form() {
        for n in [5usize, 50, 1000] {
            for k in 1..=n.min(40) {
                let (kf, nf) = (k as f64, n as f64);
                let s2 = order_statistic_partial_sum(k, n, 2).unwrap().exact;
                assert!((s2 - kf * (kf + 1.0) / (2.0 * (nf + 1.0))).abs() < 1e-12 * s2.max(1.0));
                let s1 = order_statistic_partial_sum(k, n, 1).unwrap().exact;
                let e1 = kf * (kf + 1.0) * (kf + 2.0) / (3.0 * (nf + 1.0) * (nf + 2.0));
                assert!((s1 - e1).abs() < 1e-12 * e1.max(1.0));
            }
            let full = order_statistic_partial_sum(n, n, 2).unwrap().exact;
            assert!((full - n as f64 / 2.0).abs() < 1e-10 * n as f64);
        }
    }

    #[test]
    fn log_gamma_branch_agrees_with_product() {
        let n = PRODUCT_LIMIT + 10;
        let a = 2.0 / 3.0;
        let direct = -(5..=n).map(|m| (a / m as f64).ln_1p()).sum::<f64>();
        let via_gamma = order_statistic_moment(5, n, 3).unwrap().ln();
        assert!((direct - via_gamma).abs() < 1e-12);
    }

    #[test]
    fn stirling_shift_matches_log_gamma() {
        for x in [10.0, 37.5, 200.0] {
            for a in [0.5, 2.0 / 3.0, 1.0, 2.0] {
                let want = ln_gamma(x + a) - ln_gamma(x);
                assert!((ln_gamma_shift(x, a) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn leading_order_is_close_for_large_k() {
        let s = order_statistic_partial_sum(400, 100_000, 2).unwrap();
        assert!((s.exact / s.leading - 1.0).abs() < 0.01);
    }
}
