//! Self-similar solution of the porous medium equation `u_t = Delta(u^2)`
//! started from a point mass:
//!
//! ```text
//! u(x, t) = max(0, t^{-d/(d+2)} (C - k |x|^2 / t^{2/(d+2)})),  k = 1/(4(d+2))
//! ```
//!
//! Its support radius `sqrt(C/k) t^{1/(d+2)}` grows with the same exponent
//! as the plan support radius `sqrt(K)` grows with `eps`.

use crate::error::{invalid, Error, Result};
use crate::geometry::unit_sphere_area;
use crate::scaling::ScalingConstants;
use crate::stats::{adaptive_simpson, ols};
use std::io::Write;

pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattProfile {
    pub d: usize,
    pub profile_constant: f64,
    pub mass: f64,
    pub k_coeff: f64,
}

fn k_coeff(d: usize) -> f64 {
    1.0 / (4.0 * (d as f64 + 2.0))
}

/// `C^{(d+2)/2} k^{-d/2} |S^{d-1}| 2 / (d (d+2))`.
fn mass_of(constant: f64, d: usize) -> f64 {
    let df = d as f64;
    constant.powf((df + 2.0) / 2.0) * k_coeff(d).powf(-df / 2.0) * unit_sphere_area(d - 1) * 2.0 / (df * (df + 2.0))
}

pub fn constant_from_mass(mass: f64, d: usize) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite()) || d == 0 {
        return Err(invalid("profile needs positive mass and d >= 1"));
    }
    let df = d as f64;
    let base = mass * df * (df + 2.0) / (2.0 * unit_sphere_area(d - 1)) * k_coeff(d).powf(df / 2.0);
    Ok(base.powf(2.0 / (df + 2.0)))
}

impl BarenblattProfile {
    pub fn from_constant(d: usize, profile_constant: f64) -> Result<Self> {
        if d == 0 || !(profile_constant > 0.0 && profile_constant.is_finite()) {
            return Err(invalid("profile needs d >= 1 and a positive constant"));
        }
        Ok(Self { d, profile_constant, mass: mass_of(profile_constant, d), k_coeff: k_coeff(d) })
    }

    pub fn from_mass(d: usize, mass: f64) -> Result<Self> {
        let c = constant_from_mass(mass, d)?;
        Ok(Self { d, profile_constant: c, mass, k_coeff: k_coeff(d) })
    }

    fn radial(&self, rho2: f64, t: f64) -> f64 {
        let a = 2.0 / (self.d as f64 + 2.0);
        (t.powf(-(self.d as f64) / (self.d as f64 + 2.0)) * (self.profile_constant - self.k_coeff * rho2 / t.powf(a)))
            .max(0.0)
    }

    pub fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid(format!("time must be positive, got {t}")));
        }
        if x.len() != self.d {
            return Err(invalid("point dimension does not match the profile"));
        }
        Ok(self.radial(x.iter().map(|v| v * v).sum(), t))
    }

    pub fn support_radius(&self, t: f64) -> f64 {
        (self.profile_constant / self.k_coeff).sqrt() * t.powf(1.0 / (self.d as f64 + 2.0))
    }

    /// `|S^{d-1}| int_0^R u(rho, t) rho^{d-1} drho` by adaptive Simpson.
    pub fn mass_quadrature(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid(format!("time must be positive, got {t}")));
        }
        let r = self.support_radius(t);
        let d = self.d as i32;
        let f = |rho: f64| self.radial(rho * rho, t) * rho.powi(d - 1);
        Ok(unit_sphere_area(self.d - 1) * adaptive_simpson(&f, 0.0, r, QUADRATURE_TOL))
    }
}

pub fn barenblatt_value(profile: &BarenblattProfile, x: &[f64], t: f64) -> Result<f64> {
    profile.value(x, t)
}

/// `|u_t - Delta(u^2)|` by central differences with step `h` in space and
/// time. Zero when the whole stencil lies outside the support; an error when
/// the stencil straddles the free boundary.
pub fn pme_residual(profile: &BarenblattProfile, x: &[f64], t: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(t - h > 0.0) {
        return Err(invalid("need h > 0 and t > h"));
    }
    let u = |y: &[f64], s: f64| profile.value(y, s);
    let mut stencil = vec![(x.to_vec(), t + h), (x.to_vec(), t - h), (x.to_vec(), t)];
    for i in 0..profile.d {
        for sign in [1.0, -1.0] {
            let mut y = x.to_vec();
            y[i] += sign * h;
            stencil.push((y, t));
        }
    }
    let values: Vec<f64> = stencil.iter().map(|(y, s)| u(y, *s)).collect::<Result<_>>()?;
    let inside = values.iter().filter(|v| **v > 0.0).count();
    if inside == 0 {
        return Ok(0.0);
    }
    if inside < values.len() {
        return Err(Error::FreeBoundary);
    }
    let dt = (values[0] - values[1]) / (2.0 * h);
    let w0 = values[2] * values[2];
    let lap: f64 = (0..profile.d)
        .map(|i| (values[3 + 2 * i].powi(2) - 2.0 * w0 + values[4 + 2 * i].powi(2)) / (h * h))
        .sum();
    Ok((dt - lap).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentRow {
    pub quantity: &'static str,
    pub exponent_fitted: f64,
    pub exponent_expected: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportComparison {
    pub rows: Vec<ExponentRow>,
}

impl SupportComparison {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#schema=1")?;
        writeln!(out, "quantity,exponent_fitted,exponent_expected,abs_error")?;
        for r in &self.rows {
            writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.quantity, r.exponent_fitted, r.exponent_expected, r.abs_error)?;
        }
        Ok(())
    }
}

/// Fits the support-radius exponents over one decade of `t` (PME) and one
/// decade of `eps` around `epsilon` at fixed `n` (plan radius `sqrt(K)`).
pub fn support_radius_comparison(
    profile: &BarenblattProfile,
    constants: &ScalingConstants,
    epsilon: f64,
    n: usize,
) -> Result<SupportComparison> {
    if profile.d != constants.d {
        return Err(invalid("profile and scaling constants disagree on the dimension"));
    }
    if !(epsilon > 0.0) || n == 0 {
        return Err(invalid("need eps > 0 and N >= 1"));
    }
    let expected = 1.0 / (profile.d as f64 + 2.0);
    let steps: Vec<f64> = (0..11).map(|i| -0.5 + 0.1 * i as f64).collect();
    let ts: Vec<f64> = steps.iter().map(|s| 10f64.powf(s + 0.5)).collect();
    let eps: Vec<f64> = steps.iter().map(|s| epsilon * 10f64.powf(*s)).collect();
    let log = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    let pme_r: Vec<f64> = ts.iter().map(|t| profile.support_radius(*t)).collect();
    let qot_r: Vec<f64> = eps.iter().map(|e| constants.k_eps_n(*e, n as f64).sqrt()).collect();
    let pme = ols(&log(&ts), &log(&pme_r))?.slope;
    let qot = ols(&log(&eps), &log(&qot_r))?.slope;
    let row = |quantity, fitted: f64, expected: f64| ExponentRow {
        quantity,
        exponent_fitted: fitted,
        exponent_expected: expected,
        abs_error: (fitted - expected).abs(),
    };
    Ok(SupportComparison {
        rows: vec![
            row("pme_support_radius_vs_t", pme, expected),
            row("qot_support_radius_vs_eps", qot, expected),
            row("exponent_difference", pme - qot, 0.0),
        ],
    })
}
