use crate::error::{Error, Result};
use ndarray::Array2;

/// Scalar test fields on `R^p` with exact gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    /// `sum_i (3 + 2i) x_i^2`, i.e. `3x^2 + 5y^2 + 7z^2` in `R^3`.
    WeightedQuadratic,
    /// `|x|^2`.
    UnitQuadratic,
    /// The constant 1.
    Constant,
    /// The first coordinate.
    CoordinateLinear,
}

impl TestFunction {
    pub const NAMES: [&'static str; 4] = ["weighted_quadratic", "unit_quadratic", "constant", "coordinate_linear"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "weighted_quadratic" => Ok(Self::WeightedQuadratic),
            "unit_quadratic" => Ok(Self::UnitQuadratic),
            "constant" => Ok(Self::Constant),
            "coordinate_linear" => Ok(Self::CoordinateLinear),
            other => Err(Error::UnknownFunction(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::WeightedQuadratic => "weighted_quadratic",
            Self::UnitQuadratic => "unit_quadratic",
            Self::Constant => "constant",
            Self::CoordinateLinear => "coordinate_linear",
        }
    }

    fn quadratic_weight(self, i: usize) -> f64 {
        match self {
            Self::WeightedQuadratic => 3.0 + 2.0 * i as f64,
            Self::UnitQuadratic => 1.0,
            _ => 0.0,
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::CoordinateLinear => x[0],
            _ => x.iter().enumerate().map(|(i, v)| self.quadratic_weight(i) * v * v).sum(),
        }
    }

    pub fn gradient(self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Constant => vec![0.0; x.len()],
            Self::CoordinateLinear => {
                let mut g = vec![0.0; x.len()];
                g[0] = 1.0;
                g
            }
            _ => x.iter().enumerate().map(|(i, v)| 2.0 * self.quadratic_weight(i) * v).collect(),
        }
    }

    pub fn hessian(self, x: &[f64]) -> Array2<f64> {
        let p = x.len();
        let mut h = Array2::zeros((p, p));
        for i in 0..p {
            h[[i, i]] = 2.0 * self.quadratic_weight(i);
        }
        h
    }
}

impl std::str::FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}
