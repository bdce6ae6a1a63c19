//! Built-in catalog of warp functions for rotationally symmetric metrics
//! `dr^2 + w(r)^2 g_{S^{n-1}}`, written in Cartesian coordinates around the pole.
//!
//! Every warp is odd with `w(0) = 0`, `w'(0) = 1`, so the metric is smooth at
//! the pole. Near `r = 0` the coefficient functions are evaluated from Taylor
//! series to avoid cancellation.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Below this value of `|k r|` the series branch is used.
const SERIES_CUTOFF: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum Warp {
    /// `w(r) = r`, the flat metric.
    Linear,
    /// `w(r) = sin(k r) / k`, the round metric of curvature `k^2`.
    Sine { k: f64 },
    /// `w(r) = sinh(k r) / k`, the hyperbolic metric of curvature `-k^2`.
    Sinh { k: f64 },
    /// `w(r) = r + a r^3`.
    Cubic { a: f64 },
}

impl Warp {
    /// Parse a catalog id with its parameter (`k` for sine/sinh, `a` for cubic).
    pub fn from_id(id: &str, param: Option<f64>) -> Result<Self> {
        let need = |name: &str| {
            param.ok_or_else(|| Error::Configuration(format!("warp `{id}` needs parameter {name}")))
        };
        let warp = match id {
            "linear" | "identity" => Warp::Linear,
            "sine" | "sin" => Warp::Sine { k: param.unwrap_or(1.0) },
            "sinh" => Warp::Sinh { k: param.unwrap_or(1.0) },
            "cubic" => Warp::Cubic { a: need("a")? },
            other => return Err(Error::OutOfCatalog(format!("warp `{other}`"))),
        };
        warp.validate()?;
        Ok(warp)
    }

    pub fn id(&self) -> &'static str {
        match self {
            Warp::Linear => "linear",
            Warp::Sine { .. } => "sine",
            Warp::Sinh { .. } => "sinh",
            Warp::Cubic { .. } => "cubic",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            Warp::Linear => None,
            Warp::Sine { k } | Warp::Sinh { k } => Some(k),
            Warp::Cubic { a } => Some(a),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Warp::Sine { k } | Warp::Sinh { k } if !(k.is_finite() && k > 0.0) => {
                Err(Error::input(format!("warp scale k must be positive, got {k}")))
            }
            Warp::Cubic { a } if !a.is_finite() => Err(Error::input("cubic warp coefficient must be finite")),
            _ => Ok(()),
        }
    }

    /// Supremum of the radial domain on which `w > 0`.
    pub fn domain_end(&self) -> f64 {
        match *self {
            Warp::Sine { k } => std::f64::consts::PI / k,
            Warp::Cubic { a } if a < 0.0 => 1.0 / (-a).sqrt(),
            _ => f64::INFINITY,
        }
    }

    /// Whether every sectional curvature of the warped metric is nonnegative.
    pub fn nonnegative_curvature(&self) -> bool {
        matches!(self, Warp::Linear | Warp::Sine { .. })
    }

    fn check(&self, r: f64) -> Result<f64> {
        let r = r.abs();
        if r.is_finite() && r < self.domain_end() {
            Ok(r)
        } else {
            Err(Error::Domain { what: format!("warp `{}`", self.id()), at: r })
        }
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(match *self {
            Warp::Linear => r,
            Warp::Sine { k } => (k * r).sin() / k,
            Warp::Sinh { k } => (k * r).sinh() / k,
            Warp::Cubic { a } => r + a * r * r * r,
        })
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(match *self {
            Warp::Linear => 1.0,
            Warp::Sine { k } => (k * r).cos(),
            Warp::Sinh { k } => (k * r).cosh(),
            Warp::Cubic { a } => 1.0 + 3.0 * a * r * r,
        })
    }

    pub fn second_derivative(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(match *self {
            Warp::Linear => 0.0,
            Warp::Sine { k } => -k * (k * r).sin(),
            Warp::Sinh { k } => k * (k * r).sinh(),
            Warp::Cubic { a } => 6.0 * a * r,
        })
    }

    /// Sectional curvature of planes containing the radial direction, `-w''/w`.
    pub fn radial_curvature(&self, r: f64) -> Result<f64> {
        let r = self.check(r)?;
        Ok(match *self {
            Warp::Linear => 0.0,
            Warp::Sine { k } => k * k,
            Warp::Sinh { k } => -k * k,
            Warp::Cubic { a } => -6.0 * a / (1.0 + a * r * r),
        })
    }

    /// Sectional curvature of planes orthogonal to the radial direction, `(1 - w'^2)/w^2`.
    pub fn tangential_curvature(&self, r: f64) -> Result<f64> {
        let r = self.check(r)?;
        Ok(match *self {
            Warp::Linear => 0.0,
            Warp::Sine { k } => k * k,
            Warp::Sinh { k } => -k * k,
            Warp::Cubic { a } => {
                let q = 1.0 + a * r * r;
                -(6.0 * a + 9.0 * a * a * r * r) / (q * q)
            }
        })
    }

    /// `(w/r)^2`, the scale of the metric on vectors orthogonal to the radial direction.
    pub(crate) fn angular_scale(&self, r: f64) -> Result<f64> {
        let r = self.check(r)?;
        if r == 0.0 {
            return Ok(1.0);
        }
        let q = self.value(r)? / r;
        Ok(q * q)
    }

    /// Odd Taylor coefficients `[w3, w5, w7, w9]` of `w(r) = r + w3 r^3 + ...`.
    fn taylor(&self) -> [f64; 4] {
        match *self {
            Warp::Linear => [0.0; 4],
            Warp::Sine { k } => {
                let k2 = k * k;
                [-k2 / 6.0, k2 * k2 / 120.0, -k2 * k2 * k2 / 5040.0, k2 * k2 * k2 * k2 / 362_880.0]
            }
            Warp::Sinh { k } => {
                let k2 = k * k;
                [k2 / 6.0, k2 * k2 / 120.0, k2 * k2 * k2 / 5040.0, k2 * k2 * k2 * k2 / 362_880.0]
            }
            Warp::Cubic { a } => [a, 0.0, 0.0, 0.0],
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Warp::Sine { k } | Warp::Sinh { k } => k,
            _ => 1.0,
        }
    }

    /// Coefficients `(A, B)` of the Cartesian geodesic equation
    /// `p'' = A (|v|^2 - (p.v)^2/r^2) p + 2 B (p.v) (v - (p.v) p / r^2)`,
    /// where `A = (w w' - r)/r^3` and `B = (w - r w')/(r^2 w)`.
    pub(crate) fn flow_coefficients(&self, r: f64) -> Result<(f64, f64)> {
        let r = self.check(r)?;
        match *self {
            Warp::Linear => return Ok((0.0, 0.0)),
            Warp::Cubic { a } => {
                return Ok((4.0 * a + 3.0 * a * a * r * r, -2.0 * a / (1.0 + a * r * r)));
            }
            _ => {}
        }
        if self.scale() * r < SERIES_CUTOFF {
            let [w3, w5, w7, w9] = self.taylor();
            let r2 = r * r;
            let a = 4.0 * w3
                + r2 * (3.0 * (w3 * w3 + 2.0 * w5)
                    + r2 * (8.0 * (w7 + w3 * w5) + r2 * 5.0 * (2.0 * w9 + 2.0 * w3 * w7 + w5 * w5)));
            let num = -2.0 * w3 - r2 * (4.0 * w5 + r2 * (6.0 * w7 + r2 * 8.0 * w9));
            let den = 1.0 + r2 * (w3 + r2 * (w5 + r2 * (w7 + r2 * w9)));
            return Ok((a, num / den));
        }
        let w = self.value(r)?;
        let dw = self.derivative(r)?;
        let r3 = r * r * r;
        Ok(((w * dw - r) / r3, (w - r * dw) / (r * r * w)))
    }
}

impl fmt::Display for Warp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parameter() {
            Some(p) => write!(f, "{}({p})", self.id()),
            None => write!(f, "{}", self.id()),
        }
    }
}
