use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::write_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMethod {
    BergerBott,
    Oracle,
}

/// Samples `(T, value)` of `T -> int_M n_T(x, y) dy`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingCurve {
    points: Vec<(f64, f64)>,
    manifold: String,
    method: CountingMethod,
}

impl CountingCurve {
    /// Validates `T >= 0` strictly increasing, values finite, nonnegative and
    /// nondecreasing, and a zero value at `T = 0`.
    pub fn new(points: Vec<(f64, f64)>, manifold: impl Into<String>, method: CountingMethod) -> Result<Self> {
        for (i, &(t, v)) in points.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0 && v.is_finite() && v >= 0.0) {
                return Err(Error::input(format!("curve point {i} = ({t}, {v}) is not a finite nonnegative pair")));
            }
            if t == 0.0 && v != 0.0 {
                return Err(Error::input(format!("value at T = 0 must be 0, got {v}")));
            }
            if i > 0 {
                let (tp, vp) = points[i - 1];
                if t <= tp {
                    return Err(Error::input(format!("T values must be strictly increasing ({tp} then {t})")));
                }
                if v < vp {
                    return Err(Error::input(format!("counting curve decreases between T = {tp} and T = {t}")));
                }
            }
        }
        Ok(Self { points, manifold: manifold.into(), method })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn ts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn manifold(&self) -> &str {
        &self.manifold
    }

    pub fn method(&self) -> CountingMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The same curve with every value multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::input(format!("scale factor must be positive, got {factor}")));
        }
        let points = self.points.iter().map(|&(t, v)| (t, v * factor)).collect();
        Self::new(points, self.manifold.clone(), self.method)
    }

    pub fn write_csv<W: Write>(&self, out: W, comments: &[(String, String)]) -> io::Result<()> {
        let header = ["T".to_string(), "value".to_string()];
        write_csv(out, comments, &header, self.points.iter().map(|&(t, v)| vec![t, v]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = CountingCurve::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 2.0)], "m", CountingMethod::Oracle);
        assert!(ok.is_ok());
        for bad in [
            vec![(1.0, 2.0), (0.5, 3.0)],
            vec![(1.0, 2.0), (2.0, 1.0)],
            vec![(0.0, 1.0)],
            vec![(1.0, -1.0)],
            vec![(1.0, f64::NAN)],
        ] {
            assert!(CountingCurve::new(bad, "m", CountingMethod::Oracle).is_err());
        }
    }

    #[test]
    fn scaling_and_csv() {
        let c = CountingCurve::new(vec![(1.0, 2.0)], "m", CountingMethod::BergerBott).unwrap();
        assert_eq!(c.scaled(10.0).unwrap().values(), vec![20.0]);
        assert!(c.scaled(0.0).is_err());
        let mut buf = Vec::new();
        c.write_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().next(), Some("T,value"));
    }
}
