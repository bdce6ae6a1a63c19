use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::berger_bott_curve;
use crate::error::{Error, Result};
use crate::flow::DEFAULT_STEP;
use crate::manifolds::{unit_sphere_quadrature, ManifoldSpec, QuadratureScheme};

/// Spaces whose based loop space has tabulated rational Betti numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopSpace {
    Sphere(usize),
}

impl FromStr for LoopSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix("sphere(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::OutOfCatalog(format!("loop space of `{s}`")))?;
        let n = inner.trim().parse().map_err(|_| Error::input(format!("bad sphere dimension `{inner}`")))?;
        Ok(LoopSpace::Sphere(n))
    }
}

impl fmt::Display for LoopSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoopSpace::Sphere(n) => write!(f, "sphere({n})"),
        }
    }
}

impl Serialize for LoopSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `sum_{j<k} dim H_j(Omega S^n; Q)`: one class in each degree divisible by `n - 1`.
pub fn loop_space_betti_partial_sums(space: LoopSpace, k: usize) -> Result<u64> {
    let LoopSpace::Sphere(n) = space;
    if n < 2 {
        return Err(Error::input(format!("sphere dimension must be at least 2, got {n}")));
    }
    if k < 1 {
        return Err(Error::input("k must be at least 1"));
    }
    Ok(((k - 1) / (n - 1) + 1) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GromovOptions {
    pub scheme: QuadratureScheme,
    pub order: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for GromovOptions {
    fn default() -> Self {
        Self { scheme: QuadratureScheme::ProductGauss, order: 8, step: 10.0 * DEFAULT_STEP, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GromovRow {
    pub k: usize,
    pub betti_sum: u64,
    /// `(1 / Vol) int_M n_{Ck}(x, y) dy`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GromovReport {
    pub space: LoopSpace,
    pub constant: f64,
    pub k_max: usize,
    pub holds: bool,
    pub first_failure: Option<usize>,
    pub rows: Vec<GromovRow>,
}

/// Compare loop-space Betti sums with the normalized counting integral at `T = C k`, `k = 1..=k_max`,
/// on the unit round sphere.
pub fn check_gromov_inequality(space: LoopSpace, k_max: usize, c: f64, opts: &GromovOptions) -> Result<GromovReport> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::input(format!("constant C must be positive, got {c}")));
    }
    if k_max < 1 {
        return Err(Error::input("k_max must be at least 1"));
    }
    let LoopSpace::Sphere(n) = space;
    let betti: Vec<u64> = (1..=k_max).map(|k| loop_space_betti_partial_sums(space, k)).collect::<Result<_>>()?;
    let spec = ManifoldSpec::round_sphere(n)?;
    let quad = unit_sphere_quadrature(n, opts.scheme, opts.order, opts.seed)?;
    let ts: Vec<f64> = (1..=k_max).map(|k| c * k as f64).collect();
    let step = opts.step.min(ts[0]);
    let curve = berger_bott_curve(&spec, &spec.base_point(), &ts, &quad, step)?;
    let volume = spec.volume()?;
    let rows: Vec<GromovRow> = curve
        .points()
        .iter()
        .zip(betti)
        .enumerate()
        .map(|(i, (&(_, total), b))| {
            let rhs = total / volume;
            GromovRow { k: i + 1, betti_sum: b, rhs, holds: b as f64 <= rhs }
        })
        .collect();
    let first_failure = rows.iter().find(|r| !r.holds).map(|r| r.k);
    Ok(GromovReport { space, constant: c, k_max, holds: first_failure.is_none(), first_failure, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GromovSearch {
    pub grid: Vec<f64>,
    pub minimal_constant: Option<f64>,
    pub reports: Vec<GromovReport>,
}

/// Run the check for every `C` in `grid` and record the smallest one that holds for all `k <= k_max`.
pub fn minimal_gromov_constant(space: LoopSpace, k_max: usize, grid: &[f64], opts: &GromovOptions) -> Result<GromovSearch> {
    if grid.is_empty() {
        return Err(Error::input("the C grid is empty"));
    }
    let reports: Vec<GromovReport> =
        grid.iter().map(|&c| check_gromov_inequality(space, k_max, c, opts)).collect::<Result<_>>()?;
    let minimal_constant = reports.iter().filter(|r| r.holds).map(|r| r.constant).reduce(f64::min);
    Ok(GromovSearch { grid: grid.to_vec(), minimal_constant, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn betti_partial_sums() {
        assert_eq!(loop_space_betti_partial_sums(LoopSpace::Sphere(2), 5).unwrap(), 5);
        assert_eq!(loop_space_betti_partial_sums(LoopSpace::Sphere(3), 5).unwrap(), 3);
        for n in 2..7 {
            assert_eq!(loop_space_betti_partial_sums(LoopSpace::Sphere(n), 1).unwrap(), 1);
        }
        assert!(loop_space_betti_partial_sums(LoopSpace::Sphere(1), 3).is_err());
        assert!(loop_space_betti_partial_sums(LoopSpace::Sphere(2), 0).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("sphere(4)".parse::<LoopSpace>().unwrap(), LoopSpace::Sphere(4));
        assert!(matches!("torus(2)".parse::<LoopSpace>(), Err(Error::OutOfCatalog(_))));
    }

    #[test]
    fn sphere_inequality_large_and_tiny_constants() {
        let opts = GromovOptions::default();
        let big = check_gromov_inequality(LoopSpace::Sphere(2), 20, 10.0, &opts).unwrap();
        assert!(big.holds);
        let tiny = check_gromov_inequality(LoopSpace::Sphere(2), 20, 0.001, &opts).unwrap();
        assert_eq!(tiny.first_failure, Some(1));
        let one = check_gromov_inequality(LoopSpace::Sphere(3), 1, 1e3, &opts).unwrap();
        assert!(one.holds);
    }
}
