use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::geodesic::check_span;
use super::ode::build_grid;
use super::{Block, Blocks, Flow, GeodesicTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{det, golden_section_min, max_abs, min_singular_value};
use crate::manifolds::ManifoldSpec;
use crate::output::write_csv;

/// Refinement width for singular points.
const SINGULAR_SIGMA_TOL: f64 = 1e-10;
/// `|det M| < DET_REL_TOL * scale^(n-1)` marks a singular point.
const DET_REL_TOL: f64 = 1e-8;

/// `Xi, Xi', H, H'` at one arc length, in the parallel frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSample {
    pub xi: DMatrix<f64>,
    pub dxi: DMatrix<f64>,
    pub eta: DMatrix<f64>,
    pub deta: DMatrix<f64>,
}

impl JacobiSample {
    /// `Xi'^T H - Xi^T H'`, identically `-Id` for exact solutions.
    pub fn wronskian(&self) -> DMatrix<f64> {
        self.dxi.tr_mul(&self.eta) - self.xi.tr_mul(&self.deta)
    }
}

/// Arc lengths where `det Xi` (`xi`) or `det H` (`eta`) vanishes; `eta` always contains 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SingularSet {
    xi: Vec<f64>,
    eta: Vec<f64>,
}

fn distance(points: &[f64], sigma: f64) -> f64 {
    points.iter().map(|t| (t - sigma).abs()).fold(f64::INFINITY, f64::min)
}

impl SingularSet {
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn distance_to_xi(&self, sigma: f64) -> f64 {
        distance(&self.xi, sigma)
    }

    pub fn distance_to_eta(&self, sigma: f64) -> f64 {
        distance(&self.eta, sigma)
    }

    pub fn distance(&self, sigma: f64) -> f64 {
        self.distance_to_xi(sigma).min(self.distance_to_eta(sigma))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JacobiSource {
    Propagated { manifold: String },
    ClosedForm { curvature: f64 },
}

/// Matrix Jacobi solutions along one geodesic on a fixed grid.
#[derive(Debug, Clone)]
pub struct JacobiSystem {
    dim: usize,
    grid: Vec<f64>,
    samples: Vec<JacobiSample>,
    curvature: Vec<DMatrix<f64>>,
    positions: Vec<DVector<f64>>,
    singular: SingularSet,
    wronskian_drift: f64,
    source: JacobiSource,
}

fn scalar_solutions(c: f64, s: f64) -> (f64, f64, f64, f64) {
    if c > 0.0 {
        let k = c.sqrt();
        let (sn, cs) = (k * s).sin_cos();
        (cs, -k * sn, sn / k, cs)
    } else if c < 0.0 {
        let k = (-c).sqrt();
        let (sh, ch) = ((k * s).sinh(), (k * s).cosh());
        (ch, k * sh, sh / k, ch)
    } else {
        (1.0, 0.0, s, 1.0)
    }
}

/// Exact solutions for constant curvature `c` in dimension `n`.
pub fn closed_form_jacobi(c: f64, sigma: f64, n: usize) -> JacobiSample {
    let m = n.saturating_sub(1);
    let id = DMatrix::<f64>::identity(m, m);
    let (x, dx, h, dh) = scalar_solutions(c, sigma);
    JacobiSample { xi: &id * x, dxi: &id * dx, eta: &id * h, deta: &id * dh }
}

/// Integrate the Jacobi equation along the geodesic of `traj` with the given step.
pub fn propagate_jacobi(spec: &ManifoldSpec, traj: &GeodesicTrajectory, step: f64) -> Result<JacobiSystem> {
    if traj.spec() != spec {
        return Err(Error::input("trajectory was integrated on a different manifold"));
    }
    let t_end = traj.final_time();
    check_span(t_end, step)?;
    let mut flow = Flow::new(spec, traj.initial_point().as_slice(), traj.direction().as_slice(), Blocks::Both)?;
    let grid = build_grid(t_end, step, &[]);
    let mut js = JacobiSystem {
        dim: spec.dim(),
        samples: Vec::with_capacity(grid.len()),
        curvature: Vec::with_capacity(grid.len()),
        positions: Vec::with_capacity(grid.len()),
        grid,
        singular: SingularSet::default(),
        wronskian_drift: 0.0,
        source: JacobiSource::Propagated { manifold: spec.tag() },
    };
    for i in 0..js.grid.len() {
        if i > 0 {
            flow.advance(js.grid[i] - js.grid[i - 1])?;
        }
        js.samples.push(JacobiSample {
            xi: flow.block(Block::Xi),
            dxi: flow.block(Block::DXi),
            eta: flow.block(Block::Eta),
            deta: flow.block(Block::DEta),
        });
        js.curvature.push(flow.curvature()?);
        js.positions.push(spec.wrap(flow.position().as_slice()));
        js.wronskian_drift = js.wronskian_drift.max(flow.wronskian_defect());
    }
    js.check_residual()?;
    js.singular = SingularSet { xi: js.detect_singular(Block::Xi)?, eta: js.detect_singular(Block::Eta)? };
    Ok(js)
}

impl JacobiSystem {
    /// Closed-form system for constant curvature `c`, sampled like a propagated one.
    pub fn closed_form(c: f64, n: usize, t_end: f64, step: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("dimension must be at least 2, got {n}")));
        }
        if !c.is_finite() {
            return Err(Error::input("curvature must be finite"));
        }
        check_span(t_end, step)?;
        let grid = build_grid(t_end, step, &[]);
        let samples: Vec<JacobiSample> = grid.iter().map(|&s| closed_form_jacobi(c, s, n)).collect();
        let wronskian_drift = samples
            .iter()
            .map(|s| max_abs(&(s.wronskian() + DMatrix::identity(n - 1, n - 1))))
            .fold(0.0, f64::max);
        let mut xi = Vec::new();
        let mut eta = vec![0.0];
        if c > 0.0 {
            let period = std::f64::consts::PI / c.sqrt();
            let mut j = 0.0;
            while (j + 0.5) * period <= t_end {
                xi.push((j + 0.5) * period);
                if (j + 1.0) * period <= t_end {
                    eta.push((j + 1.0) * period);
                }
                j += 1.0;
            }
        }
        Ok(Self {
            dim: n,
            curvature: vec![DMatrix::identity(n - 1, n - 1) * c; grid.len()],
            grid,
            samples,
            positions: Vec::new(),
            singular: SingularSet { xi, eta },
            wronskian_drift,
            source: JacobiSource::ClosedForm { curvature: c },
        })
    }

    /// Manifold dimension `n`; the matrices are `(n-1) x (n-1)`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &JacobiSource {
        &self.source
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    pub fn sample(&self, i: usize) -> &JacobiSample {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[JacobiSample] {
        &self.samples
    }

    /// `K` at grid point `i`.
    pub fn curvature(&self, i: usize) -> &DMatrix<f64> {
        &self.curvature[i]
    }

    pub fn singular_set(&self) -> &SingularSet {
        &self.singular
    }

    /// Largest `|W(sigma) + Id|` over the grid.
    pub fn wronskian_drift(&self) -> f64 {
        self.wronskian_drift
    }

    /// Solutions at an arbitrary `sigma` in `[0, T]`: exact for closed forms,
    /// cubic Hermite from `(Y, Y')` and `(Y', Y'' = -K Y)` otherwise.
    pub fn sample_at(&self, sigma: f64) -> Result<JacobiSample> {
        let t_end = self.final_time();
        if !(sigma.is_finite() && (0.0..=t_end).contains(&sigma)) {
            return Err(Error::input(format!("sigma = {sigma} lies outside [0, {t_end}]")));
        }
        if let JacobiSource::ClosedForm { curvature } = self.source {
            return Ok(closed_form_jacobi(curvature, sigma, self.dim));
        }
        let i = self.grid.partition_point(|&s| s <= sigma).clamp(1, self.len() - 1) - 1;
        let (s0, s1) = (self.grid[i], self.grid[i + 1]);
        let h = s1 - s0;
        let t = (sigma - s0) / h;
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let (ka, kb) = (&self.curvature[i], &self.curvature[i + 1]);
        let h00 = (2.0 * t - 3.0) * t * t + 1.0;
        let h10 = ((t - 2.0) * t + 1.0) * t;
        let h01 = (3.0 - 2.0 * t) * t * t;
        let h11 = (t - 1.0) * t * t;
        let herm = |y0: &DMatrix<f64>, d0: DMatrix<f64>, y1: &DMatrix<f64>, d1: DMatrix<f64>| {
            y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
        };
        Ok(JacobiSample {
            xi: herm(&a.xi, a.dxi.clone(), &b.xi, b.dxi.clone()),
            dxi: herm(&a.dxi, -(ka * &a.xi), &b.dxi, -(kb * &b.xi)),
            eta: herm(&a.eta, a.deta.clone(), &b.eta, b.deta.clone()),
            deta: herm(&a.deta, -(ka * &a.eta), &b.deta, -(kb * &b.eta)),
        })
    }

    /// Five-point second differences against `-K Y` on uniform stretches of the grid.
    fn check_residual(&self) -> Result<()> {
        let n = self.len();
        for i in 2..n.saturating_sub(2) {
            let hs: Vec<f64> = (i - 2..i + 2).map(|j| self.grid[j + 1] - self.grid[j]).collect();
            let h = hs[0];
            if hs.iter().any(|x| (x - h).abs() > 1e-9 * h) {
                continue;
            }
            // Round-off floor of the stencil, which grows like eps / h^2.
            let tol = 1e-4 * h + 100.0 * f64::EPSILON / (h * h);
            for name in ["Xi", "H"] {
                let y = |j: usize| if name == "Xi" { &self.samples[j].xi } else { &self.samples[j].eta };
                let d2 = (y(i - 1) * 16.0 + y(i + 1) * 16.0 - y(i - 2) - y(i + 2) - y(i) * 30.0) / (12.0 * h * h);
                let r = d2 + &self.curvature[i] * y(i);
                let scale = max_abs(y(i)).max(1.0);
                if max_abs(&r) > tol * scale {
                    return Err(Error::IntegrationFailure {
                        sigma: self.grid[i],
                        reason: format!(
                            "Jacobi residual for {name} is {:.3e}, tolerance {:.3e}",
                            max_abs(&r) / scale,
                            tol
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    fn detect_singular(&self, block: Block) -> Result<Vec<f64>> {
        let pick = |s: &JacobiSample| match block {
            Block::Xi => (s.xi.clone(), s.dxi.clone()),
            _ => (s.eta.clone(), s.deta.clone()),
        };
        let m = self.dim - 1;
        let ratio = |s: &JacobiSample| {
            let (a, da) = pick(s);
            let scale = a.norm() + da.norm();
            (min_singular_value(&a) / scale, det(&a).abs(), scale)
        };
        let g: Vec<f64> = self.samples.iter().map(|s| ratio(s).0).collect();
        let mut found = Vec::new();
        if block != Block::Xi {
            found.push(0.0);
        }
        let n = g.len();
        for i in 1..n {
            let local_min = g[i] < g[i - 1] && (i == n - 1 || g[i] <= g[i + 1]);
            if !local_min {
                continue;
            }
            let lo = self.grid[i - 1];
            let hi = self.grid[(i + 1).min(n - 1)];
            let at = golden_section_min(|s| Ok::<_, Error>(ratio(&self.sample_at(s)?).0), lo, hi, SINGULAR_SIGMA_TOL)?;
            let (_, d, scale) = ratio(&self.sample_at(at)?);
            if d < DET_REL_TOL * scale.powi(m as i32) && found.last().is_none_or(|&p: &f64| at - p > 1e-8) {
                found.push(at);
            }
        }
        Ok(found)
    }

    /// Columns `sigma, x_0.., det_xi, det_eta`; positions are omitted for closed forms.
    pub fn write_csv<W: Write>(&self, out: W, comments: &[(String, String)]) -> io::Result<()> {
        let d = self.positions.first().map_or(0, |p| p.len());
        let mut header = vec!["sigma".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        header.push("det_xi".into());
        header.push("det_eta".into());
        let rows = (0..self.len()).map(|i| {
            let mut row = vec![self.grid[i]];
            if d > 0 {
                row.extend(self.positions[i].iter());
            }
            row.push(det(&self.samples[i].xi));
            row.push(det(&self.samples[i].eta));
            row
        });
        write_csv(out, comments, &header, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integrate_geodesic;
    use crate::manifolds::Warp;
    use std::f64::consts::PI;

    fn system(spec: &ManifoldSpec, theta: &[f64], t_end: f64, step: f64) -> JacobiSystem {
        let x = spec.base_point();
        let theta = DVector::from_column_slice(theta);
        let traj = integrate_geodesic(spec, &x, &theta, t_end, step).unwrap();
        propagate_jacobi(spec, &traj, step).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let s = closed_form_jacobi(1.0, PI / 2.0, 3);
        assert!(max_abs(&s.xi) < 1e-15);
        assert!((&s.eta - DMatrix::identity(2, 2)).amax() < 1e-15);
        let s = closed_form_jacobi(0.0, 3.0, 4);
        assert_eq!(s.xi, DMatrix::identity(3, 3));
        assert_eq!(s.eta, DMatrix::identity(3, 3) * 3.0);
        for c in [-2.0, 0.0, 0.5] {
            let s = closed_form_jacobi(c, 0.0, 3);
            assert_eq!(s.xi, DMatrix::identity(2, 2));
            assert_eq!(s.eta, DMatrix::zeros(2, 2));
        }
    }

    #[test]
    fn sphere_propagation_matches_sine_and_cosine() {
        let spec = ManifoldSpec::round_sphere(3).unwrap();
        let js = system(&spec, &[1.0, 0.0, 0.0, 0.0], 5.0, 1e-3);
        for (i, &s) in js.grid().iter().enumerate().step_by(50) {
            let exact = closed_form_jacobi(1.0, s, 3);
            assert!((&js.sample(i).xi - exact.xi).amax() < 1e-9);
            assert!((&js.sample(i).eta - exact.eta).amax() < 1e-9);
        }
        let sing = js.singular_set();
        assert_eq!(sing.xi().len(), 2);
        assert!((sing.xi()[0] - PI / 2.0).abs() < 1e-8);
        assert!((sing.xi()[1] - 1.5 * PI).abs() < 1e-8);
        assert_eq!(sing.eta().len(), 2);
        assert!((sing.eta()[1] - PI).abs() < 1e-8);
        assert!(js.wronskian_drift() < 1e-12);
    }

    #[test]
    fn dense_output_is_accurate_between_samples() {
        let spec = ManifoldSpec::round_sphere(2).unwrap();
        let js = system(&spec, &[0.0, 1.0, 0.0], 2.0, 1e-2);
        for s in [0.0, 0.0137, 0.7777, 1.999, 2.0] {
            let got = js.sample_at(s).unwrap();
            let exact = closed_form_jacobi(1.0, s, 2);
            assert!((got.eta - exact.eta).amax() < 1e-9, "{s}");
            assert!((got.dxi - exact.dxi).amax() < 1e-8, "{s}");
        }
        assert!(js.sample_at(2.5).is_err());
    }

    #[test]
    fn flat_kinds_give_linear_solutions() {
        let torus = ManifoldSpec::unit_square_torus();
        let js = system(&torus, &[0.6, 0.8], 3.0, 1e-2);
        let last = js.len() - 1;
        assert!((js.sample(last).eta[(0, 0)] - 3.0).abs() < 1e-12);
        assert_eq!(js.singular_set().eta(), &[0.0]);
        assert!(js.singular_set().xi().is_empty());
    }

    #[test]
    fn warped_wronskian_and_small_sigma_determinant() {
        for warp in [Warp::Cubic { a: 0.4 }, Warp::Sinh { k: 0.7 }, Warp::Cubic { a: -0.05 }] {
            let spec = ManifoldSpec::warped_product(warp, 3).unwrap();
            let x = DVector::from_column_slice(&[0.3, 0.0, 0.1]);
            let mut theta = DVector::from_column_slice(&[0.1, 1.0, 0.3]);
            theta /= spec.norm(x.as_slice(), theta.as_slice()).unwrap();
            let traj = integrate_geodesic(&spec, &x, &theta, 2.0, 1e-3).unwrap();
            let js = propagate_jacobi(&spec, &traj, 1e-3).unwrap();
            assert!(js.wronskian_drift() < 1e-8, "{warp}: {}", js.wronskian_drift());
            for i in 1..=10 {
                assert!(det(&js.sample(i).eta) > 0.0);
            }
        }
    }

    #[test]
    fn closed_form_system_singular_sets() {
        let js = JacobiSystem::closed_form(4.0, 2, 4.0, 1e-2).unwrap();
        let half = PI / 2.0;
        assert_eq!(js.singular_set().eta(), &[0.0, half, 2.0 * half]);
        assert_eq!(js.singular_set().xi().len(), 3);
        assert!(JacobiSystem::closed_form(1.0, 1, 1.0, 0.1).is_err());
    }

    #[test]
    fn csv_columns() {
        let js = JacobiSystem::closed_form(0.0, 2, 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        js.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sigma,det_xi,det_eta\n"));
    }
}
