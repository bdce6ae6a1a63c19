use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use super::ode::build_grid;
use super::{Blocks, Flow};
use crate::error::{Error, Result};
use crate::manifolds::ManifoldSpec;
use crate::output::write_csv;

/// Sampled unit-speed geodesic with its parallel normal frame.
#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    spec: ManifoldSpec,
    point: DVector<f64>,
    direction: DVector<f64>,
    step: f64,
    grid: Vec<f64>,
    unwrapped: Vec<DVector<f64>>,
    velocities: Vec<DVector<f64>>,
    frames: Vec<DMatrix<f64>>,
}

pub(crate) fn check_span(t_end: f64, step: f64) -> Result<()> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::input(format!("final arc length T must be positive, got {t_end}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::input(format!("step must be positive, got {step}")));
    }
    if step > t_end {
        return Err(Error::input(format!("step {step} exceeds T = {t_end}")));
    }
    Ok(())
}

pub fn integrate_geodesic(
    spec: &ManifoldSpec,
    x: &DVector<f64>,
    theta: &DVector<f64>,
    t_end: f64,
    step: f64,
) -> Result<GeodesicTrajectory> {
    check_span(t_end, step)?;
    let mut flow = Flow::new(spec, x.as_slice(), theta.as_slice(), Blocks::None)?;
    let grid = build_grid(t_end, step, &[]);
    let mut traj = GeodesicTrajectory {
        spec: spec.clone(),
        point: x.clone(),
        direction: theta.clone(),
        step,
        unwrapped: Vec::with_capacity(grid.len()),
        velocities: Vec::with_capacity(grid.len()),
        frames: Vec::with_capacity(grid.len()),
        grid,
    };
    for i in 0..traj.grid.len() {
        if i > 0 {
            flow.advance(traj.grid[i] - traj.grid[i - 1])?;
        }
        traj.unwrapped.push(flow.position());
        traj.velocities.push(flow.velocity());
        traj.frames.push(flow.frame());
    }
    Ok(traj)
}

impl GeodesicTrajectory {
    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn initial_point(&self) -> &DVector<f64> {
        &self.point
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn step(&self) -> f64 {
        self.step
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
        *self.grid.last().expect("trajectory has at least two samples")
    }

    /// Position on the manifold; torus points are reduced to the fundamental domain.
    pub fn position(&self, i: usize) -> DVector<f64> {
        self.spec.wrap(self.unwrapped[i].as_slice())
    }

    /// Position in the universal cover (differs from `position` only on tori).
    pub fn unwrapped_position(&self, i: usize) -> &DVector<f64> {
        &self.unwrapped[i]
    }

    pub fn velocity(&self, i: usize) -> &DVector<f64> {
        &self.velocities[i]
    }

    /// Parallel orthonormal frame of the normal space, one vector per column.
    pub fn frame(&self, i: usize) -> &DMatrix<f64> {
        &self.frames[i]
    }

    /// `| |v|^2 - 1 |` at sample `i`.
    pub fn speed_defect(&self, i: usize) -> Result<f64> {
        let p = self.unwrapped[i].as_slice();
        let v = self.velocities[i].as_slice();
        Ok((self.spec.inner(p, v, v)? - 1.0).abs())
    }

    /// Largest deviation of the frame Gram matrix from the identity at sample `i`.
    pub fn frame_defect(&self, i: usize) -> Result<f64> {
        let p = self.unwrapped[i].as_slice();
        let f = &self.frames[i];
        let mut worst = 0.0_f64;
        for a in 0..f.ncols() {
            for b in a..f.ncols() {
                let g = self.spec.inner(p, f.column(a).as_slice(), f.column(b).as_slice())?;
                worst = worst.max((g - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok(worst)
    }

    /// Columns `sigma, x_0.., v_0..`.
    pub fn write_csv<W: Write>(&self, out: W, comments: &[(String, String)]) -> io::Result<()> {
        let d = self.point.len();
        let mut header = vec!["sigma".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        header.extend((0..d).map(|i| format!("v{i}")));
        let rows = (0..self.len()).map(|i| {
            let mut row = vec![self.grid[i]];
            row.extend(self.position(i).iter());
            row.extend(self.velocities[i].iter());
            row
        });
        write_csv(out, comments, &header, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::Warp;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn torus_line_wraps() {
        let spec = ManifoldSpec::unit_square_torus();
        let t = integrate_geodesic(&spec, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 2.5, 1e-2).unwrap();
        let last = t.len() - 1;
        assert!((t.position(last) - v(&[0.5, 0.0])).amax() < 1e-12);
        assert!((t.unwrapped_position(last) - v(&[2.5, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn great_circle_reaches_antipode() {
        let spec = ManifoldSpec::round_sphere(2).unwrap();
        let x = spec.base_point();
        let theta = v(&[1.0, 0.0, 0.0]);
        let t = integrate_geodesic(&spec, &x, &theta, PI, 1e-3).unwrap();
        let last = t.len() - 1;
        assert!((t.position(last) + &x).amax() < 1e-8 * PI);
        assert!((t.velocity(last) + &theta).amax() < 1e-8 * PI);
        for i in (0..t.len()).step_by(97) {
            let s = t.grid()[i];
            let exact = v(&[s.sin(), 0.0, s.cos()]);
            assert!((t.position(i) - exact).amax() < 1e-8 * s.max(1.0));
            assert!(t.speed_defect(i).unwrap() < 1e-8);
            assert!(t.frame_defect(i).unwrap() < 1e-8);
        }
    }

    #[test]
    fn hyperboloid_geodesic_matches_closed_form() {
        let spec = ManifoldSpec::constant_curvature(-1.0, 3).unwrap();
        let x = spec.base_point();
        let theta = v(&[0.6, 0.8, 0.0, 0.0]);
        let t = integrate_geodesic(&spec, &x, &theta, 3.0, 1e-3).unwrap();
        let last = t.len() - 1;
        let s: f64 = 3.0;
        let exact = &x * s.cosh() + &theta * s.sinh();
        assert!((t.position(last) - exact).amax() < 1e-8 * s * s.cosh());
        assert!(t.frame_defect(last).unwrap() < 1e-8);
    }

    #[test]
    fn linear_warp_is_a_straight_line() {
        let spec = ManifoldSpec::warped_product(Warp::Linear, 3).unwrap();
        let x = v(&[0.3, -0.2, 0.1]);
        let theta = v(&[0.0, 0.6, 0.8]);
        let t = integrate_geodesic(&spec, &x, &theta, 4.0, 1e-2).unwrap();
        let last = t.len() - 1;
        assert!((t.position(last) - (&x + &theta * 4.0)).amax() < 1e-12);
    }

    #[test]
    fn warped_geodesics_conserve_speed_and_frame() {
        let spec = ManifoldSpec::warped_product(Warp::Cubic { a: 0.3 }, 3).unwrap();
        let x = v(&[0.4, 0.1, -0.2]);
        let mut theta = v(&[0.2, 1.0, 0.5]);
        theta /= spec.norm(x.as_slice(), theta.as_slice()).unwrap();
        let t = integrate_geodesic(&spec, &x, &theta, 3.0, 1e-3).unwrap();
        for i in 0..t.len() {
            assert!(t.speed_defect(i).unwrap() < 1e-8);
            assert!(t.frame_defect(i).unwrap() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_spans() {
        let spec = ManifoldSpec::round_sphere(2).unwrap();
        let x = spec.base_point();
        let theta = v(&[1.0, 0.0, 0.0]);
        for (t_end, step) in [(0.0, 0.1), (-1.0, 0.1), (1.0, 0.0), (1.0, -0.1), (1.0, 2.0)] {
            assert!(matches!(integrate_geodesic(&spec, &x, &theta, t_end, step), Err(Error::Input(_))));
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let spec = ManifoldSpec::unit_square_torus();
        let t = integrate_geodesic(&spec, &v(&[0.0, 0.0]), &v(&[0.6, 0.8]), 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sigma,x0,x1,v0,v1\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
