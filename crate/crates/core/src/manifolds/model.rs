//! Pointwise geometry of each model: metric, geodesic spray, parallel
//! transport and the curvature operator in a frame. The hot-loop entry points
//! take flat slices so the integrators can avoid allocation.

use nalgebra::{DMatrix, DVector};

use super::{ManifoldKind, ManifoldSpec};
use crate::error::{Error, Result};

const POINT_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minkowski product with the last coordinate timelike.
fn lorentz(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    dot(&a[..n], &b[..n]) - a[n] * b[n]
}

impl ManifoldSpec {
    pub fn inner(&self, p: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature, .. } if *curvature < 0.0 => Ok(lorentz(a, b)),
            ManifoldKind::ConstantCurvature { .. } | ManifoldKind::FlatTorus { .. } => Ok(dot(a, b)),
            ManifoldKind::WarpedProduct { warp, .. } => {
                let r = dot(p, p).sqrt();
                let h = warp.angular_scale(r)?;
                if r == 0.0 {
                    return Ok(dot(a, b));
                }
                let pa = dot(p, a) / r;
                let pb = dot(p, b) / r;
                // Perpendicular parts formed explicitly: h * a.b + (1 - h) * pa * pb
                // cancels once h is large.
                let perp: f64 = p
                    .iter()
                    .zip(a.iter().zip(b))
                    .map(|(pi, (ai, bi))| (ai - pa * pi / r) * (bi - pb * pi / r))
                    .sum();
                Ok(pa * pb + h * perp)
            }
        }
    }

    pub fn norm(&self, p: &[f64], a: &[f64]) -> Result<f64> {
        Ok(self.inner(p, a, a)?.max(0.0).sqrt())
    }

    pub fn validate_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(Error::input(format!(
                "point has {} coordinates, {} expected for {self}",
                p.len(),
                self.ambient_dim()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("point has non-finite coordinates"));
        }
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature: c, .. } if *c > 0.0 => {
                let q = dot(p, p) * c;
                if (q - 1.0).abs() > POINT_TOL {
                    return Err(Error::input(format!("point is off the sphere (c|x|^2 = {q})")));
                }
            }
            ManifoldKind::ConstantCurvature { curvature: c, .. } if *c < 0.0 => {
                let q = lorentz(p, p) * c;
                if (q - 1.0).abs() > POINT_TOL || p[p.len() - 1] <= 0.0 {
                    return Err(Error::input(format!("point is off the upper hyperboloid (c<x,x> = {q})")));
                }
            }
            ManifoldKind::WarpedProduct { warp, .. } => {
                warp.value(dot(p, p).sqrt())?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Check that `(p, theta)` is a valid point with a unit tangent direction.
    pub(crate) fn check_initial(&self, p: &[f64], theta: &[f64]) -> Result<()> {
        self.validate_point(p)?;
        if theta.len() != p.len() || theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("direction has the wrong shape or non-finite entries"));
        }
        if let Some(normal) = self.radial_normal(p) {
            let off = self.inner(p, theta, &normal)?.abs();
            if off > UNIT_TOL * (1.0 + self.inner(p, theta, theta)?.abs().sqrt()) {
                return Err(Error::input(format!("direction is not tangent to the model (normal component {off:e})")));
            }
        }
        let len2 = self.inner(p, theta, theta)?;
        if (len2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::input(format!("non-unit direction: |theta|^2 = {len2}")));
        }
        Ok(())
    }

    /// Normal of the embedded quadric at `p`, when the model is embedded.
    fn radial_normal(&self, p: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature, .. } if *curvature != 0.0 => {
                Some(p.iter().map(|x| x * curvature.abs().sqrt()).collect())
            }
            _ => None,
        }
    }

    /// Geodesic acceleration `x''` for a curve through `p` with velocity `v`.
    pub(crate) fn acceleration(&self, p: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature: c, .. } if *c != 0.0 => {
                let s = -c * self.inner(p, v, v)?;
                out.iter_mut().zip(p).for_each(|(o, x)| *o = s * x);
            }
            ManifoldKind::WarpedProduct { warp, .. } => {
                let r2 = dot(p, p);
                let r = r2.sqrt();
                let (a, b) = warp.flow_coefficients(r)?;
                if r == 0.0 {
                    out.fill(0.0);
                    return Ok(());
                }
                let pv = dot(p, v);
                let vv = dot(v, v);
                let radial = a * (vv - pv * pv / r2);
                let cross = 2.0 * b * pv;
                for i in 0..p.len() {
                    out[i] = radial * p[i] + cross * (v[i] - pv * p[i] / r2);
                }
            }
            _ => out.fill(0.0),
        }
        Ok(())
    }

    /// Derivative of a parallel field `e` along a curve with velocity `v` at `p`.
    pub(crate) fn transport(&self, p: &[f64], v: &[f64], e: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature: c, .. } if *c != 0.0 => {
                let s = -c * self.inner(p, e, v)?;
                out.iter_mut().zip(p).for_each(|(o, x)| *o = s * x);
            }
            ManifoldKind::WarpedProduct { warp, .. } => {
                let r2 = dot(p, p);
                let (a, b) = warp.flow_coefficients(r2.sqrt())?;
                if r2 == 0.0 {
                    out.fill(0.0);
                    return Ok(());
                }
                let pv = dot(p, v);
                let pe = dot(p, e);
                let radial = a * (dot(v, e) - pv * pe / r2) - 2.0 * b * pv * pe / r2;
                for i in 0..p.len() {
                    out[i] = radial * p[i] + b * (pv * e[i] + pe * v[i]);
                }
            }
            _ => out.fill(0.0),
        }
        Ok(())
    }

    /// `K_ab = <R(e_a, v) v, e_b>` for a frame stored as `m` consecutive ambient vectors.
    pub(crate) fn curvature_into(&self, p: &[f64], v: &[f64], frame: &[f64], m: usize, out: &mut [f64]) -> Result<()> {
        let d = p.len();
        out.fill(0.0);
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature: c, .. } => {
                (0..m).for_each(|a| out[a * m + a] = *c);
            }
            ManifoldKind::FlatTorus { .. } => {}
            ManifoldKind::WarpedProduct { warp, .. } => {
                let r = dot(p, p).sqrt();
                let k_rad = warp.radial_curvature(r)?;
                let k_tan = warp.tangential_curvature(r)?;
                if r == 0.0 {
                    (0..m).for_each(|a| out[a * m + a] = k_rad);
                    return Ok(());
                }
                let vr = dot(p, v) / r;
                let xs: Vec<f64> = (0..m).map(|a| dot(p, &frame[a * d..(a + 1) * d]) / r).collect();
                let jump = k_rad - k_tan;
                for a in 0..m {
                    for b in 0..m {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        out[a * m + b] = k_tan * delta + jump * (xs[a] * xs[b] + vr * vr * delta);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn curvature_in_frame(&self, p: &[f64], v: &[f64], frame: &[DVector<f64>]) -> Result<DMatrix<f64>> {
        let m = frame.len();
        let flat: Vec<f64> = frame.iter().flat_map(|e| e.iter().copied()).collect();
        let mut out = vec![0.0; m * m];
        self.curvature_into(p, v, &flat, m, &mut out)?;
        Ok(DMatrix::from_row_slice(m, m, &out))
    }

    /// Orthonormal basis of `T_p M` (in ambient coordinates).
    pub fn tangent_basis(&self, p: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.validate_point(p)?;
        let d = self.ambient_dim();
        let candidates = (0..d).map(|i| {
            let mut u = DVector::zeros(d);
            u[i] = 1.0;
            u
        });
        self.orthonormalize(p, Vec::new(), candidates, self.dim())
    }

    /// Orthonormal basis of the orthogonal complement of `theta` in `T_p M`.
    pub fn normal_frame(&self, p: &[f64], theta: &[f64]) -> Result<Vec<DVector<f64>>> {
        let theta = DVector::from_column_slice(theta);
        let basis = self.tangent_basis(p)?;
        let mut frame = self.orthonormalize(p, vec![theta], basis.into_iter(), self.dim())?;
        frame.remove(0);
        Ok(frame)
    }

    /// Gram-Schmidt against `accepted`, projecting candidates onto the tangent space first.
    fn orthonormalize(
        &self,
        p: &[f64],
        mut accepted: Vec<DVector<f64>>,
        candidates: impl Iterator<Item = DVector<f64>>,
        want: usize,
    ) -> Result<Vec<DVector<f64>>> {
        let normal = self.radial_normal(p);
        for mut u in candidates {
            if accepted.len() == want {
                break;
            }
            if let Some(nrm) = &normal {
                // Tangent projection for the quadric models.
                let nn = self.inner(p, nrm, nrm)?;
                let s = self.inner(p, u.as_slice(), nrm)? / nn;
                u.iter_mut().zip(nrm).for_each(|(x, y)| *x -= s * y);
            }
            for _ in 0..2 {
                for q in &accepted {
                    let s = self.inner(p, u.as_slice(), q.as_slice())?;
                    u.axpy(-s, q, 1.0);
                }
            }
            let len = self.norm(p, u.as_slice())?;
            if len > 1e-6 {
                accepted.push(u / len);
            }
        }
        if accepted.len() != want {
            return Err(Error::Numerical(format!("could not build a {want}-frame at the given point")));
        }
        Ok(accepted)
    }

    /// Reduce a point of the universal cover into the fundamental domain of a torus.
    pub fn wrap(&self, p: &[f64]) -> DVector<f64> {
        match &self.kind {
            ManifoldKind::FlatTorus { basis } => {
                let inv = basis.clone().try_inverse().expect("validated invertible basis");
                let coeffs = &inv * DVector::from_column_slice(p);
                let frac = coeffs.map(|x| {
                    let f = x - x.floor();
                    if f >= 1.0 - 1e-13 {
                        0.0
                    } else {
                        f
                    }
                });
                basis * frac
            }
            _ => DVector::from_column_slice(p),
        }
    }
}
