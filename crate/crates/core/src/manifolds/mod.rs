//! Model Riemannian manifolds, their curvature along geodesics, and
//! quadrature on the unit tangent sphere.
//!
//! Points are stored in ambient coordinates:
//!
//! * constant curvature `c > 0`: the sphere `|x|^2 = 1/c` in `R^{n+1}`;
//! * constant curvature `c < 0`: the hyperboloid `<x,x>_L = 1/c`, `x_n > 0`, in
//!   Minkowski space `R^{n,1}` (last coordinate timelike);
//! * constant curvature `c = 0` and flat tori: `R^n` (tori wrapped on output);
//! * warped products: Cartesian coordinates `p in R^n` centred at the pole.

mod model;
mod quadrature;
mod warp;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use quadrature::{sphere_volume, unit_sphere_quadrature, QuadratureScheme, SphereQuadrature};
pub use warp::Warp;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldKind {
    ConstantCurvature { curvature: f64, dim: usize },
    /// Lattice vectors are the columns of `basis`.
    FlatTorus { basis: DMatrix<f64> },
    WarpedProduct { warp: Warp, dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    entire_tube: bool,
}

impl ManifoldSpec {
    pub fn constant_curvature(curvature: f64, dim: usize) -> Result<Self> {
        if !curvature.is_finite() {
            return Err(Error::input("curvature must be finite"));
        }
        check_dim(dim)?;
        Ok(Self {
            kind: ManifoldKind::ConstantCurvature { curvature, dim },
            entire_tube: curvature >= 0.0,
        })
    }

    pub fn round_sphere(dim: usize) -> Result<Self> {
        Self::constant_curvature(1.0, dim)
    }

    /// Flat torus `R^n / L` where the lattice `L` is spanned by the columns of `basis`.
    pub fn flat_torus(basis: DMatrix<f64>) -> Result<Self> {
        if !basis.is_square() {
            return Err(Error::input("lattice basis must be square"));
        }
        check_dim(basis.nrows())?;
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("lattice basis must be finite"));
        }
        let det = crate::linalg::det(&basis);
        let scale = crate::linalg::max_abs(&basis).powi(basis.nrows() as i32);
        if det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::input("lattice basis is not invertible"));
        }
        Ok(Self { kind: ManifoldKind::FlatTorus { basis }, entire_tube: true })
    }

    /// Flat torus from lattice vectors given as rows.
    pub fn flat_torus_from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::input("lattice basis rows must form a square matrix"));
        }
        let basis = DMatrix::from_fn(n, n, |i, j| rows[j][i]);
        Self::flat_torus(basis)
    }

    pub fn unit_square_torus() -> Self {
        Self::flat_torus(DMatrix::identity(2, 2)).expect("identity basis is valid")
    }

    pub fn warped_product(warp: Warp, dim: usize) -> Result<Self> {
        warp.validate()?;
        check_dim(dim)?;
        Ok(Self { kind: ManifoldKind::WarpedProduct { warp, dim }, entire_tube: false })
    }

    /// Declare whether the manifold has an entire tube. The flag is declared,
    /// not detected, but it is refused for kinds with negative curvature.
    pub fn with_entire_tube(mut self, entire: bool) -> Result<Self> {
        if entire && !self.nonnegative_curvature() {
            return Err(Error::input(format!(
                "{self} has negative sectional curvature and cannot have an entire tube"
            )));
        }
        self.entire_tube = entire;
        Ok(self)
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn entire_tube(&self) -> bool {
        self.entire_tube
    }

    pub fn nonnegative_curvature(&self) -> bool {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature, .. } => *curvature >= 0.0,
            ManifoldKind::FlatTorus { .. } => true,
            ManifoldKind::WarpedProduct { warp, .. } => warp.nonnegative_curvature(),
        }
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        match &self.kind {
            ManifoldKind::ConstantCurvature { dim, .. } | ManifoldKind::WarpedProduct { dim, .. } => *dim,
            ManifoldKind::FlatTorus { basis } => basis.nrows(),
        }
    }

    /// Number of coordinates used to store a point.
    pub fn ambient_dim(&self) -> usize {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature, dim } if *curvature != 0.0 => dim + 1,
            _ => self.dim(),
        }
    }

    /// Curvature constant of the model when it is a space form.
    pub fn constant_curvature_value(&self) -> Option<f64> {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature, .. } => Some(*curvature),
            ManifoldKind::FlatTorus { .. } => Some(0.0),
            ManifoldKind::WarpedProduct { warp, .. } => match *warp {
                Warp::Linear => Some(0.0),
                Warp::Sine { k } => Some(k * k),
                Warp::Sinh { k } => Some(-k * k),
                Warp::Cubic { a } if a == 0.0 => Some(0.0),
                Warp::Cubic { .. } => None,
            },
        }
    }

    /// The canonical base point: the north pole, the hyperboloid vertex, or the origin.
    pub fn base_point(&self) -> DVector<f64> {
        let mut p = DVector::zeros(self.ambient_dim());
        if let ManifoldKind::ConstantCurvature { curvature, dim } = &self.kind {
            if *curvature != 0.0 {
                p[*dim] = 1.0 / curvature.abs().sqrt();
            }
        }
        p
    }

    /// Riemannian volume for the kinds where it is finite and known in closed form.
    pub fn volume(&self) -> Result<f64> {
        let none = || Error::Unsupported(format!("{self} has no closed-form finite volume"));
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature, dim } if *curvature > 0.0 => {
                Ok(sphere_volume(dim + 1) / curvature.powf(*dim as f64 / 2.0))
            }
            ManifoldKind::ConstantCurvature { .. } => Err(none()),
            ManifoldKind::FlatTorus { basis } => Ok(crate::linalg::det(basis).abs()),
            ManifoldKind::WarpedProduct { warp: Warp::Sine { k }, dim } => {
                Ok(sphere_volume(dim + 1) / k.powi(*dim as i32))
            }
            ManifoldKind::WarpedProduct { .. } => Err(none()),
        }
    }

    /// Short tag used in output files.
    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ManifoldKind::ConstantCurvature { curvature, dim } => {
                write!(f, "constant_curvature(c={curvature},n={dim})")
            }
            ManifoldKind::FlatTorus { basis } => {
                write!(f, "flat_torus(n={},covolume={})", basis.nrows(), crate::linalg::det(basis).abs())
            }
            ManifoldKind::WarpedProduct { warp, dim } => write!(f, "warped_product({warp},n={dim})"),
        }
    }
}

impl Serialize for ManifoldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::input(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

/// `K(sigma)`: the operator `v -> R(v, g')g'` on the normal space, in a parallel frame.
#[derive(Debug, Clone)]
pub struct CurvatureFrameOperator {
    eval: FrameEvaluator,
}

#[derive(Debug, Clone)]
enum FrameEvaluator {
    Constant(DMatrix<f64>),
    Along { spec: ManifoldSpec, point: DVector<f64>, direction: DVector<f64> },
}

/// Evaluation step for inhomogeneous kinds.
const CURVATURE_STEP: f64 = 1e-3;

impl CurvatureFrameOperator {
    pub fn at(&self, sigma: f64) -> Result<DMatrix<f64>> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::input(format!("arc length must be nonnegative, got {sigma}")));
        }
        match &self.eval {
            FrameEvaluator::Constant(k) => Ok(k.clone()),
            FrameEvaluator::Along { spec, point, direction } => {
                if sigma == 0.0 {
                    let frame = spec.normal_frame(point.as_slice(), direction.as_slice())?;
                    return spec.curvature_in_frame(point.as_slice(), direction.as_slice(), &frame);
                }
                let traj = crate::flow::integrate_geodesic(
                    spec,
                    point,
                    direction,
                    sigma,
                    CURVATURE_STEP.min(sigma),
                )?;
                let last = traj.len() - 1;
                let frame: Vec<DVector<f64>> = traj.frame(last).column_iter().map(|c| c.into_owned()).collect();
                spec.curvature_in_frame(traj.unwrapped_position(last).as_slice(), traj.velocity(last).as_slice(), &frame)
            }
        }
    }

    /// True when `K` does not depend on the arc length.
    pub fn is_constant(&self) -> bool {
        matches!(self.eval, FrameEvaluator::Constant(_))
    }
}

/// Curvature operator along the geodesic with the given initial point and unit direction.
pub fn curvature_along(
    spec: &ManifoldSpec,
    point: &DVector<f64>,
    direction: &DVector<f64>,
) -> Result<CurvatureFrameOperator> {
    spec.check_initial(point.as_slice(), direction.as_slice())?;
    let m = spec.dim() - 1;
    let eval = match spec.constant_curvature_value() {
        Some(c) => FrameEvaluator::Constant(DMatrix::identity(m, m) * c),
        None => FrameEvaluator::Along { spec: spec.clone(), point: point.clone(), direction: direction.clone() },
    };
    Ok(CurvatureFrameOperator { eval })
}
