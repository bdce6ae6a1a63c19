//! Unit-speed geodesics, parallel frames and the matrix Jacobi equation.
//!
//! Every kind is integrated through one coupled first-order system
//! `(p, v, frame, Y, Y')` where the columns of `Y` hold normal Jacobi fields
//! expressed in the parallel frame and `Y'' = -K Y`.

mod geodesic;
mod jacobi;
pub(crate) mod ode;

pub use geodesic::{integrate_geodesic, GeodesicTrajectory};
pub use jacobi::{closed_form_jacobi, propagate_jacobi, JacobiSample, JacobiSource, JacobiSystem, SingularSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifolds::ManifoldSpec;
use ode::Rk4;

pub const DEFAULT_STEP: f64 = 1e-3;

/// Drift in speed or frame orthonormality beyond this aborts the integration.
pub const CONSERVATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Blocks {
    None,
    /// `Y = (Xi | H)`.
    Both,
    /// `Y = H` only.
    EtaOnly,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    d: usize,
    m: usize,
    cols: usize,
}

impl Layout {
    fn frame(&self) -> usize {
        2 * self.d
    }
    fn y(&self) -> usize {
        self.frame() + self.m * self.d
    }
    fn dy(&self) -> usize {
        self.y() + self.m * self.cols
    }
    fn len(&self) -> usize {
        self.dy() + self.m * self.cols
    }
}

fn rhs(spec: &ManifoldSpec, lay: Layout, kbuf: &mut [f64], s: &[f64], out: &mut [f64]) -> Result<()> {
    let (d, m, c) = (lay.d, lay.m, lay.cols);
    let (p, v) = (&s[..d], &s[d..2 * d]);
    out[..d].copy_from_slice(v);
    spec.acceleration(p, v, &mut out[d..2 * d])?;
    let f0 = lay.frame();
    for a in 0..m {
        let e = &s[f0 + a * d..f0 + (a + 1) * d];
        spec.transport(p, v, e, &mut out[f0 + a * d..f0 + (a + 1) * d])?;
    }
    if c == 0 {
        return Ok(());
    }
    spec.curvature_into(p, v, &s[f0..lay.y()], m, kbuf)?;
    out[lay.y()..lay.dy()].copy_from_slice(&s[lay.dy()..lay.len()]);
    let y0 = lay.y();
    for a in 0..m {
        for j in 0..c {
            let mut acc = 0.0;
            for b in 0..m {
                acc += kbuf[a * m + b] * s[y0 + b * c + j];
            }
            out[lay.dy() + a * c + j] = -acc;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Block {
    Xi,
    DXi,
    Eta,
    DEta,
}

/// Integrator state for one geodesic.
pub(crate) struct Flow<'a> {
    spec: &'a ManifoldSpec,
    lay: Layout,
    blocks: Blocks,
    y: Vec<f64>,
    comp: Vec<f64>,
    rk: Rk4,
    kbuf: Vec<f64>,
    sigma: f64,
}

impl<'a> Flow<'a> {
    pub(crate) fn new(spec: &'a ManifoldSpec, x: &[f64], theta: &[f64], blocks: Blocks) -> Result<Self> {
        spec.check_initial(x, theta)?;
        let frame = spec.normal_frame(x, theta)?;
        let d = spec.ambient_dim();
        let m = spec.dim() - 1;
        let cols = match blocks {
            Blocks::None => 0,
            Blocks::Both => 2 * m,
            Blocks::EtaOnly => m,
        };
        let lay = Layout { d, m, cols };
        let mut y = vec![0.0; lay.len()];
        y[..d].copy_from_slice(x);
        y[d..2 * d].copy_from_slice(theta);
        for (a, e) in frame.iter().enumerate() {
            y[lay.frame() + a * d..lay.frame() + (a + 1) * d].copy_from_slice(e.as_slice());
        }
        for a in 0..m {
            match blocks {
                Blocks::None => {}
                Blocks::Both => {
                    y[lay.y() + a * cols + a] = 1.0;
                    y[lay.dy() + a * cols + m + a] = 1.0;
                }
                Blocks::EtaOnly => y[lay.dy() + a * cols + a] = 1.0,
            }
        }
        Ok(Self {
            spec,
            lay,
            blocks,
            comp: vec![0.0; y.len()],
            rk: Rk4::new(y.len()),
            kbuf: vec![0.0; m * m],
            y,
            sigma: 0.0,
        })
    }

    /// Take one step of length `h` and verify the conserved quantities.
    pub(crate) fn advance(&mut self, h: f64) -> Result<()> {
        let Self { spec, lay, y, comp, rk, kbuf, sigma, .. } = self;
        let (spec, lay) = (*spec, *lay);
        let at = *sigma;
        let mut f = |s: &[f64], out: &mut [f64]| rhs(spec, lay, kbuf, s, out);
        rk.step(&mut f, y, comp, h).map_err(|e| match e {
            Error::Domain { .. } => Error::IntegrationFailure { sigma: at, reason: e.to_string() },
            other => other,
        })?;
        *sigma += h;
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::IntegrationFailure { sigma: *sigma, reason: "non-finite state".into() });
        }
        let (speed, frame) = self.conservation_defect()?;
        if speed > CONSERVATION_TOL || frame > CONSERVATION_TOL {
            return Err(Error::IntegrationFailure {
                sigma: self.sigma,
                reason: format!("conservation drift: speed {speed:.3e}, frame {frame:.3e}"),
            });
        }
        Ok(())
    }

    /// `(| |v|^2 - 1 |, max |<e_a, e_b> - delta_ab|)` including `<v, e_a>`.
    pub(crate) fn conservation_defect(&self) -> Result<(f64, f64)> {
        let d = self.lay.d;
        let p = &self.y[..d];
        let v = &self.y[d..2 * d];
        let speed = (self.spec.inner(p, v, v)? - 1.0).abs();
        let mut frame = 0.0_f64;
        for a in 0..self.lay.m {
            let ea = self.frame_vec(a);
            frame = frame.max(self.spec.inner(p, v, ea)?.abs());
            for b in a..self.lay.m {
                let g = self.spec.inner(p, ea, self.frame_vec(b))?;
                frame = frame.max((g - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok((speed, frame))
    }

    fn frame_vec(&self, a: usize) -> &[f64] {
        let start = self.lay.frame() + a * self.lay.d;
        &self.y[start..start + self.lay.d]
    }

    pub(crate) fn position(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y[..self.lay.d])
    }

    pub(crate) fn velocity(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y[self.lay.d..2 * self.lay.d])
    }

    /// Parallel frame as the columns of a `d x (n-1)` matrix.
    pub(crate) fn frame(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.lay.d, self.lay.m, &self.y[self.lay.frame()..self.lay.y()])
    }

    fn block_offset(&self, block: Block) -> (usize, usize) {
        let m = self.lay.m;
        let col = match (self.blocks, block) {
            (Blocks::Both, Block::Xi | Block::DXi) => 0,
            (Blocks::Both, _) => m,
            (Blocks::EtaOnly, Block::Eta | Block::DEta) => 0,
            _ => panic!("block {block:?} is not integrated"),
        };
        let base = match block {
            Block::Xi | Block::Eta => self.lay.y(),
            Block::DXi | Block::DEta => self.lay.dy(),
        };
        (base, col)
    }

    pub(crate) fn block(&self, block: Block) -> DMatrix<f64> {
        let (base, col) = self.block_offset(block);
        let c = self.lay.cols;
        DMatrix::from_fn(self.lay.m, self.lay.m, |a, j| self.y[base + a * c + col + j])
    }

    /// `K` at the current state, in the current frame.
    pub(crate) fn curvature(&self) -> Result<DMatrix<f64>> {
        let (d, m) = (self.lay.d, self.lay.m);
        let mut out = vec![0.0; m * m];
        self.spec.curvature_into(
            &self.y[..d],
            &self.y[d..2 * d],
            &self.y[self.lay.frame()..self.lay.y()],
            m,
            &mut out,
        )?;
        Ok(DMatrix::from_row_slice(m, m, &out))
    }

    /// `max |Xi'^T H - Xi^T H' + Id|`, evaluated in double-double arithmetic
    /// from the compensated state so that cancellation between the growing
    /// products does not swamp the measurement.
    pub(crate) fn wronskian_defect(&self) -> f64 {
        assert_eq!(self.blocks, Blocks::Both);
        let m = self.lay.m;
        let x = |b: Block, a: usize, j: usize| {
            let (base, col) = self.block_offset(b);
            let k = base + a * self.lay.cols + col + j;
            (self.y[k], self.comp[k])
        };
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let mut acc = DoubleDouble::default();
                if i == j {
                    acc.add(1.0);
                }
                for a in 0..m {
                    acc.add_product(x(Block::DXi, a, i), x(Block::Eta, a, j));
                    acc.add_product(x(Block::Xi, a, i), x(Block::DEta, a, j).neg());
                }
                worst = worst.max(acc.value().abs());
            }
        }
        worst
    }
}

trait Neg {
    fn neg(self) -> Self;
}

impl Neg for (f64, f64) {
    fn neg(self) -> Self {
        (-self.0, -self.1)
    }
}

#[derive(Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bb = s - self.hi;
        self.lo += (self.hi - (s - bb)) + (x - bb);
        self.hi = s;
    }

    fn add_product(&mut self, (xh, xl): (f64, f64), (yh, yl): (f64, f64)) {
        let p = xh * yh;
        let e = xh.mul_add(yh, -p);
        self.add(p);
        self.lo += e + xh * yl + xl * yh;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}
