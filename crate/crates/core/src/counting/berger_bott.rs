use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{CountingCurve, CountingMethod};
use crate::error::{Error, Result};
use crate::flow::{Block, Blocks, Flow, JacobiSystem};
use crate::linalg::{det, pairwise_sum};
use crate::manifolds::{ManifoldSpec, SphereQuadrature};

/// Round-off allowance for `det(H^T H)` below zero.
const GRAM_NEGATIVE_TOL: f64 = 1e-14;

fn gram_root(h: &DMatrix<f64>) -> Result<f64> {
    let g = det(&h.tr_mul(h));
    if g < -GRAM_NEGATIVE_TOL {
        return Err(Error::Numerical(format!("Gram determinant of the Jacobi fields is negative ({g:e})")));
    }
    Ok(g.max(0.0).sqrt())
}

/// `sqrt(det(H^T H)) = |det H|` at `sigma`, linear between grid samples.
pub fn berger_bott_integrand(js: &JacobiSystem, sigma: f64) -> Result<f64> {
    let grid = js.grid();
    let t_end = js.final_time();
    if !(sigma.is_finite() && (0.0..=t_end).contains(&sigma)) {
        return Err(Error::input(format!("sigma = {sigma} lies outside [0, {t_end}]")));
    }
    let i = grid.partition_point(|&s| s <= sigma).clamp(1, grid.len() - 1) - 1;
    let v0 = gram_root(&js.sample(i).eta)?;
    if sigma == grid[i] {
        return Ok(v0);
    }
    let v1 = gram_root(&js.sample(i + 1).eta)?;
    let t = (sigma - grid[i]) / (grid[i + 1] - grid[i]);
    Ok(v0 + t * (v1 - v0))
}

/// Cumulative trapezoid integrals of the integrand along one geodesic, read off at each `T`.
fn direction_integrals(spec: &ManifoldSpec, x: &[f64], theta: &[f64], ts: &[f64], step: f64) -> Result<Vec<f64>> {
    let t_max = *ts.last().expect("nonempty T list");
    let mut out = Vec::with_capacity(ts.len());
    let mut pending = ts.iter().copied().peekable();
    while pending.peek() == Some(&0.0) {
        out.push(0.0);
        pending.next();
    }
    if pending.peek().is_none() {
        return Ok(out);
    }
    let grid = crate::flow::ode::build_grid(t_max, step.min(t_max), ts);
    let mut flow = Flow::new(spec, x, theta, Blocks::EtaOnly)?;
    let mut prev = 0.0;
    let mut total = 0.0;
    let mut comp = 0.0;
    for w in grid.windows(2) {
        flow.advance(w[1] - w[0])?;
        let cur = gram_root(&flow.block(Block::Eta))?;
        // Kahan summation of the trapezoid panels.
        let panel = 0.5 * (w[1] - w[0]) * (prev + cur) - comp;
        let t = total + panel;
        comp = (t - total) - panel;
        total = t;
        prev = cur;
        while let Some(&t_next) = pending.peek() {
            if (t_next - w[1]).abs() <= 1e-12 * t_next.max(1.0) {
                out.push(total);
                pending.next();
            } else {
                break;
            }
        }
    }
    debug_assert!(pending.peek().is_none());
    Ok(out)
}

fn check_ts(ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::input("at least one T value is required"));
    }
    for (i, &t) in ts.iter().enumerate() {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::input(format!("T must be nonnegative, got {t}")));
        }
        if i > 0 && t <= ts[i - 1] {
            return Err(Error::input(format!("T values must be strictly increasing ({} then {t})", ts[i - 1])));
        }
    }
    Ok(())
}

/// `int_0^T dsigma int_S |det H| dtheta` for every `T` in `ts`, one pass per direction.
///
/// Directions are integrated in parallel; the reduction over quadrature nodes is
/// a pairwise sum in node order, so the result does not depend on the thread count.
pub fn berger_bott_curve(
    spec: &ManifoldSpec,
    x: &DVector<f64>,
    ts: &[f64],
    quad: &SphereQuadrature,
    step: f64,
) -> Result<CountingCurve> {
    check_ts(ts)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::input(format!("step must be positive, got {step}")));
    }
    if quad.dim() != spec.dim() {
        return Err(Error::input(format!(
            "quadrature is on the unit sphere of R^{}, manifold dimension is {}",
            quad.dim(),
            spec.dim()
        )));
    }
    let basis = spec.tangent_basis(x.as_slice())?;
    let per_direction: Vec<Vec<f64>> = quad
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(index, u)| {
            let theta = basis.iter().zip(u.iter()).fold(DVector::zeros(x.len()), |acc, (b, ui)| acc + b * *ui);
            direction_integrals(spec, x.as_slice(), theta.as_slice(), ts, step)
                .map_err(|e| Error::Direction { index, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let points = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let terms: Vec<f64> = per_direction.iter().zip(quad.weights()).map(|(v, w)| w * v[k]).collect();
            (t, pairwise_sum(&terms))
        })
        .collect();
    CountingCurve::new(points, spec.tag(), CountingMethod::BergerBott)
}

pub fn berger_bott_total(
    spec: &ManifoldSpec,
    x: &DVector<f64>,
    t: f64,
    quad: &SphereQuadrature,
    step: f64,
) -> Result<f64> {
    Ok(berger_bott_curve(spec, x, &[t], quad, step)?.points()[0].1)
}
