use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use serde::Serialize;

use super::complex::C64;
use super::matrix::{ComplexSymMatrix, HerglotzMatrix};
use crate::error::{Error, Result};
use crate::linalg::{golden_section_min, max_abs, min_sym_eigenvalue, norm2};
use crate::output::serialize_matrix;

/// Large-`tau` samples for `A = lim Im F(i tau) / tau`.
const A_TAUS: [f64; 3] = [1e2, 1e3, 1e4];
const PSD_TOL: f64 = 1e-10;
const RELATIVE_CONVERGENCE: f64 = 0.05;
/// Absolute slack in the convergence tests, for quantities that are zero in the limit.
const ABSOLUTE_CONVERGENCE: f64 = 1e-6;
/// Atoms must lie this close to a known pole of the source.
const ATOM_POLE_TOL: f64 = 1e-3;
const MAX_HALF_WINDOW: f64 = 0.25;
const POLE_MARGIN: f64 = 0.05;

pub const DEFAULT_TAU_SCHEDULE: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const DEFAULT_ATOM_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub t: f64,
    #[serde(rename = "mass_matrix", serialize_with = "serialize_matrix")]
    pub mass: DMatrix<f64>,
}

/// `A` and the atoms of the measure in `F'(z) = A + (1/pi) int dmu(t) / (z - t)^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatouData {
    #[serde(rename = "A", serialize_with = "serialize_matrix")]
    pub a: DMatrix<f64>,
    pub atoms: Vec<Atom>,
    pub interval: (f64, f64),
    pub tau_schedule: Vec<f64>,
    /// Set when `Im F` does not decay off the atoms as `tau -> 0`.
    pub continuous_part_flagged: bool,
}

fn trace_im(fh: &HerglotzMatrix, s: f64, tau: f64) -> Result<f64> {
    Ok(fh.evaluate(C64::new(s, tau))?.im().trace())
}

fn estimate_a(fh: &HerglotzMatrix) -> Result<DMatrix<f64>> {
    let vals: Vec<DMatrix<f64>> =
        A_TAUS.iter().map(|&t| Ok(fh.evaluate(C64::new(0.0, t))?.im() / t)).collect::<Result<_>>()?;
    let x: Vec<f64> = A_TAUS.iter().map(|t| 1.0 / t).collect();
    // Quadratic extrapolation in 1/tau to 1/tau = 0, checked against the linear one.
    let mut quad = DMatrix::zeros(vals[0].nrows(), vals[0].ncols());
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if j != i {
                w *= x[j] / (x[j] - x[i]);
            }
        }
        quad += &vals[i] * w;
    }
    let lin = (&vals[2] * x[1] - &vals[1] * x[2]) / (x[1] - x[2]);
    let diff = max_abs(&(&quad - &lin));
    if diff > RELATIVE_CONVERGENCE * max_abs(&quad) + ABSOLUTE_CONVERGENCE {
        return Err(Error::Convergence(format!("large-tau estimates of A differ by {diff:e}")));
    }
    Ok(crate::linalg::symmetrize(&quad))
}

/// `int_{t-delta}^{t+delta} Im F(s + i tau) ds` with `s = t + tau tan(phi)`.
fn window_mass(fh: &HerglotzMatrix, t: f64, delta: f64, tau: f64, rule: &[(f64, f64)]) -> Result<DMatrix<f64>> {
    const PANELS: usize = 16;
    let m = fh.dim();
    let top = (delta / tau).atan();
    let width = 2.0 * top / PANELS as f64;
    let mut acc = DMatrix::zeros(m, m);
    for p in 0..PANELS {
        let mid = -top + (p as f64 + 0.5) * width;
        for &(x, w) in rule {
            let phi = mid + 0.5 * width * x;
            let sec2 = 1.0 + phi.tan().powi(2);
            let im = fh.evaluate(C64::new(t + tau * phi.tan(), tau))?.im();
            acc += im * (0.5 * width * w * tau * sec2);
        }
    }
    Ok(crate::linalg::symmetrize(&acc))
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 2 {
        return Err(Error::input("the tau schedule needs at least two values"));
    }
    if schedule.iter().any(|t| !(t.is_finite() && *t > 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::input("the tau schedule must be positive and strictly decreasing"));
    }
    if *schedule.last().expect("nonempty") > 1e-3 {
        return Err(Error::input("the tau schedule must reach 1e-3 or below"));
    }
    Ok(())
}

/// Recover `A` and the atoms of the boundary measure of `fh` on `(a, b)`.
pub fn stieltjes_invert(
    fh: &HerglotzMatrix,
    interval: (f64, f64),
    tau_schedule: &[f64],
    atom_threshold: f64,
) -> Result<FatouData> {
    let (a, b) = interval;
    if !fh.has_complex_extension() {
        return Err(Error::Unsupported("Stieltjes inversion needs values off the real axis".into()));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::input(format!("bad interval ({a}, {b})")));
    }
    if !(atom_threshold.is_finite() && atom_threshold > 0.0) {
        return Err(Error::input("atom threshold must be positive"));
    }
    check_schedule(tau_schedule)?;
    let poles = fh.poles_in(a - 1.0, b + 1.0);
    for end in [a, b] {
        if let Some(p) = poles.iter().find(|p| (*p - end).abs() < POLE_MARGIN) {
            return Err(Error::input(format!("interval endpoint {end} lies within {POLE_MARGIN} of the pole {p}")));
        }
    }
    let a_matrix = estimate_a(fh)?;

    // Coarse scan for peaks of the trace.
    let tau0 = tau_schedule[0];
    let spacing = tau0 / 8.0;
    let count = ((b - a) / spacing).ceil() as usize;
    let xs: Vec<f64> = (0..=count).map(|i| a + (b - a) * i as f64 / count as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&s| trace_im(fh, s, tau0)).collect::<Result<_>>()?;
    let mut centers = Vec::new();
    for i in 1..xs.len() - 1 {
        if ys[i] > ys[i - 1] && ys[i] > ys[i + 1] && ys[i] > atom_threshold / tau0 {
            centers.push(xs[i]);
        }
    }

    // Refine each peak through the schedule.
    for t in centers.iter_mut() {
        let mut radius = 2.0 * spacing;
        for &tau in tau_schedule {
            let lo = (*t - radius).max(a);
            let hi = (*t + radius).min(b);
            *t = golden_section_min(|s| Ok::<_, Error>(-trace_im(fh, s, tau)?), lo, hi, 1e-12 * t.abs().max(1.0))?;
            radius = 2.0 * tau;
        }
    }

    let rule: Vec<(f64, f64)> = GaussLegendre::new(8.try_into().expect("nonzero"))
        .as_node_weight_pairs()
        .to_vec();
    let mut atoms = Vec::with_capacity(centers.len());
    for (j, &t) in centers.iter().enumerate() {
        let left = if j > 0 { 0.5 * (t - centers[j - 1]) } else { t - a };
        let right = if j + 1 < centers.len() { 0.5 * (centers[j + 1] - t) } else { b - t };
        let delta = left.min(right).min(MAX_HALF_WINDOW);
        let raw: Vec<DMatrix<f64>> =
            tau_schedule.iter().map(|&tau| window_mass(fh, t, delta, tau, &rule)).collect::<Result<_>>()?;
        // Richardson in tau over consecutive pairs: the smoothing error is O(tau).
        let est: Vec<DMatrix<f64>> = raw
            .windows(2)
            .zip(tau_schedule.windows(2))
            .map(|(m, tau)| (&m[1] * tau[0] - &m[0] * tau[1]) / (tau[0] - tau[1]))
            .collect();
        let pair = if est.len() >= 2 { (&est[est.len() - 2], &est[est.len() - 1]) } else { (&raw[0], &raw[1]) };
        let diff = max_abs(&(pair.1 - pair.0));
        if diff > RELATIVE_CONVERGENCE * max_abs(pair.1) + ABSOLUTE_CONVERGENCE {
            return Err(Error::Convergence(format!("atom mass at t = {t} changes by {diff:e} between tau levels")));
        }
        let mass = est.last().expect("at least one estimate").clone();
        atoms.push(Atom { t, mass });
    }

    if min_sym_eigenvalue(&a_matrix) < -PSD_TOL {
        return Err(Error::Numerical(format!("A is not positive semidefinite: {a_matrix}")));
    }
    for atom in &atoms {
        if min_sym_eigenvalue(&atom.mass) < -PSD_TOL {
            return Err(Error::Numerical(format!("mass at t = {} is not positive semidefinite", atom.t)));
        }
        let distance = poles.iter().map(|p| (p - atom.t).abs()).fold(f64::INFINITY, f64::min);
        if distance > ATOM_POLE_TOL {
            return Err(Error::Numerical(format!(
                "atom at t = {} lies {distance:.3e} from every pole of the source",
                atom.t
            )));
        }
    }

    // Off the atoms, Im F must vanish with tau unless there is a continuous part.
    let tau_last = *tau_schedule.last().expect("nonempty");
    let mut continuous_part_flagged = false;
    for &s in xs.iter().step_by((xs.len() / 64).max(1)) {
        if centers.iter().chain(&poles).any(|t| (t - s).abs() < POLE_MARGIN) {
            continue;
        }
        let first = trace_im(fh, s, tau0)?;
        let last = trace_im(fh, s, tau_last)?;
        if first > 1e-12 && last > 0.5 * first {
            continuous_part_flagged = true;
            break;
        }
    }

    Ok(FatouData {
        a: a_matrix,
        atoms,
        interval,
        tau_schedule: tau_schedule.to_vec(),
        continuous_part_flagged,
    })
}

/// `A + (1/pi) sum_j mu_j / (z - t_j)^2`.
pub fn fatou_reconstruct(fd: &FatouData, z: C64) -> Result<ComplexSymMatrix> {
    if !(z.im > 0.0) {
        return Err(Error::input(format!("reconstruction needs Im z > 0, got {z}")));
    }
    let mut out = fd.a.map(|x| C64::new(x, 0.0));
    for atom in &fd.atoms {
        let w = 1.0 / (std::f64::consts::PI * (z - atom.t) * (z - atom.t));
        out += atom.mass.map(|x| C64::new(x, 0.0) * w);
    }
    ComplexSymMatrix::new(out)
}

/// Scale of a measure for reporting relative errors.
pub fn mass_scale(fd: &FatouData) -> f64 {
    fd.atoms.iter().map(|a| norm2(&a.mass)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_atoms_at_multiples_of_pi() {
        let g = HerglotzMatrix::closed_form(1.0, 3).unwrap().neg_inverse();
        let fd = stieltjes_invert(&g, (-1.0, 7.0), &DEFAULT_TAU_SCHEDULE, DEFAULT_ATOM_THRESHOLD).unwrap();
        assert_eq!(fd.atoms.len(), 3);
        for (atom, t) in fd.atoms.iter().zip([0.0, PI, 2.0 * PI]) {
            assert!((atom.t - t).abs() < 1e-4);
            assert!((&atom.mass - DMatrix::identity(2, 2) * PI).amax() < 0.02 * PI, "{}", atom.mass);
        }
        assert!(max_abs(&fd.a) < 1e-3);
        assert!(!fd.continuous_part_flagged);
    }

    #[test]
    fn flat_single_atom() {
        let g = HerglotzMatrix::closed_form(0.0, 2).unwrap().neg_inverse();
        let fd = stieltjes_invert(&g, (-1.0, 1.0), &DEFAULT_TAU_SCHEDULE, DEFAULT_ATOM_THRESHOLD).unwrap();
        assert_eq!(fd.atoms.len(), 1);
        assert!(fd.atoms[0].t.abs() < 1e-4);
        assert!((fd.atoms[0].mass[(0, 0)] - PI).abs() < 0.02 * PI);
        assert!(max_abs(&fd.a) < 1e-3);
        let r = fatou_reconstruct(&fd, C64::i()).unwrap();
        assert!((r.matrix()[(0, 0)] + 1.0).norm() < 0.02);
    }

    #[test]
    fn constant_function_has_no_atoms() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let fh = HerglotzMatrix::imaginary_constant(p.clone()).unwrap();
        let fd = stieltjes_invert(&fh, (-1.0, 1.0), &DEFAULT_TAU_SCHEDULE, DEFAULT_ATOM_THRESHOLD).unwrap();
        assert!(fd.atoms.is_empty());
        assert!(max_abs(&fd.a) < 1e-9);
        assert!(fd.continuous_part_flagged);
        let empty = FatouData { a: p.clone(), atoms: vec![], interval: (0.0, 1.0), tau_schedule: vec![], continuous_part_flagged: false };
        let r = fatou_reconstruct(&empty, C64::new(0.3, 2.0)).unwrap();
        assert!((r.re() - p).amax() == 0.0);
    }

    #[test]
    fn validation() {
        let g = HerglotzMatrix::closed_form(1.0, 2).unwrap().neg_inverse();
        let sched = DEFAULT_TAU_SCHEDULE;
        assert!(stieltjes_invert(&g, (0.0, 1.0), &sched, 0.1).is_err());
        assert!(stieltjes_invert(&g, (1.0, 0.5), &sched, 0.1).is_err());
        assert!(stieltjes_invert(&g, (0.5, 2.0), &[1e-1, 1e-2], 0.1).is_err());
        assert!(stieltjes_invert(&g, (0.5, 2.0), &[1e-2, 1e-1, 1e-4], 0.1).is_err());
        let js = crate::flow::JacobiSystem::closed_form(1.0, 2, 1.0, 0.1).unwrap();
        let numeric = HerglotzMatrix::real_axis(js);
        assert!(matches!(stieltjes_invert(&numeric, (0.5, 0.9), &sched, 0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn json_layout() {
        let g = HerglotzMatrix::closed_form(0.0, 2).unwrap().neg_inverse();
        let fd = stieltjes_invert(&g, (-1.0, 1.0), &DEFAULT_TAU_SCHEDULE, DEFAULT_ATOM_THRESHOLD).unwrap();
        let v = serde_json::to_value(&fd).unwrap();
        assert!(v["A"].is_array());
        assert!(v["atoms"][0]["mass_matrix"][0][0].as_f64().unwrap() > 3.0);
        assert_eq!(v["tau_schedule"].as_array().unwrap().len(), 3);
    }
}
