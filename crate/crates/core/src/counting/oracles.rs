use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CountingCurve, CountingMethod};
use crate::error::{Error, Result};
use crate::linalg::det;

/// Number of great-circle arcs of length `<= t` between two points at distance `d` on the unit sphere.
pub fn count_sphere_arcs(d: f64, t: f64) -> Result<u64> {
    if !(d > 0.0 && d < PI) {
        return Err(Error::input(format!("distance must lie in (0, pi), got {d}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::input(format!("T must be nonnegative, got {t}")));
    }
    // Largest k with 2 k pi + offset <= t, starting from a floating estimate.
    let count_from = |offset: f64, first: i64| -> u64 {
        let mut k = ((t - offset) / (2.0 * PI)).floor() as i64 + 1;
        while k >= first && 2.0 * k as f64 * PI + offset > t {
            k -= 1;
        }
        while 2.0 * (k + 1) as f64 * PI + offset <= t {
            k += 1;
        }
        (k - first + 1).max(0) as u64
    };
    Ok(count_from(d, 0) + count_from(-d, 1))
}

fn inverse(basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !basis.is_square() || basis.nrows() == 0 {
        return Err(Error::input("lattice basis must be a nonempty square matrix"));
    }
    let scale = crate::linalg::max_abs(basis).powi(basis.nrows() as i32);
    if det(basis).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::input("lattice basis is not invertible"));
    }
    basis.clone().try_inverse().ok_or_else(|| Error::input("lattice basis is not invertible"))
}

/// Lengths `|y - x + v|` of all lattice translates `v` with length `<= t_max`.
fn lattice_distances(basis: &DMatrix<f64>, inv: &DMatrix<f64>, delta: &DVector<f64>, t_max: f64) -> Vec<f64> {
    let n = basis.nrows();
    // |B k + delta| <= T  implies  k_i in -(B^-1 delta)_i +- |row_i(B^-1)| T.
    let center = -(inv * delta);
    let lo: Vec<i64> = (0..n).map(|i| (center[i] - inv.row(i).norm() * t_max).floor() as i64).collect();
    let hi: Vec<i64> = (0..n).map(|i| (center[i] + inv.row(i).norm() * t_max).ceil() as i64).collect();
    let mut k = lo.clone();
    let mut out = Vec::new();
    loop {
        let mut z = delta.clone();
        for (j, &kj) in k.iter().enumerate() {
            z.axpy(kj as f64, &basis.column(j), 1.0);
        }
        let r = z.norm();
        if r <= t_max {
            out.push(r);
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            k[i] += 1;
            if k[i] <= hi[i] {
                break;
            }
            k[i] = lo[i];
            i += 1;
        }
    }
}

/// `#{v in L : |y - x + v| <= t}` for the lattice spanned by the columns of `basis`.
pub fn count_torus_lattice(basis: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>, t: f64) -> Result<u64> {
    let inv = inverse(basis)?;
    if x.len() != basis.nrows() || y.len() != basis.nrows() {
        return Err(Error::input("points must have the lattice dimension"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::input(format!("T must be nonnegative, got {t}")));
    }
    Ok(lattice_distances(basis, &inv, &(y - x), t).len() as u64)
}

/// Monte Carlo estimate of `int_M n_T(0, y) dy` at every `T` in `ts`.
pub fn torus_count_integral_oracle_curve(
    basis: &DMatrix<f64>,
    ts: &[f64],
    samples: usize,
    seed: u64,
) -> Result<CountingCurve> {
    let inv = inverse(basis)?;
    if samples == 0 {
        return Err(Error::input("at least one sample is required"));
    }
    if ts.is_empty() || ts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("T values must be nonnegative and strictly increasing"));
    }
    let n = basis.nrows();
    let t_max = *ts.last().expect("nonempty");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<DVector<f64>> = (0..samples)
        .map(|_| basis * DVector::from_fn(n, |_, _| rng.random::<f64>()))
        .collect();
    // Integer counts make the reduction exact and order independent.
    let counts: Vec<Vec<u64>> = points
        .par_iter()
        .map(|y| {
            let dist = lattice_distances(basis, &inv, y, t_max);
            ts.iter().map(|&t| dist.iter().filter(|&&r| r <= t).count() as u64).collect()
        })
        .collect();
    let volume = det(basis).abs();
    let curve = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let total: u64 = counts.iter().map(|c| c[k]).sum();
            let value = if t == 0.0 { 0.0 } else { volume * total as f64 / samples as f64 };
            (t, value)
        })
        .collect();
    CountingCurve::new(curve, format!("flat_torus(n={n},covolume={volume})"), CountingMethod::Oracle)
}

pub fn torus_count_integral_oracle(basis: &DMatrix<f64>, t: f64, samples: usize, seed: u64) -> Result<f64> {
    Ok(torus_count_integral_oracle_curve(basis, &[t], samples, seed)?.points()[0].1)
}
