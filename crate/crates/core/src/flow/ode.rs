//! Classical fixed-step fourth-order Runge-Kutta with compensated (Kahan)
//! accumulation of the increments.

use crate::error::Result;

pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// Advance the autonomous system `y' = f(y)` by `h`; `comp` carries the
    /// low-order bits lost when adding each increment to `y`.
    pub(crate) fn step<F>(&mut self, f: &mut F, y: &mut [f64], comp: &mut [f64], h: f64) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        f(y, &mut self.k1)?;
        for i in 0..n {
            self.stage[i] = y[i] + 0.5 * h * self.k1[i];
        }
        f(&self.stage, &mut self.k2)?;
        for i in 0..n {
            self.stage[i] = y[i] + 0.5 * h * self.k2[i];
        }
        f(&self.stage, &mut self.k3)?;
        for i in 0..n {
            self.stage[i] = y[i] + h * self.k3[i];
        }
        f(&self.stage, &mut self.k4)?;
        for i in 0..n {
            let inc = h / 6.0 * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) + comp[i];
            let t = y[i] + inc;
            comp[i] = inc - (t - y[i]);
            y[i] = t;
        }
        Ok(())
    }
}

/// Sample grid `0 = s_0 < ... < s_m = t_end` with spacing `step`, refined so that
/// every mark in `[0, t_end]` is a grid point.
pub(crate) fn build_grid(t_end: f64, step: f64, marks: &[f64]) -> Vec<f64> {
    let count = (t_end / step - 1e-9).ceil().max(0.0) as usize;
    let mut grid: Vec<f64> = (0..count).map(|i| i as f64 * step).collect();
    grid.push(t_end);
    grid.extend(marks.iter().copied().filter(|&s| s > 0.0 && s < t_end));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1.0));
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        // y'' = -y from (1, 0): exact solution cos. Halving h cuts the error ~16x.
        let err = |h: f64| {
            let mut rk = Rk4::new(2);
            let mut y = vec![1.0, 0.0];
            let mut c = vec![0.0; 2];
            let steps = (2.0 / h).round() as usize;
            let mut f = |s: &[f64], out: &mut [f64]| {
                out[0] = s[1];
                out[1] = -s[0];
                Ok(())
            };
            for _ in 0..steps {
                rk.step(&mut f, &mut y, &mut c, h).unwrap();
            }
            (y[0] - 2.0_f64.cos()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn grid_contains_marks_and_endpoint() {
        let g = build_grid(1.0, 0.3, &[0.45, 0.6]);
        assert_eq!(g.first(), Some(&0.0));
        assert_eq!(g.last(), Some(&1.0));
        assert!(g.contains(&0.45));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(build_grid(1.0, 0.25, &[]).len(), 5);
    }
}
