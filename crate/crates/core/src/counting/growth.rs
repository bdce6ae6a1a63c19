use serde::Serialize;

use super::CountingCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum GrowthClass {
    Polynomial { degree: u32 },
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    #[serde(flatten)]
    pub class: GrowthClass,
    /// Held-out RMS residual of the selected model.
    pub fit_residual: f64,
    pub window: (f64, f64),
    pub polynomial_residual: f64,
    pub exponential_residual: f64,
    pub loglog_slope: f64,
}

/// Least-squares line `y = a + b x`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

fn held_out_rms(x: &[f64], y: &[f64], fit: usize) -> f64 {
    let (a, b) = fit_line(&x[..fit], &y[..fit]);
    let tail = &x[fit..];
    let ss: f64 = tail.iter().zip(&y[fit..]).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    (ss / tail.len() as f64).sqrt()
}

/// Polynomial versus exponential growth of a counting curve.
///
/// The upper half of the positive samples forms the window. Both `log v ~ log T`
/// and `log v ~ T` are fitted on the first two thirds of the window and scored
/// by RMS residual on the remaining third; ties go to the polynomial model.
pub fn classify_growth(curve: &CountingCurve) -> Result<GrowthReport> {
    let pts: Vec<(f64, f64)> = curve.points().iter().copied().filter(|&(t, _)| t > 0.0).collect();
    if pts.len() < 8 {
        return Err(Error::input(format!("growth fit needs at least 8 samples with T > 0, got {}", pts.len())));
    }
    let (t_min, t_max) = (pts[0].0, pts[pts.len() - 1].0);
    if t_max < 10.0 * t_min {
        return Err(Error::input(format!("samples must span a decade in T, got [{t_min}, {t_max}]")));
    }
    let window = &pts[pts.len() / 2..];
    if let Some(&(t, _)) = window.iter().find(|p| p.1 <= 0.0) {
        return Err(Error::input(format!("counting curve vanishes at T = {t} inside the fit window")));
    }
    let ts: Vec<f64> = window.iter().map(|p| p.0).collect();
    let log_t: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let log_v: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    let fit = (2 * window.len() / 3).max(2).min(window.len() - 1);
    let polynomial_residual = held_out_rms(&log_t, &log_v, fit);
    let exponential_residual = held_out_rms(&ts, &log_v, fit);
    let loglog_slope = fit_line(&log_t, &log_v).1;
    // Residuals that agree to round-off count as a tie.
    let tie = 1e-9 * polynomial_residual + 1e-12;
    let (class, fit_residual) = if exponential_residual < polynomial_residual - tie {
        (GrowthClass::Exponential { rate: fit_line(&ts, &log_v).1 }, exponential_residual)
    } else {
        (GrowthClass::Polynomial { degree: loglog_slope.round().max(0.0) as u32 }, polynomial_residual)
    };
    if let GrowthClass::Exponential { rate } = class {
        if !(rate > 0.0) {
            return Err(Error::Numerical(format!("exponential fit has nonpositive rate {rate}")));
        }
    }
    Ok(GrowthReport {
        class,
        fit_residual,
        window: (ts[0], ts[ts.len() - 1]),
        polynomial_residual,
        exponential_residual,
        loglog_slope,
    })
}
