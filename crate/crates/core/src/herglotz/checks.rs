use nalgebra::DMatrix;
use serde::Serialize;

use super::complex::C64;
use super::matrix::{f_real_axis_numeric, real_derivative, Branch, HerglotzMatrix, HerglotzSource, MAX_CONDITION, POLE_TOL, SINGULAR_MARGIN};
use crate::error::{Error, Result};
use crate::flow::{JacobiSource, JacobiSystem};
use crate::linalg::{condition_number, det, max_abs, min_sym_eigenvalue, norm2, symmetrize, symmetry_defect};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiceReport {
    pub max_symmetry_defect: f64,
    /// `max |f(0)|`.
    pub value_at_zero: f64,
    /// `max |f'(0) - Id|`.
    pub derivative_defect_at_zero: f64,
    /// Smallest eigenvalue of `Im f` over the samples.
    pub min_im_eigenvalue: f64,
}

/// Normalization, symmetry and positivity of `f` on the given samples.
pub fn check_theorem_nice(fh: &HerglotzMatrix, samples: &[C64]) -> Result<NiceReport> {
    if fh.branch() != Branch::Function {
        return Err(Error::input("the normalization check applies to f, not to -f^-1"));
    }
    if let Some(z) = samples.iter().find(|z| z.im < 0.0) {
        return Err(Error::input(format!("sample {z} lies in the lower half-plane")));
    }
    let m = fh.dim();
    let zero = C64::new(0.0, 0.0);
    let value_at_zero = crate::linalg::max_abs_complex(fh.evaluate(zero)?.matrix());
    let d0 = match fh.source() {
        HerglotzSource::ClosedForm { .. } | HerglotzSource::ImaginaryConstant { .. } => {
            let re = |s: f64| Ok(fh.evaluate(C64::new(s, 0.0))?.re());
            real_derivative(re, 0.0, f64::NEG_INFINITY, f64::INFINITY)?
        }
        HerglotzSource::RealAxisNumeric(_) => fh.derivative(zero)?.re(),
    };
    let derivative_defect_at_zero = max_abs(&(d0 - DMatrix::identity(m, m)));
    let mut max_symmetry_defect = 0.0_f64;
    let mut min_im_eigenvalue = f64::INFINITY;
    for &z in samples {
        let f = fh.evaluate(z)?;
        max_symmetry_defect = max_symmetry_defect.max(f.symmetry_defect());
        min_im_eigenvalue = min_im_eigenvalue.min(min_sym_eigenvalue(&f.im()));
    }
    Ok(NiceReport { max_symmetry_defect, value_at_zero, derivative_defect_at_zero, min_im_eigenvalue })
}

fn check_off_singular(js: &JacobiSystem, sigma: f64) -> Result<()> {
    let distance = js.singular_set().distance(sigma);
    if distance < 10.0 * SINGULAR_MARGIN {
        return Err(Error::Conditioning { sigma, distance });
    }
    Ok(())
}

/// Exact `f'` or `G'` for closed-form systems. Differencing would lose the
/// relative accuracy of `f'` once `|Xi|` grows exponentially.
fn closed_form_derivative(js: &JacobiSystem, branch: Branch, sigma: f64) -> Result<Option<DMatrix<f64>>> {
    let JacobiSource::ClosedForm { curvature } = *js.source() else { return Ok(None) };
    let fh = HerglotzMatrix::closed_form(curvature, js.dim())?;
    let fh = if branch == Branch::NegInverse { fh.neg_inverse() } else { fh };
    Ok(Some(symmetrize(&fh.derivative(C64::new(sigma, 0.0))?.re())))
}

fn f_prime(js: &JacobiSystem, sigma: f64) -> Result<DMatrix<f64>> {
    if let Some(d) = closed_form_derivative(js, Branch::Function, sigma)? {
        return Ok(d);
    }
    real_derivative(|s| Ok(symmetrize(&f_real_axis_numeric(js, s)?)), sigma, 0.0, js.final_time())
}

fn g_of(js: &JacobiSystem, sigma: f64) -> Result<DMatrix<f64>> {
    let f = symmetrize(&f_real_axis_numeric(js, sigma)?);
    if !(condition_number(&f) < MAX_CONDITION) {
        return Err(Error::Conditioning { sigma, distance: js.singular_set().distance_to_eta(sigma) });
    }
    let inv = f.try_inverse().ok_or(Error::Conditioning { sigma, distance: 0.0 })?;
    Ok(-symmetrize(&inv))
}

/// `|det(H^T H) det((-f^{-1})'(sigma)) - 1|`.
pub fn check_key1(js: &JacobiSystem, sigma: f64) -> Result<f64> {
    check_off_singular(js, sigma)?;
    let s = js.sample_at(sigma)?;
    let gram = det(&s.eta.tr_mul(&s.eta));
    let g_prime = match closed_form_derivative(js, Branch::NegInverse, sigma)? {
        Some(d) => d,
        None => real_derivative(|x| g_of(js, x), sigma, 0.0, js.final_time())?,
    };
    Ok((gram * det(&symmetrize(&g_prime)) - 1.0).abs())
}

/// `max |Xi^T Xi f'(sigma) - Id|`.
pub fn check_xi_identity(js: &JacobiSystem, sigma: f64) -> Result<f64> {
    check_off_singular(js, sigma)?;
    let s = js.sample_at(sigma)?;
    let m = s.xi.nrows();
    Ok(max_abs(&(s.xi.tr_mul(&s.xi) * f_prime(js, sigma)? - DMatrix::identity(m, m))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityChain {
    pub sigma: f64,
    pub key1: f64,
    pub xi_identity: f64,
    pub tolerance: f64,
    /// False when exactly one of the two equivalent identities passes, which points at a frame bug.
    pub consistent: bool,
}

impl IdentityChain {
    pub fn passes(&self) -> bool {
        self.key1 <= self.tolerance && self.xi_identity <= self.tolerance
    }
}

pub fn check_identity_chain(js: &JacobiSystem, sigma: f64, tolerance: f64) -> Result<IdentityChain> {
    let key1 = check_key1(js, sigma)?;
    let xi_identity = check_xi_identity(js, sigma)?;
    let consistent = (key1 <= tolerance) == (xi_identity <= tolerance);
    Ok(IdentityChain { sigma, key1, xi_identity, tolerance, consistent })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinkowskiMargin {
    /// `det(A1 + A2) - det A1 - det A2`.
    pub margin: f64,
    /// `(|A1| + |A2|)^k`, the size of the determinants involved.
    pub scale: f64,
}

impl MinkowskiMargin {
    pub fn holds(&self) -> bool {
        self.margin >= -1e-12 * self.scale
    }
}

pub fn minkowski_det_lower_bound(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<MinkowskiMargin> {
    if !a1.is_square() || a1.shape() != a2.shape() {
        return Err(Error::input("Minkowski bound needs two square matrices of equal size"));
    }
    for (name, m) in [("A1", a1), ("A2", a2)] {
        let defect = symmetry_defect(m);
        if defect > 1e-12 * max_abs(m).max(1.0) {
            return Err(Error::input(format!("{name} is not symmetric (defect {defect:e})")));
        }
        let low = min_sym_eigenvalue(m);
        if low < -1e-10 {
            return Err(Error::input(format!("{name} is not positive semidefinite (eigenvalue {low:e})")));
        }
    }
    let margin = det(&(a1 + a2)) - det(a1) - det(a2);
    let scale = (norm2(a1) + norm2(a2)).powi(a1.nrows() as i32);
    Ok(MinkowskiMargin { margin, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetGrowthBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    /// `lhs` and `rhs` agree to round-off.
    pub equality: bool,
}

/// `1 / det((-f^{-1})'(sigma))` against `sigma^{2n-2}` for constant curvature.
pub fn det_growth_bound(c: f64, n: usize, sigma: f64) -> Result<DetGrowthBound> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    let g = HerglotzMatrix::closed_form(c, n)?.neg_inverse();
    let poles = g.poles_in(sigma - 1.0, sigma + 1.0);
    if let Some(p) = poles.iter().find(|p| (*p - sigma).abs() < POLE_TOL) {
        return Err(Error::Pole { re: sigma, im: 0.0, distance: (p - sigma).abs() });
    }
    let d = g.derivative(C64::new(sigma, 0.0))?.re();
    let lhs = 1.0 / det(&d);
    let rhs = sigma.powi(2 * n as i32 - 2);
    let slack = 1e-10 * rhs.max(1.0);
    Ok(DetGrowthBound { lhs, rhs, ok: lhs <= rhs + slack, equality: (lhs - rhs).abs() <= 1e-12 * rhs.max(1.0) })
}

/// Smallest eigenvalue of `(-f^{-1})'(sigma) - Id / sigma^2`.
pub fn b_decomposition_min_eigenvalue(g: &HerglotzMatrix, sigma: f64) -> Result<f64> {
    if g.branch() != Branch::NegInverse {
        return Err(Error::input("the decomposition applies to -f^-1"));
    }
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::input("sigma must be finite and nonzero"));
    }
    let d = g.derivative(C64::new(sigma, 0.0))?.re();
    let m = d.nrows();
    Ok(min_sym_eigenvalue(&(d - DMatrix::identity(m, m) / (sigma * sigma))))
}

/// Matrix of the adapted complex structure in the basis `(xi_1.., eta_1..)`.
pub fn adapted_complex_structure_at(fh: &HerglotzMatrix) -> Result<DMatrix<f64>> {
    let f_at_i = match fh.branch() {
        Branch::Function => fh.evaluate(C64::i())?,
        Branch::NegInverse => fh.neg_inverse().evaluate(C64::i())?,
    };
    let s = symmetrize(&f_at_i.im());
    let r = symmetrize(&f_at_i.re());
    if !(condition_number(&s) < MAX_CONDITION) {
        return Err(Error::Degenerate("Im f(i) is not invertible".into()));
    }
    let e = s.clone().try_inverse().ok_or_else(|| Error::Degenerate("Im f(i) is not invertible".into()))?;
    let m = s.nrows();
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    j.view_mut((0, 0), (m, m)).copy_from(&(-(&r * &e)));
    j.view_mut((m, 0), (m, m)).copy_from(&e);
    j.view_mut((0, m), (m, m)).copy_from(&(-(&s) - &r * &e * &r));
    j.view_mut((m, m), (m, m)).copy_from(&(&e * &r));
    let square = &j * &j + DMatrix::identity(2 * m, 2 * m);
    let defect = max_abs(&square);
    if defect > 1e-8 * max_abs(&j).powi(2).max(1.0) {
        return Err(Error::Numerical(format!("J^2 differs from -Id by {defect:e}")));
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn nice_report_closed_forms() {
        let f1 = HerglotzMatrix::closed_form(1.0, 3).unwrap();
        let r = check_theorem_nice(&f1, &[C64::i(), C64::new(0.5, 0.2)]).unwrap();
        assert!(r.max_symmetry_defect <= 1e-10 && r.value_at_zero <= 1e-10 && r.derivative_defect_at_zero <= 1e-10);
        let r = check_theorem_nice(&f1, &[C64::i()]).unwrap();
        assert!((r.min_im_eigenvalue - 1f64.tanh()).abs() < 1e-15);
        let f0 = HerglotzMatrix::closed_form(0.0, 2).unwrap();
        let r = check_theorem_nice(&f0, &[C64::new(3.0, 0.7)]).unwrap();
        assert!((r.min_im_eigenvalue - 0.7).abs() < 1e-15);
        let r = check_theorem_nice(&f0, &[C64::new(3.0, 0.0), C64::new(-2.0, 0.0)]).unwrap();
        assert_eq!(r.min_im_eigenvalue, 0.0);
        assert!(check_theorem_nice(&f0, &[C64::new(0.0, -1.0)]).is_err());
    }

    #[test]
    fn identities_on_closed_forms() {
        let sphere = JacobiSystem::closed_form(1.0, 3, 6.0, 1e-3).unwrap();
        assert!(check_key1(&sphere, PI / 4.0).unwrap() <= 1e-8);
        assert!(check_xi_identity(&sphere, 0.3).unwrap() <= 1e-8);
        let flat = JacobiSystem::closed_form(0.0, 3, 6.0, 1e-3).unwrap();
        assert!(check_key1(&flat, 2.0).unwrap() <= 1e-10);
        assert!(check_xi_identity(&flat, 4.0).unwrap() <= 1e-9);
        assert!(matches!(check_key1(&sphere, PI), Err(Error::Conditioning { .. })));
        assert!(matches!(check_xi_identity(&sphere, PI / 2.0), Err(Error::Conditioning { .. })));
    }

    #[test]
    fn minkowski_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!(minkowski_det_lower_bound(&id, &id).unwrap().margin, 2.0);
        assert_eq!(minkowski_det_lower_bound(&id, &DMatrix::zeros(2, 2)).unwrap().margin, 0.0);
        let bad = DMatrix::from_diagonal_element(2, 2, -1.0);
        assert!(matches!(minkowski_det_lower_bound(&id, &bad), Err(Error::Input(_))));
    }

    #[test]
    fn growth_bound_examples() {
        let r = det_growth_bound(1.0, 2, 2.0).unwrap();
        assert!((r.lhs - 2f64.sin().powi(2)).abs() < 1e-14 && r.rhs == 4.0 && r.ok && !r.equality);
        let r = det_growth_bound(0.0, 3, 5.0).unwrap();
        assert!((r.lhs - 625.0).abs() < 1e-10 && r.ok && r.equality);
        let r = det_growth_bound(1.0, 3, 1e-4).unwrap();
        assert!(r.ok && r.lhs < 1e-15);
        assert!(matches!(det_growth_bound(1.0, 2, PI), Err(Error::Pole { .. })));
    }

    #[test]
    fn b_decomposition_is_psd() {
        let g = HerglotzMatrix::closed_form(1.0, 3).unwrap().neg_inverse();
        for s in [0.3, 1.0, 2.0, 4.0, -1.3] {
            assert!(b_decomposition_min_eigenvalue(&g, s).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn complex_structure_examples() {
        let j0 = adapted_complex_structure_at(&HerglotzMatrix::closed_form(0.0, 3).unwrap()).unwrap();
        let expected = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, -1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        ]);
        assert!((j0 - expected).amax() < 1e-15);
        let j1 = adapted_complex_structure_at(&HerglotzMatrix::closed_form(1.0, 2).unwrap()).unwrap();
        assert!((j1[(1, 0)] - 1.0 / 1f64.tanh()).abs() < 1e-14);
        assert!((j1[(0, 1)] + 1f64.tanh()).abs() < 1e-14);
    }

    #[test]
    fn complex_structure_squares_to_minus_one_with_real_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = 3;
            let x = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            let p = &x * x.transpose() + DMatrix::identity(m, m) * 0.1;
            let fh = HerglotzMatrix::imaginary_constant(p).unwrap();
            let j = adapted_complex_structure_at(&fh).unwrap();
            assert!((&j * &j + DMatrix::identity(2 * m, 2 * m)).amax() < 1e-8);
        }
        let singular = HerglotzMatrix::imaginary_constant(DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(adapted_complex_structure_at(&singular), Err(Error::Degenerate(_))));
    }
}
