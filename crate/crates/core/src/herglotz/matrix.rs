use std::sync::Arc;

use nalgebra::DMatrix;

use super::complex::{cot, coth, tan, tanh, C64};
use crate::error::{Error, Result};
use crate::flow::JacobiSystem;
use crate::linalg::{complex_condition_number, condition_number, max_abs, max_abs_complex, min_sym_eigenvalue};

/// Distance below which an evaluation point counts as a pole.
pub const POLE_TOL: f64 = 1e-8;
/// Largest condition number accepted when inverting.
pub const MAX_CONDITION: f64 = 1e12;
/// Minimum distance from the singular set for real-axis evaluation.
pub const SINGULAR_MARGIN: f64 = 1e-9;
/// Relative step of the finite-difference derivative.
pub const FD_STEP: f64 = 1e-5;

/// Complex symmetric (not Hermitian) square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSymMatrix(DMatrix<C64>);

impl ComplexSymMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-10;

    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::input("matrix must be square"));
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numerical("matrix has non-finite entries".into()));
        }
        let out = Self(m);
        let defect = out.symmetry_defect();
        if defect > Self::SYMMETRY_TOL * max_abs_complex(&out.0).max(1.0) {
            return Err(Error::Numerical(format!("matrix is not symmetric (defect {defect:e})")));
        }
        Ok(out)
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    /// `z * Id` of size `m`.
    pub fn scalar(z: C64, m: usize) -> Self {
        Self(DMatrix::from_diagonal_element(m, m, z))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn re(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }

    pub fn im(&self) -> DMatrix<f64> {
        self.0.map(|z| z.im)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).norm());
            }
        }
        worst
    }
}

/// `-F^{-1}`, with the post-check that `Im` stays positive definite when it was.
pub fn neg_inverse(f: &ComplexSymMatrix) -> Result<ComplexSymMatrix> {
    let cond = complex_condition_number(f.matrix());
    if !(cond < MAX_CONDITION) {
        return Err(Error::Singular(format!("cannot invert, condition number {cond:e}")));
    }
    let inv = f.matrix().clone().try_inverse().ok_or_else(|| Error::Singular("LU inversion failed".into()))?;
    let g = -(&inv + inv.transpose()) * C64::new(0.5, 0.0);
    let g = ComplexSymMatrix::new(g)?;
    if min_sym_eigenvalue(&f.im()) > 0.0 && !(min_sym_eigenvalue(&g.im()) > 0.0) {
        return Err(Error::Numerical("Im(-F^-1) lost positivity although Im F is positive definite".into()));
    }
    Ok(g)
}

fn pole_distance(z: C64, poles: impl IntoIterator<Item = f64>) -> f64 {
    poles.into_iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
}

/// Real poles of the closed-form `f` (`branch = Function`) or `-f^{-1}` near `x`.
fn closed_form_poles(c: f64, branch: Branch, lo: f64, hi: f64) -> Vec<f64> {
    let shift = match branch {
        Branch::Function => 0.5,
        Branch::NegInverse => 0.0,
    };
    if c > 0.0 {
        let period = std::f64::consts::PI / c.sqrt();
        let first = (lo / period - shift).ceil() as i64;
        let last = (hi / period - shift).floor() as i64;
        (first..=last).map(|j| (j as f64 + shift) * period).collect()
    } else if branch == Branch::NegInverse && lo <= 0.0 && 0.0 <= hi {
        vec![0.0]
    } else {
        Vec::new()
    }
}

fn check_pole(z: C64, poles: &[f64]) -> Result<()> {
    let distance = pole_distance(z, poles.iter().copied());
    if distance < POLE_TOL {
        return Err(Error::Pole { re: z.re, im: z.im, distance });
    }
    Ok(())
}

/// `f(zeta)` for constant curvature `c` in dimension `n`.
pub fn f_constant_curvature(c: f64, n: usize, z: C64) -> Result<ComplexSymMatrix> {
    closed_form_value(c, n, Branch::Function, z)
}

fn closed_form_value(c: f64, n: usize, branch: Branch, z: C64) -> Result<ComplexSymMatrix> {
    if n < 2 {
        return Err(Error::input(format!("dimension must be at least 2, got {n}")));
    }
    check_pole(z, &closed_form_poles(c, branch, z.re - 1.0, z.re + 1.0))?;
    let k = c.abs().sqrt();
    let value = match (branch, c.partial_cmp(&0.0)) {
        (Branch::Function, Some(std::cmp::Ordering::Greater)) => tan(z * k) / k,
        (Branch::Function, Some(std::cmp::Ordering::Less)) => tanh(z * k) / k,
        (Branch::Function, _) => z,
        (Branch::NegInverse, Some(std::cmp::Ordering::Greater)) => -cot(z * k) * k,
        (Branch::NegInverse, Some(std::cmp::Ordering::Less)) => -coth(z * k) * k,
        (Branch::NegInverse, _) => -1.0 / z,
    };
    Ok(ComplexSymMatrix::scalar(value, n - 1))
}

fn closed_form_derivative(c: f64, n: usize, branch: Branch, z: C64) -> Result<ComplexSymMatrix> {
    let v = closed_form_value(c, n, branch, z)?.matrix()[(0, 0)];
    let one = C64::new(1.0, 0.0);
    if c < 0.0 {
        // 1 - tanh^2 and coth^2 - 1 cancel once |Re z| is large; use sech^2 and k^2 / sinh^2.
        let k = (-c).sqrt();
        let w = z * k;
        let d = if w.re.abs() > 350.0 {
            C64::new(0.0, 0.0)
        } else {
            match branch {
                Branch::Function => one / (w.cosh() * w.cosh()),
                Branch::NegInverse => C64::new(-c, 0.0) / (w.sinh() * w.sinh()),
            }
        };
        return Ok(ComplexSymMatrix::scalar(d, n - 1));
    }
    let d = match branch {
        // tan' = 1 + tan^2, written in f = tan(k z)/k.
        Branch::Function => one + v * v * c,
        // G = -k cot(k z): G' = k^2 + G^2; likewise for -1/z.
        Branch::NegInverse => v * v + c,
    };
    Ok(ComplexSymMatrix::scalar(d, n - 1))
}

/// `Xi(sigma)^{-1} H(sigma)` from a propagated or sampled Jacobi system.
pub fn f_real_axis_numeric(js: &JacobiSystem, sigma: f64) -> Result<DMatrix<f64>> {
    let distance = js.singular_set().distance_to_xi(sigma);
    if distance < SINGULAR_MARGIN {
        return Err(Error::Conditioning { sigma, distance });
    }
    let s = js.sample_at(sigma)?;
    if !(condition_number(&s.xi) < MAX_CONDITION) {
        return Err(Error::Conditioning { sigma, distance });
    }
    let f = s.xi.clone().lu().solve(&s.eta).ok_or(Error::Conditioning { sigma, distance })?;
    let defect = crate::linalg::symmetry_defect(&f);
    if defect > 1e-8 * max_abs(&f).max(1.0) {
        return Err(Error::Numerical(format!("Xi^-1 H is not symmetric at sigma = {sigma} (defect {defect:e})")));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `f` itself.
    Function,
    /// `G = -f^{-1}`.
    NegInverse,
}

#[derive(Debug, Clone)]
pub enum HerglotzSource {
    ClosedForm { curvature: f64, dim: usize },
    /// `F(zeta) = i P` for a constant positive semidefinite `P`.
    ImaginaryConstant { p: DMatrix<f64> },
    /// Real-axis values from a Jacobi system; no complex extension.
    RealAxisNumeric(Arc<JacobiSystem>),
}

/// Matrix function `f` or `G = -f^{-1}` on the closed upper half-plane minus real poles.
#[derive(Debug, Clone)]
pub struct HerglotzMatrix {
    source: HerglotzSource,
    branch: Branch,
}

impl HerglotzMatrix {
    pub fn closed_form(c: f64, n: usize) -> Result<Self> {
        if n < 2 || !c.is_finite() {
            return Err(Error::input(format!("closed form needs finite c and n >= 2, got c = {c}, n = {n}")));
        }
        Ok(Self { source: HerglotzSource::ClosedForm { curvature: c, dim: n }, branch: Branch::Function })
    }

    pub fn imaginary_constant(p: DMatrix<f64>) -> Result<Self> {
        if !p.is_square() || p.nrows() == 0 || crate::linalg::symmetry_defect(&p) > 1e-12 * max_abs(&p).max(1.0) {
            return Err(Error::input("P must be a nonempty symmetric matrix"));
        }
        if min_sym_eigenvalue(&p) < -1e-10 {
            return Err(Error::input("P must be positive semidefinite"));
        }
        Ok(Self { source: HerglotzSource::ImaginaryConstant { p }, branch: Branch::Function })
    }

    pub fn real_axis(js: JacobiSystem) -> Self {
        Self { source: HerglotzSource::RealAxisNumeric(Arc::new(js)), branch: Branch::Function }
    }

    /// The function `-F^{-1}`.
    pub fn neg_inverse(&self) -> Self {
        let branch = match self.branch {
            Branch::Function => Branch::NegInverse,
            Branch::NegInverse => Branch::Function,
        };
        Self { source: self.source.clone(), branch }
    }

    pub fn source(&self) -> &HerglotzSource {
        &self.source
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Size `n - 1` of the matrices.
    pub fn dim(&self) -> usize {
        match &self.source {
            HerglotzSource::ClosedForm { dim, .. } => dim - 1,
            HerglotzSource::ImaginaryConstant { p } => p.nrows(),
            HerglotzSource::RealAxisNumeric(js) => js.dim() - 1,
        }
    }

    /// True when values off the real axis are available.
    pub fn has_complex_extension(&self) -> bool {
        !matches!(self.source, HerglotzSource::RealAxisNumeric(_))
    }

    pub fn evaluate(&self, z: C64) -> Result<ComplexSymMatrix> {
        if z.im < 0.0 || !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::input(format!("evaluation point {z} is not in the closed upper half-plane")));
        }
        match &self.source {
            HerglotzSource::ClosedForm { curvature, dim } => closed_form_value(*curvature, *dim, self.branch, z),
            HerglotzSource::ImaginaryConstant { p } => {
                let f = ComplexSymMatrix::new(p.map(|x| C64::new(0.0, x)))?;
                match self.branch {
                    Branch::Function => Ok(f),
                    Branch::NegInverse => neg_inverse(&f),
                }
            }
            HerglotzSource::RealAxisNumeric(js) => {
                if z.im != 0.0 {
                    return Err(Error::Unsupported(
                        "numeric sources are only defined on the real axis".into(),
                    ));
                }
                match self.branch {
                    Branch::Function => ComplexSymMatrix::from_real(&crate::linalg::symmetrize(&f_real_axis_numeric(js, z.re)?)),
                    Branch::NegInverse => {
                        let distance = js.singular_set().distance_to_eta(z.re);
                        if distance < SINGULAR_MARGIN {
                            return Err(Error::Conditioning { sigma: z.re, distance });
                        }
                        let f = f_real_axis_numeric(js, z.re)?;
                        neg_inverse(&ComplexSymMatrix::from_real(&crate::linalg::symmetrize(&f))?)
                    }
                }
            }
        }
    }

    /// Derivative in `zeta`: exact for closed forms, a fourth-order centered
    /// difference with step `FD_STEP * max(1, |zeta|)` otherwise.
    pub fn derivative(&self, z: C64) -> Result<ComplexSymMatrix> {
        match &self.source {
            HerglotzSource::ClosedForm { curvature, dim } => closed_form_derivative(*curvature, *dim, self.branch, z),
            HerglotzSource::ImaginaryConstant { p } => {
                self.evaluate(z)?;
                Ok(ComplexSymMatrix::scalar(C64::new(0.0, 0.0), p.nrows()))
            }
            HerglotzSource::RealAxisNumeric(js) => {
                if z.im != 0.0 {
                    return Err(Error::Unsupported("numeric sources are only defined on the real axis".into()));
                }
                let re = |s: f64| Ok::<_, Error>(self.evaluate(C64::new(s, 0.0))?.re());
                let d = real_derivative(re, z.re, 0.0, js.final_time())?;
                ComplexSymMatrix::from_real(&crate::linalg::symmetrize(&d))
            }
        }
    }

    /// Real poles in `[lo, hi]`: closed-form pole sets, or the detected singular set.
    pub fn poles_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match &self.source {
            HerglotzSource::ClosedForm { curvature, .. } => closed_form_poles(*curvature, self.branch, lo, hi),
            HerglotzSource::ImaginaryConstant { .. } => Vec::new(),
            HerglotzSource::RealAxisNumeric(js) => {
                let set = match self.branch {
                    Branch::Function => js.singular_set().xi(),
                    Branch::NegInverse => js.singular_set().eta(),
                };
                set.iter().copied().filter(|t| (lo..=hi).contains(t)).collect()
            }
        }
    }
}

/// Fourth-order centered difference on `[lo, hi]`, falling back to a
/// second-order one-sided formula at the ends.
pub(crate) fn real_derivative(
    mut f: impl FnMut(f64) -> Result<DMatrix<f64>>,
    s: f64,
    lo: f64,
    hi: f64,
) -> Result<DMatrix<f64>> {
    let h = FD_STEP * s.abs().max(1.0);
    if s - 2.0 * h >= lo && s + 2.0 * h <= hi {
        let near = f(s + h)? - f(s - h)?;
        let far = f(s + 2.0 * h)? - f(s - 2.0 * h)?;
        return Ok((near * 8.0 - far) / (12.0 * h));
    }
    if s + 2.0 * h <= hi {
        return Ok((f(s + h)? * 4.0 - f(s)? * 3.0 - f(s + 2.0 * h)?) / (2.0 * h));
    }
    if s - 2.0 * h >= lo {
        return Ok((f(s)? * 3.0 - f(s - h)? * 4.0 + f(s - 2.0 * h)?) / (2.0 * h));
    }
    Err(Error::input(format!("no room for a difference stencil at sigma = {s}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_curvature_examples() {
        let f = f_constant_curvature(1.0, 3, C64::i()).unwrap();
        assert!((f.matrix()[(0, 0)] - c(0.0, 1f64.tanh())).norm() < 1e-15);
        assert_eq!(f.matrix()[(0, 1)], c(0.0, 0.0));
        let f = f_constant_curvature(0.0, 2, c(1.7, 0.0)).unwrap();
        assert_eq!(f.matrix()[(0, 0)], c(1.7, 0.0));
        for k in [-1.0, 0.0, 1.0, 4.0] {
            assert_eq!(f_constant_curvature(k, 3, c(0.0, 0.0)).unwrap().matrix()[(0, 0)], c(0.0, 0.0));
            let d = HerglotzMatrix::closed_form(k, 3).unwrap().derivative(c(0.0, 0.0)).unwrap();
            assert_eq!(d.matrix()[(1, 1)], c(1.0, 0.0));
        }
        let at_pole = f_constant_curvature(1.0, 2, c(PI / 2.0 + 1e-9, 0.0));
        assert!(matches!(at_pole, Err(Error::Pole { .. })));
        assert!(f_constant_curvature(-1.0, 2, c(PI / 2.0, 0.0)).is_ok());
    }

    #[test]
    fn neg_inverse_examples() {
        let g = neg_inverse(&ComplexSymMatrix::scalar(C64::i(), 2)).unwrap();
        assert!((g.matrix()[(0, 0)] - C64::i()).norm() < 1e-15);
        let z = c(0.4, 0.3);
        let fh = HerglotzMatrix::closed_form(1.0, 2).unwrap();
        let g = neg_inverse(&fh.evaluate(z).unwrap()).unwrap();
        assert!((g.matrix()[(0, 0)] + 1.0 / z.tan()).norm() < 1e-13);
        let direct = fh.neg_inverse().evaluate(z).unwrap();
        assert!((direct.matrix()[(0, 0)] - g.matrix()[(0, 0)]).norm() < 1e-13);
        let g0 = HerglotzMatrix::closed_form(0.0, 2).unwrap().neg_inverse().evaluate(z).unwrap();
        assert!((g0.matrix()[(0, 0)] + 1.0 / z).norm() < 1e-15);
        assert!(matches!(neg_inverse(&ComplexSymMatrix::scalar(c(0.0, 0.0), 2)), Err(Error::Singular(_))));
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        for k in [-1.0, 0.0, 1.0, 2.5] {
            let fh = HerglotzMatrix::closed_form(k, 2).unwrap();
            for branch in [fh.clone(), fh.neg_inverse()] {
                let z = c(0.7, 0.4);
                let h = 1e-6;
                let num = (branch.evaluate(z + h).unwrap().matrix()[(0, 0)]
                    - branch.evaluate(z - h).unwrap().matrix()[(0, 0)])
                    / (2.0 * h);
                let exact = branch.derivative(z).unwrap().matrix()[(0, 0)];
                assert!((num - exact).norm() < 1e-7 * exact.norm().max(1.0), "{k}");
            }
        }
    }

    #[test]
    fn real_axis_matches_closed_form() {
        let js = JacobiSystem::closed_form(1.0, 3, 3.0, 1e-3).unwrap();
        let f = f_real_axis_numeric(&js, PI / 4.0).unwrap();
        assert!((f - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!(matches!(f_real_axis_numeric(&js, PI / 2.0), Err(Error::Conditioning { .. })));
        let flat = JacobiSystem::closed_form(0.0, 2, 3.0, 1e-3).unwrap();
        assert!((f_real_axis_numeric(&flat, 2.0).unwrap()[(0, 0)] - 2.0).abs() < 1e-15);
        let fh = HerglotzMatrix::real_axis(js);
        assert!(matches!(fh.evaluate(C64::i()), Err(Error::Unsupported(_))));
        let d = fh.derivative(c(1.0, 0.0)).unwrap();
        assert!((d.re()[(0, 0)] - 1.0 / 1f64.cos().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn poles() {
        let fh = HerglotzMatrix::closed_form(1.0, 2).unwrap();
        assert_eq!(fh.poles_in(-1.0, 2.0), vec![PI / 2.0]);
        assert_eq!(fh.neg_inverse().poles_in(-1.0, 7.0), vec![0.0, PI, 2.0 * PI]);
        assert_eq!(HerglotzMatrix::closed_form(0.0, 2).unwrap().neg_inverse().poles_in(-1.0, 1.0), vec![0.0]);
    }

    #[test]
    fn symmetry_is_enforced() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)]);
        assert!(ComplexSymMatrix::new(m).is_err());
    }
}
