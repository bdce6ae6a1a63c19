//! Complex `tan`, `cot`, `tanh`, `coth` written with `sech y` and `tanh y` so
//! that they stay finite for large imaginary parts.

use nalgebra::Complex;

pub type C64 = Complex<f64>;

pub fn tan(z: C64) -> C64 {
    let (sx, cx) = z.re.sin_cos();
    let s = 1.0 / z.im.cosh();
    let t = z.im.tanh();
    let den = cx * cx * s * s + t * t;
    C64::new(sx * cx * s * s / den, t / den)
}

pub fn cot(z: C64) -> C64 {
    let (sx, cx) = z.re.sin_cos();
    let s = 1.0 / z.im.cosh();
    let t = z.im.tanh();
    let den = sx * sx * s * s + t * t;
    C64::new(sx * cx * s * s / den, -t / den)
}

pub fn tanh(z: C64) -> C64 {
    -C64::i() * tan(C64::i() * z)
}

pub fn coth(z: C64) -> C64 {
    C64::i() * cot(C64::i() * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn agree_with_library_functions() {
        for &(x, y) in &[(0.3, 0.7), (-2.0, 0.01), (1.4, -1.2), (5.0, 3.0), (0.0, 1.0)] {
            let z = C64::new(x, y);
            assert!(close(tan(z), z.tan(), 1e-13));
            assert!(close(cot(z), 1.0 / z.tan(), 1e-13));
            assert!(close(tanh(z), z.tanh(), 1e-13));
            assert!(close(coth(z), 1.0 / z.tanh(), 1e-13));
        }
    }

    #[test]
    fn finite_far_from_real_axis() {
        let z = C64::new(0.4, 800.0);
        assert!(close(tan(z), C64::i(), 1e-15));
        assert!(close(cot(z), -C64::i(), 1e-15));
        assert!(close(tan(C64::new(0.0, 1.0)), C64::new(0.0, 1f64.tanh()), 1e-15));
    }
}
