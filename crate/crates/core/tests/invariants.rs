use grauert::counting::berger_bott_curve;
use grauert::flow::{integrate_geodesic, propagate_jacobi};
use grauert::herglotz::{f_real_axis_numeric, minkowski_det_lower_bound, HerglotzMatrix, C64};
use grauert::linalg::{det, min_sym_eigenvalue, symmetry_defect};
use grauert::manifolds::{unit_sphere_quadrature, ManifoldSpec, QuadratureScheme, Warp};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn warp_strategy() -> impl Strategy<Value = Warp> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|k| Warp::Sine { k }),
        (0.3f64..1.5).prop_map(|k| Warp::Sinh { k }),
        (-0.2f64..1.0).prop_map(|a| Warp::Cubic { a }),
        Just(Warp::Linear),
    ]
}

fn spec_strategy() -> impl Strategy<Value = ManifoldSpec> {
    prop_oneof![
        (prop_oneof![Just(-1.0), Just(0.0), Just(1.0), -2.0f64..2.0], 2usize..=4)
            .prop_map(|(c, n)| ManifoldSpec::constant_curvature(c, n).unwrap()),
        (0.5f64..2.0, -0.5f64..0.5, 0.5f64..2.0).prop_map(|(a, b, d)| {
            ManifoldSpec::flat_torus(DMatrix::from_row_slice(2, 2, &[a, b, 0.0, d])).unwrap()
        }),
        (warp_strategy(), 2usize..=4).prop_map(|(w, n)| ManifoldSpec::warped_product(w, n).unwrap()),
    ]
}

/// Unit tangent vector at the base point from unnormalized coefficients.
fn direction(spec: &ManifoldSpec, coeffs: &[f64]) -> Option<DVector<f64>> {
    let x = spec.base_point();
    let basis = spec.tangent_basis(x.as_slice()).unwrap();
    let c: Vec<f64> = basis.iter().enumerate().map(|(i, _)| coeffs[i % coeffs.len()]).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-3 {
        return None;
    }
    Some(basis.iter().zip(&c).fold(DVector::zeros(x.len()), |acc, (b, v)| acc + b * (v / norm)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn curvature_operator_is_symmetric(warp in warp_strategy(), n in 2usize..=4, r in 0.05f64..0.9, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let spec = ManifoldSpec::warped_product(warp, n).unwrap();
        let r = r * warp.domain_end().min(3.0);
        let mut p = vec![0.0; n];
        p[0] = r * a.cos();
        p[1] = r * a.sin();
        let mut v = vec![0.0; n];
        v[0] = b.cos();
        v[n - 1] += b.sin();
        let len = spec.norm(&p, &v).unwrap();
        let v: Vec<f64> = v.iter().map(|x| x / len).collect();
        let frame = spec.normal_frame(&p, &v).unwrap();
        let k = spec.curvature_in_frame(&p, &v, &frame).unwrap();
        prop_assert!(symmetry_defect(&k) <= 1e-12, "{}", symmetry_defect(&k));
    }

    #[test]
    fn h_is_positive_just_after_zero(spec in spec_strategy(), coeffs in prop::collection::vec(-1.0f64..1.0, 4)) {
        let Some(theta) = direction(&spec, &coeffs) else { return Ok(()) };
        let traj = integrate_geodesic(&spec, &spec.base_point(), &theta, 0.01, 1e-3).unwrap();
        let js = propagate_jacobi(&spec, &traj, 1e-3).unwrap();
        for (i, &s) in js.grid().iter().enumerate().skip(1) {
            prop_assert!(det(&js.sample(i).eta) > 0.0, "sigma={s}");
        }
    }

    #[test]
    fn wronskian_is_conserved_on_warped_products(warp in warp_strategy(), n in 2usize..=3, coeffs in prop::collection::vec(-1.0f64..1.0, 3)) {
        let spec = ManifoldSpec::warped_product(warp, n).unwrap();
        let Some(theta) = direction(&spec, &coeffs) else { return Ok(()) };
        let t = (0.9 * warp.domain_end()).min(3.0);
        let traj = integrate_geodesic(&spec, &spec.base_point(), &theta, t, 1e-3).unwrap();
        let js = propagate_jacobi(&spec, &traj, 1e-3).unwrap();
        prop_assert!(js.wronskian_drift() <= 1e-8, "{}", js.wronskian_drift());
    }

    #[test]
    fn numeric_f_is_symmetric(spec in spec_strategy(), coeffs in prop::collection::vec(-1.0f64..1.0, 4), u in 0.0f64..1.0) {
        let Some(theta) = direction(&spec, &coeffs) else { return Ok(()) };
        let t = match spec.kind() {
            grauert::manifolds::ManifoldKind::WarpedProduct { warp, .. } => (0.9 * warp.domain_end()).min(3.0),
            _ => 3.0,
        };
        let traj = integrate_geodesic(&spec, &spec.base_point(), &theta, t, 1e-3).unwrap();
        let js = propagate_jacobi(&spec, &traj, 1e-3).unwrap();
        let sigma = 0.05 + u * (t - 0.1);
        if js.singular_set().distance_to_xi(sigma) < 0.05 {
            return Ok(());
        }
        let f = f_real_axis_numeric(&js, sigma).unwrap();
        let scale = f.amax().max(1.0);
        prop_assert!(symmetry_defect(&f) <= 1e-8 * scale, "{}", symmetry_defect(&f));
    }

    #[test]
    fn counting_curve_is_nondecreasing(spec in prop_oneof![
            Just(ManifoldSpec::round_sphere(2).unwrap()),
            Just(ManifoldSpec::unit_square_torus()),
            Just(ManifoldSpec::constant_curvature(-1.0, 3).unwrap()),
        ], gaps in prop::collection::vec(0.05f64..1.0, 1..8)) {
        let ts: Vec<f64> = gaps.iter().scan(0.0, |acc, g| { *acc += g; Some(*acc) }).collect();
        let quad = unit_sphere_quadrature(spec.dim(), QuadratureScheme::ProductGauss, 4, 0).unwrap();
        let curve = berger_bott_curve(&spec, &spec.base_point(), &ts, &quad, 1e-2).unwrap();
        for w in curve.values().windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_forms_are_herglotz(c in prop_oneof![Just(0.0), Just(1.0), 0.0f64..3.0], n in 2usize..=4, re in -10.0f64..10.0, im in 1e-3f64..10.0) {
        let f = HerglotzMatrix::closed_form(c, n).unwrap();
        let z = C64::new(re, im);
        prop_assert!(min_sym_eigenvalue(&f.evaluate(z).unwrap().im()) > 0.0);
        prop_assert!(min_sym_eigenvalue(&f.neg_inverse().evaluate(z).unwrap().im()) > 0.0);
    }

    #[test]
    fn minkowski_margin_is_nonnegative(k in 1usize..=6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut psd = || {
            let rank = rng.random_range(0..=k);
            let x = DMatrix::from_fn(k, rank, |_, _| rng.random_range(-2.0..2.0));
            let a = &x * x.transpose();
            (&a + a.transpose()) * 0.5
        };
        let (a1, a2) = (psd(), psd());
        let r = minkowski_det_lower_bound(&a1, &a2).unwrap();
        prop_assert!(r.holds(), "margin {} scale {}", r.margin, r.scale);
    }
}
