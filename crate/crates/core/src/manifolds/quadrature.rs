use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::chebyshev::GaussChebyshevSecondKind;
use gauss_quad::legendre::GaussLegendre;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    /// Tensor-product Gauss rules in spherical coordinates (`n <= 4`).
    ProductGauss,
    /// Seeded uniform samples with equal weights.
    MonteCarlo,
}

impl FromStr for QuadratureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product_gauss" => Ok(Self::ProductGauss),
            "monte_carlo" => Ok(Self::MonteCarlo),
            other => Err(Error::Configuration(format!("unknown quadrature scheme `{other}`"))),
        }
    }
}

/// Nodes on the unit sphere `S^{n-1}` of `R^n` with positive weights summing to its area.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    dim: usize,
    nodes: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Dimension `n` of the ambient space of the sphere.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum of `f` over the nodes with pairwise summation.
    pub fn integrate(&self, f: impl Fn(&DVector<f64>) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).collect();
        crate::linalg::pairwise_sum(&terms)
    }
}

/// Area of the unit sphere `S^{n-1}` in `R^n`.
pub fn sphere_volume(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_volume(n - 2),
    }
}

pub fn unit_sphere_quadrature(
    n: usize,
    scheme: QuadratureScheme,
    order_or_samples: usize,
    seed: u64,
) -> Result<SphereQuadrature> {
    if n < 2 {
        return Err(Error::input(format!("sphere quadrature needs n >= 2, got {n}")));
    }
    let order = NonZeroUsize::new(order_or_samples)
        .ok_or_else(|| Error::input("quadrature order / sample count must be positive"))?;
    let (nodes, weights) = match scheme {
        QuadratureScheme::ProductGauss => match n {
            2 => circle(order.get()),
            3 => sphere2(order),
            4 => sphere3(order),
            _ => {
                return Err(Error::Configuration(format!(
                    "product_gauss is only available for n <= 4 (got n = {n}); use monte_carlo"
                )))
            }
        },
        QuadratureScheme::MonteCarlo => monte_carlo(n, order.get(), seed),
    };
    Ok(SphereQuadrature { dim: n, nodes, weights })
}

fn circle(m: usize) -> (Vec<DVector<f64>>, Vec<f64>) {
    let nodes = (0..m)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / m as f64;
            DVector::from_vec(vec![phi.cos(), phi.sin()])
        })
        .collect();
    (nodes, vec![2.0 * PI / m as f64; m])
}

/// Gauss-Legendre in `cos(polar angle)` times `2m` equispaced azimuths.
fn sphere2(order: NonZeroUsize) -> (Vec<DVector<f64>>, Vec<f64>) {
    let rule = GaussLegendre::new(order);
    let (ring, ring_w) = circle(2 * order.get());
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for &(t, w) in rule.as_node_weight_pairs() {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (u, wu) in ring.iter().zip(&ring_w) {
            nodes.push(DVector::from_vec(vec![s * u[0], s * u[1], t]));
            weights.push(w * wu);
        }
    }
    (nodes, weights)
}

/// Gauss-Chebyshev (second kind) in the last coordinate times an `S^2` rule:
/// `dVol(S^3) = sqrt(1 - t^2) dt dVol(S^2)`.
fn sphere3(order: NonZeroUsize) -> (Vec<DVector<f64>>, Vec<f64>) {
    let rule = GaussChebyshevSecondKind::new(order);
    let (inner, inner_w) = sphere2(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for &(t, w) in rule.as_node_weight_pairs() {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (u, wu) in inner.iter().zip(&inner_w) {
            nodes.push(DVector::from_vec(vec![s * u[0], s * u[1], s * u[2], t]));
            weights.push(w * wu);
        }
    }
    (nodes, weights)
}

fn monte_carlo(n: usize, samples: usize, seed: u64) -> (Vec<DVector<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(samples);
    while nodes.len() < samples {
        let g = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let len = g.norm();
        if len > 1e-12 {
            nodes.push(g / len);
        }
    }
    (nodes, vec![sphere_volume(n) / samples as f64; samples])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn circle_rule_is_equally_weighted() {
        let q = unit_sphere_quadrature(2, QuadratureScheme::ProductGauss, 64, 0).unwrap();
        assert_eq!(q.len(), 64);
        assert!(q.weights().iter().all(|&w| w == q.weights()[0]));
        assert!((q.integrate(|_| 1.0) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        let q3 = unit_sphere_quadrature(3, QuadratureScheme::ProductGauss, 32, 0).unwrap();
        assert!((q3.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-10 * 4.0 * PI);
        let q4 = unit_sphere_quadrature(4, QuadratureScheme::ProductGauss, 6, 0).unwrap();
        assert!((q4.integrate(|_| 1.0) - 2.0 * PI * PI).abs() < 1e-10 * 2.0 * PI * PI);
        let mc = unit_sphere_quadrature(4, QuadratureScheme::MonteCarlo, 100_000, 7).unwrap();
        assert!((mc.integrate(|_| 1.0) - 2.0 * PI * PI).abs() < 1e-12 * 2.0 * PI * PI);
    }

    #[test]
    fn product_rule_integrates_quadratic_moment() {
        // Integral of x_i^2 over S^{n-1} is Vol(S^{n-1}) / n.
        for n in 2..=4 {
            let q = unit_sphere_quadrature(n, QuadratureScheme::ProductGauss, 8, 0).unwrap();
            for i in 0..n {
                let got = q.integrate(|x| x[i] * x[i]);
                assert!((got - sphere_volume(n) / n as f64).abs() < 1e-12, "n={n} i={i}: {got}");
            }
        }
    }

    #[test]
    fn unsupported_pairs_are_configuration_errors() {
        assert!(matches!(
            unit_sphere_quadrature(5, QuadratureScheme::ProductGauss, 4, 0),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(unit_sphere_quadrature(1, QuadratureScheme::MonteCarlo, 4, 0), Err(Error::Input(_))));
        assert!(unit_sphere_quadrature(3, QuadratureScheme::MonteCarlo, 0, 0).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic_in_seed() {
        let a = unit_sphere_quadrature(5, QuadratureScheme::MonteCarlo, 50, 11).unwrap();
        let b = unit_sphere_quadrature(5, QuadratureScheme::MonteCarlo, 50, 11).unwrap();
        let c = unit_sphere_quadrature(5, QuadratureScheme::MonteCarlo, 50, 12).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_ne!(a.nodes(), c.nodes());
    }

    proptest! {
        #[test]
        fn product_rules_are_exact_on_constants_and_odd_coordinates(n in 2usize..=4, order in 2usize..12) {
            let q = unit_sphere_quadrature(n, QuadratureScheme::ProductGauss, order, 0).unwrap();
            let area = sphere_volume(n);
            prop_assert!((q.integrate(|_| 1.0) - area).abs() <= 1e-10 * area);
            for node in q.nodes() {
                prop_assert!((node.norm() - 1.0).abs() <= 1e-12);
            }
            prop_assert!(q.weights().iter().all(|&w| w > 0.0));
            for i in 0..n {
                prop_assert!(q.integrate(|x| x[i]).abs() <= 1e-10);
                if n > 2 || order % 2 == 0 {
                    prop_assert!(q.integrate(|x| x[i].powi(3)).abs() <= 1e-10);
                }
            }
        }
    }
}
