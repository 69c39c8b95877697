//! Computable optimality certificates for strongly convex objectives on a ball.
//!
//! For a `mu`-strongly convex `F` with gradient `g` at `x`,
//! `F(z) >= F(x) + <g, z - x> + (mu/2)||z - x||^2`, so
//! `F(x) - min_X F <= -min_{z in X} [<g, z - x> + (mu/2)||z - x||^2]`.
//! The inner minimizer is `Proj_X(x - g/mu)`.

use crate::linalg::{dot, norm_sq};
use crate::problem::BallDomain;

/// Upper bound on `F(x) - min_X F` from the gradient `g` at `x`.
pub fn min_certificate(domain: &BallDomain, x: &[f64], g: &[f64], mu: f64) -> f64 {
    let mut z: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - gi / mu).collect();
    domain.project_in_place(&mut z);
    let u: Vec<f64> = z.iter().zip(x).map(|(zi, xi)| zi - xi).collect();
    // evaluated on the small difference u to avoid cancellation near a boundary optimum
    let bound = -(dot(g, &u) + 0.5 * mu * norm_sq(&u));
    bound.max(0.0)
}

/// Upper bound on the duality gap of a strongly-convex-strongly-concave `F`
/// at `(x, y)`. `hy` is the descent direction in `y`, i.e. `-grad_y F`.
#[allow(clippy::too_many_arguments)]
pub fn saddle_certificate(
    domain_x: &BallDomain,
    domain_y: &BallDomain,
    x: &[f64],
    y: &[f64],
    gx: &[f64],
    hy: &[f64],
    mu_x: f64,
    mu_y: f64,
) -> f64 {
    min_certificate(domain_x, x, gx, mu_x) + min_certificate(domain_y, y, hy, mu_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificate_is_tight_for_interior_quadratic() {
        // F(x) = (mu/2)||x - c||^2 with c inside: bound equals the exact gap
        let dom = BallDomain::centered(2, 10.0).unwrap();
        let (mu, c, x) = (2.0, [1.0, -1.0], [3.0, 0.5]);
        let g: Vec<f64> = x.iter().zip(&c).map(|(a, b)| mu * (a - b)).collect();
        let exact = 0.5 * mu * ((3.0f64 - 1.0).powi(2) + 1.5f64.powi(2));
        assert!((min_certificate(&dom, &x, &g, mu) - exact).abs() < 1e-12);
    }

    #[test]
    fn certificate_vanishes_at_boundary_optimum() {
        // minimizer of (1/2)||x - (2, 0)||^2 over the unit ball is (1, 0); gradient there is (-1, 0)
        let dom = BallDomain::centered(2, 1.0).unwrap();
        assert_eq!(min_certificate(&dom, &[1.0, 0.0], &[-1.0, 0.0], 1.0), 0.0);
        assert!(min_certificate(&dom, &[0.9, 0.0], &[-1.1, 0.0], 1.0) > 0.0);
    }
}
