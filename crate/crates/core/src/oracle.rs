//! Ground-truth solutions for the test-problem families.
//!
//! Quadratic minimization has a closed-form minimizer. The bilinear-quadratic
//! saddle family is linear in the samples, so every empirical or population
//! quantity reduces to the mean matrix `A_bar` and offset `b_bar`; saddles
//! come from a dense SPD solve with residual verification, and duality gaps
//! from closed-form best responses over the balls.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dist, dot, mat_t_vec, mat_vec, norm, norm_sq};
use crate::problem::{AnchorRegularizer, BallDomain, MinLossKind, MinProblem, MinimaxProblem, SaddleLossKind};
use crate::solvers::ProxRegularizer;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    /// Whether the unconstrained solution lies strictly inside the domain(s).
    pub interior: bool,
}

/// Minimizer of `(mu/2)||x - c||^2` over the ball is `Proj(c)`.
fn project_flag(domain: &BallDomain, unconstrained: Vec<f64>) -> (Vec<f64>, bool) {
    let interior = dist(&unconstrained, domain.center()) < domain.radius();
    let mut x = unconstrained;
    domain.project_in_place(&mut x);
    (x, interior)
}

/// Exact minimizer of a quadratic-family problem, optionally anchor-regularized:
/// the projection of `(mu mean + mu_reg anchor) / (mu + mu_reg)`.
pub fn exact_min_quadratic(problem: &MinProblem, reg: Option<&AnchorRegularizer>) -> Result<OracleSolution> {
    let MinLossKind::Quadratic { mu } = problem.loss().kind() else {
        return Err(Error::NotSupported("closed-form minimizer exists only for the quadratic family".into()));
    };
    let mut target = problem.samples().mean();
    if let Some(r) = reg {
        check_dim(problem.dim(), r.anchor.len())?;
        for (t, a) in target.iter_mut().zip(&r.anchor) {
            *t = (mu * *t + r.mu * a) / (mu + r.mu);
        }
    }
    let (x, interior) = project_flag(problem.domain(), target);
    Ok(OracleSolution { x, y: None, interior })
}

/// Population-level risk of the quadratic family around mean `m`:
/// `F(x) - F(x*) = (mu/2)(||x - m||^2 - ||Proj(m) - m||^2)`.
pub fn quadratic_excess_risk(mu: f64, mean: &[f64], domain: &BallDomain, x: &[f64]) -> Result<f64> {
    check_dim(mean.len(), x.len())?;
    let best = domain.project(mean)?;
    Ok(0.5 * mu * (crate::linalg::dist_sq(x, mean) - crate::linalg::dist_sq(&best, mean)))
}

/// Bilinear-quadratic objective reduced to its moments, plus an optional
/// quadratic anchor regularizer:
/// `F(x, y) = (mu_x/2)||x||^2 + y^T(A x - b) - (mu_y/2)||y||^2
///            + (r_x/2)||x - a_x||^2 - (r_y/2)||y - a_y||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearObjective {
    pub dx: usize,
    pub dy: usize,
    /// Row-major `dy x dx`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mu_x: f64,
    pub mu_y: f64,
    pub reg: ProxRegularizer,
}

impl BilinearObjective {
    pub fn new(a: Vec<f64>, b: Vec<f64>, dx: usize, dy: usize, mu_x: f64, mu_y: f64) -> Result<Self> {
        check_dim(dx * dy, a.len())?;
        check_dim(dy, b.len())?;
        let reg = ProxRegularizer { mu_x: 0.0, mu_y: 0.0, anchor_x: vec![0.0; dx], anchor_y: vec![0.0; dy] };
        Ok(Self { dx, dy, a, b, mu_x, mu_y, reg })
    }

    /// Empirical objective of a bilinear-family problem.
    pub fn from_problem(problem: &MinimaxProblem) -> Result<Self> {
        let SaddleLossKind::BilinearQuadratic { dx, dy, mu_x, mu_y } = problem.loss().kind() else {
            return Err(Error::NotSupported("closed-form saddle oracle exists only for the bilinear family".into()));
        };
        let mean = problem.samples().mean();
        let (a, b) = mean.split_at(dx * dy);
        Self::new(a.to_vec(), b.to_vec(), dx, dy, mu_x, mu_y)
    }

    pub fn with_reg(mut self, reg: Option<&ProxRegularizer>) -> Result<Self> {
        if let Some(r) = reg {
            check_dim(self.dx, r.anchor_x.len())?;
            check_dim(self.dy, r.anchor_y.len())?;
            self.reg = r.clone();
        }
        Ok(self)
    }

    pub fn effective_moduli(&self) -> (f64, f64) {
        (self.mu_x + self.reg.mu_x, self.mu_y + self.reg.mu_y)
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dy];
        mat_vec(&self.a, self.dy, self.dx, x, &mut out);
        out
    }

    fn aty(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dx];
        mat_t_vec(&self.a, self.dy, self.dx, y, &mut out);
        out
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = &self.reg;
        0.5 * self.mu_x * norm_sq(x) + dot(y, &self.ax(x)) - dot(y, &self.b) - 0.5 * self.mu_y * norm_sq(y)
            + 0.5 * r.mu_x * crate::linalg::dist_sq(x, &r.anchor_x)
            - 0.5 * r.mu_y * crate::linalg::dist_sq(y, &r.anchor_y)
    }

    /// `(grad_x F, grad_y F)`.
    pub fn grad(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r = &self.reg;
        let mut gx = self.aty(y);
        axpy(self.mu_x, x, &mut gx);
        for ((g, xi), ai) in gx.iter_mut().zip(x).zip(&r.anchor_x) {
            *g += r.mu_x * (xi - ai);
        }
        let mut gy = self.ax(x);
        for (((g, yi), bi), ai) in gy.iter_mut().zip(y).zip(&self.b).zip(&r.anchor_y) {
            *g -= bi + self.mu_y * yi + r.mu_y * (yi - ai);
        }
        (gx, gy)
    }

    /// `argmax_{y in Y} F(x, y)`.
    pub fn best_response_y(&self, x: &[f64], domain_y: &BallDomain) -> Vec<f64> {
        let (_, my) = self.effective_moduli();
        // F is -(my/2)||y||^2 + <q, y> + const in y
        let mut q = self.ax(x);
        for ((qi, bi), ai) in q.iter_mut().zip(&self.b).zip(&self.reg.anchor_y) {
            *qi += self.reg.mu_y * ai - bi;
        }
        maximize_concave_on_ball(&q, my, domain_y)
    }

    /// `argmin_{x in X} F(x, y)`.
    pub fn best_response_x(&self, y: &[f64], domain_x: &BallDomain) -> Vec<f64> {
        let (mx, _) = self.effective_moduli();
        // F is (mx/2)||x||^2 + <p, x> + const in x; minimizing means maximizing -F
        let mut p = self.aty(y);
        axpy(-self.reg.mu_x, &self.reg.anchor_x, &mut p);
        p.iter_mut().for_each(|v| *v = -*v);
        maximize_concave_on_ball(&p, mx, domain_x)
    }

    /// `max_y F(x, y) - min_x F(x, y)` over the domains.
    pub fn gap(&self, x: &[f64], y: &[f64], domain_x: &BallDomain, domain_y: &BallDomain) -> Result<f64> {
        check_dim(self.dx, x.len())?;
        check_dim(self.dy, y.len())?;
        let yb = self.best_response_y(x, domain_y);
        let xb = self.best_response_x(y, domain_x);
        Ok(self.value(x, &yb) - self.value(&xb, y))
    }

    /// Exact saddle over the two balls.
    pub fn saddle(&self, domain_x: &BallDomain, domain_y: &BallDomain) -> Result<OracleSolution> {
        let (mx, my) = self.effective_moduli();
        if mx <= 0.0 || my <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "saddle oracle needs positive effective moduli, got ({mx}, {my})"
            )));
        }
        let (dx, dy) = (self.dx, self.dy);
        let r = &self.reg;
        let a = DMatrix::from_row_slice(dy, dx, &self.a);
        // reduced system (mx I + A^T A / my) x = r_x a_x + A^T (b - r_y a_y) / my
        let mut lhs = a.transpose() * &a / my;
        for i in 0..dx {
            lhs[(i, i)] += mx;
        }
        let shifted: Vec<f64> = self.b.iter().zip(&r.anchor_y).map(|(bi, ai)| bi - r.mu_y * ai).collect();
        let mut rhs = self.aty(&shifted);
        rhs.iter_mut().for_each(|v| *v /= my);
        axpy(r.mu_x, &r.anchor_x, &mut rhs);
        let chol = lhs
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Internal("saddle system is not positive definite".into()))?;
        let x: Vec<f64> = chol.solve(&DVector::from_vec(rhs.clone())).iter().cloned().collect();
        let mut y = self.ax(&x);
        for (yi, si) in y.iter_mut().zip(&shifted) {
            *yi = (*yi - si) / my;
        }
        let (gx, gy) = self.grad(&x, &y);
        let residual = (norm_sq(&gx) + norm_sq(&gy)).sqrt();
        let scale = 1.0 + norm(&rhs) + norm(&self.b) + norm(&r.anchor_x) + norm(&r.anchor_y);
        if residual > 1e-10 * scale {
            return Err(Error::Internal(format!("saddle system residual {residual:e} exceeds tolerance")));
        }
        let interior = dist(&x, domain_x.center()) < domain_x.radius() && dist(&y, domain_y.center()) < domain_y.radius();
        if interior {
            return Ok(OracleSolution { x, y: Some(y), interior });
        }
        let (x, y) = self.constrained_saddle(x, domain_x, domain_y, &a)?;
        Ok(OracleSolution { x, y: Some(y), interior: false })
    }

    /// Projected gradient on the strongly convex envelope `max_y F(x, y)`,
    /// whose inner maximizer is available in closed form.
    fn constrained_saddle(
        &self,
        start: Vec<f64>,
        domain_x: &BallDomain,
        domain_y: &BallDomain,
        a: &DMatrix<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mx, my) = self.effective_moduli();
        let a_norm = a.singular_values().iter().cloned().fold(0.0, f64::max);
        let smooth = mx + a_norm * a_norm / my;
        let step = 1.0 / smooth;
        let mut x = domain_x.project(&start)?;
        for _ in 0..2_000_000 {
            let y = self.best_response_y(&x, domain_y);
            let (gx, _) = self.grad(&x, &y);
            let mut next = x.clone();
            axpy(-step, &gx, &mut next);
            domain_x.project_in_place(&mut next);
            let moved = dist(&next, &x);
            x = next;
            // linear rate (1 - mx/smooth): stop once the step is at round-off level
            if moved <= 1e-15 * (1.0 + norm(&x)) {
                let y = self.best_response_y(&x, domain_y);
                return Ok((x, y));
            }
        }
        Err(Error::Internal("constrained saddle iteration did not settle".into()))
    }
}

/// `argmax_{v in ball} <q, v> - (m/2)||v||^2`; linear objectives (`m = 0`)
/// attain the maximum at `center + D q/||q||`, or the center when `q = 0`.
fn maximize_concave_on_ball(q: &[f64], m: f64, domain: &BallDomain) -> Vec<f64> {
    if m > 0.0 {
        let mut v: Vec<f64> = q.iter().map(|qi| qi / m).collect();
        domain.project_in_place(&mut v);
        v
    } else {
        let len = norm(q);
        let mut v = domain.center().to_vec();
        if len > 0.0 {
            axpy(domain.radius() / len, q, &mut v);
        }
        v
    }
}

/// Exact empirical saddle of a bilinear-family problem, optionally regularized.
pub fn exact_saddle_bilinear(problem: &MinimaxProblem, reg: Option<&ProxRegularizer>) -> Result<OracleSolution> {
    BilinearObjective::from_problem(problem)?
        .with_reg(reg)?
        .saddle(problem.domain_x(), problem.domain_y())
}

/// Empirical duality gap `max_y F(x, y) - min_x F(x, y)`.
pub fn duality_gap_exact(problem: &MinimaxProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    duality_gap_exact_regularized(problem, None, x, y)
}

pub fn duality_gap_exact_regularized(
    problem: &MinimaxProblem,
    reg: Option<&ProxRegularizer>,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    BilinearObjective::from_problem(problem)?
        .with_reg(reg)?
        .gap(x, y, problem.domain_x(), problem.domain_y())
}

/// Axis grid over the bounding box of a ball, restricted to the ball.
fn ball_grid(domain: &BallDomain, resolution: usize) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let r = domain.radius();
    let h = if resolution > 1 { 2.0 * r / (resolution - 1) as f64 } else { 0.0 };
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let p: Vec<f64> = idx
            .iter()
            .zip(domain.center())
            .map(|(&i, c)| if resolution > 1 { c - r + h * i as f64 } else { *c })
            .collect();
        if domain.contains(&p) {
            out.push(p);
        }
        let mut k = 0;
        loop {
            if k == d {
                return out;
            }
            idx[k] += 1;
            if idx[k] < resolution {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Spacing of the grid used by the brute-force oracles.
pub fn grid_spacing(domain: &BallDomain, resolution: usize) -> f64 {
    2.0 * domain.radius() / (resolution.max(2) - 1) as f64
}

fn check_grid(total_dim: usize, resolution: usize) -> Result<()> {
    if total_dim > 4 {
        return Err(Error::InvalidArgument(format!("grid search supports total dimension <= 4, got {total_dim}")));
    }
    if resolution == 0 || resolution > 201 {
        return Err(Error::InvalidArgument(format!("grid resolution must be in 1..=201, got {resolution}")));
    }
    Ok(())
}

/// Exhaustive search of the empirical objective on a grid inside the ball.
pub fn grid_bruteforce_min(problem: &MinProblem, resolution: usize) -> Result<OracleSolution> {
    check_grid(problem.dim(), resolution)?;
    let mut best = (f64::INFINITY, Vec::new());
    for p in ball_grid(problem.domain(), resolution) {
        let v = problem.empirical_value(&p)?;
        if v < best.0 {
            best = (v, p);
        }
    }
    let interior = dist(&best.1, problem.domain().center()) < problem.domain().radius() - grid_spacing(problem.domain(), resolution);
    Ok(OracleSolution { x: best.1, y: None, interior })
}

/// Grid saddle: `x` minimizes the grid-restricted worst case over `y`, and
/// `y` maximizes the grid-restricted best case over `x`.
pub fn grid_bruteforce_saddle(problem: &MinimaxProblem, resolution: usize) -> Result<OracleSolution> {
    let (dx, dy) = problem.dims();
    check_grid(dx + dy, resolution)?;
    let xs = ball_grid(problem.domain_x(), resolution);
    let ys = ball_grid(problem.domain_y(), resolution);
    let mut table = vec![0.0; xs.len() * ys.len()];
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            table[i * ys.len() + j] = problem.empirical_value(x, y)?;
        }
    }
    let row_max = |i: usize| table[i * ys.len()..(i + 1) * ys.len()].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let col_min = |j: usize| (0..xs.len()).map(|i| table[i * ys.len() + j]).fold(f64::INFINITY, f64::min);
    let bx = (0..xs.len()).min_by(|&a, &b| row_max(a).total_cmp(&row_max(b))).unwrap_or(0);
    let by = (0..ys.len()).max_by(|&a, &b| col_min(a).total_cmp(&col_min(b))).unwrap_or(0);
    let interior = dist(&xs[bx], problem.domain_x().center()) < problem.domain_x().radius() - grid_spacing(problem.domain_x(), resolution)
        && dist(&ys[by], problem.domain_y().center()) < problem.domain_y().radius() - grid_spacing(problem.domain_y(), resolution);
    Ok(OracleSolution { x: xs[bx].clone(), y: Some(ys[by].clone()), interior })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist_sq;
    use crate::problem::{make_bilinear_saddle_problem, make_quadratic_min_problem, SampleSet};
    use crate::rng::SeedStream;
    use rand::Rng;

    fn ball(d: usize, r: f64) -> BallDomain {
        BallDomain::centered(d, r).unwrap()
    }

    #[test]
    fn quadratic_closed_forms() {
        let s = SampleSet::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let p = make_quadratic_min_problem(s, 1.0, ball(2, 5.0)).unwrap();
        let sol = exact_min_quadratic(&p, None).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
        assert!(sol.interior);
        let reg = AnchorRegularizer::new(1.0, vec![2.0, 0.0]).unwrap();
        assert_eq!(exact_min_quadratic(&p, Some(&reg)).unwrap().x, vec![1.0, 0.0]);

        let far = make_quadratic_min_problem(SampleSet::from_rows(&[vec![2.0, 0.0]]).unwrap(), 1.0, ball(2, 1.0)).unwrap();
        let sol = exact_min_quadratic(&far, None).unwrap();
        assert_eq!(sol.x, vec![1.0, 0.0]);
        assert!(!sol.interior);
    }

    #[test]
    fn bilinear_trivial_saddles() {
        let p = make_bilinear_saddle_problem(&[vec![0.0; 2]], &[vec![0.0]], 2, 1, 1.0, 1.0, ball(2, 1.0), ball(1, 1.0)).unwrap();
        let sol = exact_saddle_bilinear(&p, None).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
        assert_eq!(sol.y, Some(vec![0.0]));

        let q = make_bilinear_saddle_problem(&[vec![1.0]], &[vec![0.0]], 1, 1, 1.0, 1.0, ball(1, 1.0), ball(1, 1.0)).unwrap();
        let sol = exact_saddle_bilinear(&q, None).unwrap();
        assert!(sol.x[0].abs() < 1e-15 && sol.y.unwrap()[0].abs() < 1e-15);
        assert!(duality_gap_exact(&q, &[0.0], &[0.0]).unwrap().abs() < 1e-15);
    }

    fn random_instance(seed: u64, dx: usize, dy: usize, n: usize, mu_x: f64, mu_y: f64, radius: f64) -> MinimaxProblem {
        let mut rng = SeedStream::new(seed).rng();
        let mats: Vec<Vec<f64>> = (0..n).map(|_| (0..dx * dy).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let offs: Vec<Vec<f64>> = (0..n).map(|_| (0..dy).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        make_bilinear_saddle_problem(&mats, &offs, dx, dy, mu_x, mu_y, ball(dx, radius), ball(dy, radius)).unwrap()
    }

    #[test]
    fn saddle_solves_kkt_system() {
        let p = random_instance(1, 2, 3, 16, 0.8, 1.3, 100.0);
        let sol = exact_saddle_bilinear(&p, None).unwrap();
        assert!(sol.interior);
        let y = sol.y.clone().unwrap();
        let (gx, gy) = p.empirical_grad(&sol.x, &y).unwrap();
        assert!((norm_sq(&gx) + norm_sq(&gy)).sqrt() <= 1e-10);
        assert!(duality_gap_exact(&p, &sol.x, &y).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn constrained_saddle_is_a_fixed_point_of_best_responses() {
        // small balls force a boundary saddle
        let p = random_instance(2, 2, 2, 10, 0.5, 0.5, 0.05);
        let sol = exact_saddle_bilinear(&p, None).unwrap();
        let gap = duality_gap_exact(&p, &sol.x, sol.y.as_ref().unwrap()).unwrap();
        assert!(gap.abs() < 1e-10, "gap {gap}");
    }

    #[test]
    fn gap_lower_bound_on_perturbations() {
        let p = random_instance(3, 2, 2, 20, 0.7, 1.1, 50.0);
        let sol = exact_saddle_bilinear(&p, None).unwrap();
        let ys = sol.y.unwrap();
        let mut rng = SeedStream::new(9).rng();
        for _ in 0..200 {
            let x: Vec<f64> = sol.x.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = ys.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
            let gap = duality_gap_exact(&p, &x, &y).unwrap();
            let lower = 0.35 * dist_sq(&x, &sol.x) + 0.55 * dist_sq(&y, &ys);
            assert!(gap >= lower - 1e-9);
        }
    }

    #[test]
    fn linear_inner_problem_hits_the_boundary() {
        let dom = BallDomain::new(vec![1.0, 0.0], 2.0).unwrap();
        assert_eq!(maximize_concave_on_ball(&[0.0, 3.0], 0.0, &dom), vec![1.0, 2.0]);
        assert_eq!(maximize_concave_on_ball(&[0.0, 0.0], 0.0, &dom), vec![1.0, 0.0]);
    }

    #[test]
    fn grid_matches_closed_forms() {
        let one = make_quadratic_min_problem(SampleSet::from_rows(&[vec![0.5]]).unwrap(), 1.0, ball(1, 1.0)).unwrap();
        let sol = grid_bruteforce_min(&one, 201).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-12);

        let mut rng = SeedStream::new(5).rng();
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> = (0..8).map(|_| ball(2, 1.0).sample(&mut rng)).collect();
            let p = make_quadratic_min_problem(SampleSet::from_rows(&rows).unwrap(), 1.5, ball(2, 1.0)).unwrap();
            let exact = exact_min_quadratic(&p, None).unwrap();
            let grid = grid_bruteforce_min(&p, 101).unwrap();
            assert!(dist(&exact.x, &grid.x) <= grid_spacing(p.domain(), 101) * 2f64.sqrt());
        }

        let toy = make_bilinear_saddle_problem(&[vec![1.0]], &[vec![0.4]], 1, 1, 1.0, 1.0, ball(1, 1.0), ball(1, 1.0)).unwrap();
        let exact = exact_saddle_bilinear(&toy, None).unwrap();
        let grid = grid_bruteforce_saddle(&toy, 201).unwrap();
        let h = grid_spacing(toy.domain_x(), 201);
        assert!((exact.x[0] - grid.x[0]).abs() <= h);
        assert!((exact.y.unwrap()[0] - grid.y.unwrap()[0]).abs() <= h);
    }

    #[test]
    fn grid_rejects_large_instances() {
        let p = make_quadratic_min_problem(SampleSet::from_rows(&[vec![0.0; 5]]).unwrap(), 1.0, ball(5, 1.0)).unwrap();
        assert!(grid_bruteforce_min(&p, 3).is_err());
        let q = make_quadratic_min_problem(SampleSet::from_rows(&[vec![0.0]]).unwrap(), 1.0, ball(1, 1.0)).unwrap();
        assert!(grid_bruteforce_min(&q, 202).is_err());
    }

    #[test]
    fn unsupported_family() {
        let s = SampleSet::from_rows(&[vec![0.5, 1.0]]).unwrap();
        let p = crate::problem::make_logistic_min_problem(s, ball(1, 1.0), 0.1).unwrap();
        assert!(matches!(exact_min_quadratic(&p, None), Err(Error::NotSupported(_))));
    }
}
