//! Utility, stability and duality-gap measurements on synthetic families
//! whose population optima are known in closed form.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{
    dp_cc_saddle, dp_cc_saddle_dual, dp_cc_saddle_primal, dp_convex_minimize_phased, dp_csc_saddle,
    dp_sc_minimize, dp_scsc_saddle, Algorithm, DpOptions, DpRunOutput, NoiseMode,
};
use crate::linalg::{dist, dist_sq, norm, norm_sq};
use crate::mechanisms::{ledger_total, PrivacyBudget};
use crate::oracle::{duality_gap_exact, exact_min_quadratic, exact_saddle_bilinear, BilinearObjective};
use crate::problem::{
    bilinear_problem_from_samples, make_logistic_min_problem_bounded, make_quadratic_min_problem_bounded,
    spectral_norm, AnchorRegularizer, BallDomain, BilinearBounds, MinProblem, MinimaxProblem, SampleSet,
};
use crate::rng::SeedStream;
use crate::solvers::{solve_min, MinSolverKind, MinSolverSpec, MinimaxSolverSpec, ProxRegularizer};

/// Slack added to every stability bound to absorb oracle round-off.
pub const STABILITY_SLACK: f64 = 1e-6;
/// Slack for the prox and gap-sandwich comparisons.
pub const SANDWICH_SLACK: f64 = 1e-9;
/// Smallest holdout-to-training ratio that is not flagged.
pub const MIN_HOLDOUT_FACTOR: usize = 10;

/// `(mu/2)||x - xi||^2` with `xi = mean + spread * U(ball)`; the population
/// minimizer over the domain is `Proj(mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFamily {
    pub mu: f64,
    pub mean: Vec<f64>,
    pub spread: f64,
    pub domain: BallDomain,
}

impl QuadraticFamily {
    pub fn new(mu: f64, mean: Vec<f64>, spread: f64, domain_radius: f64) -> Result<Self> {
        if !(mu > 0.0 && spread >= 0.0) {
            return Err(Error::InvalidArgument("quadratic family needs mu > 0 and spread >= 0".into()));
        }
        let domain = BallDomain::centered(mean.len(), domain_radius)?;
        Ok(Self { mu, mean, spread, domain })
    }

    /// Mean `(0.5/sqrt(d)) * 1`, unit spread, domain radius 1.
    pub fn standard(dim: usize) -> Result<Self> {
        let m = 0.5 / (dim as f64).sqrt();
        Self::new(1.0, vec![m; dim], 1.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample_radius(&self) -> f64 {
        norm(&self.mean) + self.spread
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        if self.spread == 0.0 {
            return self.mean.clone();
        }
        BallDomain::new(self.mean.clone(), self.spread).expect("valid ball").sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleSet> {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| self.draw(rng)).collect();
        SampleSet::from_rows(&rows)
    }

    /// Problem whose certified constants hold for every sample of the family.
    pub fn problem(&self, samples: SampleSet) -> Result<MinProblem> {
        make_quadratic_min_problem_bounded(samples, self.mu, self.domain.clone(), self.sample_radius())
    }

    pub fn population_optimum(&self) -> Vec<f64> {
        self.domain.project(&self.mean).expect("matching dimension")
    }

    /// Exact `F(x) - F(x*)`.
    pub fn excess_population_risk(&self, x: &[f64]) -> Result<f64> {
        crate::oracle::quadratic_excess_risk(self.mu, &self.mean, &self.domain, x)
    }
}

/// Bilinear-quadratic family with `A_i = A + spread U`, `b_i = b + spread u`
/// for uniform `U, u` in `[-1, 1]`. The population objective is the one with
/// the mean moments.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearFamily {
    pub dx: usize,
    pub dy: usize,
    pub mu_x: f64,
    pub mu_y: f64,
    pub a_mean: Vec<f64>,
    pub b_mean: Vec<f64>,
    pub spread: f64,
    pub domain_x: BallDomain,
    pub domain_y: BallDomain,
}

impl BilinearFamily {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dx: usize,
        dy: usize,
        mu_x: f64,
        mu_y: f64,
        a_mean: Vec<f64>,
        b_mean: Vec<f64>,
        spread: f64,
        radius_x: f64,
        radius_y: f64,
    ) -> Result<Self> {
        crate::error::check_dim(dx * dy, a_mean.len())?;
        crate::error::check_dim(dy, b_mean.len())?;
        if !(mu_x >= 0.0 && mu_y >= 0.0 && spread >= 0.0) {
            return Err(Error::InvalidArgument("bilinear family needs non-negative moduli and spread".into()));
        }
        Ok(Self {
            dx,
            dy,
            mu_x,
            mu_y,
            a_mean,
            b_mean,
            spread,
            domain_x: BallDomain::centered(dx, radius_x)?,
            domain_y: BallDomain::centered(dy, radius_y)?,
        })
    }

    /// Square `d x d` instance: `A = I + 0.2 * (skew-ish perturbation)`,
    /// `b = 0.3 * (cos(i + 1))_i / sqrt(d)`, spread 0.2, unit domains.
    pub fn standard(d: usize, mu_x: f64, mu_y: f64) -> Result<Self> {
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let base = if i == j { 1.0 } else { 0.0 };
                a[i * d + j] = base + 0.2 * ((i + 2 * j) as f64).sin() / (d as f64).sqrt();
            }
        }
        let b = (0..d).map(|i| 0.3 * ((i + 1) as f64).cos() / (d as f64).sqrt()).collect();
        Self::new(d, d, mu_x, mu_y, a, b, 0.2, 1.0, 1.0)
    }

    pub fn sample_dim(&self) -> usize {
        self.dx * self.dy + self.dy
    }

    pub fn bounds(&self) -> BilinearBounds {
        let a_dev = self.spread * ((self.dx * self.dy) as f64).sqrt();
        BilinearBounds {
            matrix_norm: spectral_norm(&self.a_mean, self.dy, self.dx) + a_dev,
            offset_norm: norm(&self.b_mean) + self.spread * (self.dy as f64).sqrt(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.a_mean
            .iter()
            .chain(&self.b_mean)
            .map(|m| m + self.spread * rng.random_range(-1.0..=1.0))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleSet> {
        let dim = self.sample_dim();
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            data.extend(self.draw(rng));
        }
        SampleSet::new(dim, data)
    }

    pub fn problem(&self, samples: SampleSet) -> Result<MinimaxProblem> {
        bilinear_problem_from_samples(
            samples,
            self.dx,
            self.dy,
            self.mu_x,
            self.mu_y,
            self.domain_x.clone(),
            self.domain_y.clone(),
            Some(self.bounds()),
        )
    }

    pub fn population_objective(&self) -> BilinearObjective {
        BilinearObjective::new(self.a_mean.clone(), self.b_mean.clone(), self.dx, self.dy, self.mu_x, self.mu_y)
            .expect("dimensions validated at construction")
    }

    /// Strong duality gap of the population objective at `(x, y)`.
    pub fn population_gap(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.population_objective().gap(x, y, &self.domain_x, &self.domain_y)
    }
}

/// Logistic regression with features uniform in a ball of radius `R` and
/// labels `+1` with probability `sigmoid(<w, a>)`. No closed-form population
/// optimum; risk is estimated on a holdout.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFamily {
    pub w_true: Vec<f64>,
    pub feature_radius: f64,
    pub ridge: f64,
    pub domain: BallDomain,
}

impl LogisticFamily {
    pub fn new(w_true: Vec<f64>, feature_radius: f64, ridge: f64, domain_radius: f64) -> Result<Self> {
        if !(ridge > 0.0 && feature_radius > 0.0) {
            return Err(Error::InvalidArgument("logistic family needs ridge > 0 and a positive radius".into()));
        }
        let domain = BallDomain::centered(w_true.len(), domain_radius)?;
        Ok(Self { w_true, feature_radius, ridge, domain })
    }

    pub fn dim(&self) -> usize {
        self.w_true.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let mut row = BallDomain::centered(d, self.feature_radius).expect("valid ball").sample(rng);
        let z = crate::linalg::dot(&row, &self.w_true);
        let p = 1.0 / (1.0 + (-z).exp());
        row.push(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
        row
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleSet> {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| self.draw(rng)).collect();
        SampleSet::from_rows(&rows)
    }

    pub fn problem(&self, samples: SampleSet) -> Result<MinProblem> {
        make_logistic_min_problem_bounded(samples, self.domain.clone(), self.ridge, self.feature_radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Quadratic(QuadraticFamily),
    Logistic(LogisticFamily),
    Bilinear(BilinearFamily),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Quadratic(_) => "quadratic",
            Family::Logistic(_) => "logistic",
            Family::Bilinear(_) => "bilinear",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::Quadratic(f) => f.dim(),
            Family::Logistic(f) => f.dim(),
            Family::Bilinear(f) => f.dx.max(f.dy),
        }
    }
}

// ---------------------------------------------------------------------------
// stability probes

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub trials: usize,
    /// Largest observed shift (distance for min problems, weighted squared
    /// distance for saddle problems).
    pub max_shift: f64,
    pub bound: f64,
    pub violations: usize,
}

/// Distance between the exact (optionally regularized) minimizers of two problems.
pub fn min_shift(s: &MinProblem, s_prime: &MinProblem, reg: Option<&AnchorRegularizer>) -> Result<f64> {
    let a = exact_min_quadratic(s, reg)?;
    let b = exact_min_quadratic(s_prime, reg)?;
    Ok(dist(&a.x, &b.x))
}

/// Neighboring-dataset stability of empirical minimizers. With `reg_mu` each
/// trial adds an anchor regularizer at a random domain point and the bound
/// uses the regularizer's modulus alone.
pub fn stability_probe_min(
    family: &QuadraticFamily,
    n: usize,
    trials: usize,
    reg_mu: Option<f64>,
    stream: &SeedStream,
) -> Result<StabilityReport> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidArgument("stability probe needs n >= 1 and trials >= 1".into()));
    }
    let mu = reg_mu.unwrap_or(family.mu);
    let mut report = StabilityReport { trials, max_shift: 0.0, bound: 0.0, violations: 0 };
    for t in 0..trials {
        let mut rng = stream.child_indexed("trial", t as u64).rng();
        let samples = family.sample(n, &mut rng)?;
        let i = rng.random_range(0..n);
        let fresh = family.draw(&mut rng);
        let s = family.problem(samples.clone())?;
        let sp = family.problem(samples.with_replaced(i, &fresh)?)?;
        let reg = match reg_mu {
            Some(m) => Some(AnchorRegularizer::new(m, family.domain.sample(&mut rng))?),
            None => None,
        };
        let shift = min_shift(&s, &sp, reg.as_ref())?;
        let bound = 2.0 * s.constants().lipschitz / (mu * n as f64);
        report.bound = bound;
        report.max_shift = report.max_shift.max(shift);
        if shift > bound + STABILITY_SLACK {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// `mu_x ||dx||^2 + mu_y ||dy||^2` between the exact saddle points of two problems.
pub fn saddle_shift(
    s: &MinimaxProblem,
    s_prime: &MinimaxProblem,
    reg: Option<&ProxRegularizer>,
    weights: (f64, f64),
) -> Result<f64> {
    let a = exact_saddle_bilinear(s, reg)?;
    let b = exact_saddle_bilinear(s_prime, reg)?;
    let (ya, yb) = (a.y.expect("saddle oracle returns y"), b.y.expect("saddle oracle returns y"));
    Ok(weights.0 * dist_sq(&a.x, &b.x) + weights.1 * dist_sq(&ya, &yb))
}

/// Neighboring-dataset stability of empirical saddle points. With `reg` the
/// weights and `mu` come from the anchor regularizer moduli, placed at
/// random anchors in each trial; otherwise from the family moduli.
pub fn stability_probe_minimax(
    family: &BilinearFamily,
    n: usize,
    trials: usize,
    reg: Option<(f64, f64)>,
    stream: &SeedStream,
) -> Result<StabilityReport> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidArgument("stability probe needs n >= 1 and trials >= 1".into()));
    }
    let weights = reg.unwrap_or((family.mu_x, family.mu_y));
    let mu = weights.0.min(weights.1);
    if mu <= 0.0 {
        return Err(Error::InvalidArgument("minimax stability needs positive moduli".into()));
    }
    let mut report = StabilityReport { trials, max_shift: 0.0, bound: 0.0, violations: 0 };
    for t in 0..trials {
        let mut rng = stream.child_indexed("trial", t as u64).rng();
        let samples = family.sample(n, &mut rng)?;
        let i = rng.random_range(0..n);
        let fresh = family.draw(&mut rng);
        let s = family.problem(samples.clone())?;
        let sp = family.problem(samples.with_replaced(i, &fresh)?)?;
        let prox = match reg {
            Some((mx, my)) => Some(ProxRegularizer::new(
                mx,
                my,
                family.domain_x.sample(&mut rng),
                family.domain_y.sample(&mut rng),
            )?),
            None => None,
        };
        let shift = saddle_shift(&s, &sp, prox.as_ref(), weights)?;
        let l = s.constants().lipschitz;
        let bound = 4.0 * l * l / (mu * (n * n) as f64);
        report.bound = bound;
        report.max_shift = report.max_shift.max(shift);
        if shift > bound + STABILITY_SLACK {
            report.violations += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxReport {
    pub pairs: usize,
    /// Largest ratio of weighted saddle shift to weighted anchor shift.
    pub max_ratio: f64,
    pub violations: usize,
}

/// Moving the anchors `(u, v)` of the regularized saddle problem moves its
/// saddle point by no more than the anchors moved, in the regularizer-weighted norm.
pub fn prox_nonexpansive_probe(
    family: &BilinearFamily,
    n: usize,
    pairs: usize,
    moduli: (f64, f64),
    stream: &SeedStream,
) -> Result<ProxReport> {
    let mut report = ProxReport { pairs, max_ratio: 0.0, violations: 0 };
    let (mx, my) = moduli;
    for t in 0..pairs {
        let mut rng = stream.child_indexed("pair", t as u64).rng();
        let problem = family.problem(family.sample(n, &mut rng)?)?;
        let (u, v) = (family.domain_x.sample(&mut rng), family.domain_y.sample(&mut rng));
        let (u2, v2) = (family.domain_x.sample(&mut rng), family.domain_y.sample(&mut rng));
        let first = exact_saddle_bilinear(&problem, Some(&ProxRegularizer::new(mx, my, u.clone(), v.clone())?))?;
        let second = exact_saddle_bilinear(&problem, Some(&ProxRegularizer::new(mx, my, u2.clone(), v2.clone())?))?;
        let moved = mx * dist_sq(&first.x, &second.x)
            + my * dist_sq(first.y.as_ref().expect("y"), second.y.as_ref().expect("y"));
        let anchor = mx * dist_sq(&u, &u2) + my * dist_sq(&v, &v2);
        if anchor > 0.0 {
            report.max_ratio = report.max_ratio.max(moved / anchor);
        }
        if moved > anchor + SANDWICH_SLACK {
            report.violations += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub trials: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// Trials skipped because the saddle point was on the boundary.
    pub skipped: usize,
}

/// Checks `(mu_x/2)||dx||^2 + (mu_y/2)||dy||^2 <= gap` and
/// `gap <= ((k_y+1) l/2)||dx||^2 + ((k_x+1) l/2)||dy||^2` at random interior
/// perturbations of the exact saddle point of an SC-SC instance.
pub fn gap_sandwich_probe(family: &BilinearFamily, n: usize, trials: usize, stream: &SeedStream) -> Result<SandwichReport> {
    if !(family.mu_x > 0.0 && family.mu_y > 0.0) {
        return Err(Error::InvalidArgument("gap sandwich needs an SC-SC family".into()));
    }
    let mut report = SandwichReport { trials, lower_violations: 0, upper_violations: 0, skipped: 0 };
    for t in 0..trials {
        let mut rng = stream.child_indexed("trial", t as u64).rng();
        let problem = family.problem(family.sample(n, &mut rng)?)?;
        let saddle = exact_saddle_bilinear(&problem, None)?;
        if !saddle.interior {
            report.skipped += 1;
            continue;
        }
        let ys = saddle.y.as_ref().expect("y");
        let scale = rng.random_range(0.0..0.5);
        let radius_x = (family.domain_x.radius() - dist(&saddle.x, family.domain_x.center())).max(0.0);
        let radius_y = (family.domain_y.radius() - dist(ys, family.domain_y.center())).max(0.0);
        let xt = perturb_within(&saddle.x, scale * radius_x, &mut rng);
        let yt = perturb_within(ys, scale * radius_y, &mut rng);
        let gap = duality_gap_exact(&problem, &xt, &yt)?;
        let c = problem.constants();
        let ell = c.smoothness;
        let (kx, ky) = (ell / c.mu_x, ell / c.mu_y);
        let (ex, ey) = (dist_sq(&xt, &saddle.x), dist_sq(&yt, ys));
        let lower = 0.5 * c.mu_x * ex + 0.5 * c.mu_y * ey;
        let upper = 0.5 * (ky + 1.0) * ell * ex + 0.5 * (kx + 1.0) * ell * ey;
        if lower > gap + SANDWICH_SLACK {
            report.lower_violations += 1;
        }
        if gap > upper + SANDWICH_SLACK {
            report.upper_violations += 1;
        }
    }
    Ok(report)
}

fn perturb_within<R: Rng + ?Sized>(center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    if radius <= 0.0 {
        return center.to_vec();
    }
    BallDomain::new(center.to_vec(), radius).expect("positive radius").sample(rng)
}

// ---------------------------------------------------------------------------
// risk and gap metrics

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub value: f64,
    /// `None` when the value is exact.
    pub std_error: Option<f64>,
    /// Holdout smaller than [`MIN_HOLDOUT_FACTOR`] times the training size.
    pub small_holdout: bool,
}

/// Paired holdout estimate of `F(x) - F(reference)` with its standard error.
pub fn holdout_risk_difference(problem: &MinProblem, x: &[f64], reference: &[f64], holdout: &SampleSet) -> Result<(f64, f64)> {
    if holdout.len() < 2 {
        return Err(Error::InvalidArgument("holdout needs at least two samples".into()));
    }
    let loss = problem.loss();
    let diffs: Vec<f64> = holdout.iter().map(|xi| loss.value(x, xi) - loss.value(reference, xi)).collect();
    let m = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / m;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}

/// High-accuracy minimizer of a (strongly convex) min problem.
pub fn reference_minimizer(problem: &MinProblem) -> Result<Vec<f64>> {
    match exact_min_quadratic(problem, None) {
        Ok(sol) => Ok(sol.x),
        Err(Error::NotSupported(_)) => {
            let spec = MinSolverSpec::new(MinSolverKind::Svrg, 1e-13, 0);
            Ok(solve_min(problem, &spec, None)?.point)
        }
        Err(e) => Err(e),
    }
}

/// Excess population risk of `x`. Exact for the quadratic family; for
/// logistic it is estimated on `holdout` against the holdout minimizer.
pub fn excess_population_risk(family: &Family, x: &[f64], holdout: Option<&SampleSet>, train_n: usize) -> Result<RiskEstimate> {
    match family {
        Family::Quadratic(f) => Ok(RiskEstimate { value: f.excess_population_risk(x)?, std_error: None, small_holdout: false }),
        Family::Logistic(f) => {
            let holdout = holdout.ok_or_else(|| Error::InvalidArgument("logistic risk needs a holdout set".into()))?;
            let problem = f.problem(holdout.clone())?;
            let reference = reference_minimizer(&problem)?;
            let (value, se) = holdout_risk_difference(&problem, x, &reference, holdout)?;
            Ok(RiskEstimate {
                value,
                std_error: Some(se),
                small_holdout: holdout.len() < MIN_HOLDOUT_FACTOR * train_n,
            })
        }
        Family::Bilinear(_) => Err(Error::NotSupported("excess risk is defined for minimization families".into())),
    }
}

/// Weak duality gap `max_y E[F(x~, y)] - min_x E[F(x, y~)]` of `objective`
/// over the empirical distribution of the outputs `(xs[i], ys[i])`.
///
/// For the bilinear-quadratic form the expectation only enters through the
/// means and the second moments of the quadratic terms.
pub fn weak_gap_estimate(
    objective: &BilinearObjective,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    domain_x: &BallDomain,
    domain_y: &BallDomain,
) -> Result<f64> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidArgument("weak gap needs matching non-empty output lists".into()));
    }
    let mean = |v: &[Vec<f64>]| {
        let mut m = vec![0.0; v[0].len()];
        for p in v {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b / v.len() as f64;
            }
        }
        m
    };
    let spread = |v: &[Vec<f64>], m: &[f64]| v.iter().map(|p| norm_sq(p)).sum::<f64>() / v.len() as f64 - norm_sq(m);
    let (xm, ym) = (mean(xs), mean(ys));
    let (mx, my) = objective.effective_moduli();
    let base = objective.gap(&xm, &ym, domain_x, domain_y)?;
    Ok(base + 0.5 * mx * spread(xs, &xm).max(0.0) + 0.5 * my * spread(ys, &ym).max(0.0))
}

/// Gap of the holdout-mean objective at `(x, y)`.
pub fn holdout_gap(family: &BilinearFamily, x: &[f64], y: &[f64], holdout: &SampleSet) -> Result<f64> {
    let problem = family.problem(holdout.clone())?;
    duality_gap_exact(&problem, x, y)
}

// ---------------------------------------------------------------------------
// utility sweeps

#[derive(Debug, Clone, PartialEq)]
pub enum BaseSolver {
    Min(MinSolverSpec),
    Saddle(MinimaxSolverSpec),
}

impl BaseSolver {
    pub fn name(&self) -> &'static str {
        match self {
            BaseSolver::Min(s) => s.kind.name(),
            BaseSolver::Saddle(s) => s.kind.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityConfig {
    pub label: String,
    pub algorithm: Algorithm,
    pub family: Family,
    pub solver: BaseSolver,
    pub n: usize,
    pub budget: PrivacyBudget,
    pub seed: u64,
    pub noise: NoiseMode,
    pub mu: Option<f64>,
    pub mu_scale: Option<f64>,
    /// Holdout size as a multiple of `n` for holdout-estimated metrics.
    pub holdout_factor: usize,
}

/// One run's metrics. Field order matches the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityRecord {
    pub run_id: String,
    pub kind: String,
    pub family: String,
    pub solver: String,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub repetition: usize,
    pub excess_empirical_risk: Option<f64>,
    pub excess_population_risk: Option<f64>,
    pub empirical_gap: Option<f64>,
    pub population_gap: Option<f64>,
    pub noise_norm: Option<f64>,
    pub gradient_evaluations: u64,
    pub ledger_epsilon: Option<f64>,
    pub ledger_delta: Option<f64>,
    pub private: bool,
    /// `ok`, `warn:<reason>` or `error:<message>`.
    pub status: String,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub config_index: usize,
    /// Projected outputs the metrics were evaluated at.
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
}

/// Seed of repetition `rep` of a configuration with root `seed`.
pub fn repetition_stream(seed: u64, rep: usize) -> SeedStream {
    SeedStream::new(seed).child_indexed("repetition", rep as u64)
}

fn dispatch_min(config: &UtilityConfig, problem: &MinProblem, opts: &DpOptions) -> Result<DpRunOutput> {
    let BaseSolver::Min(spec) = &config.solver else {
        return Err(Error::InvalidArgument(format!("{} needs a minimization solver", config.algorithm)));
    };
    match config.algorithm {
        Algorithm::ScMin => dp_sc_minimize(problem, config.budget, spec, opts),
        Algorithm::ConvexMinPhased => dp_convex_minimize_phased(problem, config.budget, spec, opts),
        other => Err(Error::InvalidArgument(format!("{other} does not apply to a minimization family"))),
    }
}

fn dispatch_saddle(config: &UtilityConfig, problem: &MinimaxProblem, opts: &DpOptions) -> Result<DpRunOutput> {
    let BaseSolver::Saddle(spec) = &config.solver else {
        return Err(Error::InvalidArgument(format!("{} needs a minimax solver", config.algorithm)));
    };
    match config.algorithm {
        Algorithm::ScScSaddle => dp_scsc_saddle(problem, config.budget, spec, opts),
        Algorithm::CcPrimal => dp_cc_saddle_primal(problem, config.budget, spec, opts),
        Algorithm::CcDual => dp_cc_saddle_dual(problem, config.budget, spec, opts),
        Algorithm::CcSaddle => dp_cc_saddle(problem, config.budget, spec, opts),
        Algorithm::CscSaddle => dp_csc_saddle(problem, config.budget, spec, opts),
        other => Err(Error::InvalidArgument(format!("{other} does not apply to a saddle family"))),
    }
}

fn noise_norm(out: &DpRunOutput) -> Option<f64> {
    let part = |a: &Option<Vec<f64>>, b: &Option<Vec<f64>>| match (a, b) {
        (Some(a), Some(b)) => dist_sq(a, b),
        _ => 0.0,
    };
    let total = part(&out.x, &out.x_pre_noise) + part(&out.y, &out.y_pre_noise);
    Some(total.sqrt())
}

/// One repetition of a configuration, with every metric evaluated at the
/// projected (post-processed) outputs.
pub fn run_utility(config: &UtilityConfig, config_index: usize, repetition: usize) -> UtilityRecord {
    run_utility_with_output(config, config_index, repetition).0
}

/// [`run_utility`] that also hands back the algorithm output (ledger and trace).
pub fn run_utility_with_output(
    config: &UtilityConfig,
    config_index: usize,
    repetition: usize,
) -> (UtilityRecord, Option<DpRunOutput>) {
    let started = Instant::now();
    let stream = repetition_stream(config.seed, repetition);
    let mut record = UtilityRecord {
        run_id: format!("{}-r{repetition:03}", config.label),
        kind: config.algorithm.name().into(),
        family: config.family.name().into(),
        solver: config.solver.name().into(),
        n: config.n,
        d: config.family.dim(),
        epsilon: config.budget.epsilon,
        delta: config.budget.delta,
        seed: stream.seed(),
        repetition,
        excess_empirical_risk: None,
        excess_population_risk: None,
        empirical_gap: None,
        population_gap: None,
        noise_norm: None,
        gradient_evaluations: 0,
        ledger_epsilon: None,
        ledger_delta: None,
        private: config.noise == NoiseMode::Private,
        status: "ok".into(),
        wall_time_s: 0.0,
        config_index,
        x: None,
        y: None,
    };
    let output = match fill_metrics(config, &stream, &mut record) {
        Ok(out) => Some(out),
        Err(e) => {
            record.status = format!("error:{}", e.to_string().replace([',', '\n'], ";"));
            None
        }
    };
    record.wall_time_s = started.elapsed().as_secs_f64();
    (record, output)
}

fn fill_metrics(config: &UtilityConfig, stream: &SeedStream, record: &mut UtilityRecord) -> Result<DpRunOutput> {
    let mut data_rng = stream.child("data").rng();
    let opts = DpOptions { seed: stream.child("algorithm").seed(), noise: config.noise, mu: config.mu, mu_scale: config.mu_scale, x0: None, y0: None };
    let out = match &config.family {
        Family::Quadratic(f) => {
            let problem = f.problem(f.sample(config.n, &mut data_rng)?)?;
            let out = dispatch_min(config, &problem, &opts)?;
            let x = out.x_projected.clone().expect("min algorithms produce x");
            let best = exact_min_quadratic(&problem, None)?;
            record.excess_empirical_risk =
                Some(problem.empirical_value(&x)? - problem.empirical_value(&best.x)?);
            record.excess_population_risk = Some(f.excess_population_risk(&x)?);
            record.x = Some(x);
            out
        }
        Family::Logistic(f) => {
            let problem = f.problem(f.sample(config.n, &mut data_rng)?)?;
            let out = dispatch_min(config, &problem, &opts)?;
            let x = out.x_projected.clone().expect("min algorithms produce x");
            let best = reference_minimizer(&problem)?;
            record.excess_empirical_risk =
                Some(problem.empirical_value(&x)? - problem.empirical_value(&best)?);
            let holdout = f.sample(config.holdout_factor.max(1) * config.n, &mut stream.child("holdout").rng())?;
            let risk = excess_population_risk(&config.family, &x, Some(&holdout), config.n)?;
            record.excess_population_risk = Some(risk.value);
            if risk.small_holdout {
                record.status = "warn:small-holdout".into();
            }
            record.x = Some(x);
            out
        }
        Family::Bilinear(f) => {
            let problem = f.problem(f.sample(config.n, &mut data_rng)?)?;
            let out = dispatch_saddle(config, &problem, &opts)?;
            let x = out.x_projected.clone().expect("saddle algorithms produce x");
            let y = match &out.y_projected {
                Some(y) => y.clone(),
                // Primal-only outputs pair with the empirical best response.
                None => BilinearObjective::from_problem(&problem)?.best_response_y(&x, &f.domain_y),
            };
            record.empirical_gap = Some(duality_gap_exact(&problem, &x, &y)?);
            record.population_gap = Some(f.population_gap(&x, &y)?);
            record.x = Some(x);
            record.y = Some(y);
            out
        }
    };
    record.noise_norm = noise_norm(&out);
    record.gradient_evaluations = out.gradient_evaluations;
    let total = ledger_total(&out.ledger)?;
    record.ledger_epsilon = Some(total.epsilon);
    record.ledger_delta = Some(total.delta);
    record.private = out.ledger.is_private();
    Ok(out)
}

/// Runs every configuration `repetitions` times on the rayon pool. Records come
/// back in configuration-major order regardless of scheduling.
pub fn utility_sweep(configs: &[UtilityConfig], repetitions: usize) -> Vec<UtilityRecord> {
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..repetitions).map(move |r| (c, r))).collect();
    jobs.par_iter().map(|&(c, r)| run_utility(&configs[c], c, r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStat {
    pub mean: f64,
    /// `None` with fewer than two values.
    pub std_error: Option<f64>,
    pub count: usize,
}

pub fn summary_stat(values: &[f64]) -> Option<SummaryStat> {
    if values.is_empty() {
        return None;
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let std_error = (values.len() > 1).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    });
    Some(SummaryStat { mean, std_error, count: values.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilitySummary {
    pub label: String,
    pub kind: String,
    pub n: usize,
    pub epsilon: f64,
    pub runs: usize,
    pub failures: usize,
    pub population_risk: Option<SummaryStat>,
    pub population_gap: Option<SummaryStat>,
    /// Weak gap of the population objective over all successful repetitions.
    pub weak_gap: Option<f64>,
}

impl UtilitySummary {
    /// Headline utility: mean excess population risk, else the weak gap.
    pub fn utility(&self) -> Option<f64> {
        self.population_risk.as_ref().map(|s| s.mean).or(self.weak_gap)
    }
}

/// Per-configuration aggregation over the repetitions in `records`.
pub fn summarize(configs: &[UtilityConfig], records: &[UtilityRecord]) -> Result<Vec<UtilitySummary>> {
    let mut out = Vec::with_capacity(configs.len());
    for (ci, config) in configs.iter().enumerate() {
        let mine: Vec<&UtilityRecord> = records.iter().filter(|r| r.config_index == ci).collect();
        let ok: Vec<&&UtilityRecord> = mine.iter().filter(|r| !r.status.starts_with("error")).collect();
        let risks: Vec<f64> = ok.iter().filter_map(|r| r.excess_population_risk).collect();
        let gaps: Vec<f64> = ok.iter().filter_map(|r| r.population_gap).collect();
        let weak_gap = match &config.family {
            Family::Bilinear(f) if !ok.is_empty() => {
                let xs: Vec<Vec<f64>> = ok.iter().filter_map(|r| r.x.clone()).collect();
                let ys: Vec<Vec<f64>> = ok.iter().filter_map(|r| r.y.clone()).collect();
                Some(weak_gap_estimate(&f.population_objective(), &xs, &ys, &f.domain_x, &f.domain_y)?)
            }
            _ => None,
        };
        out.push(UtilitySummary {
            label: config.label.clone(),
            kind: config.algorithm.name().into(),
            n: config.n,
            epsilon: config.budget.epsilon,
            runs: mine.len(),
            failures: mine.len() - ok.len(),
            population_risk: summary_stat(&risks),
            population_gap: summary_stat(&gaps),
            weak_gap,
        });
    }
    Ok(out)
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("slope needs at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope needs at least two distinct x values".into()));
    }
    Ok(sxy / sxx)
}
