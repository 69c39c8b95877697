use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::certificate::saddle_certificate;
use super::{check_gamma, log_factor, Meter, DEFAULT_BUDGET_CONSTANT};
use crate::error::{check_dim, Error, Result};
use crate::linalg::dist_sq;
use crate::problem::{BallDomain, MinimaxProblem};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MinimaxSolverKind {
    Gda,
    Extragradient,
    SvrgMinimax,
}

impl MinimaxSolverKind {
    pub const ALL: [MinimaxSolverKind; 3] =
        [MinimaxSolverKind::Gda, MinimaxSolverKind::Extragradient, MinimaxSolverKind::SvrgMinimax];

    pub fn name(self) -> &'static str {
        match self {
            MinimaxSolverKind::Gda => "gda",
            MinimaxSolverKind::Extragradient => "extragradient",
            MinimaxSolverKind::SvrgMinimax => "svrg-minimax",
        }
    }
}

impl fmt::Display for MinimaxSolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MinimaxSolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown saddle solver `{s}` (expected gda, extragradient or svrg-minimax)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxSolverSpec {
    pub kind: MinimaxSolverKind,
    /// Target on the duality gap.
    pub gamma: f64,
    pub step: Option<f64>,
    /// SvrgMinimax inner-loop length; default `max(n, ceil(kappa^2))`.
    pub inner_len: Option<usize>,
    pub budget_constant: f64,
    pub max_evaluations: Option<u64>,
    pub seed: u64,
    /// Keep every certified iterate (GDA/Extragradient) or snapshot (SvrgMinimax).
    pub record_trajectory: bool,
}

impl MinimaxSolverSpec {
    pub fn new(kind: MinimaxSolverKind, gamma: f64, seed: u64) -> Self {
        Self {
            kind,
            gamma,
            step: None,
            inner_len: None,
            budget_constant: DEFAULT_BUDGET_CONSTANT,
            max_evaluations: None,
            seed,
            record_trajectory: false,
        }
    }

    pub fn with_max_evaluations(mut self, limit: u64) -> Self {
        self.max_evaluations = Some(limit);
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_trajectory = true;
        self
    }
}

/// Quadratic anchor regularizer
/// `(mu_x/2)||x - anchor_x||^2 - (mu_y/2)||y - anchor_y||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxRegularizer {
    pub mu_x: f64,
    pub mu_y: f64,
    pub anchor_x: Vec<f64>,
    pub anchor_y: Vec<f64>,
}

impl ProxRegularizer {
    pub fn new(mu_x: f64, mu_y: f64, anchor_x: Vec<f64>, anchor_y: Vec<f64>) -> Result<Self> {
        if !(mu_x >= 0.0 && mu_y >= 0.0 && mu_x.is_finite() && mu_y.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "regularizer moduli must be non-negative, got ({mu_x}, {mu_y})"
            )));
        }
        Ok(Self { mu_x, mu_y, anchor_x, anchor_y })
    }
}

/// Exact proximal step of a quadratic-anchor regularizer followed by
/// projection: `x = Proj((x' + lambda mu_x a_x) / (1 + lambda mu_x))`, and the
/// same for `y`.
pub fn prox_quadratic(
    reg: &ProxRegularizer,
    x_step: &[f64],
    y_step: &[f64],
    lambda: f64,
    domain_x: &BallDomain,
    domain_y: &BallDomain,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("prox step must be positive, got {lambda}")));
    }
    check_dim(reg.anchor_x.len(), x_step.len())?;
    check_dim(reg.anchor_y.len(), y_step.len())?;
    let mut x = x_step.to_vec();
    let mut y = y_step.to_vec();
    prox_in_place(reg.mu_x, &reg.anchor_x, lambda, &mut x);
    prox_in_place(reg.mu_y, &reg.anchor_y, lambda, &mut y);
    domain_x.project_in_place(&mut x);
    domain_y.project_in_place(&mut y);
    Ok((x, y))
}

fn prox_in_place(mu: f64, anchor: &[f64], lambda: f64, v: &mut [f64]) {
    if mu > 0.0 {
        let w = lambda * mu;
        for (vi, ai) in v.iter_mut().zip(anchor) {
            *vi = (*vi + w * ai) / (1.0 + w);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub gradient_evaluations: u64,
    pub planned_evaluations: u64,
    pub evaluation_limit: u64,
    pub iterations: usize,
    /// Certified upper bound on the duality gap at return.
    pub gap_bound: f64,
    /// Per-epoch evaluation count of SvrgMinimax (`n + 2m`).
    pub epoch_evaluations: Option<u64>,
    /// Weighted distance to an external saddle, see [`SaddleResult::with_oracle`].
    pub oracle_distance: Option<f64>,
    pub trajectory: Vec<(Vec<f64>, Vec<f64>)>,
}

impl SaddleResult {
    /// Records `mu_x ||x - x*||^2 + mu_y ||y - y*||^2`.
    pub fn with_oracle(mut self, x_star: &[f64], y_star: &[f64], mu_x: f64, mu_y: f64) -> Self {
        self.oracle_distance = Some(mu_x * dist_sq(&self.x, x_star) + mu_y * dist_sq(&self.y, y_star));
        self
    }
}

/// Planned evaluations from the per-kind complexity shape: `n kappa^2` for
/// GDA, `n kappa` for Extragradient and `n + kappa^2` for SvrgMinimax, with
/// `kappa = max(kappa_x, kappa_y)`.
pub fn iteration_budget_minimax(
    kind: MinimaxSolverKind,
    n: usize,
    kappa_x: f64,
    kappa_y: f64,
    gamma: f64,
    delta0: f64,
) -> u64 {
    iteration_budget_minimax_with(kind, n, kappa_x, kappa_y, gamma, delta0, DEFAULT_BUDGET_CONSTANT)
}

pub fn iteration_budget_minimax_with(
    kind: MinimaxSolverKind,
    n: usize,
    kappa_x: f64,
    kappa_y: f64,
    gamma: f64,
    delta0: f64,
    c: f64,
) -> u64 {
    let kappa = kappa_x.max(kappa_y);
    let n = n as f64;
    let t = match kind {
        MinimaxSolverKind::Gda => n * kappa * kappa,
        MinimaxSolverKind::Extragradient => n * kappa,
        MinimaxSolverKind::SvrgMinimax => n + kappa * kappa,
    };
    (c * t * log_factor(gamma, delta0) as f64).ceil() as u64
}

/// Interchangeable base solver for the private saddle algorithms.
pub trait SaddleSolver: Send + Sync {
    fn solve_to(
        &self,
        problem: &MinimaxProblem,
        reg: Option<&ProxRegularizer>,
        target: f64,
        seed: u64,
    ) -> Result<SaddleResult>;

    fn label(&self) -> String;
}

impl SaddleSolver for MinimaxSolverSpec {
    fn solve_to(
        &self,
        problem: &MinimaxProblem,
        reg: Option<&ProxRegularizer>,
        target: f64,
        seed: u64,
    ) -> Result<SaddleResult> {
        let spec = MinimaxSolverSpec { gamma: target, seed, ..self.clone() };
        solve_saddle(problem, &spec, reg)
    }

    fn label(&self) -> String {
        self.kind.name().to_string()
    }
}

struct Field<'a> {
    problem: &'a MinimaxProblem,
    reg: ProxRegularizer,
    mu_x: f64,
    mu_y: f64,
    /// Smoothness of the data term alone.
    ell: f64,
    /// Smoothness including the regularizer.
    ell_eff: f64,
}

impl Field<'_> {
    fn add_reg(&self, x: &[f64], y: &[f64], gx: &mut [f64], hy: &mut [f64]) {
        let r = &self.reg;
        if r.mu_x > 0.0 {
            for ((g, xi), ai) in gx.iter_mut().zip(x).zip(&r.anchor_x) {
                *g += r.mu_x * (xi - ai);
            }
        }
        if r.mu_y > 0.0 {
            for ((h, yi), ai) in hy.iter_mut().zip(y).zip(&r.anchor_y) {
                *h += r.mu_y * (yi - ai);
            }
        }
    }

    /// Descent field `(grad_x F, -grad_y F)` of the data term.
    fn data_field(&self, x: &[f64], y: &[f64], gx: &mut [f64], hy: &mut [f64]) {
        self.problem.empirical_grad_into(x, y, gx, hy);
        hy.iter_mut().for_each(|v| *v = -*v);
    }

    fn sample_field(&self, x: &[f64], y: &[f64], i: usize, gx: &mut [f64], hy: &mut [f64]) {
        self.problem.loss().grad(x, y, self.problem.samples().row(i), gx, hy);
        hy.iter_mut().for_each(|v| *v = -*v);
    }

    fn full_field(&self, x: &[f64], y: &[f64], gx: &mut [f64], hy: &mut [f64]) {
        self.data_field(x, y, gx, hy);
        self.add_reg(x, y, gx, hy);
    }

    fn certificate(&self, x: &[f64], y: &[f64], gx: &[f64], hy: &[f64]) -> f64 {
        saddle_certificate(self.problem.domain_x(), self.problem.domain_y(), x, y, gx, hy, self.mu_x, self.mu_y)
    }

    fn descend(&self, x: &mut [f64], y: &mut [f64], eta: f64, gx: &[f64], hy: &[f64]) {
        for (a, g) in x.iter_mut().zip(gx) {
            *a -= eta * g;
        }
        for (b, h) in y.iter_mut().zip(hy) {
            *b -= eta * h;
        }
        self.problem.domain_x().project_in_place(x);
        self.problem.domain_y().project_in_place(y);
    }
}

struct Tracker {
    best: (Vec<f64>, Vec<f64>),
    best_cert: f64,
    iterations: usize,
    trajectory: Option<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl Tracker {
    fn observe(&mut self, x: &[f64], y: &[f64], cert: f64) {
        if cert < self.best_cert {
            self.best_cert = cert;
            self.best = (x.to_vec(), y.to_vec());
        }
        if let Some(t) = self.trajectory.as_mut() {
            t.push((x.to_vec(), y.to_vec()));
        }
    }

    fn fail(&self, meter: &Meter) -> Error {
        meter.exceeded(self.best.0.clone(), Some(self.best.1.clone()))
    }
}

/// Solve `min_x max_y F(x, y) + reg` to certified duality gap `gamma`.
pub fn solve_saddle(
    problem: &MinimaxProblem,
    spec: &MinimaxSolverSpec,
    reg: Option<&ProxRegularizer>,
) -> Result<SaddleResult> {
    check_gamma(spec.gamma)?;
    let (dx, dy) = problem.dims();
    let reg = match reg {
        Some(r) => {
            check_dim(dx, r.anchor_x.len())?;
            check_dim(dy, r.anchor_y.len())?;
            r.clone()
        }
        None => ProxRegularizer { mu_x: 0.0, mu_y: 0.0, anchor_x: vec![0.0; dx], anchor_y: vec![0.0; dy] },
    };
    let c = problem.constants();
    let (mu_x, mu_y) = (c.mu_x + reg.mu_x, c.mu_y + reg.mu_y);
    if mu_x <= 0.0 || mu_y <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "effective moduli must be positive, got ({mu_x}, {mu_y}); add a regularizer"
        )));
    }
    let ell = c.smoothness.max(c.mu_x).max(c.mu_y);
    let ell_eff = ell + reg.mu_x.max(reg.mu_y);
    let x0 = if reg.mu_x > 0.0 { problem.domain_x().project(&reg.anchor_x)? } else { problem.domain_x().center().to_vec() };
    let y0 = if reg.mu_y > 0.0 { problem.domain_y().project(&reg.anchor_y)? } else { problem.domain_y().center().to_vec() };
    let field = Field { problem, reg, mu_x, mu_y, ell, ell_eff };
    let mut meter = Meter::new(spec.max_evaluations);
    let mut tracker = Tracker {
        best: (x0.clone(), y0.clone()),
        best_cert: f64::INFINITY,
        iterations: 0,
        trajectory: spec.record_trajectory.then(Vec::new),
    };
    let mut epoch_evaluations = None;
    let (x, y) = match spec.kind {
        MinimaxSolverKind::Gda | MinimaxSolverKind::Extragradient => {
            run_full_batch(&field, spec, x0, y0, &mut meter, &mut tracker)?
        }
        MinimaxSolverKind::SvrgMinimax => {
            let mut rng = SeedStream::new(spec.seed).rng();
            run_svrg(&field, spec, x0, y0, &mut rng, &mut meter, &mut tracker, &mut epoch_evaluations)?
        }
    };
    Ok(SaddleResult {
        x,
        y,
        gradient_evaluations: meter.used,
        planned_evaluations: meter.planned,
        evaluation_limit: meter.limit,
        iterations: tracker.iterations,
        gap_bound: tracker.best_cert,
        epoch_evaluations,
        oracle_distance: None,
        trajectory: tracker.trajectory.unwrap_or_default(),
    })
}

/// Simultaneous projected GDA (step `mu_min / (2 ell_eff^2)`) or
/// Extragradient (step `1/(4 ell_eff)`), certified at every iterate.
fn run_full_batch(
    field: &Field<'_>,
    spec: &MinimaxSolverSpec,
    mut x: Vec<f64>,
    mut y: Vec<f64>,
    meter: &mut Meter,
    tracker: &mut Tracker,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = field.problem.n() as u64;
    let (dx, dy) = field.problem.dims();
    let mu_min = field.mu_x.min(field.mu_y);
    let extragradient = spec.kind == MinimaxSolverKind::Extragradient;
    let eta = spec.step.unwrap_or(if extragradient {
        1.0 / (4.0 * field.ell_eff)
    } else {
        mu_min / (2.0 * field.ell_eff * field.ell_eff)
    });
    let step_cost = if extragradient { n } else { 0 };
    let (mut gx, mut hy) = (vec![0.0; dx], vec![0.0; dy]);
    let (mut gx2, mut hy2) = (vec![0.0; dx], vec![0.0; dy]);
    let mut first = true;
    loop {
        if !meter.can_afford(n) {
            return Err(tracker.fail(meter));
        }
        meter.charge(n);
        field.full_field(&x, &y, &mut gx, &mut hy);
        let cert = field.certificate(&x, &y, &gx, &hy);
        if first {
            first = false;
            let planned = iteration_budget_minimax_with(
                spec.kind,
                n as usize,
                field.ell_eff / field.mu_x,
                field.ell_eff / field.mu_y,
                spec.gamma,
                cert,
                spec.budget_constant,
            );
            meter.plan(planned, spec.max_evaluations, 100 * n);
        }
        tracker.observe(&x, &y, cert);
        if cert <= spec.gamma {
            return Ok((x, y));
        }
        if extragradient {
            if !meter.can_afford(step_cost) {
                return Err(tracker.fail(meter));
            }
            meter.charge(step_cost);
            let (mut xh, mut yh) = (x.clone(), y.clone());
            field.descend(&mut xh, &mut yh, eta, &gx, &hy);
            field.full_field(&xh, &yh, &mut gx2, &mut hy2);
            field.descend(&mut x, &mut y, eta, &gx2, &hy2);
        } else {
            field.descend(&mut x, &mut y, eta, &gx, &hy);
        }
        tracker.iterations += 1;
    }
}

/// Variance-reduced field steps on the data term followed by an exact prox
/// step on the regularizer, so the regularizer never enters the step size.
///
/// Step `min(1/(8 ell), mu_min/(4 ell^2))` and inner length
/// `max(n, ceil(kappa^2))` with `kappa = ell / mu_min`, where `ell` is the
/// smoothness of the data term only.
#[allow(clippy::too_many_arguments)]
fn run_svrg<R: Rng>(
    field: &Field<'_>,
    spec: &MinimaxSolverSpec,
    x0: Vec<f64>,
    y0: Vec<f64>,
    rng: &mut R,
    meter: &mut Meter,
    tracker: &mut Tracker,
    epoch_evaluations: &mut Option<u64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = field.problem.n();
    let (dx, dy) = field.problem.dims();
    let mu_min = field.mu_x.min(field.mu_y);
    let ell = field.ell.max(mu_min);
    let kappa = ell / mu_min;
    let eta = spec.step.unwrap_or((1.0 / (8.0 * ell)).min(mu_min / (4.0 * ell * ell)));
    let m = spec.inner_len.unwrap_or_else(|| n.max((kappa * kappa).ceil() as usize)).max(1);
    let epoch_cost = n as u64 + 2 * m as u64;
    *epoch_evaluations = Some(epoch_cost);

    let dom_x = field.problem.domain_x();
    let dom_y = field.problem.domain_y();
    let (mut wx, mut wy) = (x0, y0);
    let (mut fx, mut fy) = (vec![0.0; dx], vec![0.0; dy]);
    let (mut cx, mut cy) = (vec![0.0; dx], vec![0.0; dy]);
    let (mut ax, mut ay) = (vec![0.0; dx], vec![0.0; dy]);
    let (mut bx, mut by) = (vec![0.0; dx], vec![0.0; dy]);
    let mut first = true;
    loop {
        if !meter.can_afford(n as u64) {
            return Err(tracker.fail(meter));
        }
        meter.charge(n as u64);
        field.data_field(&wx, &wy, &mut fx, &mut fy);
        cx.copy_from_slice(&fx);
        cy.copy_from_slice(&fy);
        field.add_reg(&wx, &wy, &mut cx, &mut cy);
        let cert = field.certificate(&wx, &wy, &cx, &cy);
        if first {
            first = false;
            let planned = iteration_budget_minimax_with(spec.kind, n, kappa, kappa, spec.gamma, cert, spec.budget_constant);
            meter.plan(planned, spec.max_evaluations, 20 * epoch_cost);
        }
        tracker.observe(&wx, &wy, cert);
        if cert <= spec.gamma {
            return Ok((wx, wy));
        }
        if !meter.can_afford(epoch_cost - n as u64) {
            return Err(tracker.fail(meter));
        }
        meter.charge(epoch_cost - n as u64);
        let (mut x, mut y) = (wx.clone(), wy.clone());
        for _ in 0..m {
            let i = rng.random_range(0..n);
            field.sample_field(&x, &y, i, &mut ax, &mut ay);
            field.sample_field(&wx, &wy, i, &mut bx, &mut by);
            for k in 0..dx {
                x[k] -= eta * (ax[k] - bx[k] + fx[k]);
            }
            for k in 0..dy {
                y[k] -= eta * (ay[k] - by[k] + fy[k]);
            }
            prox_in_place(field.reg.mu_x, &field.reg.anchor_x, eta, &mut x);
            prox_in_place(field.reg.mu_y, &field.reg.anchor_y, eta, &mut y);
            dom_x.project_in_place(&mut x);
            dom_y.project_in_place(&mut y);
        }
        wx = x;
        wy = y;
        tracker.iterations += 1;
    }
}
