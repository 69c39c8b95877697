use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use super::certificate::min_certificate;
use super::{check_gamma, log_factor, Meter, DEFAULT_BUDGET_CONSTANT};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dist};
use crate::problem::{AnchorRegularizer, MinProblem};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MinSolverKind {
    Sgd,
    Svrg,
    Sarah,
}

impl MinSolverKind {
    pub const ALL: [MinSolverKind; 3] = [MinSolverKind::Sgd, MinSolverKind::Svrg, MinSolverKind::Sarah];

    pub fn name(self) -> &'static str {
        match self {
            MinSolverKind::Sgd => "sgd",
            MinSolverKind::Svrg => "svrg",
            MinSolverKind::Sarah => "sarah",
        }
    }
}

impl fmt::Display for MinSolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MinSolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown minimization solver `{s}` (expected sgd, svrg or sarah)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinSolverSpec {
    pub kind: MinSolverKind,
    /// Target on `F(x) - min F`.
    pub gamma: f64,
    /// Overrides the default step (`1/(4 ell_eff)` for SVRG/SARAH, the
    /// initial scale of the decaying SGD schedule otherwise).
    pub step: Option<f64>,
    /// Inner-loop length for SVRG/SARAH; default `max(n, ceil(8 kappa_eff))`.
    pub inner_len: Option<usize>,
    pub budget_constant: f64,
    /// Hard cap on per-sample gradient evaluations. Defaults to a multiple
    /// of the planned budget.
    pub max_evaluations: Option<u64>,
    pub seed: u64,
    /// Keep the point reached at every certificate check.
    pub record_epochs: bool,
}

impl MinSolverSpec {
    pub fn new(kind: MinSolverKind, gamma: f64, seed: u64) -> Self {
        Self {
            kind,
            gamma,
            step: None,
            inner_len: None,
            budget_constant: DEFAULT_BUDGET_CONSTANT,
            max_evaluations: None,
            seed,
            record_epochs: false,
        }
    }

    pub fn with_max_evaluations(mut self, limit: u64) -> Self {
        self.max_evaluations = Some(limit);
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_epochs = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinSolveResult {
    pub point: Vec<f64>,
    pub gradient_evaluations: u64,
    pub planned_evaluations: u64,
    pub evaluation_limit: u64,
    /// Number of certificate checks performed after the initial one.
    pub epochs: usize,
    /// Certified upper bound on `F(point) - min F` at return.
    pub suboptimality_bound: f64,
    /// Distance to an externally supplied optimum, see [`MinSolveResult::with_oracle`].
    pub oracle_distance: Option<f64>,
    pub epoch_points: Vec<Vec<f64>>,
}

impl MinSolveResult {
    pub fn with_oracle(mut self, optimum: &[f64]) -> Self {
        self.oracle_distance = Some(dist(&self.point, optimum));
        self
    }
}

/// Planned gradient evaluations `c (n + kappa) ceil(ln(delta0/gamma))`.
pub fn iteration_budget_min(kind: MinSolverKind, n: usize, kappa: f64, gamma: f64, delta0: f64) -> u64 {
    iteration_budget_min_with(kind, n, kappa, gamma, delta0, DEFAULT_BUDGET_CONSTANT)
}

pub fn iteration_budget_min_with(
    _kind: MinSolverKind,
    n: usize,
    kappa: f64,
    gamma: f64,
    delta0: f64,
    c: f64,
) -> u64 {
    let logs = log_factor(gamma, delta0);
    (c * (n as f64 + kappa) * logs as f64).ceil() as u64
}

/// Interchangeable base solver for the private minimization algorithms.
pub trait MinSolver: Send + Sync {
    /// Solve `problem` (plus optional anchor regularizer) to suboptimality
    /// `target`, drawing randomness from `seed`.
    fn solve_to(
        &self,
        problem: &MinProblem,
        reg: Option<&AnchorRegularizer>,
        target: f64,
        seed: u64,
    ) -> Result<MinSolveResult>;

    fn label(&self) -> String;
}

impl MinSolver for MinSolverSpec {
    fn solve_to(
        &self,
        problem: &MinProblem,
        reg: Option<&AnchorRegularizer>,
        target: f64,
        seed: u64,
    ) -> Result<MinSolveResult> {
        let spec = MinSolverSpec { gamma: target, seed, ..self.clone() };
        solve_min(problem, &spec, reg)
    }

    fn label(&self) -> String {
        self.kind.name().to_string()
    }
}

struct Objective<'a> {
    problem: &'a MinProblem,
    reg_mu: f64,
    anchor: Vec<f64>,
    mu_eff: f64,
    ell_eff: f64,
}

impl Objective<'_> {
    fn sample_grad(&self, x: &[f64], i: usize, out: &mut [f64]) {
        self.problem.loss().grad(x, self.problem.samples().row(i), out);
        if self.reg_mu > 0.0 {
            for ((o, xi), ai) in out.iter_mut().zip(x).zip(&self.anchor) {
                *o += self.reg_mu * (xi - ai);
            }
        }
    }

    fn full_grad(&self, x: &[f64], out: &mut [f64]) {
        self.problem.empirical_grad_into(x, out);
        if self.reg_mu > 0.0 {
            for ((o, xi), ai) in out.iter_mut().zip(x).zip(&self.anchor) {
                *o += self.reg_mu * (xi - ai);
            }
        }
    }

    fn certificate(&self, x: &[f64], g: &[f64]) -> f64 {
        min_certificate(self.problem.domain(), x, g, self.mu_eff)
    }

    fn step_to(&self, x: &mut [f64], eta: f64, v: &[f64]) {
        axpy(-eta, v, x);
        self.problem.domain().project_in_place(x);
    }
}

struct Tracker {
    best: Vec<f64>,
    best_cert: f64,
    epochs: usize,
    points: Option<Vec<Vec<f64>>>,
}

impl Tracker {
    fn observe(&mut self, x: &[f64], cert: f64) {
        if cert < self.best_cert {
            self.best_cert = cert;
            self.best = x.to_vec();
        }
        if let Some(p) = self.points.as_mut() {
            p.push(x.to_vec());
        }
    }
}

/// Solve the (optionally anchor-regularized) empirical problem
/// `min_x F(x) + (mu_reg/2)||x - anchor||^2` to certified suboptimality `gamma`.
pub fn solve_min(problem: &MinProblem, spec: &MinSolverSpec, reg: Option<&AnchorRegularizer>) -> Result<MinSolveResult> {
    check_gamma(spec.gamma)?;
    let d = problem.dim();
    let (reg_mu, anchor) = match reg {
        Some(r) => {
            check_dim(d, r.anchor.len())?;
            (r.mu, r.anchor.clone())
        }
        None => (0.0, vec![0.0; d]),
    };
    let c = problem.constants();
    let mu_eff = c.strong_convexity + reg_mu;
    if mu_eff <= 0.0 {
        return Err(Error::InvalidArgument(
            "effective strong convexity is zero; supply a regularizer or a strongly convex loss".into(),
        ));
    }
    let ell_eff = c.smoothness.max(c.strong_convexity) + reg_mu;
    let obj = Objective { problem, reg_mu, anchor, mu_eff, ell_eff };

    let start = if reg_mu > 0.0 {
        problem.domain().project(&obj.anchor)?
    } else {
        problem.domain().center().to_vec()
    };
    let mut rng = SeedStream::new(spec.seed).rng();
    let mut meter = Meter::new(spec.max_evaluations);
    let mut tracker = Tracker {
        best: start.clone(),
        best_cert: f64::INFINITY,
        epochs: 0,
        points: spec.record_epochs.then(Vec::new),
    };
    let point = match spec.kind {
        MinSolverKind::Svrg | MinSolverKind::Sarah => run_variance_reduced(&obj, spec, start, &mut rng, &mut meter, &mut tracker)?,
        MinSolverKind::Sgd => run_sgd(&obj, spec, start, &mut rng, &mut meter, &mut tracker)?,
    };
    Ok(MinSolveResult {
        point,
        gradient_evaluations: meter.used,
        planned_evaluations: meter.planned,
        evaluation_limit: meter.limit,
        epochs: tracker.epochs,
        suboptimality_bound: tracker.best_cert,
        oracle_distance: None,
        epoch_points: tracker.points.unwrap_or_default(),
    })
}

fn run_variance_reduced<R: Rng>(
    obj: &Objective<'_>,
    spec: &MinSolverSpec,
    start: Vec<f64>,
    rng: &mut R,
    meter: &mut Meter,
    tracker: &mut Tracker,
) -> Result<Vec<f64>> {
    let n = obj.problem.n();
    let d = obj.problem.dim();
    let kappa = obj.ell_eff / obj.mu_eff;
    let eta = spec.step.unwrap_or(1.0 / (4.0 * obj.ell_eff));
    let m = spec.inner_len.unwrap_or_else(|| n.max((8.0 * kappa).ceil() as usize)).max(1);
    let epoch_cost = n as u64 + 2 * m as u64;

    let mut w = start;
    let mut full = vec![0.0; d];
    let (mut gi, mut gw, mut v) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    loop {
        if !meter.can_afford(n as u64) {
            return Err(meter.exceeded(tracker.best.clone(), None));
        }
        meter.charge(n as u64);
        obj.full_grad(&w, &mut full);
        let cert = obj.certificate(&w, &full);
        if meter.planned == 0 && tracker.best_cert.is_infinite() {
            let planned = iteration_budget_min_with(spec.kind, n, kappa, spec.gamma, cert, spec.budget_constant);
            meter.plan(planned, spec.max_evaluations, 20 * epoch_cost);
        }
        tracker.observe(&w, cert);
        if cert <= spec.gamma {
            return Ok(w);
        }
        if !meter.can_afford(epoch_cost - n as u64) {
            return Err(meter.exceeded(tracker.best.clone(), None));
        }
        meter.charge(epoch_cost - n as u64);
        let mut x = w.clone();
        match spec.kind {
            MinSolverKind::Svrg => {
                for _ in 0..m {
                    let i = rng.random_range(0..n);
                    obj.sample_grad(&x, i, &mut gi);
                    obj.sample_grad(&w, i, &mut gw);
                    for k in 0..d {
                        v[k] = gi[k] - gw[k] + full[k];
                    }
                    obj.step_to(&mut x, eta, &v);
                }
            }
            MinSolverKind::Sarah => {
                v.copy_from_slice(&full);
                let mut prev = x.clone();
                obj.step_to(&mut x, eta, &v);
                for _ in 1..m {
                    let i = rng.random_range(0..n);
                    obj.sample_grad(&x, i, &mut gi);
                    obj.sample_grad(&prev, i, &mut gw);
                    for k in 0..d {
                        v[k] += gi[k] - gw[k];
                    }
                    prev.copy_from_slice(&x);
                    obj.step_to(&mut x, eta, &v);
                }
            }
            MinSolverKind::Sgd => unreachable!("handled by run_sgd"),
        }
        w = x;
        tracker.epochs += 1;
    }
}

/// Random-reshuffling SGD with step `1/(mu_eff (t + t0))`. The offset
/// `t0 = ceil(kappa_eff) - 1` keeps the first steps below `1/ell_eff`; on
/// isotropic quadratics it is zero and every epoch ends at the exact mean.
fn run_sgd<R: Rng>(
    obj: &Objective<'_>,
    spec: &MinSolverSpec,
    start: Vec<f64>,
    rng: &mut R,
    meter: &mut Meter,
    tracker: &mut Tracker,
) -> Result<Vec<f64>> {
    let n = obj.problem.n();
    let d = obj.problem.dim();
    let kappa = obj.ell_eff / obj.mu_eff;
    let t0 = (kappa.ceil() - 1.0).max(0.0);
    let scale = spec.step.map(|s| s * obj.mu_eff).unwrap_or(1.0);
    let mut x = start;
    let mut full = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0.0;
    loop {
        if !meter.can_afford(n as u64) {
            return Err(meter.exceeded(tracker.best.clone(), None));
        }
        meter.charge(n as u64);
        obj.full_grad(&x, &mut full);
        let cert = obj.certificate(&x, &full);
        if meter.planned == 0 && tracker.best_cert.is_infinite() {
            let planned = iteration_budget_min_with(spec.kind, n, kappa, spec.gamma, cert, spec.budget_constant);
            meter.plan(planned, spec.max_evaluations, 40 * n as u64);
        }
        tracker.observe(&x, cert);
        if cert <= spec.gamma {
            return Ok(x);
        }
        if !meter.can_afford(n as u64) {
            return Err(meter.exceeded(tracker.best.clone(), None));
        }
        meter.charge(n as u64);
        order.shuffle(rng);
        for &i in &order {
            t += 1.0;
            obj.sample_grad(&x, i, &mut g);
            obj.step_to(&mut x, scale / (obj.mu_eff * (t + t0)), &g);
        }
        tracker.epochs += 1;
    }
}
