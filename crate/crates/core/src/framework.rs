//! Output-perturbation algorithms built on interchangeable base solvers.
//!
//! * [`dp_sc_minimize`]: strongly convex minimization, one noised solve.
//! * [`dp_convex_minimize_phased`]: convex minimization over `K = floor(log2 n)`
//!   disjoint blocks with doubling anchor regularization.
//! * [`dp_scsc_saddle`]: strongly-convex-strongly-concave saddle problems.
//! * [`dp_cc_saddle_primal`], [`dp_cc_saddle_dual`], [`dp_cc_saddle`]:
//!   convex-concave saddle problems through two phased halves.
//! * [`dp_csc_saddle`]: convex-strongly-concave variant without a `y` regularizer.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::mechanisms::{
    add_gaussian_noise, CompositionGroup, LedgerEntry, PartitionId, PrivacyBudget, PrivacyLedger,
};
use crate::problem::{partition_ranges, AnchorRegularizer, MinProblem, MinimaxProblem};
use crate::rng::SeedStream;
use crate::solvers::{MinSolver, ProxRegularizer, SaddleSolver};

pub const DATASET_LABEL: &str = "S";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleMode {
    ConvexMin,
    ConvexConcave,
    /// Convex-strongly-concave with the certified `mu_y`.
    Csc { mu_y: f64 },
}

/// Phase plan for the phased algorithms. Index `k - 1` holds phase `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    pub mode: ScheduleMode,
    pub phases: usize,
    pub blocks: Vec<Range<usize>>,
    pub mu: f64,
    pub mu_k: Vec<f64>,
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Budget claimed by each phase's mechanism.
    pub phase_budget: PrivacyBudget,
}

impl PhaseSchedule {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Range::len).collect()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `K = floor(log2 n)` blocks with `mu_k = mu 2^k` and the mode's noise
/// scales and accuracy targets, each computed from the block's actual size.
pub fn make_phase_schedule(
    n: usize,
    mu: f64,
    lipschitz: f64,
    budget: PrivacyBudget,
    mode: ScheduleMode,
) -> Result<PhaseSchedule> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("phased algorithms need n >= 4, got {n}")));
    }
    check_positive("mu", mu)?;
    check_positive("Lipschitz constant", lipschitz)?;
    let k = n.ilog2() as usize;
    let blocks = partition_ranges(n, k)?;
    let (eps, delta, l) = (budget.epsilon, budget.delta, lipschitz);
    let mu_k: Vec<f64> = (1..=k).map(|i| mu * 2f64.powi(i as i32)).collect();
    let mut sigma = Vec::with_capacity(k);
    let mut gamma = Vec::with_capacity(k);
    for (block, &m) in blocks.iter().zip(&mu_k) {
        let nb = block.len() as f64;
        let (s, g) = match mode {
            ScheduleMode::ConvexMin => (
                4.0 * l * (2.0 * (2.5 / delta).ln()).sqrt() / (m * nb * eps),
                delta * delta * l * l / (32.0 * m * nb * nb),
            ),
            ScheduleMode::ConvexConcave => (
                (8.0 * l / (nb * eps)) * (2.0 * (5.0 / delta).ln() / (m * mu)).sqrt(),
                delta * l * l / (16.0 * mu * nb * nb),
            ),
            ScheduleMode::Csc { mu_y } => {
                let low = m.min(mu_y);
                (
                    (4.0 * l / (nb * eps)) * (2.0 * (2.5 / delta).ln() / (m * low)).sqrt(),
                    delta * l * l / (8.0 * nb * nb * low),
                )
            }
        };
        sigma.push(s);
        gamma.push(g);
    }
    let phase_budget = match mode {
        ScheduleMode::ConvexConcave => budget.half(),
        _ => budget,
    };
    Ok(PhaseSchedule { mode, phases: k, blocks, mu, mu_k, sigma, gamma, phase_budget })
}

/// Default regularization base `mu` for each phased mode (natural logs).
pub fn default_mu(lipschitz: f64, diameter: f64, n: usize, d: usize, budget: PrivacyBudget, mode: ScheduleMode) -> f64 {
    let (nf, df) = (n as f64, d as f64);
    let (eps, delta) = (budget.epsilon, budget.delta);
    let ratio = lipschitz / diameter;
    match mode {
        ScheduleMode::ConvexMin => {
            ratio * (1.0 / nf.sqrt()).max(14.0 * nf.ln() * (df * (2.5 / delta).ln()).sqrt() / (nf * eps))
        }
        ScheduleMode::ConvexConcave => {
            ratio * (2.0 / nf.sqrt()).max(13.0 * nf.ln() * (df * (5.0 / delta).ln()).sqrt() / (nf * eps))
        }
        ScheduleMode::Csc { .. } => {
            3.0 * ratio * (1.0 / nf.sqrt()).max(4.0 * nf.ln() * (df * (2.5 / delta).ln()).sqrt() / (nf * eps))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Private,
    /// Testing only: no noise is drawn and ledger entries are marked non-private.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DpOptions {
    pub seed: u64,
    pub noise: NoiseMode,
    /// Overrides [`default_mu`] for the phased algorithms.
    pub mu: Option<f64>,
    /// Multiplies [`default_mu`] when `mu` is unset; `1.0` when absent.
    pub mu_scale: Option<f64>,
    /// Initial `x` anchor; defaults to the domain center.
    pub x0: Option<Vec<f64>>,
    /// Initial `y` anchor; defaults to the domain center.
    pub y0: Option<Vec<f64>>,
}

impl DpOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn without_noise(mut self) -> Self {
        self.noise = NoiseMode::Disabled;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    fn resolve_mu(&self, default: impl FnOnce() -> f64) -> f64 {
        self.mu.unwrap_or_else(|| self.mu_scale.unwrap_or(1.0) * default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ScMin,
    ConvexMinPhased,
    ScScSaddle,
    CcPrimal,
    CcDual,
    CcSaddle,
    CscSaddle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ScMin => "sc-min",
            Algorithm::ConvexMinPhased => "convex-min-phased",
            Algorithm::ScScSaddle => "scsc-saddle",
            Algorithm::CcPrimal => "cc-primal",
            Algorithm::CcDual => "cc-dual",
            Algorithm::CcSaddle => "cc-saddle",
            Algorithm::CscSaddle => "csc-saddle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    X,
    Y,
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variable::X => "x",
            Variable::Y => "y",
        })
    }
}

/// One Gaussian perturbation of a solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrace {
    pub variable: Variable,
    /// Applied scale; zero in no-noise mode.
    pub sigma: f64,
    pub noised: Vec<f64>,
    /// Post-processing copy projected back onto the domain.
    pub projected: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    /// Which algorithm half produced the phase (`main`, `primal` or `dual`).
    pub label: String,
    /// 1-based phase index.
    pub phase: usize,
    pub block: Range<usize>,
    pub mu_k: f64,
    pub gamma: f64,
    pub anchor_x: Option<Vec<f64>>,
    pub anchor_y: Option<Vec<f64>>,
    pub solution_x: Vec<f64>,
    pub solution_y: Option<Vec<f64>>,
    pub gradient_evaluations: u64,
    /// Certified suboptimality (or duality gap) bound of the phase solve.
    pub certificate: f64,
    pub noise: Vec<NoiseTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpRunOutput {
    pub algorithm: Algorithm,
    /// Mechanism outputs (raw noised points).
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub x_pre_noise: Option<Vec<f64>>,
    pub y_pre_noise: Option<Vec<f64>>,
    pub x_projected: Option<Vec<f64>>,
    pub y_projected: Option<Vec<f64>>,
    pub ledger: PrivacyLedger,
    pub trace: Vec<PhaseTrace>,
    pub schedule: Option<PhaseSchedule>,
    pub seed: u64,
    pub gradient_evaluations: u64,
}

impl DpRunOutput {
    fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            x: None,
            y: None,
            x_pre_noise: None,
            y_pre_noise: None,
            x_projected: None,
            y_projected: None,
            ledger: PrivacyLedger::new(),
            trace: Vec::new(),
            schedule: None,
            seed,
            gradient_evaluations: 0,
        }
    }
}

fn perturb(
    variable: Variable,
    point: &[f64],
    sigma: f64,
    mode: NoiseMode,
    stream: SeedStream,
    domain: &crate::problem::BallDomain,
) -> NoiseTrace {
    let sigma = match mode {
        NoiseMode::Private => sigma,
        NoiseMode::Disabled => 0.0,
    };
    let noised = add_gaussian_noise(point, sigma, &mut stream.rng());
    let mut projected = noised.clone();
    domain.project_in_place(&mut projected);
    NoiseTrace { variable, sigma, noised, projected }
}

fn ledger_entry(id: String, budget: PrivacyBudget, block: &Range<usize>, group: CompositionGroup, mode: NoiseMode) -> LedgerEntry {
    LedgerEntry {
        mechanism: id,
        budget,
        partition: PartitionId::new(DATASET_LABEL, block.start, block.end),
        group,
        private: mode == NoiseMode::Private,
    }
}

fn phase_failed(phase: usize, completed: &[PhaseTrace], source: Error) -> Error {
    Error::PhaseFailed { phase, completed: completed.to_vec(), source: Box::new(source) }
}

fn check_lipschitz(l: f64) -> Result<()> {
    check_positive("certified Lipschitz constant", l)
}

/// Strongly convex minimization: solve to `gamma = delta^2 L^2/(32 mu n^2)`
/// and add `N(0, sigma^2 I)` with `sigma = 4L sqrt(2 ln(2.5/delta))/(mu n eps)`.
pub fn dp_sc_minimize<S: MinSolver + ?Sized>(
    problem: &MinProblem,
    budget: PrivacyBudget,
    base: &S,
    opts: &DpOptions,
) -> Result<DpRunOutput> {
    let c = problem.constants();
    check_positive("strong convexity", c.strong_convexity)
        .map_err(|_| Error::InvalidArgument("strongly convex minimization needs a certified mu > 0".into()))?;
    check_lipschitz(c.lipschitz)?;
    let (n, mu, l) = (problem.n() as f64, c.strong_convexity, c.lipschitz);
    let (eps, delta) = (budget.epsilon, budget.delta);
    let gamma = delta * delta * l * l / (32.0 * mu * n * n);
    let sigma = 4.0 * l * (2.0 * (2.5 / delta).ln()).sqrt() / (mu * n * eps);

    let root = SeedStream::new(opts.seed);
    let res = base
        .solve_to(problem, None, gamma, root.child("solver").seed())
        .map_err(|e| phase_failed(1, &[], e))?;
    let noise = perturb(Variable::X, &res.point, sigma, opts.noise, root.child("noise"), problem.domain());
    let block = 0..problem.n();
    let mut out = DpRunOutput::new(Algorithm::ScMin, opts.seed);
    out.ledger.record(ledger_entry("gaussian:x".into(), budget, &block, CompositionGroup::Sequential, opts.noise))?;
    out.x = Some(noise.noised.clone());
    out.x_projected = Some(noise.projected.clone());
    out.x_pre_noise = Some(res.point.clone());
    out.gradient_evaluations = res.gradient_evaluations;
    out.trace.push(PhaseTrace {
        label: "main".into(),
        phase: 1,
        block,
        mu_k: 0.0,
        gamma,
        anchor_x: None,
        anchor_y: None,
        solution_x: res.point,
        solution_y: None,
        gradient_evaluations: res.gradient_evaluations,
        certificate: res.suboptimality_bound,
        noise: vec![noise],
    });
    Ok(out)
}

fn start_point(given: &Option<Vec<f64>>, domain: &crate::problem::BallDomain) -> Result<Vec<f64>> {
    match given {
        Some(p) => {
            crate::error::check_dim(domain.dim(), p.len())?;
            if !domain.contains(p) {
                return Err(Error::InvalidArgument("initial anchor lies outside the domain".into()));
            }
            Ok(p.clone())
        }
        None => Ok(domain.center().to_vec()),
    }
}

/// Radius bound `D` with `||x|| <= D` on every domain involved.
pub fn min_diameter(problem: &MinProblem) -> f64 {
    problem.domain().max_norm()
}

pub fn minimax_diameter(problem: &MinimaxProblem) -> f64 {
    problem.domain_x().max_norm().max(problem.domain_y().max_norm())
}

/// Phased output perturbation for convex (possibly non-strongly convex)
/// minimization.
pub fn dp_convex_minimize_phased<S: MinSolver + ?Sized>(
    problem: &MinProblem,
    budget: PrivacyBudget,
    base: &S,
    opts: &DpOptions,
) -> Result<DpRunOutput> {
    let c = problem.constants();
    check_lipschitz(c.lipschitz)?;
    let n = problem.n();
    let mode = ScheduleMode::ConvexMin;
    let mu = opts.resolve_mu(|| default_mu(c.lipschitz, min_diameter(problem), n, problem.dim(), budget, mode));
    let schedule = make_phase_schedule(n, mu, c.lipschitz, budget, mode)?;
    let root = SeedStream::new(opts.seed);
    let mut anchor = start_point(&opts.x0, problem.domain())?;
    let mut out = DpRunOutput::new(Algorithm::ConvexMinPhased, opts.seed);
    for k in 0..schedule.phases {
        let block = schedule.blocks[k].clone();
        let sub = problem.with_samples(problem.samples().slice(block.clone())?)?;
        let reg = AnchorRegularizer::new(schedule.mu_k[k], anchor.clone())?;
        let res = base
            .solve_to(&sub, Some(&reg), schedule.gamma[k], root.child_indexed("solver", k as u64).seed())
            .map_err(|e| phase_failed(k + 1, &out.trace, e))?;
        let noise = perturb(
            Variable::X,
            &res.point,
            schedule.sigma[k],
            opts.noise,
            root.child_indexed("noise", k as u64),
            problem.domain(),
        );
        out.ledger.record(ledger_entry(
            format!("gaussian:x:phase{}", k + 1),
            schedule.phase_budget,
            &block,
            CompositionGroup::Parallel("phases".into()),
            opts.noise,
        ))?;
        out.gradient_evaluations += res.gradient_evaluations;
        out.x_pre_noise = Some(res.point.clone());
        out.x_projected = Some(noise.projected.clone());
        let next = noise.noised.clone();
        out.trace.push(PhaseTrace {
            label: "main".into(),
            phase: k + 1,
            block,
            mu_k: schedule.mu_k[k],
            gamma: schedule.gamma[k],
            anchor_x: Some(anchor),
            anchor_y: None,
            solution_x: res.point,
            solution_y: None,
            gradient_evaluations: res.gradient_evaluations,
            certificate: res.suboptimality_bound,
            noise: vec![noise],
        });
        anchor = next;
    }
    out.x = Some(anchor);
    out.schedule = Some(schedule);
    Ok(out)
}

/// Strongly-convex-strongly-concave saddle problems: solve to duality gap
/// `gamma = delta L^2/(16 mu n^2)` with `mu = min(mu_x, mu_y)`, then perturb
/// both blocks, each under `(eps/2, delta/2)`.
pub fn dp_scsc_saddle<S: SaddleSolver + ?Sized>(
    problem: &MinimaxProblem,
    budget: PrivacyBudget,
    base: &S,
    opts: &DpOptions,
) -> Result<DpRunOutput> {
    let c = problem.constants();
    if !(c.mu_x > 0.0 && c.mu_y > 0.0) {
        return Err(Error::InvalidArgument(
            "the strongly-convex-strongly-concave algorithm needs certified mu_x, mu_y > 0".into(),
        ));
    }
    check_lipschitz(c.lipschitz)?;
    let (n, l) = (problem.n() as f64, c.lipschitz);
    let (eps, delta) = (budget.epsilon, budget.delta);
    let mu = c.mu_x.min(c.mu_y);
    let gamma = delta * l * l / (16.0 * mu * n * n);
    let scale = |m: f64| (8.0 * l / (n * eps)) * (2.0 * (5.0 / delta).ln() / (m * mu)).sqrt();
    let (sigma_x, sigma_y) = (scale(c.mu_x), scale(c.mu_y));

    let root = SeedStream::new(opts.seed);
    let res = base
        .solve_to(problem, None, gamma, root.child("solver").seed())
        .map_err(|e| phase_failed(1, &[], e))?;
    let nx = perturb(Variable::X, &res.x, sigma_x, opts.noise, root.child("noise-x"), problem.domain_x());
    let ny = perturb(Variable::Y, &res.y, sigma_y, opts.noise, root.child("noise-y"), problem.domain_y());
    let block = 0..problem.n();
    let mut out = DpRunOutput::new(Algorithm::ScScSaddle, opts.seed);
    for var in ["x", "y"] {
        out.ledger.record(ledger_entry(
            format!("gaussian:{var}"),
            budget.half(),
            &block,
            CompositionGroup::Sequential,
            opts.noise,
        ))?;
    }
    out.x = Some(nx.noised.clone());
    out.y = Some(ny.noised.clone());
    out.x_projected = Some(nx.projected.clone());
    out.y_projected = Some(ny.projected.clone());
    out.x_pre_noise = Some(res.x.clone());
    out.y_pre_noise = Some(res.y.clone());
    out.gradient_evaluations = res.gradient_evaluations;
    out.trace.push(PhaseTrace {
        label: "main".into(),
        phase: 1,
        block,
        mu_k: 0.0,
        gamma,
        anchor_x: None,
        anchor_y: None,
        solution_x: res.x,
        solution_y: Some(res.y),
        gradient_evaluations: res.gradient_evaluations,
        certificate: res.gap_bound,
        noise: vec![nx, ny],
    });
    Ok(out)
}

/// Which variable a phased saddle half anchors and perturbs.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Half {
    Primal,
    Dual,
    Csc,
}

struct HalfRun {
    out: DpRunOutput,
    final_solution: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn run_phased_saddle<S: SaddleSolver + ?Sized>(
    problem: &MinimaxProblem,
    schedule: &PhaseSchedule,
    base: &S,
    half: Half,
    start: Vec<f64>,
    fixed_center: Vec<f64>,
    stream: SeedStream,
    noise_mode: NoiseMode,
    algorithm: Algorithm,
) -> Result<HalfRun> {
    let (label, variable, group) = match half {
        Half::Primal => ("primal", Variable::X, "primal"),
        Half::Dual => ("dual", Variable::Y, "dual"),
        Half::Csc => ("main", Variable::X, "phases"),
    };
    let mut out = DpRunOutput::new(algorithm, 0);
    let mut anchor = start;
    let mut final_solution = Vec::new();
    for k in 0..schedule.phases {
        let block = schedule.blocks[k].clone();
        let sub = problem.with_samples(problem.samples().slice(block.clone())?)?;
        let mu_k = schedule.mu_k[k];
        let reg = match half {
            Half::Primal => ProxRegularizer::new(mu_k, schedule.mu, anchor.clone(), fixed_center.clone())?,
            Half::Dual => ProxRegularizer::new(schedule.mu, mu_k, fixed_center.clone(), anchor.clone())?,
            Half::Csc => ProxRegularizer::new(mu_k, 0.0, anchor.clone(), fixed_center.clone())?,
        };
        let res = base
            .solve_to(&sub, Some(&reg), schedule.gamma[k], stream.child_indexed("solver", k as u64).seed())
            .map_err(|e| phase_failed(k + 1, &out.trace, e))?;
        let (point, domain) = match variable {
            Variable::X => (&res.x, problem.domain_x()),
            Variable::Y => (&res.y, problem.domain_y()),
        };
        let noise = perturb(variable, point, schedule.sigma[k], noise_mode, stream.child_indexed("noise", k as u64), domain);
        out.ledger.record(ledger_entry(
            format!("gaussian:{variable}:{label}:phase{}", k + 1),
            schedule.phase_budget,
            &block,
            CompositionGroup::Parallel(group.into()),
            noise_mode,
        ))?;
        out.gradient_evaluations += res.gradient_evaluations;
        final_solution = point.clone();
        let next = noise.noised.clone();
        let (anchor_x, anchor_y) = match variable {
            Variable::X => (Some(anchor), None),
            Variable::Y => (None, Some(anchor)),
        };
        match variable {
            Variable::X => out.x_projected = Some(noise.projected.clone()),
            Variable::Y => out.y_projected = Some(noise.projected.clone()),
        }
        out.trace.push(PhaseTrace {
            label: label.into(),
            phase: k + 1,
            block,
            mu_k,
            gamma: schedule.gamma[k],
            anchor_x,
            anchor_y,
            solution_x: res.x,
            solution_y: Some(res.y),
            gradient_evaluations: res.gradient_evaluations,
            certificate: res.gap_bound,
            noise: vec![noise],
        });
        anchor = next;
    }
    match variable {
        Variable::X => {
            out.x = Some(anchor);
            out.x_pre_noise = Some(final_solution.clone());
        }
        Variable::Y => {
            out.y = Some(anchor);
            out.y_pre_noise = Some(final_solution.clone());
        }
    }
    out.schedule = Some(schedule.clone());
    Ok(HalfRun { out, final_solution })
}

fn require_convex_concave(problem: &MinimaxProblem) -> Result<()> {
    check_lipschitz(problem.constants().lipschitz)
}

fn cc_schedule(problem: &MinimaxProblem, budget: PrivacyBudget, opts: &DpOptions) -> Result<PhaseSchedule> {
    let (dx, dy) = problem.dims();
    let c = problem.constants();
    let mode = ScheduleMode::ConvexConcave;
    let mu = opts.resolve_mu(|| default_mu(c.lipschitz, minimax_diameter(problem), problem.n(), dx.max(dy), budget, mode));
    make_phase_schedule(problem.n(), mu, c.lipschitz, budget, mode)
}

/// Primal half: anchors and perturbs `x`, with a fixed `(mu/2)||y - y_c||^2`
/// regularizer centered at the `y`-domain center. Claims `(eps/2, delta/2)`.
pub fn dp_cc_saddle_primal<S: SaddleSolver + ?Sized>(
    problem: &MinimaxProblem,
    budget: PrivacyBudget,
    base: &S,
    opts: &DpOptions,
) -> Result<DpRunOutput> {
    require_convex_concave(problem)?;
    let schedule = cc_schedule(problem, budget, opts)?;
    let start = start_point(&opts.x0, problem.domain_x())?;
    let root = SeedStream::new(opts.seed);
    let mut run = run_phased_saddle(
        problem,
        &schedule,
        base,
        Half::Primal,
        start,
        problem.domain_y().center().to_vec(),
        root.child("primal"),
        opts.noise,
        Algorithm::CcPrimal,
    )?
    .out;
    run.seed = opts.seed;
    Ok(run)
}

/// Dual half: mirror of [`dp_cc_saddle_primal`] with the roles of `x` and `y` swapped.
pub fn dp_cc_saddle_dual<S: SaddleSolver + ?Sized>(
    problem: &MinimaxProblem,
    budget: PrivacyBudget,
    base: &S,
    opts: &DpOptions,
) -> Result<DpRunOutput> {
    require_convex_concave(problem)?;
    let schedule = cc_schedule(problem, budget, opts)?;
    let start = start_point(&opts.y0, problem.domain_y())?;
    let root = SeedStream::new(opts.seed);
    let mut run = run_phased_saddle(
        problem,
        &schedule,
        base,
        Half::Dual,
        start,
        problem.domain_x().center().to_vec(),
        root.child("dual"),
        opts.noise,
        Algorithm::CcDual,
    )?
    .out;
    run.seed = opts.seed;
    Ok(run)
}

/// Both halves on independent child streams over the same data; the two
/// `(eps/2, delta/2)` ledgers compose sequentially to `(eps, delta)`.
pub fn dp_cc_saddle<S: SaddleSolver + ?Sized>(
    problem: &MinimaxProblem,
    budget: PrivacyBudget,
    base: &S,
    opts: &DpOptions,
) -> Result<DpRunOutput> {
    let (primal, dual) = rayon::join(
        || dp_cc_saddle_primal(problem, budget, base, opts),
        || dp_cc_saddle_dual(problem, budget, base, opts),
    );
    let (primal, dual) = (primal?, dual?);
    let mut out = DpRunOutput::new(Algorithm::CcSaddle, opts.seed);
    out.ledger = primal.ledger;
    out.ledger.absorb(dual.ledger)?;
    out.x = primal.x;
    out.x_pre_noise = primal.x_pre_noise;
    out.x_projected = primal.x_projected;
    out.y = dual.y;
    out.y_pre_noise = dual.y_pre_noise;
    out.y_projected = dual.y_projected;
    out.trace = primal.trace;
    out.trace.extend(dual.trace);
    out.schedule = primal.schedule;
    out.gradient_evaluations = primal.gradient_evaluations + dual.gradient_evaluations;
    Ok(out)
}

/// Smallest certified `mu_y` accepted by [`dp_csc_saddle`]: `L / (D sqrt(n))`.
pub fn csc_threshold(problem: &MinimaxProblem) -> f64 {
    problem.constants().lipschitz / (minimax_diameter(problem) * (problem.n() as f64).sqrt())
}

/// Convex-strongly-concave variant: phased primal algorithm without a `y`
/// regularizer. Claims `(eps, delta)`.
pub fn dp_csc_saddle<S: SaddleSolver + ?Sized>(
    problem: &MinimaxProblem,
    budget: PrivacyBudget,
    base: &S,
    opts: &DpOptions,
) -> Result<DpRunOutput> {
    let c = problem.constants();
    check_lipschitz(c.lipschitz)?;
    let threshold = csc_threshold(problem);
    if c.mu_y < threshold {
        return Err(Error::Routing(format!(
            "certified mu_y = {} is below L/(D sqrt(n)) = {threshold}; use dp_cc_saddle for this problem",
            c.mu_y
        )));
    }
    let (dx, _) = problem.dims();
    let mode = ScheduleMode::Csc { mu_y: c.mu_y };
    let mu = opts.resolve_mu(|| default_mu(c.lipschitz, minimax_diameter(problem), problem.n(), dx, budget, mode));
    let schedule = make_phase_schedule(problem.n(), mu, c.lipschitz, budget, mode)?;
    let start = start_point(&opts.x0, problem.domain_x())?;
    let root = SeedStream::new(opts.seed);
    let mut run = run_phased_saddle(
        problem,
        &schedule,
        base,
        Half::Csc,
        start,
        problem.domain_y().center().to_vec(),
        root,
        opts.noise,
        Algorithm::CscSaddle,
    )?;
    run.out.seed = opts.seed;
    debug_assert_eq!(run.out.x_pre_noise.as_ref(), Some(&run.final_solution));
    Ok(run.out)
}
