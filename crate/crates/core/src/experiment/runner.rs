//! Turns a [`RunConfig`] into family/solver objects and executes it.

use serde_json::json;

use super::config::{ExperimentKind, FamilyConfig, FamilyName, ProbeTarget, RunConfig, SolverChoice};
use crate::error::{Error, Result};
use crate::evaluation::{
    gap_sandwich_probe, prox_nonexpansive_probe, stability_probe_min, stability_probe_minimax, summarize,
    run_utility_with_output, BaseSolver, BilinearFamily, Family, LogisticFamily, QuadraticFamily, UtilityConfig,
    UtilityRecord, UtilitySummary,
};
use crate::framework::{DpRunOutput, NoiseMode};
use crate::mechanisms::PrivacyBudget;
use crate::rng::SeedStream;
use crate::solvers::{MinSolverSpec, MinimaxSolverSpec};

use rayon::prelude::*;

pub fn build_family(cfg: &FamilyConfig) -> Result<Family> {
    let d = cfg.dim;
    let uniform = |v: f64| vec![v / (d as f64).sqrt(); d];
    Ok(match cfg.name {
        FamilyName::Quadratic => {
            let mean = cfg.mean.clone().unwrap_or_else(|| uniform(0.5));
            Family::Quadratic(QuadraticFamily::new(cfg.mu, mean, cfg.spread, cfg.radius)?)
        }
        FamilyName::Logistic => {
            let w = cfg.mean.clone().unwrap_or_else(|| uniform(1.0));
            Family::Logistic(LogisticFamily::new(w, cfg.spread, cfg.ridge, cfg.radius)?)
        }
        FamilyName::Bilinear => {
            if cfg.mean.is_some() {
                return Err(Error::Config {
                    line: 0,
                    field: "family.mean".into(),
                    message: "the bilinear family takes no mean".into(),
                });
            }
            let std = BilinearFamily::standard(d, cfg.mu, cfg.mu_y)?;
            Family::Bilinear(BilinearFamily::new(
                d, d, cfg.mu, cfg.mu_y, std.a_mean, std.b_mean, cfg.spread, cfg.radius, cfg.radius,
            )?)
        }
    })
}

fn build_solver(cfg: &RunConfig) -> BaseSolver {
    let s = &cfg.solver;
    // The algorithms set gamma and the seed per phase; these are placeholders.
    match s.kind {
        SolverChoice::Min(kind) => {
            let mut spec = MinSolverSpec::new(kind, 1e-6, 0);
            spec.budget_constant = s.budget_constant;
            spec.max_evaluations = s.max_evaluations;
            spec.inner_len = s.inner_len;
            spec.step = s.step;
            BaseSolver::Min(spec)
        }
        SolverChoice::Saddle(kind) => {
            let mut spec = MinimaxSolverSpec::new(kind, 1e-6, 0);
            spec.budget_constant = s.budget_constant;
            spec.max_evaluations = s.max_evaluations;
            spec.inner_len = s.inner_len;
            spec.step = s.step;
            BaseSolver::Saddle(spec)
        }
    }
}

/// One [`UtilityConfig`] per grid point: `n` major, `epsilon` minor.
pub fn utility_configs(cfg: &RunConfig, noise: NoiseMode) -> Result<Vec<UtilityConfig>> {
    let kind = cfg.algorithm_kind();
    let algorithm = kind
        .algorithm()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` does not run a private algorithm", cfg.kind)))?;
    let family = build_family(&cfg.family)?;
    let solver = build_solver(cfg);
    let sweep = cfg.kind == ExperimentKind::UtilitySweep;
    let ns = if sweep && !cfg.sweep.n.is_empty() { cfg.sweep.n.clone() } else { vec![cfg.n] };
    let eps = if sweep && !cfg.sweep.epsilon.is_empty() { cfg.sweep.epsilon.clone() } else { vec![cfg.epsilon] };
    let mut out = Vec::with_capacity(ns.len() * eps.len());
    for &n in &ns {
        for &e in &eps {
            out.push(UtilityConfig {
                label: format!("{kind}-n{n}-e{e}"),
                algorithm,
                family: family.clone(),
                solver: solver.clone(),
                n,
                budget: PrivacyBudget::new(e, cfg.delta.resolve(n))?,
                seed: cfg.seed,
                noise,
                mu: cfg.mu,
                mu_scale: cfg.mu_scale,
                holdout_factor: cfg.holdout_factor,
            });
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ProbeOutcome {
    pub passed: bool,
    pub report: serde_json::Value,
}

pub fn run_probe(cfg: &RunConfig) -> Result<ProbeOutcome> {
    let stream = SeedStream::new(cfg.seed).child("probe");
    let family = build_family(&cfg.family)?;
    let p = &cfg.probe;
    let (n, trials) = (cfg.n, p.trials);
    let outcome = match (p.target, &family) {
        (ProbeTarget::Min, Family::Quadratic(f)) => {
            let r = stability_probe_min(f, n, trials, p.reg_mu, &stream)?;
            ProbeOutcome { passed: r.violations == 0, report: json!({ "target": "min", "n": n, "report": r }) }
        }
        (ProbeTarget::Minimax, Family::Bilinear(f)) => {
            let reg = p.reg_mu.map(|m| (m, p.reg_mu_y.unwrap_or(m)));
            let r = stability_probe_minimax(f, n, trials, reg, &stream)?;
            ProbeOutcome { passed: r.violations == 0, report: json!({ "target": "minimax", "n": n, "report": r }) }
        }
        (ProbeTarget::Prox, Family::Bilinear(f)) => {
            let mx = p.reg_mu.unwrap_or(1.0);
            let r = prox_nonexpansive_probe(f, n, trials, (mx, p.reg_mu_y.unwrap_or(mx)), &stream)?;
            ProbeOutcome { passed: r.violations == 0, report: json!({ "target": "prox", "n": n, "report": r }) }
        }
        (ProbeTarget::Sandwich, Family::Bilinear(f)) => {
            let r = gap_sandwich_probe(f, n, trials, &stream)?;
            let passed = r.lower_violations + r.upper_violations == 0;
            ProbeOutcome { passed, report: json!({ "target": "sandwich", "n": n, "report": r }) }
        }
        (t, f) => {
            return Err(Error::Config {
                line: 0,
                field: "family.name".into(),
                message: format!("probe `{}` does not accept family `{}`", t.name(), f.name()),
            })
        }
    };
    Ok(outcome)
}

/// Everything a run produced, before it is written to disk.
#[derive(Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub noise: NoiseMode,
    pub utility: Vec<UtilityConfig>,
    pub records: Vec<UtilityRecord>,
    pub outputs: Vec<Option<DpRunOutput>>,
    pub summary: Option<Vec<UtilitySummary>>,
    pub probe: Option<ProbeOutcome>,
}

impl RunOutcome {
    pub fn failed_runs(&self) -> usize {
        self.records.iter().filter(|r| r.status.starts_with("error")).count()
    }
}

/// Executes a config on the current rayon pool.
pub fn execute(cfg: &RunConfig, noise: NoiseMode) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut outcome = RunOutcome {
        config: cfg.clone(),
        noise,
        utility: Vec::new(),
        records: Vec::new(),
        outputs: Vec::new(),
        summary: None,
        probe: None,
    };
    if cfg.kind == ExperimentKind::StabilityProbe {
        outcome.probe = Some(run_probe(cfg)?);
        return Ok(outcome);
    }
    let configs = utility_configs(cfg, noise)?;
    let jobs: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..cfg.repetitions).map(move |r| (c, r))).collect();
    let results: Vec<(UtilityRecord, Option<DpRunOutput>)> =
        jobs.par_iter().map(|&(c, r)| run_utility_with_output(&configs[c], c, r)).collect();
    let (records, outputs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    if cfg.kind == ExperimentKind::UtilitySweep {
        outcome.summary = Some(summarize(&configs, &records)?);
    }
    outcome.utility = configs;
    outcome.records = records;
    outcome.outputs = outputs;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_is_n_major() {
        let cfg = RunConfig::parse(
            "kind = utility-sweep\nsweep.algorithm = sc-min\nsweep.n = 16, 32\nsweep.epsilon = 0.2, 0.8\n\
             privacy.epsilon = 0.5\nprivacy.delta_scale = 0.5\n",
        )
        .unwrap();
        let grid = utility_configs(&cfg, NoiseMode::Private).unwrap();
        let pts: Vec<(usize, f64, f64)> = grid.iter().map(|c| (c.n, c.budget.epsilon, c.budget.delta)).collect();
        assert_eq!(pts, vec![(16, 0.2, 0.5 / 16.0), (16, 0.8, 0.5 / 16.0), (32, 0.2, 0.5 / 32.0), (32, 0.8, 0.5 / 32.0)]);
    }

    #[test]
    fn single_run_ledger_matches_budget() {
        let cfg = RunConfig::parse("kind = sc-min\ndata.n = 50\nprivacy.epsilon = 0.5\nprivacy.delta = 0.001\n").unwrap();
        let out = execute(&cfg, NoiseMode::Private).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.status, "ok");
        assert_eq!((r.ledger_epsilon, r.ledger_delta), (Some(0.5), Some(0.001)));
    }

    #[test]
    fn probe_passes_on_default_family() {
        let cfg = RunConfig::parse(
            "kind = stability-probe\nprobe.target = min\nprobe.trials = 20\ndata.n = 25\nprivacy.epsilon = 0.5\nprivacy.delta = 0.001\n",
        )
        .unwrap();
        let out = execute(&cfg, NoiseMode::Private).unwrap();
        assert!(out.probe.unwrap().passed);
    }
}
