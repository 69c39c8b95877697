//! Line-oriented `key = value` run configuration with dotted section keys.
//!
//! ```text
//! # comment
//! kind = convex-min-phased
//! seed = 7
//! data.n = 1024
//! privacy.epsilon = 0.5
//! privacy.delta_scale = 0.5     # delta = 0.5 / n
//! family.name = quadratic
//! family.dim = 5
//! solver.kind = svrg
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framework::Algorithm;
use crate::solvers::{MinSolverKind, MinimaxSolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    ScMin,
    ConvexMinPhased,
    ScScSaddle,
    CcSaddle,
    CscSaddle,
    StabilityProbe,
    UtilitySweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::ScMin,
        ExperimentKind::ConvexMinPhased,
        ExperimentKind::ScScSaddle,
        ExperimentKind::CcSaddle,
        ExperimentKind::CscSaddle,
        ExperimentKind::StabilityProbe,
        ExperimentKind::UtilitySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ScMin => "sc-min",
            ExperimentKind::ConvexMinPhased => "convex-min-phased",
            ExperimentKind::ScScSaddle => "scsc-saddle",
            ExperimentKind::CcSaddle => "cc-saddle",
            ExperimentKind::CscSaddle => "csc-saddle",
            ExperimentKind::StabilityProbe => "stability-probe",
            ExperimentKind::UtilitySweep => "utility-sweep",
        }
    }

    /// The private algorithm a run kind executes, if any.
    pub fn algorithm(self) -> Option<Algorithm> {
        match self {
            ExperimentKind::ScMin => Some(Algorithm::ScMin),
            ExperimentKind::ConvexMinPhased => Some(Algorithm::ConvexMinPhased),
            ExperimentKind::ScScSaddle => Some(Algorithm::ScScSaddle),
            ExperimentKind::CcSaddle => Some(Algorithm::CcSaddle),
            ExperimentKind::CscSaddle => Some(Algorithm::CscSaddle),
            ExperimentKind::StabilityProbe | ExperimentKind::UtilitySweep => None,
        }
    }

    fn is_phased(self) -> bool {
        matches!(self, ExperimentKind::ConvexMinPhased | ExperimentKind::CcSaddle | ExperimentKind::CscSaddle)
    }

    fn is_min(self) -> bool {
        matches!(self, ExperimentKind::ScMin | ExperimentKind::ConvexMinPhased)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    Quadratic,
    Logistic,
    Bilinear,
}

impl FamilyName {
    pub fn name(self) -> &'static str {
        match self {
            FamilyName::Quadratic => "quadratic",
            FamilyName::Logistic => "logistic",
            FamilyName::Bilinear => "bilinear",
        }
    }
}

impl FromStr for FamilyName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quadratic" => Ok(FamilyName::Quadratic),
            "logistic" => Ok(FamilyName::Logistic),
            "bilinear" => Ok(FamilyName::Bilinear),
            _ => Err(format!("unknown family `{s}` (expected quadratic, logistic or bilinear)")),
        }
    }
}

/// Synthetic family parameters. `spread` is the sample-ball radius for
/// quadratic, the entry perturbation for bilinear and the feature radius
/// for logistic. `mean` is the quadratic mean or the logistic true weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyConfig {
    pub name: FamilyName,
    pub dim: usize,
    pub mu: f64,
    pub mu_y: f64,
    pub mean: Option<Vec<f64>>,
    pub spread: f64,
    pub radius: f64,
    pub ridge: f64,
}

impl FamilyConfig {
    fn defaults(name: FamilyName) -> Self {
        let (mu, spread) = match name {
            FamilyName::Quadratic => (1.0, 1.0),
            FamilyName::Logistic => (0.0, 1.0),
            FamilyName::Bilinear => (0.0, 0.2),
        };
        Self { name, dim: 2, mu, mu_y: 0.0, mean: None, spread, radius: 1.0, ridge: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSpec {
    Fixed(f64),
    /// `delta = c / n`.
    PerSample(f64),
}

impl DeltaSpec {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            DeltaSpec::Fixed(d) => d,
            DeltaSpec::PerSample(c) => c / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Min(MinSolverKind),
    Saddle(MinimaxSolverKind),
}

impl SolverChoice {
    pub fn name(self) -> &'static str {
        match self {
            SolverChoice::Min(k) => k.name(),
            SolverChoice::Saddle(k) => k.name(),
        }
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Ok(k) = s.parse::<MinSolverKind>() {
            return Ok(SolverChoice::Min(k));
        }
        s.parse::<MinimaxSolverKind>()
            .map(SolverChoice::Saddle)
            .map_err(|_| format!("unknown solver `{s}` (expected sgd, svrg, sarah, gda, extragradient or svrg-minimax)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverChoice,
    pub budget_constant: f64,
    pub max_evaluations: Option<u64>,
    pub inner_len: Option<usize>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeTarget {
    Min,
    Minimax,
    Prox,
    Sandwich,
}

impl ProbeTarget {
    pub fn name(self) -> &'static str {
        match self {
            ProbeTarget::Min => "min",
            ProbeTarget::Minimax => "minimax",
            ProbeTarget::Prox => "prox",
            ProbeTarget::Sandwich => "sandwich",
        }
    }
}

impl FromStr for ProbeTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "min" => Ok(ProbeTarget::Min),
            "minimax" => Ok(ProbeTarget::Minimax),
            "prox" => Ok(ProbeTarget::Prox),
            "sandwich" => Ok(ProbeTarget::Sandwich),
            _ => Err(format!("unknown probe target `{s}` (expected min, minimax, prox or sandwich)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub target: ProbeTarget,
    pub trials: usize,
    pub reg_mu: Option<f64>,
    pub reg_mu_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub algorithm: Option<ExperimentKind>,
    pub n: Vec<usize>,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub repetitions: usize,
    pub output: Option<String>,
    pub n: usize,
    pub holdout_factor: usize,
    pub epsilon: f64,
    pub delta: DeltaSpec,
    pub family: FamilyConfig,
    pub solver: SolverConfig,
    pub mu: Option<f64>,
    pub mu_scale: Option<f64>,
    pub sweep: SweepConfig,
    pub probe: ProbeConfig,
}

const KEYS: &[&str] = &[
    "kind",
    "seed",
    "repetitions",
    "output",
    "data.n",
    "data.holdout_factor",
    "privacy.epsilon",
    "privacy.delta",
    "privacy.delta_scale",
    "family.name",
    "family.dim",
    "family.mu",
    "family.mu_y",
    "family.mean",
    "family.spread",
    "family.radius",
    "family.ridge",
    "solver.kind",
    "solver.budget_constant",
    "solver.max_evaluations",
    "solver.inner_len",
    "solver.step",
    "algorithm.mu",
    "algorithm.mu_scale",
    "sweep.algorithm",
    "sweep.n",
    "sweep.epsilon",
    "probe.target",
    "probe.trials",
    "probe.reg_mu",
    "probe.reg_mu_y",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

fn config_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Config { line, field: field.into(), message: message.into() }
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(line_no, line, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(config_err(line_no, key, "unknown key"));
            }
            if let Some((prev, _)) = map.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(config_err(line_no, key, format!("duplicate key (first set on line {prev})")));
            }
        }
        Ok(Self { map })
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| config_err(*line, key, format!("`{v}`: {e}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|p| p.trim().parse::<T>().map_err(|e| config_err(*line, key, format!("`{}`: {e}", p.trim()))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;
        let kind: ExperimentKind = e.get("kind")?.ok_or_else(|| config_err(0, "kind", "missing required key"))?;
        let name: FamilyName = e.get("family.name")?.unwrap_or(match kind {
            ExperimentKind::ScMin | ExperimentKind::ConvexMinPhased => FamilyName::Quadratic,
            ExperimentKind::StabilityProbe => match e.get::<ProbeTarget>("probe.target")? {
                Some(ProbeTarget::Min) | None => FamilyName::Quadratic,
                _ => FamilyName::Bilinear,
            },
            ExperimentKind::UtilitySweep => match e.get::<ExperimentKind>("sweep.algorithm")? {
                Some(k) if k.is_min() => FamilyName::Quadratic,
                Some(_) => FamilyName::Bilinear,
                None => FamilyName::Quadratic,
            },
            _ => FamilyName::Bilinear,
        });
        let d = FamilyConfig::defaults(name);
        let family = FamilyConfig {
            name,
            dim: e.get("family.dim")?.unwrap_or(d.dim),
            mu: e.get("family.mu")?.unwrap_or(d.mu),
            mu_y: e.get("family.mu_y")?.unwrap_or(d.mu_y),
            mean: e.list("family.mean")?,
            spread: e.get("family.spread")?.unwrap_or(d.spread),
            radius: e.get("family.radius")?.unwrap_or(d.radius),
            ridge: e.get("family.ridge")?.unwrap_or(d.ridge),
        };
        let delta = match (e.get::<f64>("privacy.delta")?, e.get::<f64>("privacy.delta_scale")?) {
            (Some(_), Some(_)) => {
                return Err(config_err(e.line("privacy.delta_scale"), "privacy.delta_scale", "set either privacy.delta or privacy.delta_scale"))
            }
            (Some(d), None) => DeltaSpec::Fixed(d),
            (None, Some(c)) => DeltaSpec::PerSample(c),
            (None, None) => return Err(config_err(0, "privacy.delta", "missing required key")),
        };
        let sweep_alg: Option<ExperimentKind> = e.get("sweep.algorithm")?;
        let solver_default = match sweep_alg.unwrap_or(kind) {
            k if k.is_min() => SolverChoice::Min(MinSolverKind::Svrg),
            ExperimentKind::StabilityProbe | ExperimentKind::UtilitySweep => SolverChoice::Min(MinSolverKind::Svrg),
            _ => SolverChoice::Saddle(MinimaxSolverKind::SvrgMinimax),
        };
        let cfg = RunConfig {
            kind,
            seed: e.get("seed")?.unwrap_or(0),
            repetitions: e.get("repetitions")?.unwrap_or(1),
            output: e.get("output")?,
            n: e.get("data.n")?.unwrap_or(100),
            holdout_factor: e.get("data.holdout_factor")?.unwrap_or(10),
            epsilon: e.get("privacy.epsilon")?.ok_or_else(|| config_err(0, "privacy.epsilon", "missing required key"))?,
            delta,
            family,
            solver: SolverConfig {
                kind: e.get("solver.kind")?.unwrap_or(solver_default),
                budget_constant: e.get("solver.budget_constant")?.unwrap_or(crate::solvers::DEFAULT_BUDGET_CONSTANT),
                max_evaluations: e.get("solver.max_evaluations")?,
                inner_len: e.get("solver.inner_len")?,
                step: e.get("solver.step")?,
            },
            mu: e.get("algorithm.mu")?,
            mu_scale: e.get("algorithm.mu_scale")?,
            sweep: SweepConfig {
                algorithm: sweep_alg,
                n: e.list("sweep.n")?.unwrap_or_default(),
                epsilon: e.list("sweep.epsilon")?.unwrap_or_default(),
            },
            probe: ProbeConfig {
                target: e.get("probe.target")?.unwrap_or(ProbeTarget::Min),
                trials: e.get("probe.trials")?.unwrap_or(200),
                reg_mu: e.get("probe.reg_mu")?,
                reg_mu_y: e.get("probe.reg_mu_y")?,
            },
        };
        cfg.validate_with(|key| e.line(key))?;
        Ok(cfg)
    }

    /// Semantic checks; `line` maps a key to its source line (0 if absent).
    fn validate_with(&self, line: impl Fn(&str) -> usize) -> Result<()> {
        let fail = |key: &str, msg: String| Err(config_err(line(key), key, msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail("privacy.epsilon", format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        for eps in &self.sweep.epsilon {
            if !(*eps > 0.0 && *eps < 1.0) {
                return fail("sweep.epsilon", format!("epsilon must lie in (0, 1), got {eps}"));
            }
        }
        if self.repetitions == 0 {
            return fail("repetitions", "need at least one repetition".into());
        }
        if self.family.dim == 0 {
            return fail("family.dim", "dimension must be positive".into());
        }
        if let Some(m) = &self.family.mean {
            if m.len() != self.family.dim {
                return fail("family.mean", format!("mean has {} entries, family.dim is {}", m.len(), self.family.dim));
            }
        }
        let grid: Vec<usize> = if self.kind == ExperimentKind::UtilitySweep && !self.sweep.n.is_empty() {
            self.sweep.n.clone()
        } else {
            vec![self.n]
        };
        let kind = match self.kind {
            ExperimentKind::UtilitySweep => match self.sweep.algorithm {
                Some(k) if k.algorithm().is_some() => k,
                Some(k) => return fail("sweep.algorithm", format!("`{k}` is not an algorithm kind")),
                None => return fail("sweep.algorithm", "utility sweeps need sweep.algorithm".into()),
            },
            k => k,
        };
        for &n in &grid {
            if n == 0 {
                return fail("data.n", "n must be positive".into());
            }
            if kind.is_phased() && n < 4 {
                return fail("data.n", format!("phased algorithms need n >= 4, got {n}"));
            }
            let delta = self.delta.resolve(n);
            if !(delta > 0.0 && delta * (n as f64) < 1.0) {
                let key = match self.delta {
                    DeltaSpec::Fixed(_) => "privacy.delta",
                    DeltaSpec::PerSample(_) => "privacy.delta_scale",
                };
                return fail(key, format!("delta must lie in (0, 1/n); got delta = {delta} with n = {n}"));
            }
        }
        let family = self.family.name;
        let ok = match kind {
            ExperimentKind::ScMin | ExperimentKind::ConvexMinPhased => family != FamilyName::Bilinear,
            ExperimentKind::StabilityProbe => match self.probe.target {
                ProbeTarget::Min => family == FamilyName::Quadratic,
                _ => family == FamilyName::Bilinear,
            },
            _ => family == FamilyName::Bilinear,
        };
        if !ok {
            return fail("family.name", format!("family `{}` is not supported by `{kind}`", family.name()));
        }
        let solver_ok = match self.solver.kind {
            SolverChoice::Min(_) => kind.is_min() || kind == ExperimentKind::StabilityProbe,
            SolverChoice::Saddle(_) => !kind.is_min(),
        };
        if !solver_ok {
            return fail("solver.kind", format!("solver `{}` cannot run `{kind}`", self.solver.kind.name()));
        }
        if self.probe.trials == 0 {
            return fail("probe.trials", "need at least one trial".into());
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(|_| 0)
    }

    /// Kind of the private algorithm (the sweep's algorithm for sweeps).
    pub fn algorithm_kind(&self) -> ExperimentKind {
        match self.kind {
            ExperimentKind::UtilitySweep => self.sweep.algorithm.unwrap_or(ExperimentKind::ScMin),
            k => k,
        }
    }

    /// Canonical text form; [`RunConfig::parse`] of it returns an equal config.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        put("kind", self.kind.to_string());
        put("seed", self.seed.to_string());
        put("repetitions", self.repetitions.to_string());
        if let Some(o) = &self.output {
            put("output", o.clone());
        }
        put("data.n", self.n.to_string());
        put("data.holdout_factor", self.holdout_factor.to_string());
        put("privacy.epsilon", self.epsilon.to_string());
        match self.delta {
            DeltaSpec::Fixed(d) => put("privacy.delta", d.to_string()),
            DeltaSpec::PerSample(c) => put("privacy.delta_scale", c.to_string()),
        }
        let f = &self.family;
        put("family.name", f.name.name().into());
        put("family.dim", f.dim.to_string());
        put("family.mu", f.mu.to_string());
        put("family.mu_y", f.mu_y.to_string());
        if let Some(m) = &f.mean {
            put("family.mean", list(m));
        }
        put("family.spread", f.spread.to_string());
        put("family.radius", f.radius.to_string());
        put("family.ridge", f.ridge.to_string());
        put("solver.kind", self.solver.kind.name().into());
        put("solver.budget_constant", self.solver.budget_constant.to_string());
        if let Some(v) = self.solver.max_evaluations {
            put("solver.max_evaluations", v.to_string());
        }
        if let Some(v) = self.solver.inner_len {
            put("solver.inner_len", v.to_string());
        }
        if let Some(v) = self.solver.step {
            put("solver.step", v.to_string());
        }
        if let Some(v) = self.mu {
            put("algorithm.mu", v.to_string());
        }
        if let Some(v) = self.mu_scale {
            put("algorithm.mu_scale", v.to_string());
        }
        if let Some(k) = self.sweep.algorithm {
            put("sweep.algorithm", k.to_string());
        }
        if !self.sweep.n.is_empty() {
            put("sweep.n", self.sweep.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "));
        }
        if !self.sweep.epsilon.is_empty() {
            put("sweep.epsilon", list(&self.sweep.epsilon));
        }
        put("probe.target", self.probe.target.name().into());
        put("probe.trials", self.probe.trials.to_string());
        if let Some(v) = self.probe.reg_mu {
            put("probe.reg_mu", v.to_string());
        }
        if let Some(v) = self.probe.reg_mu_y {
            put("probe.reg_mu_y", v.to_string());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "kind = sc-min\nprivacy.epsilon = 0.5\nprivacy.delta = 0.001\n";

    #[test]
    fn minimal_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.kind, ExperimentKind::ScMin);
        assert_eq!(c.family.name, FamilyName::Quadratic);
        assert_eq!(c.solver.kind, SolverChoice::Min(MinSolverKind::Svrg));
        assert_eq!(c.n, 100);
    }

    #[test]
    fn echo_round_trips() {
        let text = "\
# sweep over n
kind = utility-sweep
seed = 11
repetitions = 3
sweep.algorithm = cc-saddle
sweep.n = 64, 128
sweep.epsilon = 0.1, 0.9
privacy.epsilon = 0.5
privacy.delta_scale = 0.5
family.dim = 3
family.spread = 0.05
solver.kind = extragradient
solver.max_evaluations = 100000
algorithm.mu_scale = 0.25
";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.family.name, FamilyName::Bilinear);
        let again = RunConfig::parse(&c.echo()).unwrap();
        assert_eq!(again, c);
        let min = RunConfig::parse(&format!("{MINIMAL}family.mean = 0.1, 0.30000000000000004\n")).unwrap();
        assert_eq!(RunConfig::parse(&min.echo()).unwrap(), min);
    }

    #[test]
    fn delta_must_be_below_one_over_n() {
        let text = "kind = sc-min\ndata.n = 100\nprivacy.epsilon = 0.5\nprivacy.delta = 0.01\n";
        match RunConfig::parse(text) {
            Err(Error::Config { line, field, message }) => {
                assert_eq!(line, 4);
                assert_eq!(field, "privacy.delta");
                assert!(message.contains("1/n"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let bad = "kind = sc-min\nprivacy.epsilon = half\nprivacy.delta = 0.001\n";
        match RunConfig::parse(bad) {
            Err(Error::Config { line: 2, field, .. }) => assert_eq!(field, "privacy.epsilon"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse("kind = sc-min\nbogus = 1\n"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(RunConfig::parse("kind sc-min\n"), Err(Error::Config { line: 1, .. })));
        let dup = format!("{MINIMAL}seed = 1\nseed = 2\n");
        assert!(matches!(RunConfig::parse(&dup), Err(Error::Config { line: 5, .. })));
        let mismatch = "kind = cc-saddle\nfamily.name = quadratic\nprivacy.epsilon = 0.5\nprivacy.delta = 0.001\n";
        assert!(matches!(RunConfig::parse(mismatch), Err(Error::Config { line: 2, .. })));
        let eps = "kind = sc-min\nprivacy.epsilon = 1.5\nprivacy.delta = 0.001\n";
        assert!(matches!(RunConfig::parse(eps), Err(Error::Config { line: 2, .. })));
    }

    proptest::proptest! {
        #[test]
        fn echo_round_trips_for_random_configs(
            seed in proptest::prelude::any::<u64>(),
            n in 4usize..5000,
            eps in 1e-6f64..0.999,
            c in 1e-6f64..0.999,
            dim in 1usize..8,
            spread in 0.0f64..3.0,
            mu_scale in proptest::option::of(1e-3f64..10.0),
            kind in 0usize..5,
        ) {
            let kind = ExperimentKind::ALL[kind];
            let text = format!(
                "kind = {kind}\nseed = {seed}\ndata.n = {n}\nprivacy.epsilon = {eps}\nprivacy.delta_scale = {c}\n\
                 family.dim = {dim}\nfamily.spread = {spread}\nfamily.mu_y = 3\n{}",
                mu_scale.map(|m| format!("algorithm.mu_scale = {m}\n")).unwrap_or_default()
            );
            let cfg = RunConfig::parse(&text).unwrap();
            proptest::prop_assert_eq!(RunConfig::parse(&cfg.echo()).unwrap(), cfg);
        }
    }
}
