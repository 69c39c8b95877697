//! Built-in desk-scale self-check behind the `verify` subcommand.

use std::time::Instant;

use rand::Rng;

use super::config::RunConfig;
use super::output::csv_row;
use super::runner::execute;
use crate::error::Result;
use crate::evaluation::{
    gap_sandwich_probe, prox_nonexpansive_probe, stability_probe_min, stability_probe_minimax, BilinearFamily,
    QuadraticFamily,
};
use crate::framework::{dp_cc_saddle, dp_convex_minimize_phased, DpOptions, NoiseMode};
use crate::linalg::{dist, dist_sq};
use crate::mechanisms::{
    add_gaussian_noise, gaussian_sigma, ledger_total, CompositionGroup, LedgerEntry, PartitionId, PrivacyBudget,
    PrivacyLedger,
};
use crate::oracle::{exact_min_quadratic, exact_saddle_bilinear};
use crate::rng::SeedStream;
use crate::solvers::{solve_min, solve_saddle, MinSolverKind, MinSolverSpec, MinimaxSolverKind, MinimaxSolverSpec};

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub quick: bool,
    pub seed: u64,
    /// Test hook: scales the sigma fed to the Gaussian mechanism.
    pub sigma_mutation: Option<f64>,
}

impl VerifyOptions {
    fn trials(&self, full: usize) -> usize {
        if self.quick {
            (full / 2).max(1)
        } else {
            full
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn(&VerifyOptions, &SeedStream) -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 10] = [
    ("erm-stability", erm_stability),
    ("regularized-stability", regularized_stability),
    ("minimax-stability", minimax_stability),
    ("prox-nonexpansive", prox_rows),
    ("gap-sandwich", sandwich_rows),
    ("noise-calibration", noise_calibration),
    ("composition-ledger", composition_ledger),
    ("oracle-equivalence", oracle_equivalence),
    ("phased-schedule", phased_schedule),
    ("determinism", determinism),
];

pub fn run_suite(opts: &VerifyOptions) -> Vec<VerifyRow> {
    let root = SeedStream::new(opts.seed).child("verify");
    CHECKS
        .iter()
        .map(|(name, check)| {
            let t = Instant::now();
            let (passed, detail) = check(opts, &root.child(name)).unwrap_or_else(|e| (false, format!("error: {e}")));
            VerifyRow { name, passed, detail, seconds: t.elapsed().as_secs_f64() }
        })
        .collect()
}

pub fn render_table(rows: &[VerifyRow]) -> String {
    let mut s = format!("{:<24} {:<6} {:>8}  detail\n", "check", "result", "time_s");
    for r in rows {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:<24} {:<6} {:>8.3}  {}\n", r.name, verdict, r.seconds, r.detail));
    }
    s
}

const GRID: [usize; 3] = [25, 50, 100];

fn erm_stability(o: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let fam = QuadraticFamily::standard(2)?;
    let mut violations = 0;
    for n in GRID {
        violations += stability_probe_min(&fam, n, o.trials(200), None, &st.child_indexed("n", n as u64))?.violations;
    }
    Ok((violations == 0, format!("{violations} violations")))
}

fn regularized_stability(o: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let fam = QuadraticFamily::new(0.1, vec![0.3, -0.2], 1.0, 1.0)?;
    let mut violations = 0;
    for (i, reg) in [0.5, 2.0].into_iter().enumerate() {
        for n in GRID {
            let s = st.child_indexed("reg", i as u64).child_indexed("n", n as u64);
            violations += stability_probe_min(&fam, n, o.trials(200), Some(reg), &s)?.violations;
        }
    }
    Ok((violations == 0, format!("{violations} violations")))
}

fn minimax_stability(o: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let sc = BilinearFamily::standard(2, 1.0, 0.5)?;
    let cc = BilinearFamily::standard(2, 0.0, 0.0)?;
    let mut violations = 0;
    for n in GRID {
        let s = st.child_indexed("n", n as u64);
        violations += stability_probe_minimax(&sc, n, o.trials(200), None, &s.child("plain"))?.violations;
        violations += stability_probe_minimax(&cc, n, o.trials(200), Some((0.5, 2.0)), &s.child("reg"))?.violations;
    }
    Ok((violations == 0, format!("{violations} violations")))
}

fn prox_rows(o: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let fam = BilinearFamily::standard(2, 0.0, 0.0)?;
    let r = prox_nonexpansive_probe(&fam, 20, o.trials(500), (1.0, 0.5), st)?;
    Ok((r.violations == 0, format!("{} violations, max ratio {:.4}", r.violations, r.max_ratio)))
}

fn sandwich_rows(o: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let fam = BilinearFamily::standard(2, 1.0, 0.5)?;
    let r = gap_sandwich_probe(&fam, 20, o.trials(1000), st)?;
    let bad = r.lower_violations + r.upper_violations;
    Ok((bad == 0, format!("{} lower, {} upper violations", r.lower_violations, r.upper_violations)))
}

fn noise_calibration(o: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let m = o.sigma_mutation.unwrap_or(1.0);
    let mut rng = st.child("inputs").rng();
    let mut worst_rel = 0.0f64;
    for _ in 0..o.trials(10_000) {
        let sens = rng.random_range(1e-3..10.0);
        let b = PrivacyBudget::new(rng.random_range(1e-3..1.0), rng.random_range(1e-9..0.5))?;
        let reference = sens / b.epsilon * (2.0 * (1.25f64.ln() - b.delta.ln())).sqrt();
        let got = gaussian_sigma(sens, b) * m;
        worst_rel = worst_rel.max((got - reference).abs() / reference);
    }
    let sens = 0.7;
    let b = PrivacyBudget::new(0.5, 1e-5)?;
    let reference = sens / b.epsilon * (2.0 * (1.25f64.ln() - b.delta.ln())).sqrt();
    let draws = o.trials(100_000);
    let mut worst_std = 0.0f64;
    for seed in 0..5u64 {
        let z = add_gaussian_noise(&vec![0.0; draws], gaussian_sigma(sens, b) * m, &mut st.child_indexed("draws", seed).rng());
        let mean = z.iter().sum::<f64>() / draws as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        worst_std = worst_std.max((var.sqrt() / reference - 1.0).abs());
    }
    let passed = worst_rel <= 1e-12 && worst_std <= 0.02;
    Ok((passed, format!("formula rel err {worst_rel:.2e}, std rel err {worst_std:.4}")))
}

fn entry(id: &str, eps: f64, delta: f64, range: (usize, usize), group: CompositionGroup) -> Result<LedgerEntry> {
    Ok(LedgerEntry {
        mechanism: id.into(),
        budget: PrivacyBudget::new(eps, delta)?,
        partition: PartitionId::new("S", range.0, range.1),
        group,
        private: true,
    })
}

fn composition_ledger(_: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let mut seq = PrivacyLedger::new();
    seq.record(entry("a", 0.25, 1e-6, (0, 10), CompositionGroup::Sequential)?)?;
    seq.record(entry("b", 0.25, 1e-6, (0, 10), CompositionGroup::Sequential)?)?;
    let seq_ok = ledger_total(&seq)? == PrivacyBudget::new(0.5, 2e-6)?;
    let par = CompositionGroup::Parallel("p".into());
    let mut pl = PrivacyLedger::new();
    pl.record(entry("a", 0.3, 1e-6, (0, 5), par.clone())?)?;
    pl.record(entry("b", 0.5, 2e-6, (5, 10), par.clone())?)?;
    let par_ok = ledger_total(&pl)? == PrivacyBudget::new(0.5, 2e-6)?;
    let overlap_rejected = pl.record(entry("c", 0.1, 1e-6, (8, 12), par)?).is_err();
    let fam = BilinearFamily::standard(2, 0.0, 0.0)?;
    let problem = fam.problem(fam.sample(32, &mut st.child("data").rng())?)?;
    let budget = PrivacyBudget::new(0.5, 1e-3)?;
    let spec = MinimaxSolverSpec::new(MinimaxSolverKind::SvrgMinimax, 1e-6, 0);
    let out = dp_cc_saddle(&problem, budget, &spec, &DpOptions::seeded(st.child("run").seed()))?;
    let cc_ok = ledger_total(&out.ledger)? == budget;
    let passed = seq_ok && par_ok && overlap_rejected && cc_ok;
    Ok((passed, format!("sequential {seq_ok}, parallel {par_ok}, overlap rejected {overlap_rejected}, cc total {cc_ok}")))
}

fn oracle_equivalence(o: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let fam = QuadraticFamily::standard(5)?;
    let gamma = 1e-10;
    let instances = o.trials(10);
    let mut min_fail = 0;
    for i in 0..instances {
        let s = st.child_indexed("min", i as u64);
        let problem = fam.problem(fam.sample(100, &mut s.rng())?)?;
        let best = exact_min_quadratic(&problem, None)?;
        for kind in [MinSolverKind::Svrg, MinSolverKind::Sarah] {
            let r = solve_min(&problem, &MinSolverSpec::new(kind, gamma, s.child("solver").seed()), None)?;
            let sub = problem.empirical_value(&r.point)? - problem.empirical_value(&best.x)?;
            if sub > gamma || dist(&r.point, &best.x) > (2.0 * gamma / fam.mu).sqrt() * 10.0 {
                min_fail += 1;
            }
        }
    }
    let sfam = BilinearFamily::standard(3, 1.0, 0.5)?;
    let mut saddle_fail = 0;
    for i in 0..instances {
        let s = st.child_indexed("saddle", i as u64);
        let problem = sfam.problem(sfam.sample(50, &mut s.rng())?)?;
        let star = exact_saddle_bilinear(&problem, None)?;
        let ys = star.y.clone().unwrap_or_default();
        for kind in [MinimaxSolverKind::Extragradient, MinimaxSolverKind::SvrgMinimax] {
            let r = solve_saddle(&problem, &MinimaxSolverSpec::new(kind, gamma, s.child("solver").seed()), None)?;
            let w = sfam.mu_x * dist_sq(&r.x, &star.x) + sfam.mu_y * dist_sq(&r.y, &ys);
            if w > 2.0 * gamma * 10.0 {
                saddle_fail += 1;
            }
        }
    }
    let total = 2 * instances;
    Ok((min_fail == 0 && saddle_fail == 0, format!("min {min_fail}/{total} off, saddle {saddle_fail}/{total} off")))
}

fn phased_schedule(_: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let fam = QuadraticFamily::new(0.1, vec![0.3, -0.2], 1.0, 1.0)?;
    let spec = MinSolverSpec::new(MinSolverKind::Svrg, 1e-6, 0);
    let mut bad = Vec::new();
    for n in [16usize, 100, 1024] {
        let s = st.child_indexed("n", n as u64);
        let problem = fam.problem(fam.sample(n, &mut s.child("data").rng())?)?;
        let budget = PrivacyBudget::new(0.5, 0.5 / n as f64)?;
        let out = dp_convex_minimize_phased(&problem, budget, &spec, &DpOptions::seeded(s.child("run").seed()))?;
        let sched = out.schedule.as_ref().expect("phased runs carry a schedule");
        let k = n.ilog2() as usize;
        let mut ok = sched.phases == k && out.trace.len() == k;
        ok &= sched.mu_k.iter().enumerate().all(|(i, m)| *m == sched.mu * 2f64.powi(i as i32 + 1));
        ok &= sched.blocks.first().map(|b| b.start) == Some(0) && sched.blocks.last().map(|b| b.end) == Some(n);
        ok &= sched.blocks.windows(2).all(|w| w[0].end == w[1].start);
        ok &= out.trace.windows(2).all(|w| w[1].anchor_x.as_deref() == Some(w[0].noise[0].noised.as_slice()));
        ok &= ledger_total(&out.ledger)? == budget;
        if !ok {
            bad.push(n);
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "n = 16, 100, 1024 consistent".into() } else { format!("mismatch at n = {bad:?}") }))
}

fn determinism(_: &VerifyOptions, st: &SeedStream) -> Result<(bool, String)> {
    let seed = st.seed();
    let texts = [
        format!("kind = sc-min\nseed = {seed}\ndata.n = 40\nprivacy.epsilon = 0.5\nprivacy.delta = 0.001\n"),
        format!("kind = cc-saddle\nseed = {seed}\ndata.n = 32\nprivacy.epsilon = 0.5\nprivacy.delta_scale = 0.5\n"),
    ];
    for text in &texts {
        let cfg = RunConfig::parse(text)?;
        let rows = || -> Result<Vec<Vec<String>>> {
            let out = execute(&cfg, NoiseMode::Private)?;
            Ok(out.records.iter().map(|r| csv_row(r)[..20].to_vec()).collect())
        };
        if rows()? != rows()? {
            return Ok((false, format!("`{}` differs between identical runs", cfg.kind)));
        }
    }
    Ok((true, "identical rows across repeated runs".into()))
}
