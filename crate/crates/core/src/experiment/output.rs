//! Artifact layout of an output directory:
//!
//! ```text
//! config.txt          canonical config echo
//! records.csv         one row per run, columns in CSV_COLUMNS order
//! records.jsonl       the same records plus the output points
//! runs/run-0000.txt   config echo followed by `# key = value` result lines
//! runs/run-0000.ledger.txt
//! summary.txt         sweeps only
//! probe.json          probes only
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::runner::RunOutcome;
use crate::error::{Error, Result};
use crate::evaluation::{loglog_slope, UtilityRecord};
use crate::framework::NoiseMode;

/// Frozen CSV column order.
pub const CSV_COLUMNS: [&str; 21] = [
    "run_id",
    "kind",
    "family",
    "solver",
    "n",
    "d",
    "epsilon",
    "delta",
    "seed",
    "repetition",
    "excess_empirical_risk",
    "excess_population_risk",
    "empirical_gap",
    "population_gap",
    "noise_norm",
    "gradient_evaluations",
    "ledger_epsilon",
    "ledger_delta",
    "private",
    "status",
    "wall_time_s",
];

pub const NO_NOISE_BANNER: &str = "WARNING: NOISE DISABLED (--no-noise). Outputs are NOT differentially private.";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_row(r: &UtilityRecord) -> Vec<String> {
    vec![
        r.run_id.clone(),
        r.kind.clone(),
        r.family.clone(),
        r.solver.clone(),
        r.n.to_string(),
        r.d.to_string(),
        r.epsilon.to_string(),
        r.delta.to_string(),
        r.seed.to_string(),
        r.repetition.to_string(),
        opt(r.excess_empirical_risk),
        opt(r.excess_population_risk),
        opt(r.empirical_gap),
        opt(r.population_gap),
        opt(r.noise_norm),
        r.gradient_evaluations.to_string(),
        opt(r.ledger_epsilon),
        opt(r.ledger_delta),
        r.private.to_string(),
        r.status.clone(),
        r.wall_time_s.to_string(),
    ]
}

pub fn records_csv(records: &[UtilityRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(format!("csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record(csv_row(r)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

fn vec_text(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn run_text(outcome: &RunOutcome, i: usize) -> String {
    let r = &outcome.records[i];
    let mut s = outcome.config.echo();
    if outcome.noise == NoiseMode::Disabled {
        let _ = writeln!(s, "# {NO_NOISE_BANNER}");
    }
    for (k, v) in CSV_COLUMNS.iter().zip(csv_row(r)) {
        let _ = writeln!(s, "# {k} = {v}");
    }
    if let Some(x) = &r.x {
        let _ = writeln!(s, "# x = {}", vec_text(x));
    }
    if let Some(y) = &r.y {
        let _ = writeln!(s, "# y = {}", vec_text(y));
    }
    s
}

fn summary_text(outcome: &RunOutcome) -> String {
    let mut s = String::new();
    if outcome.noise == NoiseMode::Disabled {
        let _ = writeln!(s, "{NO_NOISE_BANNER}");
    }
    let Some(rows) = &outcome.summary else { return s };
    let _ = writeln!(s, "{:<32} {:>8} {:>8} {:>6} {:>8} {:>14} {:>14}", "label", "n", "epsilon", "runs", "failures", "utility", "std_error");
    for row in rows {
        let stat = row.population_risk.as_ref().or(row.population_gap.as_ref());
        let se = stat.and_then(|st| st.std_error).map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        let u = row.utility().map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:<32} {:>8} {:>8} {:>6} {:>8} {:>14} {:>14}", row.label, row.n, row.epsilon, row.runs, row.failures, u, se);
    }
    let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    for e in eps {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.epsilon == e)
            .filter_map(|r| r.utility().filter(|u| *u > 0.0).map(|u| (r.n as f64, u)))
            .collect();
        if pts.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(slope) = loglog_slope(&xs, &ys) {
                let _ = writeln!(s, "loglog slope of utility vs n at epsilon {e}: {slope:.4}");
            }
        }
    }
    s
}

/// Writes every artifact of `outcome` under `dir`.
pub fn write_outcome(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), outcome.config.echo())?;
    if let Some(probe) = &outcome.probe {
        let body = serde_json::json!({
            "passed": probe.passed,
            "seed": outcome.config.seed,
            "probe": probe.report,
        });
        let text = serde_json::to_string_pretty(&body).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(dir.join("probe.json"), text + "\n")?;
        return Ok(());
    }
    fs::write(dir.join("records.csv"), records_csv(&outcome.records)?)?;
    let mut jsonl = String::new();
    for r in &outcome.records {
        jsonl.push_str(&serde_json::to_string(r).map_err(|e| Error::Internal(e.to_string()))?);
        jsonl.push('\n');
    }
    fs::write(dir.join("records.jsonl"), jsonl)?;
    let runs = dir.join("runs");
    fs::create_dir_all(&runs)?;
    for (i, out) in outcome.outputs.iter().enumerate() {
        fs::write(runs.join(format!("run-{i:04}.txt")), run_text(outcome, i))?;
        if let Some(out) = out {
            fs::write(runs.join(format!("run-{i:04}.ledger.txt")), out.ledger.to_text())?;
        }
    }
    if outcome.summary.is_some() {
        fs::write(dir.join("summary.txt"), summary_text(outcome))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::RunConfig;
    use crate::experiment::runner::execute;

    #[test]
    fn run_file_reparses_to_config() {
        let cfg = RunConfig::parse("kind = sc-min\ndata.n = 40\nprivacy.epsilon = 0.5\nprivacy.delta = 0.001\n").unwrap();
        let out = execute(&cfg, NoiseMode::Private).unwrap();
        let text = run_text(&out, 0);
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        assert!(text.contains("# status = ok"));
    }

    #[test]
    fn csv_header_is_frozen_order() {
        let csv = records_csv(&[]).unwrap();
        assert_eq!(csv.trim_end(), CSV_COLUMNS.join(","));
    }
}
