use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use outperturb::experiment::output::NO_NOISE_BANNER;
use outperturb::experiment::verify::{render_table, run_suite, VerifyOptions};
use outperturb::experiment::{execute, write_outcome, ExperimentKind, RunConfig};
use outperturb::framework::NoiseMode;
use outperturb::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "outperturb", version, about = "Private convex and saddle-point optimization by output perturbation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Halve trial counts in `verify`.
    #[arg(long, global = true)]
    quick: bool,

    /// TESTING ONLY: skip the noise step. Outputs are not private.
    #[arg(long, global = true)]
    no_noise: bool,

    /// Mutation hook: scale the mechanism sigma inside `verify`.
    #[arg(long, global = true, hide = true)]
    sigma_mutation: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single-algorithm config.
    Run { config: PathBuf },
    /// Run a utility-sweep config.
    Sweep { config: PathBuf },
    /// Run a stability-probe config.
    Probe { config: PathBuf },
    /// Run the built-in self-check suite and print a pass/fail table.
    Verify,
}

enum Want {
    Run,
    Sweep,
    Probe,
}

fn load(path: &Path, cli: &Cli, want: Want) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        line: 0,
        field: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    let ok = match want {
        Want::Run => cfg.kind.algorithm().is_some(),
        Want::Sweep => cfg.kind == ExperimentKind::UtilitySweep,
        Want::Probe => cfg.kind == ExperimentKind::StabilityProbe,
    };
    if !ok {
        return Err(Error::Config {
            line: 0,
            field: "kind".into(),
            message: format!("`{}` does not match this subcommand", cfg.kind),
        });
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn run_config(path: &Path, cli: &Cli, want: Want) -> ExitCode {
    let cfg = match load(path, cli, want) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let noise = if cli.no_noise {
        eprintln!("{NO_NOISE_BANNER}");
        NoiseMode::Disabled
    } else {
        NoiseMode::Private
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    let outcome = match pool.install(|| execute(&cfg, noise)) {
        Ok(o) => o,
        Err(e @ Error::Config { .. }) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    let dir = PathBuf::from(cfg.output.clone().unwrap_or_else(|| "out".into()));
    if let Err(e) = write_outcome(&dir, &outcome) {
        eprintln!("cannot write outputs to {}: {e}", dir.display());
        return ExitCode::from(EXIT_SOLVER);
    }
    if let Some(probe) = &outcome.probe {
        println!("probe {}: {}", cfg.probe.target.name(), if probe.passed { "PASS" } else { "FAIL" });
        return if probe.passed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CHECK) };
    }
    let failed = outcome.failed_runs();
    println!("{} runs written to {} ({failed} failed)", outcome.records.len(), dir.display());
    if failed > 0 {
        for r in outcome.records.iter().filter(|r| r.status.starts_with("error")) {
            eprintln!("{}: {}", r.run_id, r.status);
        }
        return ExitCode::from(EXIT_SOLVER);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config } => run_config(config, &cli, Want::Run),
        Command::Sweep { config } => run_config(config, &cli, Want::Sweep),
        Command::Probe { config } => run_config(config, &cli, Want::Probe),
        Command::Verify => {
            let opts = VerifyOptions { quick: cli.quick, seed: cli.seed.unwrap_or(0), sigma_mutation: cli.sigma_mutation };
            let rows = run_suite(&opts);
            print!("{}", render_table(&rows));
            if rows.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK)
            }
        }
    }
}
