use std::path::PathBuf;
use std::process::ExitCode;

use bsum::validate_schedule;
use bsum_harness::config::ScheduleCfg;
use bsum_harness::gradcheck::{gradcheck, TOLERANCE};
use bsum_harness::{run_experiment, threads_from_env, ExperimentConfig, HarnessError};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "bsum",
    version,
    about = "Train layered networks by block upperbound minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method and seed of an experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seeds to run instead of the configured ones.
        #[arg(long, num_args = 1..)]
        seed: Vec<u64>,
    },
    /// Classify a stepsize schedule and print partial sums as JSON.
    ValidateSchedule {
        /// inverse-root, geometric, recursive, constant or armijo
        #[arg(long)]
        kind: String,
        /// Schedule parameters as key=value, e.g. `c=1` or `alpha0=1 t=0.5`.
        #[arg(long, num_args = 0..)]
        params: Vec<String>,
    },
    /// Compare analytic block gradients with central differences.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn run(command: Command) -> Result<i32, HarnessError> {
    match command {
        Command::Train { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            let out_dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let threads = threads_from_env()?;
            let report = run_experiment(&cfg, &out_dir, threads)?;
            for r in &report.runs {
                println!(
                    "{} seed {}: {} after {} iterations, f = {}",
                    r.method,
                    r.seed,
                    r.stop,
                    r.iterations,
                    r.final_f.map_or("n/a".to_string(), |f| format!("{f:.6e}"))
                );
            }
            Ok(if report.failed() { 1 } else { 0 })
        }
        Command::ValidateSchedule { kind, params } => {
            let schedule = parse_schedule(&kind, &params)?;
            let sched: bsum::StepsizeSchedule = schedule.into();
            sched.validate()?;
            let c = validate_schedule(&sched);
            let out = json!({
                "kind": sched.name(),
                "satisfies_eq7": c.satisfies_eq7,
                "witness": c.witness,
                "partial_sum": c.partial_sum,
                "partial_square_sum": c.partial_square_sum,
                "square_tail": c.square_tail,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            Ok(0)
        }
        Command::Gradcheck { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let checks = gradcheck(&cfg)?;
            let mut ok = true;
            for c in &checks {
                match c.relative_error {
                    Some(e) => println!(
                        "seed {} layer {}: relative error {e:.3e} {}",
                        c.seed,
                        c.layer,
                        if c.passed { "ok" } else { "FAIL" }
                    ),
                    None => println!("seed {} layer {}: skipped (l1)", c.seed, c.layer),
                }
                ok &= c.passed;
            }
            if !ok {
                eprintln!("gradient check exceeded {TOLERANCE:e}");
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

/// `--kind` plus `key=value` pairs into a schedule config.
pub fn parse_schedule(kind: &str, params: &[String]) -> Result<ScheduleCfg, HarnessError> {
    let mut fields = serde_json::Map::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("expected key=value, got {p:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("parameter {k} is not a number: {v:?}")))?;
        fields.insert(k.trim().to_string(), json!(v));
    }
    let tagged = json!({ kind.replace('-', "_"): fields });
    serde_json::from_value(tagged).map_err(|e| HarnessError::Config(format!("schedule {kind}: {e}")))
}
