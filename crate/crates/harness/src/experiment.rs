//! Runs every `(method, seed)` pair of a config and writes one curve file and
//! one JSON summary per run.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use bsum::trainer::StopReason;
use bsum::{build_network, stochastic_train, train, BatchMode, Dataset64, LossKind, Network64, TrainOutcome64};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_adagrad, baseline_bp_clr, BaselineStop};
use crate::config::{BaselineCfg, BaselineKind, DatasetCfg, ExperimentConfig, Method, ProposedCfg};
use crate::curves::{emit_curves, Series};
use crate::data::{load_csv_dataset, synth_regression};
use crate::error::HarnessError;

pub const THREADS_ENV: &str = "BSUM_TRAIN_THREADS";

/// Worker count from `BSUM_TRAIN_THREADS` (default 1).
pub fn threads_from_env() -> Result<usize, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(HarnessError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub seed: u64,
    /// `"ok"` or `"failed"`.
    pub status: String,
    pub stop: String,
    pub error: Option<String>,
    pub iterations: usize,
    /// Single-block updates: one per iteration for the proposed method, `J`
    /// per iteration for the full-gradient baselines.
    pub block_updates: usize,
    /// Passes over all blocks.
    pub epochs: f64,
    pub initial_f: Option<f64>,
    pub final_f: Option<f64>,
    pub initial_grad_norm: Option<f64>,
    pub final_grad_norm: Option<f64>,
    /// Present only with `record_timing`, so that reruns stay byte-identical.
    pub wall_seconds: Option<f64>,
    pub curve_file: String,
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        self.status != "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub runs: Vec<RunSummary>,
    pub curve_files: Vec<PathBuf>,
    pub summary_files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn failed(&self) -> bool {
        self.runs.iter().any(RunSummary::failed)
    }
}

/// Dataset for a run seed.
pub fn dataset_for(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset64, HarnessError> {
    match &cfg.dataset {
        DatasetCfg::Csv {
            path,
            targets,
            standardize,
        } => load_csv_dataset(path, targets, *standardize),
        DatasetCfg::Synthetic {
            n,
            teacher,
            seed: fixed,
        } => synth_regression(fixed.unwrap_or(seed), *n, teacher),
    }
}

/// Initial network for a run seed; shared by every method.
pub fn initial_network(cfg: &ExperimentConfig, seed: u64) -> Result<Network64, HarnessError> {
    Ok(build_network(cfg.network.spec()?, cfg.network.init.into(), seed)?)
}

pub fn run_proposed(
    p: &ProposedCfg,
    net: Network64,
    data: &Dataset64,
    loss: LossKind,
    record_timing: bool,
) -> Result<TrainOutcome64, HarnessError> {
    let tc = p.train_config(record_timing)?;
    let out = if tc.sampler == BatchMode::Full {
        train(net, data, loss, &tc)?
    } else {
        stochastic_train(net, data, loss, &tc)?
    };
    Ok(out)
}

pub fn run_baseline(
    b: &BaselineCfg,
    net: Network64,
    data: &Dataset64,
    loss: LossKind,
    record_timing: bool,
) -> Result<TrainOutcome64, HarnessError> {
    let stop = BaselineStop {
        max_iterations: b.max_iterations,
        grad_norm_tol: b.grad_norm_tol,
        relative_tol: b.relative_tol,
        record_every: b.record_every,
        record_timing,
    };
    let out = match b.method {
        BaselineKind::BpClr => baseline_bp_clr(net, data, loss, b.rate(), &stop)?,
        BaselineKind::Adagrad => baseline_adagrad(net, data, loss, b.rate(), b.eps(), &stop)?,
    };
    Ok(out)
}

fn file_stem(method: &str, seed: u64) -> String {
    format!("{method}__seed{seed}")
}

struct Job<'a> {
    method: String,
    kind: Method<'a>,
    seed: u64,
}

type RunResult = Result<(RunSummary, PathBuf, PathBuf), HarnessError>;

struct SeedInputs {
    net: Network64,
    data: Dataset64,
}

/// Trains every configured method for every seed and writes the results to
/// `out_dir`. At most `threads` runs execute at once. A run that fails is
/// recorded as failed in its summary; the others still run.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let loss = cfg.loss()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;

    let mut inputs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let data = dataset_for(cfg, seed)?;
        let net = initial_network(cfg, seed)?;
        data.check_against(net.spec())?;
        inputs.push(SeedInputs { net, data });
    }

    let jobs: Vec<Job<'_>> = cfg
        .methods()
        .into_iter()
        .flat_map(|(method, kind)| {
            cfg.seeds.iter().map(move |&seed| Job {
                method: method.clone(),
                kind,
                seed,
            })
        })
        .collect();
    let seed_slot = |seed: u64| cfg.seeds.iter().position(|&s| s == seed).expect("seed from config");

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunResult>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = threads.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let input = &inputs[seed_slot(job.seed)];
                let r = execute(job, input, loss, cfg.record_timing, out_dir);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });

    let mut report = ExperimentReport {
        runs: Vec::new(),
        curve_files: Vec::new(),
        summary_files: Vec::new(),
    };
    for r in results.into_inner().expect("results lock") {
        let (summary, curve, json) = r.expect("every job ran")?;
        report.runs.push(summary);
        report.curve_files.push(curve);
        report.summary_files.push(json);
    }
    Ok(report)
}

fn execute(job: &Job<'_>, input: &SeedInputs, loss: LossKind, record_timing: bool, out_dir: &Path) -> RunResult {
    let stem = file_stem(&job.method, job.seed);
    let curve_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.json"));
    let depth = input.net.depth();
    let clock = Instant::now();
    let outcome = match job.kind {
        Method::Proposed(p) => run_proposed(p, input.net.clone(), &input.data, loss, record_timing),
        Method::Baseline(b) => run_baseline(b, input.net.clone(), &input.data, loss, record_timing),
    };
    let elapsed = clock.elapsed().as_secs_f64();
    let per_iteration = match job.kind {
        Method::Proposed(_) => 1,
        Method::Baseline(_) => depth,
    };

    let summary = match &outcome {
        Ok(out) => {
            let t = &out.trace;
            emit_curves(
                &[Series {
                    method: &job.method,
                    seed: job.seed,
                    trace: t,
                }],
                &curve_path,
            )?;
            let (status, error) = match &t.stop {
                StopReason::Failed(m) => ("failed", Some(m.clone())),
                _ => ("ok", None),
            };
            RunSummary {
                method: job.method.clone(),
                seed: job.seed,
                status: status.into(),
                stop: stop_name(&t.stop).into(),
                error,
                iterations: t.iterations,
                block_updates: t.iterations * per_iteration,
                epochs: (t.iterations * per_iteration) as f64 / depth as f64,
                initial_f: Some(t.initial.f),
                final_f: Some(t.last().f),
                initial_grad_norm: Some(t.initial.grad_norm),
                final_grad_norm: Some(t.last().grad_norm),
                wall_seconds: record_timing.then_some(elapsed),
                curve_file: file_name(&curve_path),
            }
        }
        Err(e) => {
            emit_curves(&[], &curve_path)?;
            RunSummary {
                method: job.method.clone(),
                seed: job.seed,
                status: "failed".into(),
                stop: "error".into(),
                error: Some(e.to_string()),
                iterations: 0,
                block_updates: 0,
                epochs: 0.0,
                initial_f: None,
                final_f: None,
                initial_grad_norm: None,
                final_grad_norm: None,
                wall_seconds: record_timing.then_some(elapsed),
                curve_file: file_name(&curve_path),
            }
        }
    };
    if summary.failed() {
        warn!(
            "{} seed {} failed: {}",
            job.method,
            job.seed,
            summary.error.as_deref().unwrap_or("?")
        );
    } else {
        info!(
            "{} seed {}: {} iterations, f = {:?}",
            job.method, job.seed, summary.iterations, summary.final_f
        );
    }
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| HarnessError::io(&json_path, e))?;
    Ok((summary, curve_path, json_path))
}

fn stop_name(s: &StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::MaxIterations => "max_iterations",
        StopReason::Failed(_) => "failed",
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
