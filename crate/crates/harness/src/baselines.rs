//! Full-gradient baselines: every layer moves at once in each iteration.

use std::time::Instant;

use bsum::trainer::{normalized_mse, StopReason};
use bsum::{
    evaluate, project_feasible, BsumError, Dataset64, Evaluation, LossKind, Matrix64, Network64, TraceRecord,
    TrainOutcome64, TrainTrace,
};

/// Objective value above which a baseline run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Stopping and recording settings for a baseline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineStop {
    pub max_iterations: usize,
    pub grad_norm_tol: f64,
    pub relative_tol: bool,
    pub record_every: usize,
    pub record_timing: bool,
}

impl Default for BaselineStop {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            grad_norm_tol: 1e-6,
            relative_tol: false,
            record_every: 1,
            record_timing: false,
        }
    }
}

/// `W − rate·g`
pub fn bp_step(w: &Matrix64, grad: &Matrix64, rate: f64) -> Matrix64 {
    w.add_scaled(-rate, grad)
}

/// Per-entry running sums of squared gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub rate: f64,
    pub eps: f64,
    pub accumulators: Vec<Matrix64>,
}

impl AdagradState {
    pub fn new(net: &Network64, rate: f64, eps: f64) -> Self {
        Self {
            rate,
            eps,
            accumulators: net
                .weights()
                .iter()
                .map(|w| Matrix64::zeros(w.rows(), w.cols()))
                .collect(),
        }
    }

    /// Adds `g²` to layer `layer`'s accumulator `G` and returns
    /// `W − rate·g/√(G + ε)`.
    pub fn step(&mut self, layer: usize, w: &Matrix64, grad: &Matrix64) -> Matrix64 {
        let acc = &mut self.accumulators[layer - 1];
        *acc = acc.zip_map(grad, |a, g| a + g * g);
        let (rate, eps) = (self.rate, self.eps);
        let scaled = grad.zip_map(acc, |g, a| g / (a + eps).sqrt());
        w.add_scaled(-rate, &scaled)
    }
}

/// BP with a constant learning rate.
pub fn baseline_bp_clr(
    net: Network64,
    data: &Dataset64,
    loss: LossKind,
    rate: f64,
    stop: &BaselineStop,
) -> Result<TrainOutcome64, BsumError> {
    check_rate(rate)?;
    full_gradient_loop(net, data, loss, rate, stop, |_, w, g| bp_step(w, g, rate))
}

/// ADAGRAD on the full gradient.
pub fn baseline_adagrad(
    net: Network64,
    data: &Dataset64,
    loss: LossKind,
    rate: f64,
    eps: f64,
    stop: &BaselineStop,
) -> Result<TrainOutcome64, BsumError> {
    check_rate(rate)?;
    if !(eps > 0.0) {
        return Err(BsumError::Spec(format!("ADAGRAD needs eps > 0, got {eps}")));
    }
    let mut state = AdagradState::new(&net, rate, eps);
    full_gradient_loop(net, data, loss, rate, stop, |j, w, g| state.step(j, w, g))
}

fn check_rate(rate: f64) -> Result<(), BsumError> {
    if rate >= 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(BsumError::Spec(format!(
            "learning rate must be finite and >= 0, got {rate}"
        )))
    }
}

fn record(
    k: usize,
    net: &Network64,
    eval: &Evaluation<f64>,
    data: &Dataset64,
    rate: f64,
    pre_norm: f64,
    s: f64,
) -> TraceRecord {
    TraceRecord {
        k,
        block: 0,
        f: eval.objective,
        normalized_mse: normalized_mse(eval.output(), data.y()),
        grad_norm: eval.stationarity(net),
        block_grad_norm: pre_norm,
        alpha: if k == 0 { 0.0 } else { rate },
        gamma: 0.0,
        wall_seconds: s,
    }
}

fn full_gradient_loop(
    mut net: Network64,
    data: &Dataset64,
    loss: LossKind,
    rate: f64,
    stop: &BaselineStop,
    mut update: impl FnMut(usize, &Matrix64, &Matrix64) -> Matrix64,
) -> Result<TrainOutcome64, BsumError> {
    if stop.record_every == 0 {
        return Err(BsumError::Spec("record_every must be >= 1".into()));
    }
    let depth = net.depth();
    if let Some(j) = (1..=depth).find(|&j| !net.regularizer(j).is_smooth()) {
        return Err(BsumError::NonSmooth { layer: j });
    }
    let clock = Instant::now();
    let seconds = || {
        if stop.record_timing {
            clock.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };
    let mut eval = evaluate(&net, data, loss)?;
    let initial = record(0, &net, &eval, data, rate, 0.0, seconds());
    let tol = if stop.relative_tol {
        stop.grad_norm_tol * initial.grad_norm
    } else {
        stop.grad_norm_tol
    };
    let mut records = Vec::new();
    let mut last = None;
    let mut status = StopReason::MaxIterations;
    let mut iterations = 0;

    for k in 1..=stop.max_iterations {
        let pre_norm = eval.stationarity(&net);
        let mut next = net.clone();
        for j in 1..=depth {
            let g = eval.block_gradient(j)?;
            let w = update(j, net.weight(j), &g);
            next.set_weight(j, project_feasible(net.feasible_set(j), &w))?;
        }
        let new_eval = match evaluate(&next, data, loss) {
            Ok(e) => e,
            Err(e) => {
                status = StopReason::Failed(format!("iteration {k}: {e}"));
                break;
            }
        };
        net = next;
        eval = new_eval;
        iterations = k;
        let rec = record(k, &net, &eval, data, rate, pre_norm, seconds());
        if k % stop.record_every == 0 {
            records.push(rec);
        }
        last = Some(rec);
        if !(rec.f.is_finite() && rec.f <= DIVERGENCE_LIMIT) {
            status = StopReason::Failed(format!("iteration {k}: diverged, f = {}", rec.f));
            break;
        }
        if rec.grad_norm <= tol {
            status = StopReason::Converged;
            break;
        }
    }
    if let Some(rec) = last {
        if records.last().map(|r: &TraceRecord| r.k) != Some(rec.k) {
            records.push(rec);
        }
    }
    Ok(TrainOutcome64 {
        net,
        trace: TrainTrace {
            initial,
            records,
            stop: status,
            iterations,
        },
    })
}
