//! The cyclic block loop.
//!
//! Update `k` touches block `j = ((k − 1) mod J) + 1`: it builds the surrogate
//! around the current point, takes its minimizer `D_j`, and sets
//! `W_j ← P((1 − α)W_j + αD_j)`. The schedule is indexed by the number of
//! times the block has been updated, so all blocks of one cycle share `α`.

mod armijo;
mod config;
mod schedule;
mod trace;

pub use armijo::{armijo_from, armijo_stepsize, ArmijoOutcome, ARMIJO_MAX_SHRINKS};
pub use config::{Layered, TrainConfig};
pub use schedule::{
    stepsize_next, validate_schedule, ArmijoParams, ScheduleClass, ScheduleState, StepsizeSchedule, MAX_STEPSIZE,
    VALIDATION_TERMS,
};
pub use trace::{normalized_mse, StopReason, TraceRecord, TrainTrace};

use std::time::Instant;

use log::warn;

use crate::error::{BsumError, Result};
use crate::functions::{classify_convexity, BlockCurvature, LossKind, RegularizerKind};
use crate::gradients::{evaluate, hessian_of, BatchMode, BatchSampler, Evaluation, LayerBlock, HESSIAN_FD_STEP};
use crate::matrix::Matrix;
use crate::network::{Dataset, Network};
use crate::scalar::Scalar;
use crate::upperbounds::linear_block::ridge_strength;
use crate::upperbounds::{
    closed_form_linear_block, descent_direction_proximal, linear_direction_allowed, majorized_step, project_feasible,
    Anchor, BlockObjective, UpperboundKind,
};

/// Block updated at iteration `k ≥ 1`.
pub fn block_index(k: usize, depth: usize) -> usize {
    (k - 1) % depth + 1
}

/// 1-based cycle containing iteration `k`; also the update count of its block.
pub fn cycle_index(k: usize, depth: usize) -> usize {
    (k - 1) / depth + 1
}

/// What one block update did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub k: usize,
    pub block: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub doublings: usize,
    pub direction: Matrix<T>,
    /// Stationarity of the block at the pre-update point.
    pub block_grad_norm: T,
    /// `false` when an inner proximal solve hit its iteration cap.
    pub inner_converged: bool,
}

/// Per-layer schedule state carried between [`train_step`] calls.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleStates(Vec<ScheduleState>);

impl ScheduleStates {
    pub fn new(depth: usize) -> Self {
        Self(vec![ScheduleState::default(); depth])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T> {
    pub net: Network<T>,
    pub trace: TrainTrace,
}

/// Performs update `k` on `net` in place.
pub fn train_step<T: Scalar>(
    net: &mut Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    cfg: &TrainConfig,
    k: usize,
    states: &mut ScheduleStates,
) -> Result<StepRecord<T>> {
    cfg.validate(net.depth())?;
    if k == 0 {
        return Err(BsumError::Spec("iterations are numbered from 1".into()));
    }
    let eval = evaluate(net, data, loss)?;
    let (w, record) = update_block(net, &eval, data, loss, cfg, k, states)?;
    net.set_weight_unchecked(record.block, w);
    Ok(record)
}

/// Full-batch training until the stationarity tolerance or the iteration cap.
pub fn train<T: Scalar>(
    net: Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    if cfg.sampler != BatchMode::Full {
        return Err(BsumError::Spec(
            "train runs full batches; use stochastic_train for mini-batches".into(),
        ));
    }
    run(net, data, loss, cfg, None)
}

/// Mini-batch training: every update uses the gradient over a sampled batch.
/// Only the first-order upperbound is supported. Recorded values are over the
/// full data set.
pub fn stochastic_train<T: Scalar>(
    net: Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    if cfg
        .upperbound
        .iter()
        .any(|u| !matches!(u, UpperboundKind::FirstOrderProx { .. }))
        || cfg.exact_bcd
    {
        return Err(BsumError::Spec(
            "stochastic training supports only the first-order upperbound".into(),
        ));
    }
    let sampler = BatchSampler::new(cfg.sampler, data.len(), cfg.sampler_seed)?;
    run(net, data, loss, cfg, Some(sampler))
}

fn record_from<T: Scalar>(
    k: usize,
    block: usize,
    net: &Network<T>,
    eval: &Evaluation<T>,
    data: &Dataset<T>,
    step: Option<&StepRecord<T>>,
    seconds: f64,
) -> TraceRecord {
    TraceRecord {
        k,
        block,
        f: eval.objective.to_f64_lossy(),
        normalized_mse: normalized_mse(eval.output(), data.y()).to_f64_lossy(),
        grad_norm: eval.stationarity(net).to_f64_lossy(),
        block_grad_norm: step.map_or(0.0, |s| s.block_grad_norm.to_f64_lossy()),
        alpha: step.map_or(0.0, |s| s.alpha),
        gamma: step.map_or(0.0, |s| s.gamma),
        wall_seconds: seconds,
    }
}

fn run<T: Scalar>(
    mut net: Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    cfg: &TrainConfig,
    mut sampler: Option<BatchSampler>,
) -> Result<TrainOutcome<T>> {
    let depth = net.depth();
    cfg.validate(depth)?;
    loss.validate()?;
    data.check_against(net.spec())?;
    let clock = Instant::now();
    let seconds = |on: bool| if on { clock.elapsed().as_secs_f64() } else { 0.0 };
    let mut states = ScheduleStates::new(depth);
    let mut eval = evaluate(&net, data, loss)?;
    let initial = record_from(0, 0, &net, &eval, data, None, seconds(cfg.record_timing));
    let tol = if cfg.relative_tol {
        cfg.grad_norm_tol * initial.grad_norm
    } else {
        cfg.grad_norm_tol
    };
    let every = cfg.record_every(depth);
    let mut records = Vec::new();
    let mut last: Option<TraceRecord> = None;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    for k in 1..=cfg.max_outer_iterations {
        let attempt = match sampler.as_mut() {
            None => update_block(&net, &eval, data, loss, cfg, k, &mut states),
            Some(s) => {
                let batch = s.next_batch(k);
                data.subset(&batch).and_then(|sub| {
                    let sub_eval = evaluate(&net, &sub, loss)?;
                    update_block(&net, &sub_eval, &sub, loss, cfg, k, &mut states)
                })
            }
        };
        let (w, step) = match attempt {
            Ok(x) => x,
            Err(e) => {
                stop = StopReason::Failed(format!("iteration {k}: {e}"));
                break;
            }
        };
        let j = step.block;
        let old = net.weight(j).clone();
        net.set_weight_unchecked(j, w);
        eval = match evaluate(&net, data, loss) {
            Ok(e) => e,
            Err(e) => {
                net.set_weight_unchecked(j, old);
                stop = StopReason::Failed(format!("iteration {k}: {e}"));
                break;
            }
        };
        iterations = k;
        let rec = record_from(k, j, &net, &eval, data, Some(&step), seconds(cfg.record_timing));
        if k % every == 0 {
            records.push(rec);
        }
        last = Some(rec);
        if k % depth == 0 && rec.grad_norm <= tol {
            stop = StopReason::Converged;
            break;
        }
    }
    if let Some(rec) = last {
        if records.last().map(|r| r.k) != Some(rec.k) {
            records.push(rec);
        }
    }
    Ok(TrainOutcome {
        net,
        trace: TrainTrace {
            initial,
            records,
            stop,
            iterations,
        },
    })
}

fn curvature_of<T: Scalar>(net: &Network<T>, loss: LossKind, layer: usize) -> BlockCurvature {
    let acts: Vec<_> = (layer..=net.depth()).map(|j| net.activation(j)).collect();
    classify_convexity(loss, &acts, net.regularizer(layer))
}

/// New weights for block `cyclic(k)` given an evaluation of `net` on `data`.
fn update_block<T: Scalar>(
    net: &Network<T>,
    eval: &Evaluation<T>,
    data: &Dataset<T>,
    loss: LossKind,
    cfg: &TrainConfig,
    k: usize,
    states: &mut ScheduleStates,
) -> Result<(Matrix<T>, StepRecord<T>)> {
    let depth = net.depth();
    let j = block_index(k, depth);
    let w = net.weight(j);
    let set = *net.feasible_set(j);
    let reg = *net.regularizer(j);
    let l1 = (reg.kind == RegularizerKind::L1 && reg.strength > 0.0).then_some(reg.strength);
    let kind = *cfg.upperbound.get(j);
    let block_grad_norm = eval.layer_stationarity(j, w);
    let block =
        LayerBlock::with_input(net, j, eval.outputs.post(j - 1).clone(), data.y(), loss).smooth_only(l1.is_some());

    if cfg.exact_bcd {
        if l1.is_some() {
            return Err(BsumError::Spec("exact BCD does not support L1 regularizers".into()));
        }
        let lambda = ridge_strength(reg.kind, reg.strength);
        let closed = net.spec().is_linear()
            && loss == LossKind::L2
            && set == crate::network::FeasibleSetKind::Unconstrained
            && lambda.is_some();
        let (direction, gamma, converged) = if closed {
            (closed_form_linear_block(net, data, j, lambda.unwrap())?, 0.0, true)
        } else if let UpperboundKind::Proximal { gamma, inner } = kind {
            check_proximal_gate(net, loss, j, cfg)?;
            let out = descent_direction_proximal(&block, w, gamma, &set, &inner)?;
            (out.point, gamma, out.converged)
        } else {
            return Err(BsumError::Spec(
                "exact BCD outside the deep linear L2 case needs the proximal upperbound".into(),
            ));
        };
        let record = StepRecord {
            k,
            block: j,
            alpha: 1.0,
            gamma,
            doublings: 0,
            direction: direction.clone(),
            block_grad_norm,
            inner_converged: converged,
        };
        return Ok((direction, record));
    }

    match kind {
        UpperboundKind::Linear => {
            linear_direction_allowed(&curvature_of(net, loss, j), &set, cfg.override_curvature_checks)?
        }
        UpperboundKind::Proximal { .. } => check_proximal_gate(net, loss, j, cfg)?,
        _ => {}
    }
    let anchor_value = match l1 {
        Some(lambda) => eval.objective - T::lit(lambda) * w.abs_sum(),
        None => eval.objective,
    };
    let mut anchor = Anchor::new(w.clone(), anchor_value, eval.smooth_gradient(j));
    if let UpperboundKind::SecondOrderProx { .. } = kind {
        anchor = anchor.with_hessian(symmetrized_hessian(&block, w)?);
    }
    let step = majorized_step(&kind, &anchor, &block, &set, cfg.gamma_rule, l1)?;
    let direction = step.direction;

    let alpha = if cfg.unit_stepsize {
        1.0
    } else {
        let schedule = cfg.schedule.as_ref().expect("validated").get(j);
        match schedule {
            StepsizeSchedule::Armijo(params) => {
                if l1.is_some() {
                    return Err(BsumError::Spec(
                        "Armijo stepsizes need a smooth regularizer on every layer".into(),
                    ));
                }
                armijo_from(&block, w, anchor.value, &anchor.gradient, &direction, params)?.alpha
            }
            s => stepsize_next(s, cycle_index(k, depth), &mut states.0[j - 1]),
        }
    };

    let new_w = if alpha == 0.0 || &direction == w {
        w.clone()
    } else if alpha == 1.0 {
        direction.clone()
    } else {
        let a = T::lit(alpha);
        project_feasible(&set, &w.scale(T::one() - a).add_scaled(a, &direction))
    };
    let record = StepRecord {
        k,
        block: j,
        alpha,
        gamma: step.gamma,
        doublings: step.doublings,
        direction,
        block_grad_norm,
        inner_converged: step.converged,
    };
    Ok((new_w, record))
}

fn check_proximal_gate<T: Scalar>(net: &Network<T>, loss: LossKind, layer: usize, cfg: &TrainConfig) -> Result<()> {
    let curvature = curvature_of(net, loss, layer);
    if curvature.is_strongly_convex() {
        return Ok(());
    }
    if cfg.override_curvature_checks {
        warn!("proximal upperbound on layer {layer} without a convexity certificate ({curvature:?})");
        return Ok(());
    }
    Err(BsumError::Curvature(format!(
        "proximal upperbound needs a strongly convex block; layer {layer} is {curvature:?}"
    )))
}

fn symmetrized_hessian<T: Scalar>(block: &dyn BlockObjective<T>, w: &Matrix<T>) -> Result<Matrix<T>> {
    let raw = hessian_of(block, w, T::lit(HESSIAN_FD_STEP))?;
    let t = raw.transpose();
    Ok((&raw + &t).scale(T::lit(0.5)))
}
