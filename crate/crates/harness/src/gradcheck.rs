//! Analytic block gradients against central differences for a configured
//! problem.

use std::cell::RefCell;

use bsum::{evaluate, fd_gradient, objective, FeasibleSetKind, Matrix64, Network64};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::experiment::{dataset_for, initial_network};

pub const FD_STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCheck {
    pub seed: u64,
    pub layer: usize,
    /// `‖∇ − ∇_FD‖_F / max(1, ‖∇‖_F)`; `None` for `L1` layers, which have no
    /// gradient.
    pub relative_error: Option<f64>,
    pub passed: bool,
}

/// Checks every layer of the configured network at each seed's initial
/// weights.
pub fn gradcheck(cfg: &ExperimentConfig) -> Result<Vec<LayerCheck>, HarnessError> {
    let loss = cfg.loss()?;
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let net = initial_network(cfg, seed)?;
        let data = dataset_for(cfg, seed)?;
        let eval = evaluate(&net, &data, loss)?;
        // Probes may leave the feasible set; the gradient is of the unconstrained objective.
        let mut open = net.spec().clone();
        open.feasible_sets = vec![FeasibleSetKind::Unconstrained; net.depth()];
        let free = Network64::from_weights(open, net.weights().to_vec())?;
        for layer in 1..=net.depth() {
            if !net.regularizer(layer).is_smooth() {
                out.push(LayerCheck {
                    seed,
                    layer,
                    relative_error: None,
                    passed: true,
                });
                continue;
            }
            let analytic = eval.block_gradient(layer)?;
            let failure = RefCell::new(None);
            let fd = fd_gradient(
                |w: &Matrix64| {
                    let mut probe = free.clone();
                    probe
                        .set_weight(layer, w.clone())
                        .and_then(|()| objective(&probe, &data, loss))
                        .unwrap_or_else(|e| {
                            failure.borrow_mut().get_or_insert(e);
                            f64::NAN
                        })
                },
                net.weight(layer),
                FD_STEP,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e.into());
            }
            let err = (&analytic - &fd).frobenius_norm() / analytic.frobenius_norm().max(1.0);
            out.push(LayerCheck {
                seed,
                layer,
                relative_error: Some(err),
                passed: err <= TOLERANCE,
            });
        }
    }
    Ok(out)
}
