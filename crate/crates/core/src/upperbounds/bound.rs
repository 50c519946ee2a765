use crate::error::{shape_err, BsumError, Result};
use crate::matrix::Matrix;
use crate::network::FeasibleSetKind;
use crate::scalar::Scalar;
use crate::upperbounds::directions::{
    descent_direction_first_order, descent_direction_linear, descent_direction_second_order, prox_l1_step,
};
use crate::upperbounds::proximal::descent_direction_proximal;
use crate::upperbounds::{BlockObjective, UpperboundKind};

/// Everything the surrogates need from the current point `W̄^(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor<T> {
    pub point: Matrix<T>,
    pub value: T,
    pub gradient: Matrix<T>,
    pub hessian: Option<Matrix<T>>,
}

impl<T: Scalar> Anchor<T> {
    pub fn new(point: Matrix<T>, value: T, gradient: Matrix<T>) -> Self {
        Self {
            point,
            value,
            gradient,
            hessian: None,
        }
    }

    pub fn with_hessian(mut self, hessian: Matrix<T>) -> Self {
        self.hessian = Some(hessian);
        self
    }

    /// Anchor taken from `objective` at `point`.
    pub fn at(objective: &dyn BlockObjective<T>, point: &Matrix<T>) -> Result<Self> {
        let (value, gradient) = objective.value_and_gradient(point)?;
        Ok(Self::new(point.clone(), value, gradient))
    }
}

/// `g(W; W̄^(k))` for the chosen family. `Proximal` needs the block
/// objective; `SecondOrderProx` needs `anchor.hessian`.
pub fn evaluate_upperbound<T: Scalar>(
    kind: &UpperboundKind,
    w: &Matrix<T>,
    anchor: &Anchor<T>,
    objective: Option<&dyn BlockObjective<T>>,
) -> Result<T> {
    if w.shape() != anchor.point.shape() {
        return Err(shape_err(
            "upperbound argument",
            format!("{:?}", anchor.point.shape()),
            format!("{:?}", w.shape()),
        ));
    }
    let e = w - &anchor.point;
    let linear = anchor.value + anchor.gradient.dot(&e);
    match *kind {
        UpperboundKind::Linear => Ok(linear),
        UpperboundKind::FirstOrderProx { gamma } => Ok(linear + T::lit(gamma) / T::lit(2.0) * e.frobenius_norm_sq()),
        UpperboundKind::SecondOrderProx { gamma } => {
            let hess = anchor
                .hessian
                .as_ref()
                .ok_or_else(|| BsumError::Spec("second-order upperbound evaluated without a Hessian".into()))?;
            let n = e.len();
            if hess.shape() != (n, n) {
                return Err(shape_err(
                    "upperbound Hessian",
                    format!("({n}, {n})"),
                    format!("{:?}", hess.shape()),
                ));
            }
            let ev = e.as_slice();
            let mut quad = T::zero();
            for a in 0..n {
                let row = hess.row(a);
                let mut acc = T::zero();
                for b in 0..n {
                    acc += row[b] * ev[b];
                }
                quad += ev[a] * acc;
            }
            let half = T::lit(0.5);
            Ok(linear + half * quad + half * T::lit(gamma) * e.frobenius_norm_sq())
        }
        UpperboundKind::Proximal { gamma, .. } => {
            let f = objective
                .ok_or_else(|| BsumError::Spec("proximal upperbound evaluated without the block objective".into()))?;
            if e.frobenius_norm_sq() == T::zero() {
                return Ok(anchor.value);
            }
            Ok(f.value(w)? + T::lit(gamma) / T::lit(2.0) * e.frobenius_norm_sq())
        }
    }
}

/// How `γ` is chosen at each block update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaRule {
    /// Use the configured `γ` as is.
    Fixed,
    /// Start from the configured `γ` and double until the surrogate
    /// majorizes `f` at the candidate direction.
    Backtracking { max_doublings: usize },
}

impl Default for GammaRule {
    fn default() -> Self {
        GammaRule::Backtracking { max_doublings: 50 }
    }
}

/// Relative rounding slack in the majorization test, in units of machine
/// epsilon times `1 + |f|`.
pub const MAJORIZATION_SLACK: f64 = 64.0;

/// Direction chosen for one block update.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorizedStep<T> {
    pub direction: Matrix<T>,
    pub gamma: f64,
    pub doublings: usize,
    /// `f(D)` when it was evaluated for the majorization test.
    pub value_at_direction: Option<T>,
    /// `false` only for an inner proximal solve that hit its iteration cap.
    pub converged: bool,
}

fn majorizes<T: Scalar>(f_d: T, g_d: T, anchor_value: T) -> bool {
    let slack = T::lit(MAJORIZATION_SLACK) * T::epsilon() * (T::one() + anchor_value.abs());
    f_d <= g_d + slack
}

/// Minimizes the surrogate around `anchor`, adapting `γ` under
/// [`GammaRule::Backtracking`].
///
/// With `l1 = Some(λ)` the first-order family takes the soft-threshold step on
/// the smooth part, and `objective`/`anchor` must describe that smooth part.
pub fn majorized_step<T: Scalar>(
    kind: &UpperboundKind,
    anchor: &Anchor<T>,
    objective: &dyn BlockObjective<T>,
    set: &FeasibleSetKind,
    rule: GammaRule,
    l1: Option<f64>,
) -> Result<MajorizedStep<T>> {
    kind.validate()?;
    let w = &anchor.point;
    if l1.is_some() && !matches!(kind, UpperboundKind::FirstOrderProx { .. }) {
        return Err(BsumError::Spec(format!(
            "L1-regularized layers need the first-order upperbound, got {}",
            kind.name()
        )));
    }
    match *kind {
        UpperboundKind::Linear => Ok(MajorizedStep {
            direction: descent_direction_linear(w, &anchor.gradient)?,
            gamma: 0.0,
            doublings: 0,
            value_at_direction: None,
            converged: true,
        }),
        UpperboundKind::Proximal { gamma, inner } => {
            let out = descent_direction_proximal(objective, w, gamma, set, &inner)?;
            let f_d = out.value - T::lit(gamma) / T::lit(2.0) * (&out.point - w).frobenius_norm_sq();
            Ok(MajorizedStep {
                direction: out.point,
                gamma,
                doublings: 0,
                value_at_direction: Some(f_d),
                converged: out.converged,
            })
        }
        UpperboundKind::FirstOrderProx { gamma } | UpperboundKind::SecondOrderProx { gamma } => {
            let mut gamma = gamma;
            let limit = match rule {
                GammaRule::Fixed => 0,
                GammaRule::Backtracking { max_doublings } => max_doublings,
            };
            let mut doublings = 0;
            loop {
                let (direction, used) = match *kind {
                    UpperboundKind::FirstOrderProx { .. } => {
                        let d = match l1 {
                            Some(lambda) => prox_l1_step(w, &anchor.gradient, gamma, lambda)?,
                            None => descent_direction_first_order(w, &anchor.gradient, gamma, set)?,
                        };
                        (d, gamma)
                    }
                    _ => {
                        let hess = anchor.hessian.as_ref().ok_or_else(|| {
                            BsumError::Spec("second-order direction requested without a Hessian".into())
                        })?;
                        let s = descent_direction_second_order(w, &anchor.gradient, hess, gamma)?;
                        (crate::upperbounds::project_feasible(set, &s.direction), s.gamma)
                    }
                };
                if matches!(rule, GammaRule::Fixed) {
                    return Ok(MajorizedStep {
                        direction,
                        gamma: used,
                        doublings,
                        value_at_direction: None,
                        converged: true,
                    });
                }
                let f_d = objective.value(&direction).ok().filter(|v| v.is_finite());
                if let Some(f_d) = f_d {
                    let g_d = evaluate_upperbound(&kind.with_gamma(used), &direction, anchor, None)?;
                    if majorizes(f_d, g_d, anchor.value) {
                        return Ok(MajorizedStep {
                            direction,
                            gamma: used,
                            doublings,
                            value_at_direction: Some(f_d),
                            converged: true,
                        });
                    }
                }
                if doublings >= limit {
                    return Err(BsumError::Curvature(format!(
                        "surrogate failed to majorize the block after {doublings} doublings of γ (reached {used})"
                    )));
                }
                gamma = used * 2.0;
                doublings += 1;
            }
        }
    }
}
