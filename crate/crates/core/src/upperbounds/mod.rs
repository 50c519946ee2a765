//! Block surrogates `g_j(·; W̄)` and their minimizers.
//!
//! Each family majorizes the block objective around the current point and is
//! tangent to it there. The trainer moves towards the surrogate minimizer `D`
//! with a convex combination.

mod bound;
mod directions;
pub(crate) mod linear_block;
mod projection;
mod proximal;

pub use bound::{evaluate_upperbound, majorized_step, Anchor, GammaRule, MajorizedStep, MAJORIZATION_SLACK};
pub use directions::{
    descent_direction_first_order, descent_direction_linear, descent_direction_second_order, linear_direction_allowed,
    prox_l1_step, soft_threshold, SecondOrderStep, MAX_GAMMA_DOUBLINGS,
};
pub use linear_block::{closed_form_linear_block, linear_block_system};
pub use projection::project_feasible;
pub use proximal::{descent_direction_proximal, InnerSolverConfig, ProxOutcome};

use crate::error::{BsumError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// A smooth function of one weight matrix.
pub trait BlockObjective<T: Scalar> {
    fn shape(&self) -> (usize, usize);

    fn value(&self, w: &Matrix<T>) -> Result<T>;

    fn gradient(&self, w: &Matrix<T>) -> Result<Matrix<T>>;

    fn value_and_gradient(&self, w: &Matrix<T>) -> Result<(T, Matrix<T>)> {
        Ok((self.value(w)?, self.gradient(w)?))
    }
}

/// Adapts a pair of closures to [`BlockObjective`].
pub struct FnObjective<V, G> {
    shape: (usize, usize),
    value: V,
    gradient: G,
}

impl<V, G> FnObjective<V, G> {
    pub fn new(shape: (usize, usize), value: V, gradient: G) -> Self {
        Self { shape, value, gradient }
    }
}

impl<T, V, G> BlockObjective<T> for FnObjective<V, G>
where
    T: Scalar,
    V: Fn(&Matrix<T>) -> T,
    G: Fn(&Matrix<T>) -> Matrix<T>,
{
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn value(&self, w: &Matrix<T>) -> Result<T> {
        Ok((self.value)(w))
    }

    fn gradient(&self, w: &Matrix<T>) -> Result<Matrix<T>> {
        Ok((self.gradient)(w))
    }
}

/// Surrogate family used for a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperboundKind {
    /// `f + ⟨∇f, E⟩ + (γ/2)‖E‖²`
    FirstOrderProx { gamma: f64 },
    /// `f + ⟨∇f, E⟩ + ½ vec(E)ᵀ(∇²f + γI)vec(E)`
    SecondOrderProx { gamma: f64 },
    /// `f_j(W) + (γ/2)‖E‖²`, minimized by an inner solver.
    Proximal { gamma: f64, inner: InnerSolverConfig },
    /// `f + ⟨∇f, E⟩`
    Linear,
}

impl UpperboundKind {
    pub fn first_order(gamma: f64) -> Self {
        UpperboundKind::FirstOrderProx { gamma }
    }

    pub fn second_order(gamma: f64) -> Self {
        UpperboundKind::SecondOrderProx { gamma }
    }

    pub fn proximal(gamma: f64) -> Self {
        UpperboundKind::Proximal {
            gamma,
            inner: InnerSolverConfig::default(),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            UpperboundKind::FirstOrderProx { gamma }
            | UpperboundKind::SecondOrderProx { gamma }
            | UpperboundKind::Proximal { gamma, .. } => Some(gamma),
            UpperboundKind::Linear => None,
        }
    }

    /// Same family with a different `γ`.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        match *self {
            UpperboundKind::FirstOrderProx { .. } => UpperboundKind::FirstOrderProx { gamma },
            UpperboundKind::SecondOrderProx { .. } => UpperboundKind::SecondOrderProx { gamma },
            UpperboundKind::Proximal { inner, .. } => UpperboundKind::Proximal { gamma, inner },
            UpperboundKind::Linear => UpperboundKind::Linear,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            UpperboundKind::FirstOrderProx { .. } => "first-order",
            UpperboundKind::SecondOrderProx { .. } => "second-order",
            UpperboundKind::Proximal { .. } => "proximal",
            UpperboundKind::Linear => "linear",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(gamma) = self.gamma() {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(BsumError::Spec(format!(
                    "{} upperbound needs γ > 0, got {gamma}",
                    self.name()
                )));
            }
        }
        if let UpperboundKind::Proximal { inner, .. } = self {
            inner.validate()?;
        }
        Ok(())
    }
}
