//! Activations, losses, regularizers and the block-curvature classifier.

pub mod activation;
pub mod convexity;
pub mod loss;
pub mod regularizer;

pub use activation::{activation_apply, activation_derivative, ActivationKind, ActivationTraits};
pub use convexity::{classify_convexity, classify_from_traits, BlockCurvature};
pub use loss::{loss_grad_h, loss_value, LossKind, LossTraits, Monotonicity};
pub use regularizer::{regularizer_grad, regularizer_value, RegularizerKind, RegularizerSpec};
