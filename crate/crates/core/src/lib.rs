//! Block-successive upperbound minimization for layered networks.
//!
//! A network's weight matrices are the blocks. Each update replaces the
//! objective in one block by a surrogate that is tangent to it and lies above
//! it, moves towards the surrogate's minimizer, and then goes on to the next
//! block in cyclic order. Backpropagation with a learning rate, plain gradient
//! descent and damped Newton steps fall out as particular choices of surrogate
//! and stepsize.
//!
//! ```
//! use bsum::{build_network, train, ActivationKind, Dataset64, InitScheme, LossKind, Matrix64,
//!            NetworkSpec, RegularizerSpec, TrainConfig};
//!
//! let spec = NetworkSpec::uniform(&[2, 3, 1], ActivationKind::Tanh, RegularizerSpec::l2(1e-3));
//! let net = build_network(spec, InitScheme::default(), 7).unwrap();
//! let x = Matrix64::from_rows(&[&[0.0, 1.0, 2.0], &[1.0, 0.5, -1.0]]);
//! let y = Matrix64::from_rows(&[&[0.1, 0.4, 0.2]]);
//! let data = Dataset64::new(x, y).unwrap();
//! let cfg = TrainConfig { max_outer_iterations: 50, ..TrainConfig::default() };
//! let out = train(net, &data, LossKind::L2, &cfg).unwrap();
//! assert!(out.trace.last().f <= out.trace.initial.f);
//! ```

pub mod error;
pub mod functions;
pub mod gradients;
pub mod matrix;
pub mod network;
pub mod scalar;
pub mod trainer;
pub mod upperbounds;

pub use error::{BsumError, Result};
pub use functions::{
    activation_apply, activation_derivative, classify_convexity, loss_grad_h, loss_value, regularizer_grad,
    regularizer_value, ActivationKind, BlockCurvature, LossKind, RegularizerKind, RegularizerSpec,
};
pub use gradients::{
    block_gradient, block_hessian, delta_recursion, evaluate, fd_gradient, objective, stochastic_block_gradient,
    BatchMode, BatchSampler, DeltaStack, Evaluation, LayerBlock,
};
pub use matrix::Matrix;
pub use network::{
    build_network, forward, network_output, Dataset, FeasibleSetKind, InitScheme, LayerOutputs, Network, NetworkSpec,
};
pub use scalar::Scalar;
pub use trainer::{
    armijo_stepsize, stepsize_next, stochastic_train, train, train_step, validate_schedule, ArmijoParams, Layered,
    StepsizeSchedule, TraceRecord, TrainConfig, TrainOutcome, TrainTrace,
};
pub use upperbounds::{
    closed_form_linear_block, descent_direction_first_order, descent_direction_linear, descent_direction_proximal,
    descent_direction_second_order, evaluate_upperbound, project_feasible, prox_l1_step, Anchor, BlockObjective,
    GammaRule, InnerSolverConfig, UpperboundKind,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Network64 = Network<f64>;
pub type Network32 = Network<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type LayerOutputs64 = LayerOutputs<f64>;
pub type TrainOutcome64 = TrainOutcome<f64>;
