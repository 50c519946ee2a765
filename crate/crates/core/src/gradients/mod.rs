//! Matrix-form backpropagation and the finite-difference oracles used to
//! check it.
//!
//! For layer `j` the gradient of the data term is `Δ_j Z_{j-1}ᵀ`, with
//! `Δ_J = ∇_H ℓ ∘ σ'_J(U_J)` and `Δ_j = (W_{j+1}ᵀ Δ_{j+1}) ∘ σ'_j(U_j)`.
//! The `1/N` averaging lives inside `∇_H ℓ`, so a mini-batch gradient is the
//! same computation on the batch columns.

mod fd;
mod sampler;

pub use fd::{fd_gradient, HESSIAN_FD_STEP, HESSIAN_SIZE_LIMIT};
pub use sampler::{BatchMode, BatchSampler};

use crate::error::{shape_err, BsumError, Result};
use crate::functions::{
    activation_derivative, loss_grad_h, loss_value, regularizer_grad, regularizer_value, LossKind, RegularizerKind,
};
use crate::matrix::Matrix;
use crate::network::{forward, forward_from, Dataset, LayerOutputs, Network};
use crate::scalar::Scalar;
use crate::upperbounds::BlockObjective;

/// Backpropagated error matrices `Δ_1..Δ_J`, each `d_j × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaStack<T> {
    pub deltas: Vec<Matrix<T>>,
}

impl<T: Scalar> DeltaStack<T> {
    /// `Δ_j` for 1-based `layer`.
    pub fn delta(&self, layer: usize) -> &Matrix<T> {
        &self.deltas[layer - 1]
    }
}

/// Runs the recursion on outputs produced by [`forward`].
pub fn delta_recursion<T: Scalar>(
    net: &Network<T>,
    outs: &LayerOutputs<T>,
    loss: LossKind,
    y: &Matrix<T>,
) -> Result<DeltaStack<T>> {
    if outs.pre_activations.len() != net.depth() {
        return Err(shape_err(
            "delta_recursion outputs",
            format!("{} layers", net.depth()),
            format!("{}", outs.pre_activations.len()),
        ));
    }
    let grad_h = loss_grad_h(loss, outs.output(), y)?;
    Ok(DeltaStack {
        deltas: deltas_from(net, 1, outs, grad_h),
    })
}

/// Deltas for layers `first..=J` given outputs that start at `Z_{first-1}`.
fn deltas_from<T: Scalar>(net: &Network<T>, first: usize, outs: &LayerOutputs<T>, grad_h: Matrix<T>) -> Vec<Matrix<T>> {
    let depth = net.depth();
    let count = depth + 1 - first;
    let mut deltas: Vec<Matrix<T>> = Vec::with_capacity(count);
    let last = activation_derivative(net.activation(depth), &outs.pre_activations[count - 1]);
    deltas.push(grad_h.hadamard(&last));
    for layer in (first..depth).rev() {
        let upstream = net.weight(layer + 1).t_matmul(deltas.last().unwrap());
        let local = activation_derivative(net.activation(layer), &outs.pre_activations[layer - first]);
        deltas.push(upstream.hadamard(&local));
    }
    deltas.reverse();
    deltas
}

/// Objective value and per-layer gradients at one point, from a single
/// forward/backward pass.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub outputs: LayerOutputs<T>,
    /// `ℓ(H, Y)`
    pub loss: T,
    /// `ℓ + Σ_j r_j(W_j)`
    pub objective: T,
    /// `Δ_j Z_{j-1}ᵀ`, regularizers excluded.
    pub loss_gradients: Vec<Matrix<T>>,
    reg_gradients: Vec<Option<Matrix<T>>>,
    l1: Vec<Option<T>>,
}

impl<T: Scalar> Evaluation<T> {
    /// `∇_{W_j} f`; fails with [`BsumError::NonSmooth`] on an `L1` layer.
    pub fn block_gradient(&self, layer: usize) -> Result<Matrix<T>> {
        match &self.reg_gradients[layer - 1] {
            Some(rg) => Ok(&self.loss_gradients[layer - 1] + rg),
            None => Err(BsumError::NonSmooth { layer }),
        }
    }

    /// Gradient of the smooth part of `f` in layer `layer`: everything but an
    /// `L1` term.
    pub fn smooth_gradient(&self, layer: usize) -> Matrix<T> {
        match &self.reg_gradients[layer - 1] {
            Some(rg) => &self.loss_gradients[layer - 1] + rg,
            None => self.loss_gradients[layer - 1].clone(),
        }
    }

    /// Norm of the minimum-norm element of the subdifferential of `f` in
    /// layer `layer` (the plain gradient norm for smooth layers).
    pub fn layer_stationarity(&self, layer: usize, weights: &Matrix<T>) -> T {
        let g = self.smooth_gradient(layer);
        match self.l1[layer - 1] {
            None => g.frobenius_norm(),
            Some(lambda) => {
                let mut acc = T::zero();
                for (&gi, &wi) in g.as_slice().iter().zip(weights.as_slice()) {
                    let s = if wi > T::zero() {
                        gi + lambda
                    } else if wi < T::zero() {
                        gi - lambda
                    } else {
                        (gi.abs() - lambda).max(T::zero())
                    };
                    acc += s * s;
                }
                acc.sqrt()
            }
        }
    }

    /// Stationarity measure over all blocks (the full-gradient Frobenius
    /// norm for smooth objectives).
    pub fn stationarity(&self, net: &Network<T>) -> T {
        (1..=net.depth())
            .map(|j| {
                let s = self.layer_stationarity(j, net.weight(j));
                s * s
            })
            .sum::<T>()
            .sqrt()
    }

    pub fn output(&self) -> &Matrix<T> {
        self.outputs.output()
    }
}

/// One forward and backward pass over `data`.
pub fn evaluate<T: Scalar>(net: &Network<T>, data: &Dataset<T>, loss: LossKind) -> Result<Evaluation<T>> {
    data.check_against(net.spec())?;
    let outputs = forward(net, data.x())?;
    let loss_val = loss_value(loss, outputs.output(), data.y())?;
    let deltas = delta_recursion(net, &outputs, loss, data.y())?;
    let mut objective = loss_val;
    let mut loss_gradients = Vec::with_capacity(net.depth());
    let mut reg_gradients = Vec::with_capacity(net.depth());
    let mut l1 = Vec::with_capacity(net.depth());
    for layer in 1..=net.depth() {
        let w = net.weight(layer);
        let reg = net.regularizer(layer);
        objective += regularizer_value(reg, w);
        loss_gradients.push(deltas.delta(layer).matmul_t(outputs.post(layer - 1)));
        match reg.kind {
            RegularizerKind::L1 if reg.strength > 0.0 => {
                reg_gradients.push(None);
                l1.push(Some(T::lit(reg.strength)));
            }
            RegularizerKind::L1 => {
                reg_gradients.push(Some(Matrix::zeros(w.rows(), w.cols())));
                l1.push(None);
            }
            _ => {
                reg_gradients.push(Some(regularizer_grad(reg, w, layer)?));
                l1.push(None);
            }
        }
    }
    if !objective.is_finite() {
        return Err(BsumError::Overflow(format!("objective evaluated to {objective}")));
    }
    Ok(Evaluation {
        outputs,
        loss: loss_val,
        objective,
        loss_gradients,
        reg_gradients,
        l1,
    })
}

/// `f(W̄) = ℓ(H(X), Y) + Σ_j r_j(W_j)`.
pub fn objective<T: Scalar>(net: &Network<T>, data: &Dataset<T>, loss: LossKind) -> Result<T> {
    data.check_against(net.spec())?;
    let h = crate::network::network_output(net, data.x())?;
    let mut f = loss_value(loss, &h, data.y())?;
    for layer in 1..=net.depth() {
        f += regularizer_value(net.regularizer(layer), net.weight(layer));
    }
    Ok(f)
}

/// `∇_{W_j} f = Δ_j Z_{j-1}ᵀ + ∇r_j(W_j)`.
pub fn block_gradient<T: Scalar>(
    net: &Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    layer: usize,
) -> Result<Matrix<T>> {
    net.check_layer(layer)?;
    evaluate(net, data, loss)?.block_gradient(layer)
}

/// Mini-batch gradient `(1/|B|) Σ_{n∈B} δ_j^n z_{j-1}^{nᵀ} + ∇r_j`. With
/// `batch = 0..N` in order it reproduces [`block_gradient`] bit for bit.
pub fn stochastic_block_gradient<T: Scalar>(
    net: &Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    layer: usize,
    batch: &[usize],
) -> Result<Matrix<T>> {
    net.check_layer(layer)?;
    let sub = data.subset(batch)?;
    block_gradient(net, &sub, loss, layer)
}

/// Mini-batch gradient of the smooth part, used on the proximal path.
pub fn stochastic_smooth_gradient<T: Scalar>(
    net: &Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    layer: usize,
    batch: &[usize],
) -> Result<Matrix<T>> {
    net.check_layer(layer)?;
    let sub = data.subset(batch)?;
    Ok(evaluate(net, &sub, loss)?.smooth_gradient(layer))
}

/// `f` as a function of one layer's weights with every other layer frozen.
///
/// Values include the frozen layers' regularizers as a constant so they are
/// directly comparable with [`objective`]. With `smooth_only`, an `L1` term on
/// the free layer is left out of both value and gradient.
#[derive(Debug, Clone)]
pub struct LayerBlock<'a, T> {
    net: &'a Network<T>,
    layer: usize,
    z_prev: Matrix<T>,
    y: &'a Matrix<T>,
    loss: LossKind,
    frozen_reg: T,
    smooth_only: bool,
}

impl<'a, T: Scalar> LayerBlock<'a, T> {
    pub fn new(net: &'a Network<T>, data: &'a Dataset<T>, loss: LossKind, layer: usize) -> Result<Self> {
        net.check_layer(layer)?;
        data.check_against(net.spec())?;
        let z_prev = if layer == 1 {
            data.x().clone()
        } else {
            let outs = forward_from(net, 1, data.x().clone(), None);
            outs.post_activations[layer - 1].clone()
        };
        Ok(Self::with_input(net, layer, z_prev, data.y(), loss))
    }

    /// Builds the block from an already computed `Z_{j-1}`.
    pub fn with_input(net: &'a Network<T>, layer: usize, z_prev: Matrix<T>, y: &'a Matrix<T>, loss: LossKind) -> Self {
        let frozen_reg = (1..=net.depth())
            .filter(|&j| j != layer)
            .map(|j| regularizer_value(net.regularizer(j), net.weight(j)))
            .sum();
        Self {
            net,
            layer,
            z_prev,
            y,
            loss,
            frozen_reg,
            smooth_only: false,
        }
    }

    pub fn smooth_only(mut self, on: bool) -> Self {
        self.smooth_only = on;
        self
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    fn own_reg_value(&self, w: &Matrix<T>) -> T {
        let reg = self.net.regularizer(self.layer);
        if self.smooth_only && !reg.is_smooth() {
            T::zero()
        } else {
            regularizer_value(reg, w)
        }
    }

    fn own_reg_grad(&self, w: &Matrix<T>) -> Result<Matrix<T>> {
        let reg = self.net.regularizer(self.layer);
        let zero_l1 = reg.kind == RegularizerKind::L1 && reg.strength == 0.0;
        if (self.smooth_only && !reg.is_smooth()) || zero_l1 {
            Ok(Matrix::zeros(w.rows(), w.cols()))
        } else {
            regularizer_grad(reg, w, self.layer)
        }
    }

    fn check_shape(&self, w: &Matrix<T>) -> Result<()> {
        let expected = self.net.spec().weight_shape(self.layer);
        if w.shape() != expected {
            return Err(shape_err(
                "block weights",
                format!("{expected:?}"),
                format!("{:?}", w.shape()),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> BlockObjective<T> for LayerBlock<'_, T> {
    fn shape(&self) -> (usize, usize) {
        self.net.spec().weight_shape(self.layer)
    }

    fn value(&self, w: &Matrix<T>) -> Result<T> {
        self.check_shape(w)?;
        let outs = forward_from(self.net, self.layer, self.z_prev.clone(), Some(w));
        let l = loss_value(self.loss, outs.output(), self.y)?;
        Ok(l + self.own_reg_value(w) + self.frozen_reg)
    }

    fn gradient(&self, w: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.value_and_gradient(w)?.1)
    }

    fn value_and_gradient(&self, w: &Matrix<T>) -> Result<(T, Matrix<T>)> {
        self.check_shape(w)?;
        let outs = forward_from(self.net, self.layer, self.z_prev.clone(), Some(w));
        let l = loss_value(self.loss, outs.output(), self.y)?;
        let grad_h = loss_grad_h(self.loss, outs.output(), self.y)?;
        let deltas = deltas_from_replaced(self.net, self.layer, &outs, grad_h);
        let g = deltas.matmul_t(&self.z_prev);
        let value = l + self.own_reg_value(w) + self.frozen_reg;
        Ok((value, &g + &self.own_reg_grad(w)?))
    }
}

/// `Δ_first` when the outputs were produced with a substituted `W_first`.
/// Only the weights of layers above `first` enter the recursion, so the
/// substitution needs no special handling.
fn deltas_from_replaced<T: Scalar>(
    net: &Network<T>,
    first: usize,
    outs: &LayerOutputs<T>,
    grad_h: Matrix<T>,
) -> Matrix<T> {
    deltas_from(net, first, outs, grad_h).swap_remove(0)
}

/// Hessian of `f` in `vec(W_j)` (row-major), from central differences of the
/// analytic block gradient with step [`HESSIAN_FD_STEP`], symmetrized.
pub fn block_hessian<T: Scalar>(
    net: &Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    layer: usize,
) -> Result<Matrix<T>> {
    let raw = block_hessian_unsymmetrized(net, data, loss, layer)?;
    let t = raw.transpose();
    Ok((&raw + &t).scale(T::lit(0.5)))
}

/// The finite-difference Jacobian of the block gradient before
/// symmetrization; row `a` holds `∂(∇f)_a / ∂vec(W)`.
pub fn block_hessian_unsymmetrized<T: Scalar>(
    net: &Network<T>,
    data: &Dataset<T>,
    loss: LossKind,
    layer: usize,
) -> Result<Matrix<T>> {
    let block = LayerBlock::new(net, data, loss, layer)?;
    hessian_of(&block, net.weight(layer), T::lit(HESSIAN_FD_STEP))
}

/// Central-difference Jacobian of `objective.gradient` at `w`.
pub fn hessian_of<T: Scalar>(objective: &dyn BlockObjective<T>, w: &Matrix<T>, h: T) -> Result<Matrix<T>> {
    let n = w.len();
    if n > HESSIAN_SIZE_LIMIT {
        return Err(BsumError::Size {
            size: n,
            limit: HESSIAN_SIZE_LIMIT,
        });
    }
    let mut hess = Matrix::zeros(n, n);
    let two_h = h + h;
    for b in 0..n {
        let mut plus = w.clone();
        plus.as_mut_slice()[b] += h;
        let mut minus = w.clone();
        minus.as_mut_slice()[b] -= h;
        let gp = objective.gradient(&plus)?;
        let gm = objective.gradient(&minus)?;
        for a in 0..n {
            hess[(a, b)] = (gp.as_slice()[a] - gm.as_slice()[a]) / two_h;
        }
    }
    Ok(hess)
}
