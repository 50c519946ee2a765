use crate::error::{BsumError, Result};
use crate::functions::RegularizerKind;
use crate::matrix::Matrix;
use crate::network::{Dataset, FeasibleSetKind, Network};
use crate::scalar::Scalar;

/// Normal equations of `(1/N)‖Y − A W B‖² + λ‖W‖²` in row-major `vec(W)`:
/// `K = (1/N)(AᵀA ⊗ BBᵀ) + λI` and `rhs = (1/N) vec(Aᵀ Y Bᵀ)`, with
/// `A = W_J⋯W_{j+1}` and `B = W_{j-1}⋯W_1 X`.
pub fn linear_block_system<T: Scalar>(
    net: &Network<T>,
    data: &Dataset<T>,
    layer: usize,
    lambda: f64,
) -> Result<(Matrix<T>, Vec<T>)> {
    net.check_layer(layer)?;
    data.check_against(net.spec())?;
    if !net.spec().is_linear() {
        return Err(BsumError::Spec(
            "closed-form block solve needs identity activations in every layer".into(),
        ));
    }
    if !(lambda >= 0.0) {
        return Err(BsumError::Spec(format!("λ must be >= 0, got {lambda}")));
    }
    let depth = net.depth();
    let (rows, _) = net.spec().weight_shape(layer);
    let mut a = Matrix::<T>::identity(rows);
    for j in layer + 1..=depth {
        a = net.weight(j).matmul(&a);
    }
    let mut b = data.x().clone();
    for j in 1..layer {
        b = net.weight(j).matmul(&b);
    }
    let inv_n = T::one() / T::from_usize(data.len()).unwrap();
    let ata = a.t_matmul(&a);
    let bbt = b.matmul_t(&b);
    let mut k = ata.kronecker(&bbt).scale(inv_n);
    let lam = T::lit(lambda);
    for i in 0..k.rows() {
        k[(i, i)] += lam;
    }
    let rhs = a.t_matmul(data.y()).matmul_t(&b).scale(inv_n).into_vec();
    Ok((k, rhs))
}

/// Exact minimizer of the block objective of a deep linear network under the
/// `L2` loss.
pub fn closed_form_linear_block<T: Scalar>(
    net: &Network<T>,
    data: &Dataset<T>,
    layer: usize,
    lambda: f64,
) -> Result<Matrix<T>> {
    net.check_layer(layer)?;
    if net.feasible_set(layer) != &FeasibleSetKind::Unconstrained {
        return Err(BsumError::Spec(format!(
            "closed-form block solve needs an unconstrained layer {layer}"
        )));
    }
    let (k, rhs) = linear_block_system(net, data, layer, lambda)?;
    let chol = k.cholesky().ok_or_else(|| {
        BsumError::Singular(format!(
            "normal equations for layer {layer} are not positive definite (λ = {lambda})"
        ))
    })?;
    let (rows, cols) = net.spec().weight_shape(layer);
    Matrix::new(rows, cols, chol.solve(&rhs))
}

/// `λ` of a layer's regularizer for the closed-form solve; `None` when the
/// regularizer is not a squared Frobenius norm.
pub(crate) fn ridge_strength(kind: RegularizerKind, strength: f64) -> Option<f64> {
    match kind {
        RegularizerKind::L2Frobenius => Some(strength),
        RegularizerKind::None => Some(0.0),
        RegularizerKind::L1 => None,
    }
}
