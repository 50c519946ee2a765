//! Minimizers of the first-order, second-order and linear surrogates, and the
//! soft-threshold step for `L1`-regularized layers.

use crate::error::{shape_err, BsumError, Result};
use crate::matrix::Matrix;
use crate::network::FeasibleSetKind;
use crate::scalar::Scalar;
use crate::upperbounds::project_feasible;

/// Doublings of `γ` tried when `hess + γI` fails to factor.
pub const MAX_GAMMA_DOUBLINGS: usize = 50;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(BsumError::Spec(format!("γ must be positive, got {gamma}")))
    }
}

/// `P(W − γ⁻¹ ∇f)`.
pub fn descent_direction_first_order<T: Scalar>(
    w: &Matrix<T>,
    grad: &Matrix<T>,
    gamma: f64,
    set: &FeasibleSetKind,
) -> Result<Matrix<T>> {
    check_gamma(gamma)?;
    let step = T::one() / T::lit(gamma);
    Ok(project_feasible(set, &w.add_scaled(-step, grad)))
}

/// Result of the damped Newton solve, with the `γ` that was actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderStep<T> {
    pub direction: Matrix<T>,
    pub gamma: f64,
}

/// `W − (∇²f + γI)⁻¹ ∇f` in row-major `vec` space. When `∇²f + γI` is not
/// positive definite, `γ` is doubled up to [`MAX_GAMMA_DOUBLINGS`] times.
pub fn descent_direction_second_order<T: Scalar>(
    w: &Matrix<T>,
    grad: &Matrix<T>,
    hess: &Matrix<T>,
    gamma: f64,
) -> Result<SecondOrderStep<T>> {
    check_gamma(gamma)?;
    let n = w.len();
    if grad.shape() != w.shape() {
        return Err(shape_err(
            "second-order gradient",
            format!("{:?}", w.shape()),
            format!("{:?}", grad.shape()),
        ));
    }
    if hess.shape() != (n, n) {
        return Err(shape_err(
            "second-order Hessian",
            format!("({n}, {n})"),
            format!("{:?}", hess.shape()),
        ));
    }
    let rhs: Vec<T> = grad.as_slice().iter().map(|&g| -g).collect();
    let mut gamma = gamma;
    for _ in 0..=MAX_GAMMA_DOUBLINGS {
        let mut system = hess.clone();
        let g = T::lit(gamma);
        for i in 0..n {
            system[(i, i)] += g;
        }
        if let Some(chol) = system.cholesky() {
            let step = chol.solve(&rhs);
            let step = Matrix::new(w.rows(), w.cols(), step)?;
            return Ok(SecondOrderStep {
                direction: w + &step,
                gamma,
            });
        }
        gamma *= 2.0;
    }
    Err(BsumError::Curvature(format!(
        "Hessian + γI not positive definite after {MAX_GAMMA_DOUBLINGS} doublings (γ reached {gamma})"
    )))
}

/// Direction of the linear surrogate, arranged so that the convex
/// combination `(1 − α)W + αD` equals `(1 − α)W − α∇f`.
///
/// This is only a descent scheme on concave blocks or bounded sets; the
/// caller is responsible for that gate (see [`linear_direction_allowed`]).
pub fn descent_direction_linear<T: Scalar>(w: &Matrix<T>, grad: &Matrix<T>) -> Result<Matrix<T>> {
    if w.shape() != grad.shape() {
        return Err(shape_err(
            "linear direction",
            format!("{:?}", w.shape()),
            format!("{:?}", grad.shape()),
        ));
    }
    Ok(-grad)
}

/// The linear surrogate has no finite minimizer on an unbounded set unless
/// the block is concave.
pub fn linear_direction_allowed(
    curvature: &crate::functions::BlockCurvature,
    set: &FeasibleSetKind,
    override_check: bool,
) -> Result<()> {
    if override_check || matches!(curvature, crate::functions::BlockCurvature::Concave) || set.is_bounded() {
        Ok(())
    } else {
        Err(BsumError::Curvature(format!(
            "linear upperbound needs a concave block or a bounded set (block is {curvature:?}, set {set:?})"
        )))
    }
}

/// Soft threshold of `W − γ⁻¹ ∇ℓ` at level `λ/γ`: the proximal step for an
/// `λ‖W‖₁` regularizer. Entries within the threshold become exactly `0.0`.
pub fn prox_l1_step<T: Scalar>(w: &Matrix<T>, grad_smooth: &Matrix<T>, gamma: f64, lambda: f64) -> Result<Matrix<T>> {
    check_gamma(gamma)?;
    if !(lambda >= 0.0) {
        return Err(BsumError::Spec(format!("λ must be >= 0, got {lambda}")));
    }
    let step = T::one() / T::lit(gamma);
    let thr = T::lit(lambda) / T::lit(gamma);
    Ok(w.add_scaled(-step, grad_smooth).map(|a| soft_threshold(a, thr)))
}

pub fn soft_threshold<T: Scalar>(a: T, thr: T) -> T {
    if a > thr {
        a - thr
    } else if a < -thr {
        a + thr
    } else {
        T::zero()
    }
}
