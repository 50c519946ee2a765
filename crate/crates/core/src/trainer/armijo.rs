use log::warn;

use crate::error::{shape_err, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::trainer::schedule::ArmijoParams;
use crate::upperbounds::BlockObjective;

/// Shrinks tried before giving up.
pub const ARMIJO_MAX_SHRINKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoOutcome {
    pub alpha: f64,
    pub shrinks: usize,
    /// `false` when `D − W` is not a descent direction or no trial was
    /// accepted; `alpha` is then `0`.
    pub accepted: bool,
}

/// Largest `α = α_init·β^m` with
/// `f((1 − α)W + αD) ≤ f(W) + σα⟨∇f(W), D − W⟩`.
pub fn armijo_stepsize<T: Scalar>(
    f: &dyn BlockObjective<T>,
    w: &Matrix<T>,
    d: &Matrix<T>,
    params: &ArmijoParams,
) -> Result<ArmijoOutcome> {
    let (value, grad) = f.value_and_gradient(w)?;
    armijo_from(f, w, value, &grad, d, params)
}

/// [`armijo_stepsize`] with `f(W)` and `∇f(W)` already known.
pub fn armijo_from<T: Scalar>(
    f: &dyn BlockObjective<T>,
    w: &Matrix<T>,
    value: T,
    grad: &Matrix<T>,
    d: &Matrix<T>,
    params: &ArmijoParams,
) -> Result<ArmijoOutcome> {
    params.validate()?;
    if d.shape() != w.shape() {
        return Err(shape_err(
            "Armijo direction",
            format!("{:?}", w.shape()),
            format!("{:?}", d.shape()),
        ));
    }
    let slope = grad.dot(&(d - w));
    if !(slope < T::zero()) {
        return Ok(ArmijoOutcome {
            alpha: 0.0,
            shrinks: 0,
            accepted: false,
        });
    }
    let sigma = T::lit(params.slope);
    let mut alpha = params.alpha_init;
    for shrinks in 0..=ARMIJO_MAX_SHRINKS {
        let a = T::lit(alpha);
        let trial = w.scale(T::one() - a).add_scaled(a, d);
        if let Ok(ft) = f.value(&trial) {
            if ft.is_finite() && ft <= value + sigma * a * slope {
                return Ok(ArmijoOutcome {
                    alpha,
                    shrinks,
                    accepted: true,
                });
            }
        }
        alpha *= params.shrink;
    }
    warn!("Armijo search gave up after {ARMIJO_MAX_SHRINKS} shrinks");
    Ok(ArmijoOutcome {
        alpha: 0.0,
        shrinks: ARMIJO_MAX_SHRINKS,
        accepted: false,
    })
}
