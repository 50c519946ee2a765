use crate::error::{shape_err, BsumError, Result};
use crate::matrix::Matrix;
use crate::network::FeasibleSetKind;
use crate::scalar::Scalar;
use crate::upperbounds::{project_feasible, BlockObjective};

/// Projected-gradient settings for the proximal subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolverConfig {
    pub max_iters: usize,
    /// Stop once `‖V − P(V − ∇φ(V))‖_F` falls to this level.
    pub grad_tol: f64,
    /// Backtracking shrink factor `β ∈ (0, 1)`.
    pub shrink: f64,
    /// Sufficient-decrease fraction `σ ∈ (0, 1)`.
    pub slope: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            shrink: 0.5,
            slope: 1e-4,
        }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(BsumError::Spec("inner solver max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(BsumError::Spec(format!(
                "inner solver grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(BsumError::Spec(format!(
                "inner shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return Err(BsumError::Spec(format!(
                "inner slope must lie in (0, 1), got {}",
                self.slope
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxOutcome<T> {
    pub point: Matrix<T>,
    pub iterations: usize,
    /// `false` when `max_iters` ran out or the line search stalled first.
    pub converged: bool,
    pub grad_map_norm: T,
    /// `φ(point) = f(point) + (γ/2)‖point − W‖²`
    pub value: T,
}

const MAX_LINE_SEARCH: usize = 60;

/// Approximate `argmin_{V ∈ set} f(V) + (γ/2)‖V − W‖²_F`.
///
/// Projected gradient with a Barzilai–Borwein trial step and Armijo
/// backtracking. The returned point never has a larger prox value than `W`
/// itself. Evaluation failures at trial points (overflow, domain) count as
/// rejected trials.
pub fn descent_direction_proximal<T: Scalar>(
    f: &dyn BlockObjective<T>,
    w: &Matrix<T>,
    gamma: f64,
    set: &FeasibleSetKind,
    cfg: &InnerSolverConfig,
) -> Result<ProxOutcome<T>> {
    cfg.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(BsumError::Spec(format!("γ must be positive, got {gamma}")));
    }
    if f.shape() != w.shape() {
        return Err(shape_err(
            "proximal center",
            format!("{:?}", f.shape()),
            format!("{:?}", w.shape()),
        ));
    }
    let g = T::lit(gamma);
    let half_g = g / T::lit(2.0);
    let phi = |v: &Matrix<T>| -> Result<(T, Matrix<T>)> {
        let (fv, gv) = f.value_and_gradient(v)?;
        let diff = v - w;
        Ok((fv + half_g * diff.frobenius_norm_sq(), gv.add_scaled(g, &diff)))
    };
    let tol = T::lit(cfg.grad_tol);
    let beta = T::lit(cfg.shrink);
    let sigma = T::lit(cfg.slope);

    let start = project_feasible(set, w);
    let (phi_start, grad_start) = phi(&start)?;
    let mut v = start.clone();
    let (mut val, mut grad) = (phi_start, grad_start);
    let mut prev: Option<(Matrix<T>, Matrix<T>)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut map_norm = grad_map(set, &v, &grad).frobenius_norm();

    while iterations < cfg.max_iters {
        if map_norm <= tol {
            converged = true;
            break;
        }
        let mut t = match &prev {
            Some((pv, pg)) => {
                let s = &v - pv;
                let y = &grad - pg;
                let sy = s.dot(&y);
                if sy > T::zero() {
                    s.frobenius_norm_sq() / sy
                } else {
                    T::one() / g
                }
            }
            None => T::one() / g,
        };
        let mut accepted = None;
        for _ in 0..MAX_LINE_SEARCH {
            let cand = project_feasible(set, &v.add_scaled(-t, &grad));
            let step = &cand - &v;
            let decrease = grad.dot(&step);
            if decrease >= T::zero() {
                break;
            }
            if let Ok((cv, cg)) = phi(&cand) {
                let slack = T::lit(64.0) * T::epsilon() * (T::one() + val.abs());
                if cv.is_finite() && cv <= val + sigma * decrease + slack {
                    accepted = Some((cand, cv, cg));
                    break;
                }
            }
            t *= beta;
        }
        let Some((cand, cv, cg)) = accepted else {
            break;
        };
        iterations += 1;
        prev = Some((std::mem::replace(&mut v, cand), std::mem::replace(&mut grad, cg)));
        val = cv;
        map_norm = grad_map(set, &v, &grad).frobenius_norm();
    }
    if !converged && map_norm <= tol {
        converged = true;
    }
    if val > phi_start {
        return Ok(ProxOutcome {
            point: start,
            iterations,
            converged,
            grad_map_norm: grad_map(set, w, &phi(w)?.1).frobenius_norm(),
            value: phi_start,
        });
    }
    Ok(ProxOutcome {
        point: v,
        iterations,
        converged,
        grad_map_norm: map_norm,
        value: val,
    })
}

fn grad_map<T: Scalar>(set: &FeasibleSetKind, v: &Matrix<T>, grad: &Matrix<T>) -> Matrix<T> {
    v - &project_feasible(set, &(v - grad))
}
