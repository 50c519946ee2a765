use crate::error::{shape_err, BsumError, Result};
use crate::functions::activation::{sigmoid, softplus};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Largest exponent the exponential loss will evaluate before reporting
/// overflow.
pub const EXP_LOSS_MAX_EXPONENT: f64 = 700.0;

/// Cross-entropy evaluates `log` on network outputs clamped to
/// `[CE_CLAMP, 1 − CE_CLAMP]`.
pub const CE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossTraits {
    pub convex_in_h: bool,
    pub concave_in_h: bool,
    pub monotone: Monotonicity,
}

/// Data-fit term `ℓ(H, Y)` of the training objective. Every variant averages
/// over the `N` sample columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `(1/N)‖Y − H‖²_F`
    L2,
    /// `c·exp((1/c)(1/N)‖Y − H‖²_F)`
    Exponential { c: f64 },
    /// `−(1/N) Σ [Y∘log H + (1 − Y)∘log(1 − H)]`, labels in {0, 1}
    CrossEntropy,
    /// `(1/(2cN)) Σ (1 − Y∘H)₊²`, labels in {−1, +1}
    SquaredHinge { c: f64 },
    /// `(1/N) Σₙ log(1 + exp(−yₙᵀhₙ))`, labels in {−1, +1}
    Logistic,
}

impl LossKind {
    pub const CATALOG: [LossKind; 5] = [
        LossKind::L2,
        LossKind::Exponential { c: 1.0 },
        LossKind::CrossEntropy,
        LossKind::SquaredHinge { c: 1.0 },
        LossKind::Logistic,
    ];

    /// Curvature and monotonicity of `ℓ` as a function of `H`.
    ///
    /// The exponential loss is recorded as nondecreasing: it is increasing in
    /// the residual magnitude, so the tag is exact on the region `H ≥ Y`
    /// where the outputs overshoot the targets.
    pub fn traits(&self) -> LossTraits {
        use LossKind::*;
        let monotone = match self {
            Exponential { .. } => Monotonicity::Nondecreasing,
            _ => Monotonicity::None,
        };
        LossTraits {
            convex_in_h: true,
            concave_in_h: false,
            monotone,
        }
    }

    pub fn name(&self) -> &'static str {
        use LossKind::*;
        match self {
            L2 => "l2",
            Exponential { .. } => "exponential",
            CrossEntropy => "cross-entropy",
            SquaredHinge { .. } => "squared-hinge",
            Logistic => "logistic",
        }
    }

    /// Checks the positive-constant parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::Exponential { c } | LossKind::SquaredHinge { c } if !(c > 0.0) => {
                Err(BsumError::Spec(format!("{} loss needs c > 0, got {c}", self.name())))
            }
            _ => Ok(()),
        }
    }

    fn check_labels<T: Scalar>(&self, y: &Matrix<T>) -> Result<()> {
        let ok = match self {
            LossKind::CrossEntropy => y.as_slice().iter().all(|&v| v == T::zero() || v == T::one()),
            LossKind::SquaredHinge { .. } | LossKind::Logistic => {
                y.as_slice().iter().all(|&v| v == T::one() || v == -T::one())
            }
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(BsumError::Domain(format!("{} labels", self.name())))
        }
    }
}

fn check_inputs<T: Scalar>(kind: &LossKind, h: &Matrix<T>, y: &Matrix<T>) -> Result<()> {
    kind.validate()?;
    if h.shape() != y.shape() {
        return Err(shape_err(
            "loss",
            format!("{:?}", y.shape()),
            format!("{:?}", h.shape()),
        ));
    }
    if h.cols() == 0 {
        return Err(BsumError::Spec("loss needs at least one sample".into()));
    }
    kind.check_labels(y)?;
    if !h.all_finite() {
        return Err(BsumError::Domain("non-finite network output".into()));
    }
    if let LossKind::CrossEntropy = kind {
        if h.as_slice().iter().any(|&v| v < T::zero() || v > T::one()) {
            return Err(BsumError::Domain("cross-entropy outputs must lie in (0, 1)".into()));
        }
    }
    Ok(())
}

fn clamp_prob<T: Scalar>(h: T) -> T {
    let lo = T::lit(CE_CLAMP);
    let hi = T::one() - lo;
    h.max(lo).min(hi)
}

fn exp_exponent<T: Scalar>(c: f64, h: &Matrix<T>, y: &Matrix<T>) -> Result<T> {
    let n = T::from_usize(h.cols()).unwrap();
    let s = (y - h).frobenius_norm_sq() / n / T::lit(c);
    if s > T::lit(EXP_LOSS_MAX_EXPONENT) || !s.is_finite() {
        return Err(BsumError::Overflow(format!(
            "exponential loss exponent {s} exceeds {EXP_LOSS_MAX_EXPONENT}"
        )));
    }
    Ok(s)
}

/// Value of the loss at network output `h` for targets `y` (regularizers
/// excluded).
pub fn loss_value<T: Scalar>(kind: LossKind, h: &Matrix<T>, y: &Matrix<T>) -> Result<T> {
    check_inputs(&kind, h, y)?;
    let n = T::from_usize(h.cols()).unwrap();
    let value = match kind {
        LossKind::L2 => (y - h).frobenius_norm_sq() / n,
        LossKind::Exponential { c } => {
            let s = exp_exponent(c, h, y)?;
            T::lit(c) * s.exp()
        }
        LossKind::CrossEntropy => {
            let mut acc = T::zero();
            for (&hv, &yv) in h.as_slice().iter().zip(y.as_slice()) {
                let p = clamp_prob(hv);
                acc += yv * p.ln() + (T::one() - yv) * (T::one() - p).ln();
            }
            -acc / n
        }
        LossKind::SquaredHinge { c } => {
            let mut acc = T::zero();
            for (&hv, &yv) in h.as_slice().iter().zip(y.as_slice()) {
                let m = (T::one() - yv * hv).max(T::zero());
                acc += m * m;
            }
            acc / (T::lit(2.0 * c) * n)
        }
        LossKind::Logistic => {
            let mut acc = T::zero();
            for col in 0..h.cols() {
                acc += softplus(-column_dot(h, y, col));
            }
            acc / n
        }
    };
    Ok(value)
}

fn column_dot<T: Scalar>(h: &Matrix<T>, y: &Matrix<T>, col: usize) -> T {
    let mut m = T::zero();
    for r in 0..h.rows() {
        m += y[(r, col)] * h[(r, col)];
    }
    m
}

/// Gradient of [`loss_value`] with respect to the network output.
pub fn loss_grad_h<T: Scalar>(kind: LossKind, h: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
    check_inputs(&kind, h, y)?;
    let n = T::from_usize(h.cols()).unwrap();
    let two = T::lit(2.0);
    let grad = match kind {
        LossKind::L2 => h.zip_map(y, |hv, yv| two * (hv - yv) / n),
        LossKind::Exponential { c } => {
            let e = exp_exponent(c, h, y)?.exp();
            h.zip_map(y, |hv, yv| e * two * (hv - yv) / n)
        }
        LossKind::CrossEntropy => h.zip_map(y, |hv, yv| {
            let p = clamp_prob(hv);
            (-yv / p + (T::one() - yv) / (T::one() - p)) / n
        }),
        LossKind::SquaredHinge { c } => {
            let scale = T::lit(c) * n;
            h.zip_map(y, |hv, yv| {
                let m = (T::one() - yv * hv).max(T::zero());
                -yv * m / scale
            })
        }
        LossKind::Logistic => {
            let mut g = Matrix::zeros(h.rows(), h.cols());
            for col in 0..h.cols() {
                let w = sigmoid(-column_dot(h, y, col)) / n;
                for r in 0..h.rows() {
                    g[(r, col)] = -y[(r, col)] * w;
                }
            }
            g
        }
    };
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = Matrix<f64>;

    #[test]
    fn perfect_fit_values() {
        let y = M::from_rows(&[&[0.3, -1.2, 2.0]]);
        assert_eq!(loss_value(LossKind::L2, &y, &y).unwrap(), 0.0);
        assert_eq!(loss_value(LossKind::Exponential { c: 1.0 }, &y, &y).unwrap(), 1.0);
        let g = loss_grad_h(LossKind::L2, &y, &y).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_term_hinge_and_l2_gradient() {
        let h = M::from_rows(&[&[0.5]]);
        let y = M::from_rows(&[&[1.0]]);
        let v = loss_value(LossKind::SquaredHinge { c: 1.0 }, &h, &y).unwrap();
        assert_eq!(v, 0.125);
        let g = loss_grad_h(LossKind::L2, &M::from_rows(&[&[2.0]]), &y).unwrap();
        assert_eq!(g[(0, 0)], 2.0);
    }

    #[test]
    fn cross_entropy_domain_errors() {
        let y = M::from_rows(&[&[1.0, 0.0]]);
        let bad = M::from_rows(&[&[1.5, 0.2]]);
        assert!(matches!(
            loss_value(LossKind::CrossEntropy, &bad, &y),
            Err(BsumError::Domain(_))
        ));
        let bad_labels = M::from_rows(&[&[0.5, 0.2]]);
        assert!(loss_value(LossKind::CrossEntropy, &bad, &bad_labels).is_err());
        // saturated outputs are clamped, not rejected
        let sat = M::from_rows(&[&[1.0, 0.0]]);
        let v = loss_value(LossKind::CrossEntropy, &sat, &y).unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }

    #[test]
    fn hinge_and_logistic_need_signed_labels() {
        let h = M::from_rows(&[&[0.5, 0.1]]);
        let y01 = M::from_rows(&[&[1.0, 0.0]]);
        assert!(loss_value(LossKind::Logistic, &h, &y01).is_err());
        assert!(loss_grad_h(LossKind::SquaredHinge { c: 1.0 }, &h, &y01).is_err());
    }

    #[test]
    fn exponential_overflow_is_reported() {
        let h = M::from_rows(&[&[100.0]]);
        let y = M::from_rows(&[&[0.0]]);
        assert!(matches!(
            loss_value(LossKind::Exponential { c: 1.0 }, &h, &y),
            Err(BsumError::Overflow(_))
        ));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let h = M::zeros(1, 2);
        let y = M::zeros(1, 3);
        assert!(matches!(loss_value(LossKind::L2, &h, &y), Err(BsumError::Shape { .. })));
    }

    fn random_pair(kind: LossKind, rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> (M, M) {
        let h = M::from_fn(rows, cols, |_, _| match kind {
            LossKind::CrossEntropy => rng.random_range(0.05..0.95),
            _ => rng.random_range(-1.5..1.5),
        });
        let y = M::from_fn(rows, cols, |_, _| match kind {
            LossKind::CrossEntropy => f64::from(rng.random_bool(0.5) as u8),
            LossKind::SquaredHinge { .. } | LossKind::Logistic => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => rng.random_range(-1.0..1.0),
        });
        (h, y)
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let step = 1e-6;
        for kind in LossKind::CATALOG {
            for _ in 0..100 {
                let (h, y) = random_pair(kind, &mut rng, 3, 4);
                let g = loss_grad_h(kind, &h, &y).unwrap();
                let mut fd = M::zeros(3, 4);
                for i in 0..h.len() {
                    let mut hp = h.clone();
                    hp.as_mut_slice()[i] += step;
                    let mut hm = h.clone();
                    hm.as_mut_slice()[i] -= step;
                    fd.as_mut_slice()[i] =
                        (loss_value(kind, &hp, &y).unwrap() - loss_value(kind, &hm, &y).unwrap()) / (2.0 * step);
                }
                let rel = (&g - &fd).frobenius_norm() / g.frobenius_norm().max(1.0);
                assert!(rel <= 1e-6, "{kind:?}: rel err {rel}");
            }
        }
    }

    #[test]
    fn printed_cross_entropy_variant_disagrees_with_finite_differences() {
        // The variant with an extra trailing `∘ H` on the second term is not
        // the derivative of the loss; keep the check so a regression to it is
        // caught.
        let h = M::from_rows(&[&[0.3, 0.6]]);
        let y = M::from_rows(&[&[0.0, 0.0]]);
        let n = 2.0;
        let variant = h.map(|p| (1.0 / (1.0 - p)) * p / n);
        let g = loss_grad_h(LossKind::CrossEntropy, &h, &y).unwrap();
        assert!((&g - &variant).max_abs() > 0.1);
    }

    #[test]
    fn monotonicity_traits_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for kind in LossKind::CATALOG {
            let mut up = false;
            let mut down = false;
            for _ in 0..200 {
                let (h, mut y) = random_pair(kind, &mut rng, 2, 3);
                if let LossKind::Exponential { .. } = kind {
                    // nondecreasing tag applies where outputs overshoot targets
                    y = h.map(|v| v - 1.0);
                }
                let bump = h.map(|v| match kind {
                    LossKind::CrossEntropy => (v + 0.01).min(0.99),
                    _ => v + 0.05,
                });
                let a = loss_value(kind, &h, &y).unwrap();
                let b = loss_value(kind, &bump, &y).unwrap();
                if b > a {
                    up = true;
                }
                if b < a {
                    down = true;
                }
            }
            match kind.traits().monotone {
                Monotonicity::Nondecreasing => assert!(!down, "{kind:?}"),
                Monotonicity::Nonincreasing => assert!(!up, "{kind:?}"),
                Monotonicity::None => assert!(up && down, "{kind:?} looks monotone"),
            }
        }
    }
}
