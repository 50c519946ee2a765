use crate::error::{BsumError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    /// `λ‖W‖²_F`
    L2Frobenius,
    /// `λ‖W‖₁`, only usable through the proximal soft-threshold step.
    L1,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub strength: f64,
}

impl RegularizerSpec {
    pub const NONE: RegularizerSpec = RegularizerSpec {
        kind: RegularizerKind::None,
        strength: 0.0,
    };

    pub fn l2(strength: f64) -> Self {
        Self {
            kind: RegularizerKind::L2Frobenius,
            strength,
        }
    }

    pub fn l1(strength: f64) -> Self {
        Self {
            kind: RegularizerKind::L1,
            strength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0) || !self.strength.is_finite() {
            return Err(BsumError::Spec(format!(
                "regularizer strength must be finite and >= 0, got {}",
                self.strength
            )));
        }
        Ok(())
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self.kind, RegularizerKind::L1) || self.strength == 0.0
    }

    /// Strong-convexity modulus, when there is one.
    pub fn strong_convexity(&self) -> Option<f64> {
        match self.kind {
            RegularizerKind::L2Frobenius if self.strength > 0.0 => Some(2.0 * self.strength),
            _ => None,
        }
    }
}

pub fn regularizer_value<T: Scalar>(reg: &RegularizerSpec, w: &Matrix<T>) -> T {
    let lambda = T::lit(reg.strength);
    match reg.kind {
        RegularizerKind::L2Frobenius => lambda * w.frobenius_norm_sq(),
        RegularizerKind::L1 => lambda * w.abs_sum(),
        RegularizerKind::None => T::zero(),
    }
}

/// Gradient of a smooth regularizer. `L1` is refused with
/// [`BsumError::NonSmooth`]; `layer` only feeds that error message.
pub fn regularizer_grad<T: Scalar>(reg: &RegularizerSpec, w: &Matrix<T>, layer: usize) -> Result<Matrix<T>> {
    match reg.kind {
        RegularizerKind::L2Frobenius => Ok(w.scale(T::lit(2.0 * reg.strength))),
        RegularizerKind::L1 => Err(BsumError::NonSmooth { layer }),
        RegularizerKind::None => Ok(Matrix::zeros(w.rows(), w.cols())),
    }
}
