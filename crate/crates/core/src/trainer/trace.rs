use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// One recorded point. `k = 0`, `block = 0` is the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub block: usize,
    /// `f` after the update.
    pub f: f64,
    pub normalized_mse: f64,
    /// Full stationarity measure (all blocks) after the update.
    pub grad_norm: f64,
    /// Norm of the block gradient used for the update, at the pre-update point.
    pub block_grad_norm: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// A numeric failure stopped the run; the trace holds the steps before it.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub initial: TraceRecord,
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
    /// Block updates performed.
    pub iterations: usize,
}

impl TrainTrace {
    /// Initial record followed by every recorded step.
    pub fn all(&self) -> impl Iterator<Item = &TraceRecord> {
        std::iter::once(&self.initial).chain(self.records.iter())
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().unwrap_or(&self.initial)
    }

    pub fn failed(&self) -> bool {
        matches!(self.stop, StopReason::Failed(_))
    }
}

/// `‖Y − H‖²_F / ‖Y − Ȳ‖²_F` with `Ȳ` the per-row mean of `Y` repeated over
/// columns. Falls back to `‖Y − H‖²_F` when every row of `Y` is constant.
pub fn normalized_mse<T: Scalar>(h: &Matrix<T>, y: &Matrix<T>) -> T {
    let num = (y - h).frobenius_norm_sq();
    let n = T::from_usize(y.cols()).unwrap();
    let mut den = T::zero();
    for r in 0..y.rows() {
        let row = y.row(r);
        let mean = row.iter().copied().sum::<T>() / n;
        den += row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    }
    if den > T::zero() {
        num / den
    } else {
        num
    }
}
