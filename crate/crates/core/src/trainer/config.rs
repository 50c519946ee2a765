use crate::error::{BsumError, Result};
use crate::gradients::BatchMode;
use crate::trainer::schedule::StepsizeSchedule;
use crate::upperbounds::{GammaRule, UpperboundKind};

/// One value for every layer, or one per layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Layered<X> {
    Shared(X),
    PerLayer(Vec<X>),
}

impl<X> Layered<X> {
    /// Value for 1-based `layer`.
    pub fn get(&self, layer: usize) -> &X {
        match self {
            Layered::Shared(x) => x,
            Layered::PerLayer(v) => &v[layer - 1],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &X> {
        let items: Vec<&X> = match self {
            Layered::Shared(x) => vec![x],
            Layered::PerLayer(v) => v.iter().collect(),
        };
        items.into_iter()
    }

    fn check_depth(&self, depth: usize, what: &str) -> Result<()> {
        match self {
            Layered::PerLayer(v) if v.len() != depth => Err(BsumError::Spec(format!(
                "{} per-layer {what} settings for depth {depth}",
                v.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl<X> From<X> for Layered<X> {
    fn from(x: X) -> Self {
        Layered::Shared(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub upperbound: Layered<UpperboundKind>,
    pub gamma_rule: GammaRule,
    /// `None` exactly when `unit_stepsize` is set.
    pub schedule: Option<Layered<StepsizeSchedule>>,
    pub sampler: BatchMode,
    pub sampler_seed: u64,
    /// Cap on block updates `k`.
    pub max_outer_iterations: usize,
    /// Stop at the end of a cycle once the full stationarity measure is at
    /// most this. Scaled by the initial value when `relative_tol` is set.
    pub grad_norm_tol: f64,
    pub relative_tol: bool,
    /// Record every this many block updates; `None` means once per cycle.
    pub record_every: Option<usize>,
    /// `W_j ← D_j` without a convex combination.
    pub unit_stepsize: bool,
    /// Exact block minimization: closed form on deep linear `L2` blocks,
    /// otherwise the proximal solve. Implies a unit step.
    pub exact_bcd: bool,
    /// Skip the curvature gates of the linear and proximal upperbounds.
    pub override_curvature_checks: bool,
    /// Fill `wall_seconds`; off by default so traces are reproducible.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            upperbound: Layered::Shared(UpperboundKind::first_order(1.0)),
            gamma_rule: GammaRule::default(),
            schedule: Some(Layered::Shared(StepsizeSchedule::InverseRoot { c: 1.0 })),
            sampler: BatchMode::Full,
            sampler_seed: 0,
            max_outer_iterations: 1000,
            grad_norm_tol: 1e-6,
            relative_tol: false,
            record_every: None,
            unit_stepsize: false,
            exact_bcd: false,
            override_curvature_checks: false,
            record_timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, depth: usize) -> Result<()> {
        self.upperbound.check_depth(depth, "upperbound")?;
        for ub in self.upperbound.iter() {
            ub.validate()?;
        }
        match (&self.schedule, self.unit_stepsize || self.exact_bcd) {
            (Some(_), true) => {
                return Err(BsumError::Spec(
                    "unit stepsize / exact BCD and a stepsize schedule are mutually exclusive".into(),
                ))
            }
            (None, false) => {
                return Err(BsumError::Spec(
                    "no stepsize schedule given and unit stepsize not requested".into(),
                ))
            }
            (Some(s), false) => {
                s.check_depth(depth, "schedule")?;
                for sched in s.iter() {
                    sched.validate()?;
                }
            }
            (None, true) => {}
        }
        if !(self.grad_norm_tol >= 0.0) {
            return Err(BsumError::Spec(format!(
                "grad_norm_tol must be >= 0, got {}",
                self.grad_norm_tol
            )));
        }
        if self.record_every == Some(0) {
            return Err(BsumError::Spec("record_every must be >= 1".into()));
        }
        if let BatchMode::FixedSize(0) = self.sampler {
            return Err(BsumError::Spec("batch size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn record_every(&self, depth: usize) -> usize {
        self.record_every.unwrap_or(depth)
    }
}
