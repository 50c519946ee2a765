use crate::error::{BsumError, Result};

/// Largest stepsize a schedule hands out; schedules are kept strictly below 1.
pub const MAX_STEPSIZE: f64 = 1.0 - f64::EPSILON;

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    /// `β ∈ (0, 1)`
    pub shrink: f64,
    /// `σ ∈ (0, 1)`
    pub slope: f64,
    /// `α_init ∈ (0, 1]`
    pub alpha_init: f64,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            slope: 1e-4,
            alpha_init: 1.0,
        }
    }
}

impl ArmijoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(BsumError::Spec(format!(
                "Armijo shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return Err(BsumError::Spec(format!(
                "Armijo slope must lie in (0, 1), got {}",
                self.slope
            )));
        }
        if !(self.alpha_init > 0.0 && self.alpha_init <= 1.0) {
            return Err(BsumError::Spec(format!(
                "Armijo initial step must lie in (0, 1], got {}",
                self.alpha_init
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeSchedule {
    /// `c/√k`
    InverseRoot {
        c: f64,
    },
    /// `c/2^k`
    Geometric {
        c: f64,
    },
    /// `α_{k} = α_{k-1}(1 − t·α_{k-1})` starting from `α_0`.
    Recursive {
        alpha0: f64,
        t: f64,
    },
    Constant {
        c: f64,
    },
    /// Line search on the block objective at every update.
    Armijo(ArmijoParams),
}

/// Mutable part of a schedule (only `Recursive` has any).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScheduleState {
    recursive: Option<f64>,
}

impl StepsizeSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            StepsizeSchedule::InverseRoot { .. } => "inverse-root",
            StepsizeSchedule::Geometric { .. } => "geometric",
            StepsizeSchedule::Recursive { .. } => "recursive",
            StepsizeSchedule::Constant { .. } => "constant",
            StepsizeSchedule::Armijo(_) => "armijo",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BsumError::Spec(msg));
        match *self {
            StepsizeSchedule::InverseRoot { c } | StepsizeSchedule::Geometric { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("{} schedule needs c > 0, got {c}", self.name()));
                }
            }
            StepsizeSchedule::Recursive { alpha0, t } => {
                if !(alpha0 > 0.0 && alpha0 <= 1.0) {
                    return bad(format!("recursive schedule needs α₀ in (0, 1], got {alpha0}"));
                }
                if !(t > 0.0 && t < 1.0) {
                    return bad(format!("recursive schedule needs t in (0, 1), got {t}"));
                }
            }
            StepsizeSchedule::Constant { c } => {
                if !(c > 0.0 && c < 1.0) {
                    return bad(format!("constant schedule needs c in (0, 1), got {c}"));
                }
            }
            StepsizeSchedule::Armijo(p) => p.validate()?,
        }
        Ok(())
    }

    pub fn satisfies_eq7(&self) -> bool {
        matches!(
            self,
            StepsizeSchedule::InverseRoot { .. } | StepsizeSchedule::Recursive { .. }
        )
    }
}

/// Stepsize for update count `k ≥ 1`. `Recursive` advances `state` before
/// returning, so its first value is `α₀(1 − tα₀)`. `Armijo` returns its
/// initial trial step; the trainer runs the line search itself.
pub fn stepsize_next(schedule: &StepsizeSchedule, k: usize, state: &mut ScheduleState) -> f64 {
    let k = k.max(1);
    let alpha = match *schedule {
        StepsizeSchedule::InverseRoot { c } => c / (k as f64).sqrt(),
        StepsizeSchedule::Geometric { c } => c * 0.5f64.powi(k.min(i32::MAX as usize) as i32),
        StepsizeSchedule::Recursive { alpha0, t } => {
            let prev = state.recursive.unwrap_or(alpha0);
            let next = prev * (1.0 - t * prev);
            state.recursive = Some(next);
            next
        }
        StepsizeSchedule::Constant { c } => c,
        StepsizeSchedule::Armijo(p) => return p.alpha_init,
    };
    alpha.clamp(0.0, MAX_STEPSIZE)
}

/// Outcome of [`validate_schedule`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleClass {
    pub satisfies_eq7: bool,
    pub witness: String,
    /// `Σ_{k ≤ 10⁶} α_k`
    pub partial_sum: f64,
    /// `Σ_{k ≤ 10⁶} α_k²`
    pub partial_square_sum: f64,
    /// `Σ_{10⁵ < k ≤ 10⁶} α_k²`: the late contribution to the square sum.
    pub square_tail: f64,
}

pub const VALIDATION_TERMS: usize = 1_000_000;

/// Classifies a schedule against `Σα = ∞, Σα² < ∞, 0 ≤ α < 1` and reports
/// partial sums over the first 10⁶ steps.
pub fn validate_schedule(schedule: &StepsizeSchedule) -> ScheduleClass {
    let witness = match *schedule {
        StepsizeSchedule::InverseRoot { .. } => {
            "Σ c/√k diverges like 2c√K; Σ c²/k grows only like c²·ln K (listed with the convergent schedules for BP)"
        }
        StepsizeSchedule::Recursive { .. } => "α_k ~ 1/(t·k): Σ α_k diverges like ln K / t and Σ α_k² converges",
        StepsizeSchedule::Constant { .. } => "α_k = c does not vanish, so Σ α_k² diverges",
        StepsizeSchedule::Geometric { .. } => "Σ c/2^k = c is finite, so the divergence condition fails",
        StepsizeSchedule::Armijo(_) => "line-search steps are not a predetermined diminishing sequence",
    };
    let mut state = ScheduleState::default();
    let (mut sum, mut sq, mut tail) = (0.0, 0.0, 0.0);
    if !matches!(schedule, StepsizeSchedule::Armijo(_)) {
        for k in 1..=VALIDATION_TERMS {
            let a = stepsize_next(schedule, k, &mut state);
            sum += a;
            sq += a * a;
            if k > VALIDATION_TERMS / 10 {
                tail += a * a;
            }
        }
    }
    ScheduleClass {
        satisfies_eq7: schedule.satisfies_eq7(),
        witness: witness.to_string(),
        partial_sum: sum,
        partial_square_sum: sq,
        square_tail: tail,
    }
}
