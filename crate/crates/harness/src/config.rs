//! JSON experiment configuration. Every object rejects unknown keys.

use std::path::{Path, PathBuf};

use bsum::{
    ActivationKind, ArmijoParams, BatchMode, FeasibleSetKind, GammaRule, InitScheme, InnerSolverConfig, Layered,
    LossKind, NetworkSpec, RegularizerSpec, StepsizeSchedule, TrainConfig, UpperboundKind,
};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// A single value applied to every layer, or one value per layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<X> {
    One(X),
    Many(Vec<X>),
}

// Hand-written so that errors inside the value (unknown keys in particular)
// are reported instead of "did not match any variant".
impl<'de, X: serde::de::DeserializeOwned> Deserialize<'de> for OneOrMany<X> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(d)?;
        if v.is_array() {
            Vec::<X>::deserialize(v).map(OneOrMany::Many).map_err(D::Error::custom)
        } else {
            X::deserialize(v).map(OneOrMany::One).map_err(D::Error::custom)
        }
    }
}

impl<X: Clone> OneOrMany<X> {
    fn expand(&self, depth: usize, what: &str) -> Result<Vec<X>, HarnessError> {
        match self {
            OneOrMany::One(x) => Ok(vec![x.clone(); depth]),
            OneOrMany::Many(v) if v.len() == depth => Ok(v.clone()),
            OneOrMany::Many(v) => Err(HarnessError::Config(format!(
                "{what}: {} entries for {depth} layers",
                v.len()
            ))),
        }
    }

    fn layered<Y>(&self, f: impl Fn(&X) -> Result<Y, HarnessError>) -> Result<Layered<Y>, HarnessError> {
        Ok(match self {
            OneOrMany::One(x) => Layered::Shared(f(x)?),
            OneOrMany::Many(v) => Layered::PerLayer(v.iter().map(f).collect::<Result<_, _>>()?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivationCfg {
    Identity,
    Logistic,
    Tanh,
    Softplus,
    LeakyReluSmooth(f64),
    BentIdentity,
}

impl From<ActivationCfg> for ActivationKind {
    fn from(a: ActivationCfg) -> Self {
        match a {
            ActivationCfg::Identity => ActivationKind::Identity,
            ActivationCfg::Logistic => ActivationKind::Logistic,
            ActivationCfg::Tanh => ActivationKind::Tanh,
            ActivationCfg::Softplus => ActivationKind::Softplus,
            ActivationCfg::LeakyReluSmooth(s) => ActivationKind::LeakyReluSmooth(s),
            ActivationCfg::BentIdentity => ActivationKind::BentIdentity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LossCfg {
    L2,
    Exponential { c: f64 },
    CrossEntropy,
    SquaredHinge { c: f64 },
    Logistic,
}

impl From<LossCfg> for LossKind {
    fn from(l: LossCfg) -> Self {
        match l {
            LossCfg::L2 => LossKind::L2,
            LossCfg::Exponential { c } => LossKind::Exponential { c },
            LossCfg::CrossEntropy => LossKind::CrossEntropy,
            LossCfg::SquaredHinge { c } => LossKind::SquaredHinge { c },
            LossCfg::Logistic => LossKind::Logistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerCfg {
    None,
    L2(f64),
    L1(f64),
}

impl From<RegularizerCfg> for RegularizerSpec {
    fn from(r: RegularizerCfg) -> Self {
        match r {
            RegularizerCfg::None => RegularizerSpec::NONE,
            RegularizerCfg::L2(s) => RegularizerSpec::l2(s),
            RegularizerCfg::L1(s) => RegularizerSpec::l1(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FeasibleSetCfg {
    Unconstrained,
    Toeplitz,
    FrobeniusBall { radius: f64 },
}

impl From<FeasibleSetCfg> for FeasibleSetKind {
    fn from(s: FeasibleSetCfg) -> Self {
        match s {
            FeasibleSetCfg::Unconstrained => FeasibleSetKind::Unconstrained,
            FeasibleSetCfg::Toeplitz => FeasibleSetKind::Toeplitz,
            FeasibleSetCfg::FrobeniusBall { radius } => FeasibleSetKind::FrobeniusBall { radius },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitCfg {
    Zeros,
    /// `scale` omitted means `1/√fan_in`.
    Uniform {
        #[serde(default)]
        scale: Option<f64>,
    },
    Gaussian {
        std: f64,
    },
}

impl Default for InitCfg {
    fn default() -> Self {
        InitCfg::Uniform { scale: None }
    }
}

impl From<InitCfg> for InitScheme {
    fn from(i: InitCfg) -> Self {
        match i {
            InitCfg::Zeros => InitScheme::Zeros,
            InitCfg::Uniform { scale } => InitScheme::Uniform { scale },
            InitCfg::Gaussian { std } => InitScheme::Gaussian { std },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkCfg {
    pub dims: Vec<usize>,
    pub activation: OneOrMany<ActivationCfg>,
    #[serde(default = "no_regularizer")]
    pub regularizer: OneOrMany<RegularizerCfg>,
    #[serde(default = "unconstrained")]
    pub feasible_set: OneOrMany<FeasibleSetCfg>,
    #[serde(default)]
    pub init: InitCfg,
}

fn no_regularizer() -> OneOrMany<RegularizerCfg> {
    OneOrMany::One(RegularizerCfg::None)
}

fn unconstrained() -> OneOrMany<FeasibleSetCfg> {
    OneOrMany::One(FeasibleSetCfg::Unconstrained)
}

impl NetworkCfg {
    pub fn spec(&self) -> Result<NetworkSpec, HarnessError> {
        let depth = self.dims.len().saturating_sub(1);
        if depth == 0 {
            return Err(HarnessError::Config("network.dims needs at least two entries".into()));
        }
        let spec = NetworkSpec {
            dims: self.dims.clone(),
            activations: self
                .activation
                .expand(depth, "network.activation")?
                .into_iter()
                .map(Into::into)
                .collect(),
            feasible_sets: self
                .feasible_set
                .expand(depth, "network.feasible_set")?
                .into_iter()
                .map(Into::into)
                .collect(),
            regularizers: self
                .regularizer
                .expand(depth, "network.regularizer")?
                .into_iter()
                .map(Into::into)
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerCfg {
    #[serde(default = "inner_max_iters")]
    pub max_iters: usize,
    #[serde(default = "inner_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "half")]
    pub shrink: f64,
    #[serde(default = "slope")]
    pub slope: f64,
}

impl Default for InnerCfg {
    fn default() -> Self {
        let d = InnerSolverConfig::default();
        Self {
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            shrink: d.shrink,
            slope: d.slope,
        }
    }
}

fn inner_max_iters() -> usize {
    InnerSolverConfig::default().max_iters
}

fn inner_grad_tol() -> f64 {
    InnerSolverConfig::default().grad_tol
}

fn half() -> f64 {
    0.5
}

fn slope() -> f64 {
    1e-4
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UpperboundCfg {
    FirstOrder {
        gamma: f64,
    },
    SecondOrder {
        gamma: f64,
    },
    Proximal {
        gamma: f64,
        #[serde(default)]
        inner: InnerCfg,
    },
    Linear,
}

impl From<UpperboundCfg> for UpperboundKind {
    fn from(u: UpperboundCfg) -> Self {
        match u {
            UpperboundCfg::FirstOrder { gamma } => UpperboundKind::FirstOrderProx { gamma },
            UpperboundCfg::SecondOrder { gamma } => UpperboundKind::SecondOrderProx { gamma },
            UpperboundCfg::Proximal { gamma, inner } => UpperboundKind::Proximal {
                gamma,
                inner: InnerSolverConfig {
                    max_iters: inner.max_iters,
                    grad_tol: inner.grad_tol,
                    shrink: inner.shrink,
                    slope: inner.slope,
                },
            },
            UpperboundCfg::Linear => UpperboundKind::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleCfg {
    InverseRoot {
        c: f64,
    },
    Geometric {
        c: f64,
    },
    Recursive {
        alpha0: f64,
        t: f64,
    },
    Constant {
        c: f64,
    },
    Armijo {
        #[serde(default = "half")]
        shrink: f64,
        #[serde(default = "slope")]
        slope: f64,
        #[serde(default = "one")]
        alpha_init: f64,
    },
}

impl From<ScheduleCfg> for StepsizeSchedule {
    fn from(s: ScheduleCfg) -> Self {
        match s {
            ScheduleCfg::InverseRoot { c } => StepsizeSchedule::InverseRoot { c },
            ScheduleCfg::Geometric { c } => StepsizeSchedule::Geometric { c },
            ScheduleCfg::Recursive { alpha0, t } => StepsizeSchedule::Recursive { alpha0, t },
            ScheduleCfg::Constant { c } => StepsizeSchedule::Constant { c },
            ScheduleCfg::Armijo {
                shrink,
                slope,
                alpha_init,
            } => StepsizeSchedule::Armijo(ArmijoParams {
                shrink,
                slope,
                alpha_init,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaRuleCfg {
    Fixed,
    Backtracking {
        #[serde(default = "max_doublings")]
        max_doublings: usize,
    },
}

fn max_doublings() -> usize {
    bsum::upperbounds::MAX_GAMMA_DOUBLINGS
}

impl Default for GammaRuleCfg {
    fn default() -> Self {
        GammaRuleCfg::Backtracking {
            max_doublings: max_doublings(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerCfg {
    Full,
    FixedSize(usize),
    Increasing,
}

impl From<SamplerCfg> for BatchMode {
    fn from(s: SamplerCfg) -> Self {
        match s {
            SamplerCfg::Full => BatchMode::Full,
            SamplerCfg::FixedSize(b) => BatchMode::FixedSize(b),
            SamplerCfg::Increasing => BatchMode::Increasing,
        }
    }
}

/// Settings of one run of the proposed method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposedCfg {
    /// Defaults to `bsum-<schedule>` (or `bsum-unit`, `bsum-exact`).
    #[serde(default)]
    pub name: Option<String>,
    pub upperbound: OneOrMany<UpperboundCfg>,
    #[serde(default)]
    pub gamma_rule: GammaRuleCfg,
    #[serde(default)]
    pub schedule: Option<OneOrMany<ScheduleCfg>>,
    #[serde(default)]
    pub unit_stepsize: bool,
    #[serde(default)]
    pub exact_bcd: bool,
    #[serde(default = "full")]
    pub sampler: SamplerCfg,
    #[serde(default)]
    pub sampler_seed: u64,
    pub max_outer_iterations: usize,
    pub grad_norm_tol: f64,
    #[serde(default)]
    pub relative_tol: bool,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub override_curvature_checks: bool,
}

fn full() -> SamplerCfg {
    SamplerCfg::Full
}

impl ProposedCfg {
    pub fn method_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        if self.exact_bcd {
            return "bsum-exact".into();
        }
        match &self.schedule {
            Some(OneOrMany::One(s)) => format!("bsum-{}", StepsizeSchedule::from(*s).name()),
            Some(OneOrMany::Many(_)) => "bsum-per-layer".into(),
            None => "bsum-unit".into(),
        }
    }

    pub fn train_config(&self, record_timing: bool) -> Result<TrainConfig, HarnessError> {
        let cfg = TrainConfig {
            upperbound: self.upperbound.layered(|u| Ok((*u).into()))?,
            gamma_rule: match self.gamma_rule {
                GammaRuleCfg::Fixed => GammaRule::Fixed,
                GammaRuleCfg::Backtracking { max_doublings } => GammaRule::Backtracking { max_doublings },
            },
            schedule: self
                .schedule
                .as_ref()
                .map(|s| s.layered(|x| Ok((*x).into())))
                .transpose()?,
            sampler: self.sampler.into(),
            sampler_seed: self.sampler_seed,
            max_outer_iterations: self.max_outer_iterations,
            grad_norm_tol: self.grad_norm_tol,
            relative_tol: self.relative_tol,
            record_every: self.record_every,
            unit_stepsize: self.unit_stepsize,
            exact_bcd: self.exact_bcd,
            override_curvature_checks: self.override_curvature_checks,
            record_timing,
        };
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    BpClr,
    Adagrad,
}

pub const ADAGRAD_RATE: f64 = 0.01;
pub const ADAGRAD_EPS: f64 = 1e-8;

/// A full-gradient baseline. `rate` is required for BP-CLR; ADAGRAD defaults
/// to rate 0.01 and ε = 1e-8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineCfg {
    pub method: BaselineKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    pub max_iterations: usize,
    pub grad_norm_tol: f64,
    #[serde(default)]
    pub relative_tol: bool,
    #[serde(default = "every_iteration")]
    pub record_every: usize,
}

fn every_iteration() -> usize {
    1
}

impl BaselineCfg {
    pub fn method_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            match self.method {
                BaselineKind::BpClr => "bp-clr",
                BaselineKind::Adagrad => "adagrad",
            }
            .into()
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate.unwrap_or(ADAGRAD_RATE)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(ADAGRAD_EPS)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let name = self.method_name();
        let bad = |m: &str| Err(HarnessError::Config(format!("baseline {name}: {m}")));
        if self.method == BaselineKind::BpClr {
            if self.rate.is_none() {
                return bad("BP-CLR needs a rate");
            }
            if self.eps.is_some() {
                return bad("eps only applies to ADAGRAD");
            }
        }
        if !(self.rate() >= 0.0 && self.rate().is_finite()) {
            return bad("rate must be finite and >= 0");
        }
        if !(self.eps() > 0.0) {
            return bad("eps must be > 0");
        }
        if !(self.grad_norm_tol >= 0.0) {
            return bad("grad_norm_tol must be >= 0");
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1");
        }
        Ok(())
    }
}

/// A column picked by 0-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherCfg {
    pub dims: Vec<usize>,
    pub activation: ActivationCfg,
    #[serde(default = "one")]
    pub init_std: f64,
    #[serde(default)]
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetCfg {
    Csv {
        path: PathBuf,
        targets: Vec<ColumnRef>,
        #[serde(default)]
        standardize: bool,
    },
    Synthetic {
        n: usize,
        teacher: TeacherCfg,
        /// Fixed data seed; by default each run seed draws its own data.
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetCfg,
    pub network: NetworkCfg,
    pub loss: LossCfg,
    #[serde(default)]
    pub proposed: Vec<ProposedCfg>,
    #[serde(default)]
    pub baselines: Vec<BaselineCfg>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub record_timing: bool,
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a config file; a relative CSV path is taken relative to the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let DatasetCfg::Csv { path: p, .. } = &mut cfg.dataset {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn loss(&self) -> Result<LossKind, HarnessError> {
        let loss: LossKind = self.loss.into();
        loss.validate()?;
        Ok(loss)
    }

    /// All `(method name, method)` pairs in config order.
    pub fn methods(&self) -> Vec<(String, Method<'_>)> {
        let mut out: Vec<(String, Method<'_>)> = self
            .proposed
            .iter()
            .map(|p| (p.method_name(), Method::Proposed(p)))
            .collect();
        out.extend(self.baselines.iter().map(|b| (b.method_name(), Method::Baseline(b))));
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let spec = self.network.spec()?;
        self.loss()?;
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must not be empty".into()));
        }
        let methods = self.methods();
        if methods.is_empty() {
            return Err(HarnessError::Config(
                "configure at least one proposed method or baseline".into(),
            ));
        }
        let mut names: Vec<&str> = methods.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(HarnessError::Config(format!("method name {:?} is used twice", w[0])));
        }
        for name in &names {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(HarnessError::Config(format!(
                    "method name {name:?} is not a usable file name"
                )));
            }
        }
        for p in &self.proposed {
            p.train_config(self.record_timing)?.validate(spec.depth())?;
        }
        for b in &self.baselines {
            b.validate()?;
        }
        match &self.dataset {
            DatasetCfg::Synthetic { n, teacher, .. } => {
                if *n == 0 {
                    return Err(HarnessError::Config("synthetic dataset needs n >= 1".into()));
                }
                if teacher.dims.first() != spec.dims.first() || teacher.dims.last() != spec.dims.last() {
                    return Err(HarnessError::Config(
                        "teacher input/output sizes must match the network".into(),
                    ));
                }
            }
            DatasetCfg::Csv { targets, .. } => {
                if targets.is_empty() {
                    return Err(HarnessError::Config(
                        "csv dataset needs at least one target column".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    Proposed(&'a ProposedCfg),
    Baseline(&'a BaselineCfg),
}
