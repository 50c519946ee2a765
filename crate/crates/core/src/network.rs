//! Layered network without bias terms: `Z_j = σ_j(W_j Z_{j-1})`.
//!
//! Layers are addressed 1-based throughout the public API (`1..=depth`), so
//! `weight(1)` connects the input to the first hidden layer. A bias can be
//! emulated by appending a constant row to the input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{shape_err, BsumError, Result};
use crate::functions::{activation_apply, ActivationKind, RegularizerSpec};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::upperbounds::project_feasible;

/// Closed convex set a layer's weights are confined to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibleSetKind {
    Unconstrained,
    /// Constant along every diagonal.
    Toeplitz,
    /// `{W : ‖W‖_F ≤ radius}`
    FrobeniusBall {
        radius: f64,
    },
}

impl FeasibleSetKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FeasibleSetKind::FrobeniusBall { radius } if !(radius > 0.0) => Err(BsumError::Spec(format!(
                "Frobenius ball radius must be positive, got {radius}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, FeasibleSetKind::FrobeniusBall { .. })
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains<T: Scalar>(&self, w: &Matrix<T>, tol: T) -> bool {
        match *self {
            FeasibleSetKind::Unconstrained => true,
            FeasibleSetKind::Toeplitz => toeplitz_deviation(w) <= tol,
            FeasibleSetKind::FrobeniusBall { radius } => w.frobenius_norm() <= T::lit(radius) + tol,
        }
    }
}

/// Largest difference between diagonally adjacent entries; zero exactly when
/// `w` is Toeplitz.
pub fn toeplitz_deviation<T: Scalar>(w: &Matrix<T>) -> T {
    let mut worst = T::zero();
    for r in 1..w.rows() {
        for c in 1..w.cols() {
            let d = (w[(r, c)] - w[(r - 1, c - 1)]).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Architecture and per-layer choices. `dims` has `depth + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub dims: Vec<usize>,
    pub activations: Vec<ActivationKind>,
    pub feasible_sets: Vec<FeasibleSetKind>,
    pub regularizers: Vec<RegularizerSpec>,
}

impl NetworkSpec {
    /// Same activation and regularizer on every layer, no constraints.
    pub fn uniform(dims: &[usize], activation: ActivationKind, reg: RegularizerSpec) -> Self {
        let depth = dims.len().saturating_sub(1);
        Self {
            dims: dims.to_vec(),
            activations: vec![activation; depth],
            feasible_sets: vec![FeasibleSetKind::Unconstrained; depth],
            regularizers: vec![reg; depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let depth = self.depth();
        if depth == 0 {
            return Err(BsumError::Spec("network needs at least one layer".into()));
        }
        if self.activations.len() != depth || self.feasible_sets.len() != depth || self.regularizers.len() != depth {
            return Err(BsumError::Spec(format!(
                "depth {depth} but {} activations, {} feasible sets, {} regularizers",
                self.activations.len(),
                self.feasible_sets.len(),
                self.regularizers.len()
            )));
        }
        if let Some(pos) = self.dims.iter().position(|&d| d == 0) {
            return Err(BsumError::Spec(format!("dimension d_{pos} is zero")));
        }
        for set in &self.feasible_sets {
            set.validate()?;
        }
        for reg in &self.regularizers {
            reg.validate()?;
        }
        for a in &self.activations {
            if let ActivationKind::LeakyReluSmooth(s) = a {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(BsumError::Spec(format!("leaky slope {s} outside (0, 1)")));
                }
            }
        }
        Ok(())
    }

    /// Shape `(d_j, d_{j-1})` of layer `j`'s weights.
    pub fn weight_shape(&self, layer: usize) -> (usize, usize) {
        (self.dims[layer], self.dims[layer - 1])
    }

    /// Whether every activation is the identity.
    pub fn is_linear(&self) -> bool {
        self.activations.iter().all(|a| matches!(a, ActivationKind::Identity))
    }
}

/// Distribution the initial weights are drawn from, before projection onto
/// each layer's feasible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    Zeros,
    /// Uniform on `(-s, s)`; `None` picks `s = 1/√d_{j-1}` per layer.
    Uniform {
        scale: Option<f64>,
    },
    Gaussian {
        std: f64,
    },
}

impl Default for InitScheme {
    fn default() -> Self {
        InitScheme::Uniform { scale: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    spec: NetworkSpec,
    weights: Vec<Matrix<T>>,
}

pub fn build_network<T: Scalar>(spec: NetworkSpec, init: InitScheme, seed: u64) -> Result<Network<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(spec.depth());
    for layer in 1..=spec.depth() {
        let (rows, cols) = spec.weight_shape(layer);
        let raw: Matrix<T> = match init {
            InitScheme::Zeros => Matrix::zeros(rows, cols),
            InitScheme::Uniform { scale: Some(s) } => uniform(rows, cols, s, &mut rng)?,
            InitScheme::Uniform { scale: None } => uniform(rows, cols, 1.0 / (cols as f64).sqrt(), &mut rng)?,
            InitScheme::Gaussian { std } => {
                let dist = Normal::new(0.0, std).map_err(|e| BsumError::Spec(format!("gaussian init: {e}")))?;
                Matrix::from_fn(rows, cols, |_, _| T::lit(dist.sample(&mut rng)))
            }
        };
        weights.push(project_feasible(&spec.feasible_sets[layer - 1], &raw));
    }
    Ok(Network { spec, weights })
}

fn uniform<T: Scalar>(rows: usize, cols: usize, s: f64, rng: &mut ChaCha8Rng) -> Result<Matrix<T>> {
    if !(s > 0.0) {
        return Err(BsumError::Spec(format!("uniform init scale must be positive, got {s}")));
    }
    let dist = Uniform::new(-s, s).map_err(|e| BsumError::Spec(format!("uniform init: {e}")))?;
    Ok(Matrix::from_fn(rows, cols, |_, _| T::lit(dist.sample(rng))))
}

impl<T: Scalar> Network<T> {
    /// Wraps explicit weights, checking shapes and feasibility (tolerance
    /// `1e-12`).
    pub fn from_weights(spec: NetworkSpec, weights: Vec<Matrix<T>>) -> Result<Self> {
        spec.validate()?;
        if weights.len() != spec.depth() {
            return Err(BsumError::Spec(format!(
                "{} weight matrices for depth {}",
                weights.len(),
                spec.depth()
            )));
        }
        let mut net = Self {
            spec,
            weights: Vec::new(),
        };
        for (i, w) in weights.iter().enumerate() {
            net.check_weight(i + 1, w)?;
        }
        net.weights = weights;
        Ok(net)
    }

    fn check_weight(&self, layer: usize, w: &Matrix<T>) -> Result<()> {
        let expected = self.spec.weight_shape(layer);
        if w.shape() != expected {
            return Err(shape_err(
                "layer weights",
                format!("{expected:?}"),
                format!("{:?}", w.shape()),
            ));
        }
        let set = self.spec.feasible_sets[layer - 1];
        if !set.contains(w, T::lit(1e-12)) {
            return Err(BsumError::Spec(format!(
                "layer {layer} weights are outside their feasible set {set:?}"
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.spec.depth()
    }

    pub fn weights(&self) -> &[Matrix<T>] {
        &self.weights
    }

    /// Weights of layer `layer` (1-based).
    pub fn weight(&self, layer: usize) -> &Matrix<T> {
        &self.weights[layer - 1]
    }

    /// Replaces layer `layer`'s weights after checking shape and feasibility.
    pub fn set_weight(&mut self, layer: usize, w: Matrix<T>) -> Result<()> {
        self.check_layer(layer)?;
        self.check_weight(layer, &w)?;
        self.weights[layer - 1] = w;
        Ok(())
    }

    /// Replaces weights without the feasibility check; shapes must match.
    pub(crate) fn set_weight_unchecked(&mut self, layer: usize, w: Matrix<T>) {
        debug_assert_eq!(w.shape(), self.spec.weight_shape(layer));
        self.weights[layer - 1] = w;
    }

    pub fn check_layer(&self, layer: usize) -> Result<()> {
        if layer == 0 || layer > self.depth() {
            return Err(BsumError::Spec(format!(
                "layer index {layer} outside 1..={}",
                self.depth()
            )));
        }
        Ok(())
    }

    pub fn activation(&self, layer: usize) -> ActivationKind {
        self.spec.activations[layer - 1]
    }

    pub fn regularizer(&self, layer: usize) -> &RegularizerSpec {
        &self.spec.regularizers[layer - 1]
    }

    pub fn feasible_set(&self, layer: usize) -> &FeasibleSetKind {
        &self.spec.feasible_sets[layer - 1]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }
}

/// Pre-activations `U_j` (one per layer) and post-activations `Z_0..Z_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutputs<T> {
    pub pre_activations: Vec<Matrix<T>>,
    pub post_activations: Vec<Matrix<T>>,
}

impl<T: Scalar> LayerOutputs<T> {
    /// `U_j` for 1-based `layer`.
    pub fn pre(&self, layer: usize) -> &Matrix<T> {
        &self.pre_activations[layer - 1]
    }

    /// `Z_j` for `layer` in `0..=J`.
    pub fn post(&self, layer: usize) -> &Matrix<T> {
        &self.post_activations[layer]
    }

    pub fn output(&self) -> &Matrix<T> {
        self.post_activations.last().expect("at least Z_0")
    }
}

pub fn forward<T: Scalar>(net: &Network<T>, x: &Matrix<T>) -> Result<LayerOutputs<T>> {
    let d0 = net.spec.dims[0];
    if x.rows() != d0 {
        return Err(shape_err(
            "forward input",
            format!("{d0} rows"),
            format!("{} rows", x.rows()),
        ));
    }
    Ok(forward_from(net, 1, x.clone(), None))
}

/// Propagates `z_prev = Z_{first-1}` through layers `first..=J`, optionally
/// substituting `replacement` for `W_first`. The returned outputs start at
/// `Z_{first-1}`: `pre_activations[i]` is `U_{first+i}`.
pub(crate) fn forward_from<T: Scalar>(
    net: &Network<T>,
    first: usize,
    z_prev: Matrix<T>,
    replacement: Option<&Matrix<T>>,
) -> LayerOutputs<T> {
    let depth = net.depth();
    let mut pre = Vec::with_capacity(depth + 1 - first);
    let mut post = Vec::with_capacity(depth + 2 - first);
    post.push(z_prev);
    for layer in first..=depth {
        let w = match replacement {
            Some(r) if layer == first => r,
            _ => net.weight(layer),
        };
        let u = w.matmul(post.last().unwrap());
        let z = activation_apply(net.activation(layer), &u);
        pre.push(u);
        post.push(z);
    }
    LayerOutputs {
        pre_activations: pre,
        post_activations: post,
    }
}

pub fn network_output<T: Scalar>(net: &Network<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    let mut outs = forward(net, x)?;
    Ok(outs.post_activations.pop().unwrap())
}

/// Training set: inputs `x` (`d_0 × N`) and targets `y` (`d_J × N`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    x: Matrix<T>,
    y: Matrix<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Matrix<T>) -> Result<Self> {
        if x.cols() != y.cols() {
            return Err(shape_err(
                "dataset",
                format!("{} target columns", x.cols()),
                format!("{}", y.cols()),
            ));
        }
        if x.cols() == 0 {
            return Err(BsumError::Spec("dataset needs at least one sample".into()));
        }
        if !x.all_finite() || !y.all_finite() {
            return Err(BsumError::Domain("dataset contains non-finite values".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn y(&self) -> &Matrix<T> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.cols() == 0
    }

    /// Samples `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(BsumError::Spec("empty batch".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.len()) {
            return Err(BsumError::Spec(format!(
                "sample index {bad} out of range for N = {}",
                self.len()
            )));
        }
        Ok(Self {
            x: self.x.select_columns(idx),
            y: self.y.select_columns(idx),
        })
    }

    /// Checks that the dataset fits `spec`'s input and output widths.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        let d0 = spec.dims[0];
        let dj = *spec.dims.last().unwrap();
        if self.x.rows() != d0 || self.y.rows() != dj {
            return Err(shape_err(
                "dataset vs network",
                format!("x: {d0} rows, y: {dj} rows"),
                format!("x: {} rows, y: {} rows", self.x.rows(), self.y.rows()),
            ));
        }
        Ok(())
    }
}
