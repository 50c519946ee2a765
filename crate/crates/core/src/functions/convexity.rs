//! Sufficient conditions under which a layer's block objective is strongly
//! convex (or concave) in that layer's weights.

use crate::functions::activation::{ActivationKind, ActivationTraits};
use crate::functions::loss::{LossKind, LossTraits, Monotonicity};
use crate::functions::regularizer::{RegularizerKind, RegularizerSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockCurvature {
    StronglyConvex { modulus: f64 },
    Concave,
    Unknown,
}

impl BlockCurvature {
    pub fn is_strongly_convex(&self) -> bool {
        matches!(self, BlockCurvature::StronglyConvex { .. })
    }
}

/// Classifies the block objective of a layer from the traits of the loss and
/// of the activations from that layer up to the output.
///
/// * convex nondecreasing activations with a convex nondecreasing loss, or
///   concave nondecreasing activations with a convex nonincreasing loss, plus
///   a strongly convex regularizer, give `StronglyConvex`;
/// * convex nondecreasing activations with a concave nonincreasing loss and no
///   regularizer give `Concave`.
///
/// The composition argument treats the downstream weights as an affine map
/// that preserves curvature, which holds when those weights are entrywise
/// nonnegative.
pub fn classify_convexity(loss: LossKind, activations: &[ActivationKind], reg: &RegularizerSpec) -> BlockCurvature {
    let acts: Vec<ActivationTraits> = activations.iter().map(|a| a.traits()).collect();
    classify_from_traits(&loss.traits(), &acts, reg)
}

pub fn classify_from_traits(
    loss: &LossTraits,
    activations: &[ActivationTraits],
    reg: &RegularizerSpec,
) -> BlockCurvature {
    let all = |p: fn(&ActivationTraits) -> bool| activations.iter().all(p);
    let convex_up = all(|t| t.convex && t.nondecreasing);
    let concave_up = all(|t| t.concave && t.nondecreasing);

    let c1 = convex_up && loss.convex_in_h && loss.monotone == Monotonicity::Nondecreasing;
    let c2 = concave_up && loss.convex_in_h && loss.monotone == Monotonicity::Nonincreasing;
    if c1 || c2 {
        if let Some(modulus) = reg.strong_convexity() {
            return BlockCurvature::StronglyConvex { modulus };
        }
    }

    let no_reg = reg.kind == RegularizerKind::None || reg.strength == 0.0;
    if convex_up && loss.concave_in_h && loss.monotone == Monotonicity::Nonincreasing && no_reg {
        return BlockCurvature::Concave;
    }
    BlockCurvature::Unknown
}
