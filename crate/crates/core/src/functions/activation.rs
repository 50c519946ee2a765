use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Shape properties of a scalar function on ℝ, used by the block-curvature
/// classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivationTraits {
    pub convex: bool,
    pub concave: bool,
    pub nondecreasing: bool,
    pub smooth: bool,
}

/// Elementwise activation applied after each layer's linear map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Identity,
    /// `1 / (1 + e^{-u})`
    Logistic,
    Tanh,
    /// `ln(1 + e^u)`
    Softplus,
    /// Smooth stand-in for leaky ReLU: `a·u + (1 − a)·softplus(u)` with the
    /// slope `a ∈ (0, 1)` used for negative inputs.
    LeakyReluSmooth(f64),
    /// `(√(u² + 1) − 1)/2 + u`
    BentIdentity,
}

impl ActivationKind {
    /// Every kind in the catalog, with a representative leaky slope.
    pub const CATALOG: [ActivationKind; 6] = [
        ActivationKind::Identity,
        ActivationKind::Logistic,
        ActivationKind::Tanh,
        ActivationKind::Softplus,
        ActivationKind::LeakyReluSmooth(0.1),
        ActivationKind::BentIdentity,
    ];

    pub fn traits(&self) -> ActivationTraits {
        use ActivationKind::*;
        let (convex, concave) = match self {
            Identity => (true, true),
            Logistic | Tanh => (false, false),
            Softplus | LeakyReluSmooth(_) | BentIdentity => (true, false),
        };
        ActivationTraits {
            convex,
            concave,
            nondecreasing: true,
            smooth: true,
        }
    }

    /// Whether outputs stay in `[-1, 1]` for every input.
    pub fn is_bounded(&self) -> bool {
        matches!(self, ActivationKind::Logistic | ActivationKind::Tanh)
    }

    pub fn name(&self) -> &'static str {
        use ActivationKind::*;
        match self {
            Identity => "identity",
            Logistic => "logistic",
            Tanh => "tanh",
            Softplus => "softplus",
            LeakyReluSmooth(_) => "leaky-relu-smooth",
            BentIdentity => "bent-identity",
        }
    }

    pub fn eval<T: Scalar>(&self, u: T) -> T {
        use ActivationKind::*;
        match *self {
            Identity => u,
            Logistic => sigmoid(u),
            Tanh => u.tanh(),
            Softplus => softplus(u),
            LeakyReluSmooth(a) => {
                let a = T::lit(a);
                a * u + (T::one() - a) * softplus(u)
            }
            BentIdentity => ((u * u + T::one()).sqrt() - T::one()) / T::lit(2.0) + u,
        }
    }

    pub fn derivative<T: Scalar>(&self, u: T) -> T {
        use ActivationKind::*;
        match *self {
            Identity => T::one(),
            Logistic => {
                let s = sigmoid(u);
                s * (T::one() - s)
            }
            Tanh => {
                let t = u.tanh();
                T::one() - t * t
            }
            Softplus => sigmoid(u),
            LeakyReluSmooth(a) => {
                let a = T::lit(a);
                a + (T::one() - a) * sigmoid(u)
            }
            BentIdentity => u / (T::lit(2.0) * (u * u + T::one()).sqrt()) + T::one(),
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(u: T) -> T {
    if u >= T::zero() {
        T::one() / (T::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (T::one() + e)
    }
}

/// Numerically stable `ln(1 + e^u)`.
pub fn softplus<T: Scalar>(u: T) -> T {
    if u > T::zero() {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

pub fn activation_apply<T: Scalar>(kind: ActivationKind, u: &Matrix<T>) -> Matrix<T> {
    u.map(|x| kind.eval(x))
}

pub fn activation_derivative<T: Scalar>(kind: ActivationKind, u: &Matrix<T>) -> Matrix<T> {
    u.map(|x| kind.derivative(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn logistic_of_zero_is_half() {
        let z = Matrix::<f64>::zeros(2, 3);
        let out = activation_apply(ActivationKind::Logistic, &z);
        assert!(out.as_slice().iter().all(|&x| x == 0.5));
        let d = activation_derivative(ActivationKind::Logistic, &z);
        assert!(d.as_slice().iter().all(|&x| x == 0.25));
    }

    #[test]
    fn identity_passes_through() {
        let u = Matrix::<f64>::from_rows(&[&[1.5, -2.0], &[0.0, 7.25]]);
        assert_eq!(activation_apply(ActivationKind::Identity, &u), u);
        let d = activation_derivative(ActivationKind::Identity, &u);
        assert!(d.as_slice().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn softplus_of_zero_is_ln2() {
        let v = ActivationKind::Softplus.eval(0.0f64);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for kind in ActivationKind::CATALOG {
            for _ in 0..1000 {
                let u: f64 = rng.random_range(-6.0..6.0);
                let fd = (kind.eval(u + h) - kind.eval(u - h)) / (2.0 * h);
                let an = kind.derivative(u);
                let rel = (fd - an).abs() / an.abs().max(1.0);
                assert!(rel <= 1e-6, "{kind:?} at {u}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn declared_traits_hold_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in ActivationKind::CATALOG {
            let t = kind.traits();
            let mut convex_violations = 0;
            let mut concave_violations = 0;
            for _ in 0..10_000 {
                let a: f64 = rng.random_range(-8.0..8.0);
                let b: f64 = rng.random_range(-8.0..8.0);
                let mid = kind.eval(0.5 * (a + b));
                let chord = 0.5 * (kind.eval(a) + kind.eval(b));
                let slack = 1e-12 * (1.0 + chord.abs());
                if mid > chord + slack {
                    convex_violations += 1;
                }
                if mid < chord - slack {
                    concave_violations += 1;
                }
                if t.nondecreasing {
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    assert!(kind.eval(lo) <= kind.eval(hi), "{kind:?} not monotone");
                }
            }
            assert_eq!(t.convex, convex_violations == 0, "{kind:?} convexity trait");
            assert_eq!(t.concave, concave_violations == 0, "{kind:?} concavity trait");
        }
    }

    #[test]
    fn stable_forms_do_not_overflow() {
        assert_eq!(sigmoid(-800.0f64), 0.0);
        assert_eq!(sigmoid(800.0f64), 1.0);
        assert_eq!(softplus(800.0f64), 800.0);
        assert!(softplus(-800.0f64) >= 0.0);
    }
}
