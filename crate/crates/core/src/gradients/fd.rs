use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Step used for finite-difference Hessians of the analytic gradient.
pub const HESSIAN_FD_STEP: f64 = 1e-5;

/// Largest block (in entries) a dense Hessian is formed for.
pub const HESSIAN_SIZE_LIMIT: usize = 10_000;

/// Central differences `[f(W + h e_ab) − f(W − h e_ab)] / 2h` for every entry.
pub fn fd_gradient<T: Scalar>(f: impl Fn(&Matrix<T>) -> T, w: &Matrix<T>, h: T) -> Matrix<T> {
    assert!(h > T::zero(), "finite-difference step must be positive");
    let mut out = Matrix::zeros(w.rows(), w.cols());
    let mut probe = w.clone();
    for i in 0..w.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let fp = f(&probe);
        probe.as_mut_slice()[i] = orig - h;
        let fm = f(&probe);
        probe.as_mut_slice()[i] = orig;
        out.as_mut_slice()[i] = (fp - fm) / (h + h);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gives_twice_w() {
        let w = Matrix::<f64>::from_rows(&[&[1.5, -0.25], &[3.0, 0.75]]);
        let g = fd_gradient(|m: &Matrix<f64>| m.frobenius_norm_sq(), &w, 1e-6);
        assert!(g.max_abs_diff(&w.scale(2.0)) < 1e-8);
    }

    #[test]
    fn constant_gives_zero() {
        let w = Matrix::<f64>::from_rows(&[&[1.0, 2.0]]);
        let g = fd_gradient(|_: &Matrix<f64>| 4.2, &w, 1e-6);
        assert_eq!(g, Matrix::zeros(1, 2));
    }

    #[test]
    fn linear_gives_coefficients() {
        // exact dyadic values keep the central difference free of rounding
        let a = Matrix::<f64>::from_rows(&[&[0.5, -2.0], &[1.25, 4.0]]);
        let w = Matrix::<f64>::from_rows(&[&[1.0, 0.5], &[-0.25, 2.0]]);
        let g = fd_gradient(|m: &Matrix<f64>| a.dot(m), &w, 0.125);
        assert_eq!(g, a);
    }
}
