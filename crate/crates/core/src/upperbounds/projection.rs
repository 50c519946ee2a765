use crate::matrix::Matrix;
use crate::network::FeasibleSetKind;
use crate::scalar::Scalar;

/// Euclidean (Frobenius) projection onto a feasible set.
///
/// Toeplitz: every diagonal is replaced by its mean. Frobenius ball: radial
/// scaling onto the sphere when outside. Both are idempotent bit for bit: a
/// diagonal whose entries are already equal keeps its value, and the ball
/// projection shrinks its scale factor until the rounded result is inside.
pub fn project_feasible<T: Scalar>(set: &FeasibleSetKind, w: &Matrix<T>) -> Matrix<T> {
    match *set {
        FeasibleSetKind::Unconstrained => w.clone(),
        FeasibleSetKind::Toeplitz => project_toeplitz(w),
        FeasibleSetKind::FrobeniusBall { radius } => project_ball(w, T::lit(radius)),
    }
}

fn project_toeplitz<T: Scalar>(w: &Matrix<T>) -> Matrix<T> {
    let (rows, cols) = w.shape();
    let mut out = w.clone();
    if rows == 0 || cols == 0 {
        return out;
    }
    // offset = c - r ranges over -(rows-1)..=(cols-1)
    for offset in -(rows as isize - 1)..=(cols as isize - 1) {
        let (r0, c0) = if offset < 0 {
            ((-offset) as usize, 0)
        } else {
            (0, offset as usize)
        };
        let len = (rows - r0).min(cols - c0);
        let first = w[(r0, c0)];
        let mut dev = T::zero();
        for i in 0..len {
            dev += w[(r0 + i, c0 + i)] - first;
        }
        let mean = first + dev / T::from_usize(len).unwrap();
        for i in 0..len {
            out[(r0 + i, c0 + i)] = mean;
        }
    }
    out
}

fn project_ball<T: Scalar>(w: &Matrix<T>, radius: T) -> Matrix<T> {
    let norm = w.frobenius_norm();
    if norm <= radius {
        return w.clone();
    }
    let mut factor = radius / norm;
    loop {
        let out = w.scale(factor);
        if out.frobenius_norm() <= radius {
            return out;
        }
        factor *= T::one() - T::epsilon();
    }
}
