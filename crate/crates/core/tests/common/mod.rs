#![allow(dead_code)]

use bsum::{
    build_network, ActivationKind, Dataset64, InitScheme, LossKind, Matrix64, Network64, NetworkSpec, RegularizerSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BENCH_DIMS: [usize; 5] = [13, 10, 10, 10, 1];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix64 {
    Matrix64::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Targets in the label domain of `loss`.
pub fn targets(loss: LossKind, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix64 {
    match loss {
        LossKind::CrossEntropy => Matrix64::from_fn(rows, cols, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 }),
        LossKind::SquaredHinge { .. } | LossKind::Logistic => {
            Matrix64::from_fn(rows, cols, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        }
        _ => uniform(rows, cols, -1.0, 1.0, rng),
    }
}

/// Hidden layers use `act`; the output layer too, except that cross-entropy
/// gets a logistic output so that `H` stays inside `(0, 1)`.
pub fn spec_for(loss: LossKind, act: ActivationKind, dims: &[usize], reg: RegularizerSpec) -> NetworkSpec {
    let mut spec = NetworkSpec::uniform(dims, act, reg);
    if loss == LossKind::CrossEntropy {
        *spec.activations.last_mut().unwrap() = ActivationKind::Logistic;
    }
    spec
}

pub fn problem(
    loss: LossKind,
    act: ActivationKind,
    dims: &[usize],
    reg: RegularizerSpec,
    n: usize,
    seed: u64,
) -> (Network64, Dataset64) {
    let mut r = rng(seed);
    let net = build_network(spec_for(loss, act, dims, reg), InitScheme::default(), seed).unwrap();
    let x = uniform(dims[0], n, -1.0, 1.0, &mut r);
    let y = targets(loss, *dims.last().unwrap(), n, &mut r);
    (net, Dataset64::new(x, y).unwrap())
}

/// Per-sample forward pass with explicit loops: `zs[n][j]` is `z_j` for
/// sample `n` (`z_0 = x_n`), `us[n][j-1]` is `u_j`.
pub fn scalar_forward(net: &Network64, x: &Matrix64) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
    let mut zs = Vec::new();
    let mut us = Vec::new();
    for n in 0..x.cols() {
        let mut z: Vec<Vec<f64>> = vec![x.column(n)];
        let mut u_list = Vec::new();
        for j in 1..=net.depth() {
            let w = net.weight(j);
            let prev = z.last().unwrap();
            let mut u = vec![0.0; w.rows()];
            for a in 0..w.rows() {
                for b in 0..w.cols() {
                    u[a] += w[(a, b)] * prev[b];
                }
            }
            let act = net.activation(j);
            z.push(u.iter().map(|&v| act.eval(v)).collect());
            u_list.push(u);
        }
        zs.push(z);
        us.push(u_list);
    }
    (zs, us)
}

/// Per-sample backprop for the `L2` loss `(1/N)‖Y − H‖²`: `deltas[n][j-1]`
/// is `δ_j^n`.
pub fn scalar_backprop_l2(net: &Network64, x: &Matrix64, y: &Matrix64) -> Vec<Vec<Vec<f64>>> {
    let (zs, us) = scalar_forward(net, x);
    let depth = net.depth();
    let n_total = x.cols() as f64;
    let mut out = Vec::new();
    for n in 0..x.cols() {
        let mut deltas = vec![Vec::new(); depth];
        let h = &zs[n][depth];
        let act = net.activation(depth);
        deltas[depth - 1] = (0..h.len())
            .map(|a| 2.0 * (h[a] - y[(a, n)]) / n_total * act.derivative(us[n][depth - 1][a]))
            .collect();
        for j in (1..depth).rev() {
            let w = net.weight(j + 1);
            let act = net.activation(j);
            let next = &deltas[j];
            deltas[j - 1] = (0..w.cols())
                .map(|b| {
                    let mut s = 0.0;
                    for a in 0..w.rows() {
                        s += w[(a, b)] * next[a];
                    }
                    s * act.derivative(us[n][j - 1][b])
                })
                .collect();
        }
        out.push(deltas);
    }
    out
}

/// `‖a − b‖ / ‖b‖`, with `‖b‖` floored at `1e-12`.
pub fn rel_err(a: &Matrix64, b: &Matrix64) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm().max(1e-12)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(m: &Matrix64) -> Matrix64 {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|r| m.row(r).to_vec()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        inv.swap(col, p);
        let d = a[col][col];
        assert!(d != 0.0, "singular matrix");
        for c in 0..n {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                for c in 0..n {
                    a[r][c] -= factor * a[col][c];
                    inv[r][c] -= factor * inv[col][c];
                }
            }
        }
    }
    Matrix64::from_fn(n, n, |r, c| inv[r][c])
}

/// Whether `m − shift·I` admits a Cholesky factorization.
pub fn positive_definite_above(m: &Matrix64, shift: f64) -> bool {
    let n = m.rows();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)] - if i == j { shift } else { 0.0 };
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}
