//! Reference solvers and fixtures shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
fn spectral_norm(g: ArrayView2<'_, f64>) -> f64 {
    let n = g.nrows();
    let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..500 {
        let y = g.dot(&x);
        let norm = y.dot(&y).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = x.dot(&y);
        x = y / norm;
    }
    lambda.max(1e-300)
}

/// `1/2 ||u - W h||^2 + lambda sum(h)` for one column.
pub fn column_objective(w: ArrayView2<'_, f64>, u: ArrayView1<'_, f64>, h: ArrayView1<'_, f64>, lambda: f64) -> f64 {
    let r = &u - &w.dot(&h);
    0.5 * r.dot(&r) + lambda * h.sum()
}

/// Accelerated projected gradient (FISTA) for `min_{h >= 0} 1/2 ||u - W h||^2 + lambda sum(h)`,
/// one column at a time, with restarts whenever the objective increases.
pub fn nnls_l1(w: ArrayView2<'_, f64>, u: ArrayView2<'_, f64>, lambda: f64, iters: usize) -> Array2<f64> {
    let g = w.t().dot(&w);
    let step = 1.0 / spectral_norm(g.view());
    let mut out = Array2::zeros((w.ncols(), u.ncols()));
    for (j, col) in u.axis_iter(Axis(1)).enumerate() {
        let wtu = w.t().dot(&col);
        let mut h = Array1::<f64>::zeros(w.ncols());
        let mut y = h.clone();
        let mut t = 1.0f64;
        let mut prev = column_objective(w, col, h.view(), lambda);
        for _ in 0..iters {
            let grad = g.dot(&y) - &wtu + lambda;
            let next = (&y - &(grad * step)).mapv(|v| v.max(0.0));
            let obj = column_objective(w, col, next.view(), lambda);
            if obj > prev {
                y = h.clone();
                t = 1.0;
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + &((&next - &h) * ((t - 1.0) / t_next));
            y.mapv_inplace(|v| v.max(0.0));
            h = next;
            t = t_next;
            prev = obj;
        }
        out.column_mut(j).assign(&h);
    }
    out
}

/// Largest natural residual `|min(h, grad)|` of the optimality conditions of the problem solved
/// by [`nnls_l1`]; zero exactly at the minimizer.
pub fn kkt_violation(w: ArrayView2<'_, f64>, u: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>, lambda: f64) -> f64 {
    let grad = w.t().dot(&(w.dot(&h) - u)) + lambda;
    grad.iter().zip(h.iter()).fold(0.0f64, |worst, (g, x)| worst.max(x.min(*g).abs()))
}

pub fn objective(w: ArrayView2<'_, f64>, u: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>, lambda: f64) -> f64 {
    let r = &u - &w.dot(&h);
    0.5 * r.iter().map(|v| v * v).sum::<f64>() + lambda * h.sum()
}
