//! Layer normalization and the feed-forward block.

use ndarray::{Array2, Axis};

const LN_EPS: f64 = 1e-5;

fn colsum(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(Axis(0)).insert_axis(Axis(0))
}

pub struct LnCache {
    pub xhat: Array2<f64>,
    pub inv_std: Vec<f64>,
}

/// Per-row normalization with learned gain and shift.
pub fn layer_norm_forward(
    x: &Array2<f64>,
    gamma: &Array2<f64>,
    beta: &Array2<f64>,
) -> (Array2<f64>, LnCache) {
    let (rows, cols) = x.dim();
    let mut xhat = Array2::zeros((rows, cols));
    let mut inv_std = Vec::with_capacity(rows);
    let mut y = Array2::zeros((rows, cols));
    for i in 0..rows {
        let row = x.row(i);
        let mean = row.sum() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_std.push(inv);
        for j in 0..cols {
            let h = (x[(i, j)] - mean) * inv;
            xhat[(i, j)] = h;
            y[(i, j)] = gamma[(0, j)] * h + beta[(0, j)];
        }
    }
    (y, LnCache { xhat, inv_std })
}

/// Returns (dx, dgamma, dbeta).
pub fn layer_norm_backward(
    cache: &LnCache,
    gamma: &Array2<f64>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (rows, cols) = dy.dim();
    let dgamma = colsum(&(dy * &cache.xhat));
    let dbeta = colsum(dy);
    let mut dx = Array2::zeros((rows, cols));
    for i in 0..rows {
        let mut sum_g = 0.0;
        let mut sum_gx = 0.0;
        for j in 0..cols {
            let g = dy[(i, j)] * gamma[(0, j)];
            sum_g += g;
            sum_gx += g * cache.xhat[(i, j)];
        }
        let n = cols as f64;
        for j in 0..cols {
            let g = dy[(i, j)] * gamma[(0, j)];
            dx[(i, j)] =
                (g - sum_g / n - cache.xhat[(i, j)] * sum_gx / n) * cache.inv_std[i];
        }
    }
    (dx, dgamma, dbeta)
}

const GELU_C: f64 = 0.044715;

/// Smooth tanh-form gelu; everywhere differentiable, which keeps central
/// finite differences honest near zero.
pub fn gelu(x: f64) -> f64 {
    let k = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (k * (x + GELU_C * x * x * x)).tanh())
}

pub fn gelu_prime(x: f64) -> f64 {
    let k = (2.0 / std::f64::consts::PI).sqrt();
    let t = (k * (x + GELU_C * x * x * x)).tanh();
    let du = k * (1.0 + 3.0 * GELU_C * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

pub struct FfCache {
    pub x: Array2<f64>,
    pub h1: Array2<f64>,
}

/// Two-layer position-wise feed-forward with gelu in between.
pub fn ff_forward(
    w1: &Array2<f64>,
    b1: &Array2<f64>,
    w2: &Array2<f64>,
    b2: &Array2<f64>,
    x: &Array2<f64>,
) -> (Array2<f64>, FfCache) {
    let h1 = x.dot(w1) + b1;
    let a = h1.mapv(gelu);
    let y = a.dot(w2) + b2;
    (y, FfCache { x: x.clone(), h1 })
}

/// Returns (dx, dw1, db1, dw2, db2).
#[allow(clippy::type_complexity)]
pub fn ff_backward(
    w1: &Array2<f64>,
    w2: &Array2<f64>,
    cache: &FfCache,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
    let a = cache.h1.mapv(gelu);
    let dw2 = a.t().dot(dy);
    let db2 = colsum(dy);
    let da = dy.dot(&w2.t());
    let dh1 = &da * &cache.h1.mapv(gelu_prime);
    let dw1 = cache.x.t().dot(&dh1);
    let db1 = colsum(&dh1);
    let dx = dh1.dot(&w1.t());
    (dx, dw1, db1, dw2, db2)
}
