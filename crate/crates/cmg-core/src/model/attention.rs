//! Multi-head attention with boolean masks. Softmax runs only over allowed
//! entries, so disallowed weights are exactly zero (not exp(-inf) residue)
//! and masked outputs are bitwise independent of masked inputs.

use ndarray::Array2;

use crate::error::{CmgError, Result};

pub type Mask = Array2<bool>;

pub fn full_mask(l: usize) -> Mask {
    Array2::from_elem((l, l), true)
}

/// Each query sees only itself.
pub fn diagonal_mask(l: usize) -> Mask {
    Array2::from_shape_fn((l, l), |(i, j)| i == j)
}

/// Standard causal mask: query i sees keys j <= i.
pub fn causal_mask(l: usize) -> Mask {
    Array2::from_shape_fn((l, l), |(i, j)| j <= i)
}

/// Transpose of the causal mask: query i sees keys j >= i (current and
/// future only).
pub fn transposed_causal_mask(l: usize) -> Mask {
    Array2::from_shape_fn((l, l), |(i, j)| j >= i)
}

/// Borrowed projection weights for one attention stream.
pub struct AttnWeights<'a> {
    pub wq: &'a Array2<f64>,
    pub bq: &'a Array2<f64>,
    pub wk: &'a Array2<f64>,
    pub bk: &'a Array2<f64>,
    pub wv: &'a Array2<f64>,
    pub bv: &'a Array2<f64>,
    pub wo: &'a Array2<f64>,
    pub bo: &'a Array2<f64>,
}

#[derive(Debug)]
pub struct AttnCache {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// Per-head softmax weights, zero at disallowed entries.
    pub weights: Vec<Array2<f64>>,
    pub ctx: Array2<f64>,
    pub xq: Array2<f64>,
    pub xkv: Array2<f64>,
}

pub struct AttnGrads {
    pub wq: Array2<f64>,
    pub bq: Array2<f64>,
    pub wk: Array2<f64>,
    pub bk: Array2<f64>,
    pub wv: Array2<f64>,
    pub bv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bo: Array2<f64>,
    pub xq: Array2<f64>,
    pub xkv: Array2<f64>,
}

fn colsum(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0))
}

/// Scores QK^T / sqrt(d_head) per head over allowed entries, softmax per
/// row, weighted V, heads concatenated, output projection.
pub fn attention_forward(
    w: &AttnWeights,
    xq: &Array2<f64>,
    xkv: &Array2<f64>,
    mask: &Mask,
    n_heads: usize,
) -> Result<(Array2<f64>, AttnCache)> {
    let l = xq.nrows();
    let d = w.wq.ncols();
    if mask.nrows() != l || mask.ncols() != xkv.nrows() {
        return Err(CmgError::invalid("mask shape mismatch"));
    }
    for i in 0..l {
        if !mask.row(i).iter().any(|a| *a) {
            return Err(CmgError::invalid(format!(
                "mask row {i} allows no positions"
            )));
        }
    }
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let q = xq.dot(w.wq) + w.bq;
    let k = xkv.dot(w.wk) + w.bk;
    let v = xkv.dot(w.wv) + w.bv;
    let lk = xkv.nrows();

    let mut ctx = Array2::zeros((l, d));
    let mut weights = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let cols = h * dh..(h + 1) * dh;
        let mut wmat = Array2::zeros((l, lk));
        for i in 0..l {
            let mut max = f64::NEG_INFINITY;
            for j in 0..lk {
                if mask[(i, j)] {
                    let s: f64 = (0..dh)
                        .map(|c| q[(i, h * dh + c)] * k[(j, h * dh + c)])
                        .sum::<f64>()
                        * scale;
                    wmat[(i, j)] = s;
                    if s > max {
                        max = s;
                    }
                }
            }
            let mut total = 0.0;
            for j in 0..lk {
                if mask[(i, j)] {
                    let e = (wmat[(i, j)] - max).exp();
                    wmat[(i, j)] = e;
                    total += e;
                }
            }
            for j in 0..lk {
                if mask[(i, j)] {
                    wmat[(i, j)] /= total;
                } else {
                    wmat[(i, j)] = 0.0;
                }
            }
            for c in cols.clone() {
                let mut acc = 0.0;
                for j in 0..lk {
                    if mask[(i, j)] {
                        acc += wmat[(i, j)] * v[(j, c)];
                    }
                }
                ctx[(i, c)] = acc;
            }
        }
        weights.push(wmat);
    }
    let out = ctx.dot(w.wo) + w.bo;
    let cache = AttnCache { q, k, v, weights, ctx, xq: xq.clone(), xkv: xkv.clone() };
    Ok((out, cache))
}

pub fn attention_backward(
    w: &AttnWeights,
    cache: &AttnCache,
    mask: &Mask,
    n_heads: usize,
    d_out: &Array2<f64>,
) -> AttnGrads {
    let l = cache.xq.nrows();
    let lk = cache.xkv.nrows();
    let d = w.wq.ncols();
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let wo_grad = cache.ctx.t().dot(d_out);
    let bo_grad = colsum(d_out);
    let d_ctx = d_out.dot(&w.wo.t());

    let mut dq = Array2::zeros((l, d));
    let mut dk = Array2::zeros((lk, d));
    let mut dv = Array2::zeros((lk, d));
    for h in 0..n_heads {
        let wmat = &cache.weights[h];
        for i in 0..l {
            // dV and the softmax Jacobian touch only allowed columns; the
            // weight at a disallowed column is exactly zero with no
            // dependence on any input.
            let mut dw = vec![0.0; lk];
            for j in 0..lk {
                if mask[(i, j)] {
                    let mut acc = 0.0;
                    for c in 0..dh {
                        let col = h * dh + c;
                        acc += d_ctx[(i, col)] * cache.v[(j, col)];
                        dv[(j, col)] += wmat[(i, j)] * d_ctx[(i, col)];
                    }
                    dw[j] = acc;
                }
            }
            let dot: f64 = (0..lk)
                .filter(|j| mask[(i, *j)])
                .map(|j| wmat[(i, j)] * dw[j])
                .sum();
            for j in 0..lk {
                if mask[(i, j)] {
                    let ds = wmat[(i, j)] * (dw[j] - dot) * scale;
                    for c in 0..dh {
                        let col = h * dh + c;
                        dq[(i, col)] += ds * cache.k[(j, col)];
                        dk[(j, col)] += ds * cache.q[(i, col)];
                    }
                }
            }
        }
    }

    AttnGrads {
        wq: cache.xq.t().dot(&dq),
        bq: colsum(&dq),
        wk: cache.xkv.t().dot(&dk),
        bk: colsum(&dk),
        wv: cache.xkv.t().dot(&dv),
        bv: colsum(&dv),
        wo: wo_grad,
        bo: bo_grad,
        xq: dq.dot(&w.wq.t()),
        xkv: dk.dot(&w.wk.t()) + dv.dot(&w.wv.t()),
    }
}
