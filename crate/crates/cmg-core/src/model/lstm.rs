//! LSTM over the decoder outputs.
//!
//! The scan runs from the last position toward the first, so the hidden
//! state at position i depends only on positions i..L-1. Forecasting reads
//! position L-1, whose state therefore depends on that position alone;
//! combined with the future-only cross-attention this keeps every
//! position's prediction free of earlier-event information.

use ndarray::{Array1, Array2};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct LstmStep {
    pub pos: usize,
    pub i: Array1<f64>,
    pub f: Array1<f64>,
    pub g: Array1<f64>,
    pub o: Array1<f64>,
    pub c: Array1<f64>,
    pub tanh_c: Array1<f64>,
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
}

pub struct LstmCache {
    pub xs: Array2<f64>,
    /// Steps in processing order (descending position).
    pub steps: Vec<LstmStep>,
}

/// Gate blocks in the weight matrices are ordered input, forget, cell,
/// output. Returns per-position hidden states (row i = state at position i).
pub fn lstm_forward(
    wx: &Array2<f64>,
    wh: &Array2<f64>,
    b: &Array2<f64>,
    xs: &Array2<f64>,
) -> (Array2<f64>, LstmCache) {
    let l = xs.nrows();
    let u = wh.nrows();
    let mut h = Array1::zeros(u);
    let mut c = Array1::zeros(u);
    let mut h_out = Array2::zeros((l, u));
    let mut steps = Vec::with_capacity(l);
    for pos in (0..l).rev() {
        let x = xs.row(pos);
        let mut z = Array1::zeros(4 * u);
        for j in 0..4 * u {
            let mut acc = b[(0, j)];
            for k in 0..xs.ncols() {
                acc += x[k] * wx[(k, j)];
            }
            for k in 0..u {
                acc += h[k] * wh[(k, j)];
            }
            z[j] = acc;
        }
        let i_g = Array1::from_shape_fn(u, |k| sigmoid(z[k]));
        let f_g = Array1::from_shape_fn(u, |k| sigmoid(z[u + k]));
        let g_g = Array1::from_shape_fn(u, |k| z[2 * u + k].tanh());
        let o_g = Array1::from_shape_fn(u, |k| sigmoid(z[3 * u + k]));
        let c_new = Array1::from_shape_fn(u, |k| f_g[k] * c[k] + i_g[k] * g_g[k]);
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = Array1::from_shape_fn(u, |k| o_g[k] * tanh_c[k]);
        for k in 0..u {
            h_out[(pos, k)] = h_new[k];
        }
        steps.push(LstmStep {
            pos,
            i: i_g,
            f: f_g,
            g: g_g,
            o: o_g,
            c: c_new.clone(),
            tanh_c,
            h_prev: h,
            c_prev: c,
        });
        h = h_new;
        c = c_new;
    }
    (h_out, LstmCache { xs: xs.clone(), steps })
}

/// Returns (dxs, dwx, dwh, db) for upstream gradients on every position's
/// hidden state.
pub fn lstm_backward(
    wx: &Array2<f64>,
    wh: &Array2<f64>,
    cache: &LstmCache,
    dh_out: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
    let u = wh.nrows();
    let d = cache.xs.ncols();
    let l = cache.xs.nrows();
    let mut dxs = Array2::zeros((l, d));
    let mut dwx = Array2::zeros((d, 4 * u));
    let mut dwh = Array2::zeros((u, 4 * u));
    let mut db = Array2::zeros((1, 4 * u));
    let mut dh_carry = Array1::zeros(u);
    let mut dc_carry = Array1::<f64>::zeros(u);
    for step in cache.steps.iter().rev() {
        let pos = step.pos;
        let mut dh = dh_carry.clone();
        for k in 0..u {
            dh[k] += dh_out[(pos, k)];
        }
        let mut dz = Array1::zeros(4 * u);
        let mut dc = dc_carry.clone();
        for k in 0..u {
            let doo = dh[k] * step.tanh_c[k];
            dz[3 * u + k] = doo * step.o[k] * (1.0 - step.o[k]);
            dc[k] += dh[k] * step.o[k] * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
            let di = dc[k] * step.g[k];
            dz[k] = di * step.i[k] * (1.0 - step.i[k]);
            let df = dc[k] * step.c_prev[k];
            dz[u + k] = df * step.f[k] * (1.0 - step.f[k]);
            let dg = dc[k] * step.i[k];
            dz[2 * u + k] = dg * (1.0 - step.g[k] * step.g[k]);
        }
        for j in 0..4 * u {
            db[(0, j)] += dz[j];
            for k in 0..d {
                dwx[(k, j)] += cache.xs[(pos, k)] * dz[j];
            }
            for k in 0..u {
                dwh[(k, j)] += step.h_prev[k] * dz[j];
            }
        }
        for k in 0..d {
            let mut acc = 0.0;
            for j in 0..4 * u {
                acc += dz[j] * wx[(k, j)];
            }
            dxs[(pos, k)] = acc;
        }
        for k in 0..u {
            let mut acc = 0.0;
            for j in 0..4 * u {
                acc += dz[j] * wh[(k, j)];
            }
            dh_carry[k] = acc;
            dc_carry[k] = dc[k] * step.f[k];
        }
    }
    (dxs, dwx, dwh, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn rand_matrix(rng: &mut ChaCha20Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-0.8..0.8))
    }

    #[test]
    fn state_at_a_position_ignores_earlier_positions() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (d, u, l) = (5, 4, 6);
        let wx = rand_matrix(&mut rng, d, 4 * u);
        let wh = rand_matrix(&mut rng, u, 4 * u);
        let b = rand_matrix(&mut rng, 1, 4 * u);
        let xs = rand_matrix(&mut rng, l, d);
        let (h, _) = lstm_forward(&wx, &wh, &b, &xs);
        for cut in 1..l {
            let mut perturbed = xs.clone();
            for p in 0..cut {
                for k in 0..d {
                    perturbed[(p, k)] = -99.0;
                }
            }
            let (h2, _) = lstm_forward(&wx, &wh, &b, &perturbed);
            for p in cut..l {
                for k in 0..u {
                    assert_eq!(h[(p, k)].to_bits(), h2[(p, k)].to_bits(), "pos {p}");
                }
            }
            assert!((0..u).any(|k| h[(cut - 1, k)] != h2[(cut - 1, k)]));
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (d, u, l) = (4, 3, 5);
        let mut wx = rand_matrix(&mut rng, d, 4 * u);
        let wh = rand_matrix(&mut rng, u, 4 * u);
        let b = rand_matrix(&mut rng, 1, 4 * u);
        let mut xs = rand_matrix(&mut rng, l, d);
        let dh_out = rand_matrix(&mut rng, l, u);
        let loss = |wx: &Array2<f64>, xs: &Array2<f64>| {
            let (h, _) = lstm_forward(wx, &wh, &b, xs);
            (&h * &dh_out).sum()
        };
        let (_, cache) = lstm_forward(&wx, &wh, &b, &xs);
        let (dxs, dwx, dwh, db) = lstm_backward(&wx, &wh, &cache, &dh_out);
        let eps = 1e-6;
        for i in 0..d {
            for j in 0..4 * u {
                wx[(i, j)] += eps;
                let hi = loss(&wx, &xs);
                wx[(i, j)] -= 2.0 * eps;
                let lo = loss(&wx, &xs);
                wx[(i, j)] += eps;
                let fd = (hi - lo) / (2.0 * eps);
                assert!((fd - dwx[(i, j)]).abs() < 1e-7, "dwx ({i},{j})");
            }
        }
        for i in 0..l {
            for j in 0..d {
                xs[(i, j)] += eps;
                let hi = loss(&wx, &xs);
                xs[(i, j)] -= 2.0 * eps;
                let lo = loss(&wx, &xs);
                xs[(i, j)] += eps;
                let fd = (hi - lo) / (2.0 * eps);
                assert!((fd - dxs[(i, j)]).abs() < 1e-7, "dxs ({i},{j})");
            }
        }
        assert_eq!(dwh.dim(), (u, 4 * u));
        assert_eq!(db.dim(), (1, 4 * u));
    }

    #[test]
    fn forget_dominated_cell_accumulates_along_the_scan() {
        // Saturated forget gate plus a constant cell candidate: the cell
        // grows by i*g = 0.5*tanh(1) per processed position, ending at
        // position 0 with four increments.
        let (d, u, l) = (1, 1, 4);
        let wx = Array2::zeros((d, 4 * u));
        let wh = Array2::zeros((u, 4 * u));
        let mut b = Array2::zeros((1, 4 * u));
        b[(0, 1)] = 50.0;
        b[(0, 2)] = 1.0;
        let xs = Array2::zeros((l, d));
        let (_, cache) = lstm_forward(&wx, &wh, &b, &xs);
        let first = &cache.steps[0];
        let last = &cache.steps[l - 1];
        assert_eq!(first.pos, l - 1);
        assert_eq!(last.pos, 0);
        let inc = 0.5 * 1f64.tanh();
        assert!((first.c[0] - inc).abs() < 1e-9);
        assert!((last.c[0] - 4.0 * inc).abs() < 1e-6, "c = {}", last.c[0]);
    }
}
