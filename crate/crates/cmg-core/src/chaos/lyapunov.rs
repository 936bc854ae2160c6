//! Largest Lyapunov exponent, Rosenstein nearest-neighbor method.

use ndarray::ArrayView1;

use crate::error::{CmgError, Result};

use super::embed::{delay_embed, EmbeddingSpec};

fn euclid(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return Err(CmgError::numerical("slope needs >= 2 points"));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(CmgError::numerical("zero variance in slope abscissa"));
    }
    let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Largest Lyapunov exponent in nats per step.
///
/// For every embedded point the nearest neighbor outside a Theiler window is
/// tracked forward, mean log separation is recorded per step, and the exponent
/// is the least-squares slope over `fit` (inclusive step range). Pairs at zero
/// distance are skipped.
pub fn lyapunov_rosenstein(
    x: &[f64],
    spec: &EmbeddingSpec,
    theiler: usize,
    fit: (usize, usize),
) -> Result<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !var.is_finite() || var.sqrt() <= 1e-12 {
        return Err(CmgError::degenerate("degenerate series"));
    }
    let (k_lo, k_hi) = fit;
    if k_lo < 1 || k_hi < k_lo {
        return Err(CmgError::invalid("fit range must satisfy 1 <= lo <= hi"));
    }

    let points = delay_embed(x, spec)?;
    let m_total = points.nrows();
    let usable = m_total
        .checked_sub(k_hi)
        .filter(|u| *u > theiler + 1)
        .ok_or_else(|| CmgError::invalid("series too short for the requested fit range"))?;

    // Mean of ln d_i(k) over tracked pairs, one entry per step in the fit range.
    let mut log_sum = vec![0.0f64; k_hi - k_lo + 1];
    let mut pairs = 0usize;
    for i in 0..usable {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in 0..usable {
            if i.abs_diff(j) <= theiler {
                continue;
            }
            let d = euclid(points.row(i), points.row(j));
            if d > 0.0 && d < best {
                best = d;
                best_j = j;
            }
        }
        if best_j == usize::MAX {
            continue;
        }
        let mut ok = true;
        let mut logs = Vec::with_capacity(log_sum.len());
        for k in k_lo..=k_hi {
            let d = euclid(points.row(i + k), points.row(best_j + k));
            if d <= 0.0 {
                ok = false;
                break;
            }
            logs.push(d.ln());
        }
        if ok {
            for (acc, v) in log_sum.iter_mut().zip(logs) {
                *acc += v;
            }
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(CmgError::degenerate("no valid neighbor pairs"));
    }

    let ks: Vec<f64> = (k_lo..=k_hi).map(|k| k as f64).collect();
    let ys: Vec<f64> = log_sum.iter().map(|s| s / pairs as f64).collect();
    slope(&ks, &ys)
}
