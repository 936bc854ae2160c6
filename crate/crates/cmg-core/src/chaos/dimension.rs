//! Grassberger-Procaccia correlation dimension.

use crate::error::{CmgError, Result};

use super::embed::{delay_embed, EmbeddingSpec};

/// Log-spaced candidate radii from 0.5% to 50% of the series range.
pub fn default_radii(x: &[f64], count: usize) -> Result<Vec<f64>> {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range.is_finite() && range > 0.0) {
        return Err(CmgError::degenerate("degenerate series"));
    }
    if count < 4 {
        return Err(CmgError::invalid("need at least 4 radii"));
    }
    let r_min = 0.005 * range;
    let ratio = 100.0f64;
    Ok((0..count)
        .map(|k| r_min * ratio.powf(k as f64 / (count - 1) as f64))
        .collect())
}

/// Correlation sums C(r) for each radius, with pairs closer than `theiler`
/// in time excluded. Radii must be strictly increasing and positive.
pub fn correlation_sums(
    x: &[f64],
    spec: &EmbeddingSpec,
    theiler: usize,
    radii: &[f64],
) -> Result<Vec<f64>> {
    if radii.len() < 4 || radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
        return Err(CmgError::invalid("radii must be >= 4 strictly increasing positives"));
    }
    let points = delay_embed(x, spec)?;
    let n = points.nrows();
    if n < 500 {
        return Err(CmgError::invalid("need at least 500 embedded points"));
    }

    // Each pair lands in the bin of the smallest radius covering it; the
    // running prefix sum then yields C(r) for every radius at once.
    let mut hist = vec![0u64; radii.len() + 1];
    let mut pairs = 0u64;
    let mut any_positive = false;
    let data = points.as_slice().unwrap();
    let m = spec.m;
    for i in 0..n {
        let pi = &data[i * m..(i + 1) * m];
        for j in (i + theiler + 1)..n {
            let pj = &data[j * m..(j + 1) * m];
            let d = pi
                .iter()
                .zip(pj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > 0.0 {
                any_positive = true;
            }
            let idx = radii.partition_point(|r| *r < d);
            hist[idx] += 1;
            pairs += 1;
        }
    }
    if pairs == 0 || !any_positive {
        return Err(CmgError::degenerate("all pairwise distances are zero"));
    }
    let mut acc = 0u64;
    let mut sums = Vec::with_capacity(radii.len());
    for h in &hist[..radii.len()] {
        acc += h;
        sums.push(acc as f64 / pairs as f64);
    }
    Ok(sums)
}

/// Correlation dimension: the slope of ln C(r) vs ln r over the scaling
/// region (middle third of the radius grid), using only radii with
/// 0 < C(r) < 1.
pub fn correlation_dimension(
    x: &[f64],
    spec: &EmbeddingSpec,
    theiler: usize,
    radii: &[f64],
) -> Result<f64> {
    let sums = correlation_sums(x, spec, theiler, radii)?;
    let lo = radii.len() / 3;
    let hi = (2 * radii.len()).div_ceil(3);
    let mut ln_r = Vec::new();
    let mut ln_c = Vec::new();
    for k in lo..hi {
        if sums[k] > 0.0 && sums[k] < 1.0 {
            ln_r.push(radii[k].ln());
            ln_c.push(sums[k].ln());
        }
    }
    if ln_r.len() < 3 {
        return Err(CmgError::numerical(
            "fewer than 3 radii with 0 < C(r) < 1 in the scaling region",
        ));
    }
    super::lyapunov::slope(&ln_r, &ln_c)
}
