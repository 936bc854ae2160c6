//! Approximate and sample entropy.

use crate::error::{CmgError, Result};

fn tolerance(x: &[f64], r_frac: f64) -> Result<f64> {
    if !(r_frac.is_finite() && r_frac > 0.0) {
        return Err(CmgError::invalid("tolerance fraction must be positive"));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sigma = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if !(sigma.is_finite() && sigma > 1e-12) {
        return Err(CmgError::degenerate("degenerate series"));
    }
    Ok(r_frac * sigma)
}

fn chebyshev(x: &[f64], i: usize, j: usize, m: usize) -> f64 {
    (0..m)
        .map(|k| (x[i + k] - x[j + k]).abs())
        .fold(0.0, f64::max)
}

/// Approximate entropy (Pincus). Template self-matches are counted, the
/// tolerance is `r_frac` times the population standard deviation.
pub fn approx_entropy(x: &[f64], m: usize, r_frac: f64) -> Result<f64> {
    if m < 1 {
        return Err(CmgError::invalid("m must be >= 1"));
    }
    if x.len() < m + 2 {
        return Err(CmgError::invalid("series too short for the template length"));
    }
    let r = tolerance(x, r_frac)?;
    let phi = |len: usize| -> f64 {
        let count = x.len() - len + 1;
        let mut total = 0.0;
        for i in 0..count {
            let mut hits = 0usize;
            for j in 0..count {
                if chebyshev(x, i, j, len) <= r {
                    hits += 1;
                }
            }
            total += (hits as f64 / count as f64).ln();
        }
        total / count as f64
    };
    Ok(phi(m) - phi(m + 1))
}

/// Sample entropy (Richman-Moorman). Self-matches are excluded, both
/// template lengths run over the same index set, and the result is
/// -ln(A/B) for the matched pair counts at lengths m+1 and m.
pub fn sample_entropy(x: &[f64], m: usize, r_frac: f64) -> Result<f64> {
    if m < 1 {
        return Err(CmgError::invalid("m must be >= 1"));
    }
    if x.len() < m + 2 {
        return Err(CmgError::invalid("series too short for the template length"));
    }
    let r = tolerance(x, r_frac)?;
    let count = x.len() - m;
    let mut a = 0u64;
    let mut b = 0u64;
    for i in 0..count {
        for j in (i + 1)..count {
            if chebyshev(x, i, j, m) <= r {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return Err(CmgError::degenerate("undefined - no matches"));
    }
    Ok(-((a as f64 / b as f64).ln()))
}
