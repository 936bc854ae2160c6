//! Delay-coordinate embedding.

use ndarray::Array2;

use crate::error::{CmgError, Result};

/// Takens-style delay embedding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingSpec {
    pub m: usize,
    pub tau: usize,
}

impl EmbeddingSpec {
    pub fn new(m: usize, tau: usize) -> Result<Self> {
        if m < 1 || tau < 1 {
            return Err(CmgError::invalid("embedding requires m >= 1 and tau >= 1"));
        }
        Ok(EmbeddingSpec { m, tau })
    }

    /// Number of embedded points for a series of length `n`.
    pub fn point_count(&self, n: usize) -> Option<usize> {
        n.checked_sub((self.m - 1) * self.tau)
    }

    /// Default embedding: m = 3, delay at the first autocorrelation drop
    /// below 1/e (falling back to 1).
    pub fn auto(x: &[f64]) -> Self {
        EmbeddingSpec { m: 3, tau: autocorr_delay(x) }
    }
}

/// First lag at which the autocorrelation falls below 1/e; 1 when no lag
/// qualifies or the series is degenerate.
pub fn autocorr_delay(x: &[f64]) -> usize {
    let n = x.len();
    if n < 4 {
        return 1;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom <= 0.0 {
        return 1;
    }
    let threshold = (-1.0f64).exp();
    for lag in 1..n / 4 {
        let num: f64 = (0..n - lag)
            .map(|i| (x[i] - mean) * (x[i + lag] - mean))
            .sum();
        if num / denom < threshold {
            return lag;
        }
    }
    1
}

/// Embeds the series: point `i` = `(x[i], x[i+tau], ..., x[i+(m-1)tau])`.
/// Requires at least 10 embedded points.
pub fn delay_embed(x: &[f64], spec: &EmbeddingSpec) -> Result<Array2<f64>> {
    let count = spec
        .point_count(x.len())
        .filter(|c| *c >= 10)
        .ok_or_else(|| CmgError::invalid("series too short for embedding (need >= 10 points)"))?;
    let mut points = Array2::zeros((count, spec.m));
    for i in 0..count {
        for j in 0..spec.m {
            points[(i, j)] = x[i + j * spec.tau];
        }
    }
    Ok(points)
}
