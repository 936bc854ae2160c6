//! Spectral (power-spectrum) entropy in nats.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{CmgError, Result};

/// Euler-Mascheroni constant, used for the periodogram bias correction.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Shannon entropy of a power distribution after normalization. Zero bins
/// contribute nothing.
pub fn entropy_of_psd(psd: &[f64]) -> Result<f64> {
    if psd.is_empty() || psd.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(CmgError::invalid("power values must be finite and non-negative"));
    }
    let total: f64 = psd.iter().sum();
    if total <= 0.0 {
        return Err(CmgError::degenerate("zero total power"));
    }
    Ok(psd
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum())
}

/// Periodogram over positive frequencies: bins 1..=floor(n/2), excluding DC
/// and including Nyquist for even n.
pub fn periodogram(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 16 {
        return Err(CmgError::invalid("need at least 16 samples"));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let sigma = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
    if !(sigma.is_finite() && sigma > 1e-12) {
        return Err(CmgError::degenerate("degenerate series"));
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf[1..=n / 2].iter().map(|c| c.norm_sqr()).collect())
}

/// Spectral entropy of a series.
///
/// The raw periodogram entropy underestimates the true value for broadband
/// signals: each bin is exponentially distributed, and E[p ln p] picks up a
/// 1 - gamma deficit. The estimate adds that correction back and clamps at
/// the ln K ceiling, so a flat spectrum stays exactly at the maximum.
pub fn spectral_entropy(x: &[f64]) -> Result<f64> {
    let psd = periodogram(x)?;
    let h_max = (psd.len() as f64).ln();
    let h = entropy_of_psd(&psd)? + (1.0 - EULER_GAMMA);
    Ok(h.min(h_max))
}
