//! Detrended fluctuation analysis.

use crate::error::{CmgError, Result};

/// Log-spaced window sizes between 4 and n/4 (deduplicated after rounding).
pub fn default_scales(n: usize, count: usize) -> Result<Vec<usize>> {
    let max = n / 4;
    if max < 4 || count < 4 {
        return Err(CmgError::invalid("series too short for fluctuation analysis"));
    }
    let lo = 4.0f64.ln();
    let hi = (max as f64).ln();
    let mut scales: Vec<usize> = (0..count)
        .map(|k| (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    scales.dedup();
    if scales.len() < 4 {
        return Err(CmgError::invalid("fewer than 4 distinct scales"));
    }
    Ok(scales)
}

/// Fluctuation F(s) for one window size: RMS residual of per-window
/// least-squares lines fitted to the integrated, mean-centered profile.
fn fluctuation(profile: &[f64], s: usize) -> f64 {
    let n_win = profile.len() / s;
    let mut total = 0.0;
    for w in 0..n_win {
        let seg = &profile[w * s..(w + 1) * s];
        let sf = s as f64;
        let mt = (sf - 1.0) / 2.0;
        let my = seg.iter().sum::<f64>() / sf;
        let mut stt = 0.0;
        let mut sty = 0.0;
        for (t, y) in seg.iter().enumerate() {
            let dt = t as f64 - mt;
            stt += dt * dt;
            sty += dt * (y - my);
        }
        let b = sty / stt;
        for (t, y) in seg.iter().enumerate() {
            let resid = y - my - b * (t as f64 - mt);
            total += resid * resid;
        }
    }
    (total / (n_win * s) as f64).sqrt()
}

/// Scaling exponent alpha: slope of ln F(s) against ln s.
///
/// Requires at least 4 scales, each between 4 and n/4 and strictly
/// increasing.
pub fn dfa(x: &[f64], scales: &[usize]) -> Result<f64> {
    let n = x.len();
    if scales.len() < 4 {
        return Err(CmgError::invalid("need at least 4 scales"));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CmgError::invalid("scales must be strictly increasing"));
    }
    if scales[0] < 4 || scales[scales.len() - 1] > n / 4 {
        return Err(CmgError::invalid("scales must lie in [4, n/4]"));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    let profile: Vec<f64> = x
        .iter()
        .map(|v| {
            acc += v - mean;
            acc
        })
        .collect();
    let mut ln_s = Vec::with_capacity(scales.len());
    let mut ln_f = Vec::with_capacity(scales.len());
    for &s in scales {
        let f = fluctuation(&profile, s);
        if !(f.is_finite() && f > 0.0) {
            return Err(CmgError::degenerate("zero fluctuation (flat profile)"));
        }
        ln_s.push((s as f64).ln());
        ln_f.push(f.ln());
    }
    super::lyapunov::slope(&ln_s, &ln_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_scales_near_one_half() {
        let x = gaussian(17, 4096);
        let alpha = dfa(&x, &default_scales(x.len(), 12).unwrap()).unwrap();
        assert!((0.4..=0.6).contains(&alpha), "alpha = {alpha}");
    }

    #[test]
    fn random_walk_scales_near_three_halves() {
        let steps = gaussian(23, 4096);
        let mut acc = 0.0;
        let walk: Vec<f64> = steps
            .iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect();
        let alpha = dfa(&walk, &default_scales(walk.len(), 12).unwrap()).unwrap();
        assert!((1.35..=1.65).contains(&alpha), "alpha = {alpha}");
    }

    #[test]
    fn scale_validation() {
        let x = gaussian(1, 256);
        assert!(dfa(&x, &[4, 8, 16]).is_err());
        assert!(dfa(&x, &[4, 8, 8, 16]).is_err());
        assert!(dfa(&x, &[3, 8, 16, 32]).is_err());
        assert!(dfa(&x, &[4, 8, 16, 128]).is_err());
        assert!(dfa(&x, &[4, 8, 16, 32]).is_ok());
    }

    #[test]
    fn constant_series_has_flat_profile() {
        let err = dfa(&[5.0; 256], &[4, 8, 16, 32]).unwrap_err();
        assert!(err.to_string().contains("flat"), "{err}");
    }

    #[test]
    fn default_scales_are_bounded_and_increasing() {
        let scales = default_scales(4096, 12).unwrap();
        assert!(scales.len() >= 4);
        assert_eq!(scales[0], 4);
        assert!(*scales.last().unwrap() <= 1024);
        assert!(scales.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn scale_and_shift_leave_alpha_unchanged() {
        let x = gaussian(31, 2048);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 7.0).collect();
        let scales = default_scales(x.len(), 12).unwrap();
        let a = dfa(&x, &scales).unwrap();
        let b = dfa(&y, &scales).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}
