//! Technical-indicator calculations (pure functions, no IO).
//!
//! Key invariant: every indicator is causal. The value at index `t` depends
//! only on bars `0..=t`, so appending bars never changes earlier values.
//! Warm-up entries are `None` (never zeros); [`compute_features`] stores them
//! as NaN below `valid_from`, and downstream stages only read rows at or
//! after `valid_from`.

use ndarray::{Array2, ArrayView1};

use crate::error::{CmgError, Result};
use crate::ohlc::OhlcSeries;

/// Column order of [`compute_features`].
pub const FEATURE_NAMES: [&str; 19] = [
    "open", "high", "low", "close", "sma10", "ema10", "macd", "macd_signal", "macd_hist",
    "rsi14", "atr14", "boll_mid", "boll_up", "boll_lo", "stoch_k", "stoch_d", "mom10", "psar",
    "psar_dir",
];

/// Per-bar feature vectors aligned to candle indices.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    /// N x F; entries in rows before `valid_from` may be NaN (warm-up).
    pub values: Array2<f64>,
    /// First row at which every column is defined.
    pub valid_from: usize,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, name: &str) -> Option<ArrayView1<'_, f64>> {
        let idx = self.names.iter().position(|n| n == name)?;
        Some(self.values.column(idx))
    }
}

/// Simple moving average; defined from index `w-1`.
pub fn sma(x: &[f64], w: usize) -> Result<Vec<Option<f64>>> {
    if w < 1 {
        return Err(CmgError::invalid("sma window must be >= 1"));
    }
    if x.len() < w {
        return Err(CmgError::invalid("sma window exceeds series length"));
    }
    let mut out = vec![None; x.len()];
    let mut sum: f64 = x[..w].iter().sum();
    out[w - 1] = Some(sum / w as f64);
    for i in w..x.len() {
        sum += x[i] - x[i - w];
        out[i] = Some(sum / w as f64);
    }
    Ok(out)
}

/// Exponential moving average seeded with the first value: `e[0] = x[0]`,
/// `e[i] = a*x[i] + (1-a)*e[i-1]` with `a = 2/(p+1)`. Defined everywhere.
pub fn ema(x: &[f64], p: usize) -> Result<Vec<f64>> {
    if p < 1 {
        return Err(CmgError::invalid("ema period must be >= 1"));
    }
    if x.is_empty() {
        return Err(CmgError::invalid("ema input is empty"));
    }
    let alpha = 2.0 / (p as f64 + 1.0);
    let mut out = Vec::with_capacity(x.len());
    let mut e = x[0];
    out.push(e);
    for &v in &x[1..] {
        e = alpha * v + (1.0 - alpha) * e;
        out.push(e);
    }
    Ok(out)
}

/// MACD family. The macd line (fast EMA minus slow EMA) is reported from
/// index `slow-1`; the signal EMA is seeded there and reported `signal` bars
/// later, so for the 12/26/9 defaults the signal and histogram start at 34.
pub fn macd(
    close: &[f64],
    fast: usize,
    slow: usize,
    signal: usize,
) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>)> {
    if fast >= slow {
        return Err(CmgError::invalid("macd fast period must be < slow period"));
    }
    if signal < 1 {
        return Err(CmgError::invalid("macd signal period must be >= 1"));
    }
    let n = close.len();
    let ef = ema(close, fast)?;
    let es = ema(close, slow)?;
    let macd_from = slow - 1;
    let signal_from = macd_from + signal;

    let mut macd_line = vec![None; n];
    let mut signal_line = vec![None; n];
    let mut histogram = vec![None; n];
    if n <= macd_from {
        return Ok((macd_line, signal_line, histogram));
    }

    let alpha = 2.0 / (signal as f64 + 1.0);
    let mut sig = ef[macd_from] - es[macd_from];
    for i in macd_from..n {
        let m = ef[i] - es[i];
        macd_line[i] = Some(m);
        if i > macd_from {
            sig = alpha * m + (1.0 - alpha) * sig;
        }
        if i >= signal_from {
            signal_line[i] = Some(sig);
            histogram[i] = Some(m - sig);
        }
    }
    Ok((macd_line, signal_line, histogram))
}

/// Wilder RSI; defined from index `p`. The first value uses simple means of
/// the first `p` gains/losses, later values Wilder smoothing. All-flat
/// windows report the 50 midpoint.
pub fn rsi(close: &[f64], p: usize) -> Result<Vec<Option<f64>>> {
    if p < 1 {
        return Err(CmgError::invalid("rsi period must be >= 1"));
    }
    if close.len() < p + 1 {
        return Err(CmgError::invalid("rsi needs at least p+1 bars"));
    }
    let n = close.len();
    let mut out = vec![None; n];
    let mut avg_gain = 0.0;
    let mut avg_loss = 0.0;
    for i in 1..=p {
        let d = close[i] - close[i - 1];
        avg_gain += d.max(0.0);
        avg_loss += (-d).max(0.0);
    }
    avg_gain /= p as f64;
    avg_loss /= p as f64;
    out[p] = Some(rsi_value(avg_gain, avg_loss));
    for i in p + 1..n {
        let d = close[i] - close[i - 1];
        avg_gain = (avg_gain * (p as f64 - 1.0) + d.max(0.0)) / p as f64;
        avg_loss = (avg_loss * (p as f64 - 1.0) + (-d).max(0.0)) / p as f64;
        out[i] = Some(rsi_value(avg_gain, avg_loss));
    }
    Ok(out)
}

fn rsi_value(avg_gain: f64, avg_loss: f64) -> f64 {
    if avg_gain == 0.0 && avg_loss == 0.0 {
        50.0
    } else if avg_loss == 0.0 {
        100.0
    } else {
        100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    }
}

/// Wilder average true range; defined from index `p`.
pub fn atr(series: &OhlcSeries, p: usize) -> Result<Vec<Option<f64>>> {
    if p < 1 {
        return Err(CmgError::invalid("atr period must be >= 1"));
    }
    let c = &series.candles;
    if c.len() < p + 1 {
        return Err(CmgError::invalid("atr needs at least p+1 bars (prior close required)"));
    }
    let tr = |i: usize| -> f64 {
        let prev = c[i - 1].close;
        (c[i].high - c[i].low)
            .max((c[i].high - prev).abs())
            .max((c[i].low - prev).abs())
    };
    let mut out = vec![None; c.len()];
    let mut a: f64 = (1..=p).map(tr).sum::<f64>() / p as f64;
    out[p] = Some(a);
    for i in p + 1..c.len() {
        a = (a * (p as f64 - 1.0) + tr(i)) / p as f64;
        out[i] = Some(a);
    }
    Ok(out)
}

/// Bollinger bands around an SMA middle line, using the population standard
/// deviation of each window. Defined from index `w-1`.
pub fn bollinger(
    close: &[f64],
    w: usize,
    k: f64,
) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>)> {
    if w < 2 {
        return Err(CmgError::invalid("bollinger window must be >= 2"));
    }
    if close.len() < w {
        return Err(CmgError::invalid("bollinger window exceeds series length"));
    }
    if !(k >= 0.0) {
        return Err(CmgError::invalid("bollinger k must be >= 0"));
    }
    let n = close.len();
    let mut mid = vec![None; n];
    let mut up = vec![None; n];
    let mut lo = vec![None; n];
    for i in w - 1..n {
        let win = &close[i + 1 - w..=i];
        let m = win.iter().sum::<f64>() / w as f64;
        let var = win.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / w as f64;
        let sd = var.sqrt();
        mid[i] = Some(m);
        up[i] = Some(m + k * sd);
        lo[i] = Some(m - k * sd);
    }
    Ok((mid, up, lo))
}

/// Stochastic oscillator. Raw %K is smoothed by an SMA of `k_s`; %D is an SMA
/// of `d_s` over %K. Flat windows (high == low) report 50.
pub fn stochastic(
    series: &OhlcSeries,
    k_p: usize,
    k_s: usize,
    d_s: usize,
) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    if k_p < 1 || k_s < 1 || d_s < 1 {
        return Err(CmgError::invalid("stochastic periods must be >= 1"));
    }
    let c = &series.candles;
    if c.len() < k_p {
        return Err(CmgError::invalid("stochastic needs at least k_p bars"));
    }
    let n = c.len();
    let raw_from = k_p - 1;
    let mut raw = Vec::with_capacity(n - raw_from);
    for i in raw_from..n {
        let win = &c[i + 1 - k_p..=i];
        let hh = win.iter().map(|b| b.high).fold(f64::MIN, f64::max);
        let ll = win.iter().map(|b| b.low).fold(f64::MAX, f64::min);
        let v = if hh == ll {
            50.0
        } else {
            100.0 * (c[i].close - ll) / (hh - ll)
        };
        raw.push(v);
    }
    // Clamp against float drift in the rolling sums; the oscillator is
    // bounded by construction.
    let clamp = |v: Vec<Option<f64>>| -> Vec<Option<f64>> {
        v.into_iter().map(|o| o.map(|x| x.clamp(0.0, 100.0))).collect()
    };
    let k_line = clamp(offset_sma(&raw, k_s, raw_from, n));
    let k_dense: Vec<f64> = k_line.iter().flatten().cloned().collect();
    let d_line = clamp(offset_sma(&k_dense, d_s, raw_from + k_s - 1, n));
    Ok((k_line, d_line))
}

/// SMA over a dense tail that starts at `offset` within a length-`n` series.
fn offset_sma(dense: &[f64], w: usize, offset: usize, n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; n];
    if dense.len() >= w {
        for (j, v) in sma(dense, w).expect("length checked").into_iter().enumerate() {
            out[offset + j] = v;
        }
    }
    out
}

/// Price change over `p` bars; defined from index `p`.
pub fn momentum(close: &[f64], p: usize) -> Result<Vec<Option<f64>>> {
    if p < 1 {
        return Err(CmgError::invalid("momentum period must be >= 1"));
    }
    if close.len() < p + 1 {
        return Err(CmgError::invalid("momentum needs at least p+1 bars"));
    }
    let mut out = vec![None; close.len()];
    for i in p..close.len() {
        out[i] = Some(close[i] - close[i - p]);
    }
    Ok(out)
}

/// Parabolic SAR (Wilder recursion). Seeding: direction is the sign of
/// `close[1]-close[0]` (ties count as up), the initial SAR is the opposite
/// extreme of bar 0. Defined from index 1. Directions are +-1.
pub fn psar(series: &OhlcSeries, af0: f64, af_max: f64) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    if !(af0 > 0.0) {
        return Err(CmgError::invalid("psar af0 must be > 0"));
    }
    if af_max < af0 {
        return Err(CmgError::invalid("psar af_max must be >= af0"));
    }
    let c = &series.candles;
    if c.len() < 2 {
        return Err(CmgError::invalid("psar needs at least 2 bars"));
    }
    let n = c.len();
    let mut sar_out = vec![None; n];
    let mut dir_out = vec![None; n];

    let mut up = c[1].close >= c[0].close;
    let mut sar = if up { c[0].low } else { c[0].high };
    let mut ep = if up {
        c[0].high.max(c[1].high)
    } else {
        c[0].low.min(c[1].low)
    };
    let mut af = af0;
    sar_out[1] = Some(sar);
    dir_out[1] = Some(if up { 1.0 } else { -1.0 });

    for i in 2..n {
        let mut next = sar + af * (ep - sar);
        if up {
            next = next.min(c[i - 1].low).min(c[i - 2].low);
            if c[i].low < next {
                up = false;
                next = ep;
                ep = c[i].low;
                af = af0;
            } else if c[i].high > ep {
                ep = c[i].high;
                af = (af + af0).min(af_max);
            }
        } else {
            next = next.max(c[i - 1].high).max(c[i - 2].high);
            if c[i].high > next {
                up = true;
                next = ep;
                ep = c[i].high;
                af = af0;
            } else if c[i].low < ep {
                ep = c[i].low;
                af = (af + af0).min(af_max);
            }
        }
        sar = next;
        sar_out[i] = Some(sar);
        dir_out[i] = Some(if up { 1.0 } else { -1.0 });
    }
    Ok((sar_out, dir_out))
}

/// Assembles the 19-column feature matrix in [`FEATURE_NAMES`] order with the
/// default parameterization (sma/ema/mom 10, macd 12/26/9, rsi/atr/stoch 14,
/// bollinger 20/2, psar 0.02/0.2). `valid_from` is the max column warm-up,
/// which is 34 (macd signal line).
pub fn compute_features(series: &OhlcSeries) -> Result<FeatureMatrix> {
    const VALID_FROM: usize = 34;
    let n = series.len();
    if n <= VALID_FROM {
        return Err(CmgError::invalid(format!(
            "series too short for indicator warm-up: {n} bars, need at least {}",
            VALID_FROM + 1
        )));
    }
    let close = series.closes();

    fn set_dense(values: &mut Array2<f64>, col: usize, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            values[(i, col)] = *x;
        }
    }
    fn set_opt(values: &mut Array2<f64>, col: usize, v: Vec<Option<f64>>) {
        for (i, x) in v.into_iter().enumerate() {
            if let Some(x) = x {
                values[(i, col)] = x;
            }
        }
    }

    let mut values = Array2::from_elem((n, FEATURE_NAMES.len()), f64::NAN);
    let opens: Vec<f64> = series.candles.iter().map(|c| c.open).collect();
    let highs: Vec<f64> = series.candles.iter().map(|c| c.high).collect();
    let lows: Vec<f64> = series.candles.iter().map(|c| c.low).collect();
    set_dense(&mut values, 0, &opens);
    set_dense(&mut values, 1, &highs);
    set_dense(&mut values, 2, &lows);
    set_dense(&mut values, 3, &close);

    set_opt(&mut values, 4, sma(&close, 10)?);
    set_dense(&mut values, 5, &ema(&close, 10)?);
    let (m, s, h) = macd(&close, 12, 26, 9)?;
    set_opt(&mut values, 6, m);
    set_opt(&mut values, 7, s);
    set_opt(&mut values, 8, h);
    set_opt(&mut values, 9, rsi(&close, 14)?);
    set_opt(&mut values, 10, atr(series, 14)?);
    let (bm, bu, bl) = bollinger(&close, 20, 2.0)?;
    set_opt(&mut values, 11, bm);
    set_opt(&mut values, 12, bu);
    set_opt(&mut values, 13, bl);
    let (k, d) = stochastic(series, 14, 3, 3)?;
    set_opt(&mut values, 14, k);
    set_opt(&mut values, 15, d);
    set_opt(&mut values, 16, momentum(&close, 10)?);
    let (ps, pd) = psar(series, 0.02, 0.2)?;
    set_opt(&mut values, 17, ps);
    set_opt(&mut values, 18, pd);

    debug_assert!(values
        .rows()
        .into_iter()
        .skip(VALID_FROM)
        .all(|r| r.iter().all(|v| v.is_finite())));

    Ok(FeatureMatrix {
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
        valid_from: VALID_FROM,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ohlc::Candle;
    use approx::assert_relative_eq;

    fn series_from_closes(closes: &[f64]) -> OhlcSeries {
        let candles = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| Candle {
                timestamp: 1_704_153_600 + 60 * i as i64,
                open: c,
                high: c,
                low: c,
                close: c,
            })
            .collect();
        OhlcSeries::new("T", 60, candles).unwrap()
    }

    #[test]
    fn sma_hand_values() {
        assert_eq!(sma(&[1.0, 2.0, 3.0], 3).unwrap(), vec![None, None, Some(2.0)]);
        assert_eq!(
            sma(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(),
            vec![None, Some(1.5), Some(2.5), Some(3.5)]
        );
        assert!(sma(&[1.0], 2).is_err());
    }

    #[test]
    fn sma_constant_is_constant() {
        let out = sma(&[5.0; 30], 7).unwrap();
        for v in out.iter().skip(6) {
            assert_eq!(v.unwrap(), 5.0);
        }
    }

    #[test]
    fn ema_recurrence_by_hand() {
        assert_eq!(ema(&[1.0, 2.0, 3.0], 3).unwrap(), vec![1.0, 1.5, 2.25]);
        assert_eq!(ema(&[0.0, 1.0], 1).unwrap(), vec![0.0, 1.0]);
        assert_eq!(ema(&[4.0; 10], 5).unwrap(), vec![4.0; 10]);
        assert!(ema(&[], 3).is_err());
    }

    #[test]
    fn macd_constant_is_zero() {
        let (m, s, h) = macd(&[10.0; 60], 12, 26, 9).unwrap();
        for i in 0..60 {
            if let Some(v) = m[i] {
                assert_relative_eq!(v, 0.0);
            }
            if let Some(v) = s[i] {
                assert_relative_eq!(v, 0.0);
            }
            if let Some(v) = h[i] {
                assert_relative_eq!(v, 0.0);
            }
        }
        assert!(m[25].is_some() && m[24].is_none());
        assert!(s[34].is_some() && s[33].is_none());
    }

    #[test]
    fn macd_ramp_is_positive_after_warmup() {
        let close: Vec<f64> = (0..120).map(|i| i as f64 + 1.0).collect();
        let (m, s, h) = macd(&close, 12, 26, 9).unwrap();
        for i in 60..120 {
            assert!(m[i].unwrap() > 0.0);
            assert!(s[i].unwrap() > 0.0);
            assert_relative_eq!(h[i].unwrap(), m[i].unwrap() - s[i].unwrap());
        }
    }

    #[test]
    fn macd_rejects_fast_ge_slow() {
        assert!(macd(&[1.0; 40], 26, 26, 9).is_err());
    }

    #[test]
    fn rsi_monotone_series_saturates() {
        let up: Vec<f64> = (0..40).map(|i| 100.0 + i as f64).collect();
        let down: Vec<f64> = (0..40).map(|i| 100.0 - i as f64).collect();
        for v in rsi(&up, 14).unwrap().into_iter().flatten() {
            assert_eq!(v, 100.0);
        }
        for v in rsi(&down, 14).unwrap().into_iter().flatten() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn rsi_alternating_steps_balance_at_seed() {
        // 7 gains and 7 losses of equal size in the seed window.
        let close: Vec<f64> = (0..80)
            .map(|i| if i % 2 == 0 { 100.0 } else { 101.0 })
            .collect();
        let out = rsi(&close, 14).unwrap();
        assert_eq!(out[14].unwrap(), 50.0);
        // The Wilder recursion oscillates around 50 with a decaying transient.
        for v in out.into_iter().flatten() {
            assert!((46.0..=54.0).contains(&v), "rsi drifted to {v}");
        }
    }

    #[test]
    fn rsi_flat_window_uses_midpoint() {
        let out = rsi(&[7.0; 30], 14).unwrap();
        for v in out.into_iter().flatten() {
            assert_eq!(v, 50.0);
        }
        assert!(rsi(&[1.0; 14], 14).is_err());
    }

    #[test]
    fn atr_constant_candles_equal_range() {
        let candles: Vec<Candle> = (0..30)
            .map(|i| Candle {
                timestamp: i as i64,
                open: 100.0,
                high: 101.0,
                low: 99.0,
                close: 100.0,
            })
            .collect();
        let s = OhlcSeries::new("T", 60, candles).unwrap();
        for v in atr(&s, 14).unwrap().into_iter().flatten() {
            assert_relative_eq!(v, 2.0);
        }
    }

    #[test]
    fn atr_gap_up_uses_prior_close() {
        let candles = vec![
            Candle { timestamp: 0, open: 100.0, high: 100.5, low: 99.5, close: 100.0 },
            Candle { timestamp: 60, open: 110.0, high: 110.5, low: 109.5, close: 110.0 },
        ];
        let s = OhlcSeries::new("T", 60, candles).unwrap();
        let out = atr(&s, 1).unwrap();
        // TR = max(1.0, |110.5-100|, |109.5-100|) = 10.5.
        assert_relative_eq!(out[1].unwrap(), 10.5);
        let single = OhlcSeries::new("T", 60, vec![Candle {
            timestamp: 0, open: 1.0, high: 1.0, low: 1.0, close: 1.0,
        }]).unwrap();
        assert!(atr(&single, 1).is_err());
    }

    #[test]
    fn bollinger_hand_values() {
        let (m, u, l) = bollinger(&[1.0, 3.0], 2, 2.0).unwrap();
        assert_eq!(m[1].unwrap(), 2.0);
        assert_eq!(u[1].unwrap(), 4.0);
        assert_eq!(l[1].unwrap(), 0.0);

        let (m, u, l) = bollinger(&[5.0; 25], 20, 2.0).unwrap();
        assert_eq!((m[24].unwrap(), u[24].unwrap(), l[24].unwrap()), (5.0, 5.0, 5.0));

        let (m, u, _) = bollinger(&[1.0, 3.0, 2.0, 4.0], 2, 0.0).unwrap();
        for i in 1..4 {
            assert_eq!(m[i], u[i]);
        }
    }

    #[test]
    fn stochastic_extremes_and_flat() {
        // Close at the window high.
        let candles: Vec<Candle> = (0..20)
            .map(|i| {
                let c = 100.0 + i as f64;
                Candle { timestamp: i as i64, open: c - 0.5, high: c, low: c - 1.0, close: c }
            })
            .collect();
        let s = OhlcSeries::new("T", 60, candles).unwrap();
        let (k, _) = stochastic(&s, 14, 1, 1).unwrap();
        for v in k.into_iter().flatten() {
            assert!(v > 90.0);
        }

        let flat = series_from_closes(&[50.0; 25]);
        let (k, d) = stochastic(&flat, 14, 3, 3).unwrap();
        for v in k.into_iter().flatten() {
            assert_eq!(v, 50.0);
        }
        for v in d.into_iter().flatten() {
            assert_eq!(v, 50.0);
        }
    }

    #[test]
    fn stochastic_close_at_low_is_zero() {
        let candles: Vec<Candle> = (0..20)
            .map(|i| {
                let c = 100.0 - i as f64;
                Candle { timestamp: i as i64, open: c + 0.5, high: c + 1.0, low: c, close: c }
            })
            .collect();
        let s = OhlcSeries::new("T", 60, candles).unwrap();
        let (k, _) = stochastic(&s, 14, 1, 1).unwrap();
        assert_eq!(k[13].unwrap(), 0.0);
    }

    #[test]
    fn momentum_hand_values() {
        let out = momentum(&[1.0, 2.0, 4.0], 1).unwrap();
        assert_eq!(out, vec![None, Some(1.0), Some(2.0)]);
        let ramp: Vec<f64> = (0..30).map(|i| i as f64).collect();
        for v in momentum(&ramp, 10).unwrap().into_iter().flatten() {
            assert_eq!(v, 10.0);
        }
        for v in momentum(&[3.0; 30], 10).unwrap().into_iter().flatten() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn psar_rising_market_stays_long() {
        let candles: Vec<Candle> = (0..40)
            .map(|i| {
                let c = 100.0 + i as f64;
                Candle { timestamp: i as i64, open: c - 0.4, high: c + 0.5, low: c - 0.5, close: c }
            })
            .collect();
        let s = OhlcSeries::new("T", 60, candles).unwrap();
        let (sar, dir) = psar(&s, 0.02, 0.2).unwrap();
        assert!(sar[0].is_none() && sar[1].is_some());
        let mut prev = f64::MIN;
        for i in 1..40 {
            assert_eq!(dir[i].unwrap(), 1.0);
            let v = sar[i].unwrap();
            assert!(v >= prev, "SAR decreased at {i}");
            assert!(v < candles_low(&s, i), "SAR above price at {i}");
            prev = v;
        }
    }

    fn candles_low(s: &OhlcSeries, i: usize) -> f64 {
        s.candles[i].low
    }

    #[test]
    fn psar_two_bar_seeding() {
        let candles = vec![
            Candle { timestamp: 0, open: 10.0, high: 11.0, low: 9.0, close: 10.5 },
            Candle { timestamp: 60, open: 10.5, high: 12.0, low: 10.0, close: 11.5 },
        ];
        let s = OhlcSeries::new("T", 60, candles).unwrap();
        let (sar, dir) = psar(&s, 0.02, 0.2).unwrap();
        // Up seed: SAR at bar 1 is the bar-0 low.
        assert_eq!(sar[1].unwrap(), 9.0);
        assert_eq!(dir[1].unwrap(), 1.0);
    }

    #[test]
    fn psar_rejects_bad_parameters() {
        let s = series_from_closes(&[1.0, 2.0, 3.0]);
        assert!(psar(&s, 0.02, 0.01).is_err());
        let short = series_from_closes(&[1.0]);
        assert!(psar(&short, 0.02, 0.2).is_err());
    }

    #[test]
    fn feature_matrix_has_19_columns_and_valid_from_34() {
        let s = crate::synth::synth_generate(3, 2, 60, 4.0, 0.002).unwrap();
        let f = compute_features(&s).unwrap();
        assert_eq!(f.n_features(), 19);
        assert_eq!(f.names, FEATURE_NAMES.to_vec());
        assert_eq!(f.valid_from, 34);
        for row in f.values.rows().into_iter().skip(f.valid_from) {
            assert!(row.iter().all(|v| v.is_finite()));
        }
        assert!(f.values[(33, 7)].is_nan(), "signal warm-up must be missing");
    }

    #[test]
    fn feature_matrix_constant_series_fixed_points() {
        let s = series_from_closes(&[42.0; 60]);
        let f = compute_features(&s).unwrap();
        let at = |name: &str, i: usize| f.column(name).unwrap()[i];
        for i in f.valid_from..60 {
            assert_relative_eq!(at("macd", i), 0.0);
            assert_relative_eq!(at("macd_hist", i), 0.0);
            assert_eq!(at("rsi14", i), 50.0);
            assert_eq!(at("stoch_k", i), 50.0);
            assert_eq!(at("atr14", i), 0.0);
            assert_eq!(at("boll_up", i), 42.0);
            assert_eq!(at("mom10", i), 0.0);
            assert_eq!(at("sma10", i), 42.0);
            assert_eq!(at("ema10", i), 42.0);
        }
    }

    #[test]
    fn feature_matrix_rejects_short_series() {
        let s = series_from_closes(&[1.0; 34]);
        assert!(compute_features(&s).is_err());
    }

    #[test]
    fn macd_hist_is_exact_difference() {
        let s = crate::synth::synth_generate(9, 2, 60, 4.0, 0.003).unwrap();
        let (m, sig, h) = macd(&s.closes(), 12, 26, 9).unwrap();
        for i in 0..s.len() {
            if let (Some(m), Some(sg), Some(h)) = (m[i], sig[i], h[i]) {
                assert_eq!(h, m - sg);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_series(max_len: usize) -> impl Strategy<Value = OhlcSeries> {
            (2u64..1_000_000, 80usize..max_len).prop_map(|(seed, n)| {
                let s = crate::synth::synth_generate(seed, 1, n.min(1440), 4.0, 0.004).unwrap();
                OhlcSeries::new("P", 60, s.candles[..n].to_vec()).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn bounded_oscillators_and_ordered_bands(s in arb_series(200)) {
                let f = compute_features(&s).unwrap();
                for i in f.valid_from..s.len() {
                    let rsi = f.values[(i, 9)];
                    prop_assert!((0.0..=100.0).contains(&rsi));
                    prop_assert!((0.0..=100.0).contains(&f.values[(i, 14)]));
                    prop_assert!((0.0..=100.0).contains(&f.values[(i, 15)]));
                    let (lo, mid, up) = (f.values[(i, 13)], f.values[(i, 11)], f.values[(i, 12)]);
                    prop_assert!(lo <= mid && mid <= up);
                }
            }

            #[test]
            fn appending_bars_never_changes_earlier_values(s in arb_series(160)) {
                let full = compute_features(&s).unwrap();
                let n = s.len() - 20;
                let prefix = OhlcSeries::new("P", 60, s.candles[..n].to_vec()).unwrap();
                let partial = compute_features(&prefix).unwrap();
                for i in 0..n {
                    for j in 0..19 {
                        let (a, b) = (partial.values[(i, j)], full.values[(i, j)]);
                        prop_assert!(
                            (a.is_nan() && b.is_nan()) || a == b,
                            "mismatch at row {} col {}: {} vs {}", i, j, a, b
                        );
                    }
                }
            }
        }
    }
}
