//! Target construction: MACD/signal crossover events, expanding
//! standardization of the inter-event price moves, and Gaussian six-class
//! binning.
//!
//! Key invariants: crossover directions strictly alternate; z at index i
//! depends only on y[0..=i]; bin labels are monotone in z and antisymmetric
//! (bin(-z) = -bin(z) for z != 0).

use crate::error::{CmgError, Result};
use crate::indicators::FeatureMatrix;
use crate::ohlc::OhlcSeries;

/// A momentum shift: the first bar after the MACD line crossed the signal
/// line. `direction` is +1 for a cross above, -1 for a cross below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacdEvent {
    pub bar_index: usize,
    pub timestamp: i64,
    pub close: f64,
    pub direction: i8,
}

/// One supervised example: the move to the next crossover, standardized and
/// binned. `outcome_bar_index` is the bar at which y_raw resolved; splits use
/// it to drop events whose outcome lies beyond the training period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEvent {
    pub event: MacdEvent,
    pub outcome_bar_index: usize,
    pub y_raw: f64,
    pub z: f64,
    pub label: i8,
    pub usable: bool,
}

/// Six-class bin boundaries in standardized units. Defaults are the standard
/// normal quantiles at 0.75 and 0.875, giving class masses of
/// (12.5, 12.5, 25, 25, 12.5, 12.5)% for labels (-3,-2,-1,1,2,3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningSpec {
    pub inner: f64,
    pub outer: f64,
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec { inner: 0.6744898, outer: 1.1503494 }
    }
}

impl BinningSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner > 0.0 && self.inner < self.outer) {
            return Err(CmgError::invalid("binning requires 0 < inner < outer"));
        }
        Ok(())
    }
}

fn sign_of(d: f64) -> i8 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// Scans `macd - signal` from `valid_from` and emits an event at the first
/// bar after each sign change. Exact zeros inherit the previous nonzero sign,
/// so a touch-and-return is not a crossing.
pub fn detect_crossovers(
    series: &OhlcSeries,
    macd_line: &[f64],
    signal_line: &[f64],
    valid_from: usize,
) -> Result<Vec<MacdEvent>> {
    if macd_line.len() != signal_line.len() {
        return Err(CmgError::invalid("macd and signal length mismatch"));
    }
    if macd_line.len() != series.len() {
        return Err(CmgError::invalid("indicator series must align with candles"));
    }
    if valid_from >= macd_line.len() {
        return Err(CmgError::invalid("valid_from out of range"));
    }
    let mut events = Vec::new();
    let mut prev: i8 = 0;
    for i in valid_from..macd_line.len() {
        let d = macd_line[i] - signal_line[i];
        if d.is_nan() {
            return Err(CmgError::invalid(format!("undefined macd/signal at index {i}")));
        }
        let mut s = sign_of(d);
        if s == 0 {
            s = prev;
        }
        if prev != 0 && s != 0 && s != prev {
            events.push(MacdEvent {
                bar_index: i,
                timestamp: series.candles[i].timestamp,
                close: series.candles[i].close,
                direction: s,
            });
        }
        prev = s;
    }
    Ok(events)
}

/// Pairs each event with the move to its successor: `y = next close - close`.
/// The last event has no successor and is dropped.
pub fn build_targets(events: &[MacdEvent]) -> Result<Vec<(MacdEvent, usize, f64)>> {
    if events.len() < 2 {
        return Err(CmgError::degenerate("fewer than 2 events"));
    }
    Ok(events
        .windows(2)
        .map(|w| (w[0], w[1].bar_index, w[1].close - w[0].close))
        .collect())
}

/// Expanding z-score: `z[i] = (y[i] - mean(y[0..=i])) / sigma_pop(y[0..=i])`.
/// An entry is usable only once `i+1 >= min_history` and the expanding sigma
/// is nondegenerate; unusable entries carry z = 0.
pub fn expanding_standardize(y: &[f64], min_history: usize) -> (Vec<f64>, Vec<bool>) {
    let mut z = Vec::with_capacity(y.len());
    let mut usable = Vec::with_capacity(y.len());
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for (i, &v) in y.iter().enumerate() {
        sum += v;
        sum_sq += v * v;
        let n = (i + 1) as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        let sigma = var.sqrt();
        if i + 1 >= min_history && sigma > 1e-12 {
            z.push((v - mean) / sigma);
            usable.push(true);
        } else {
            z.push(0.0);
            usable.push(false);
        }
    }
    (z, usable)
}

/// Maps a standardized value to a label in {-3,-2,-1,1,2,3}. Zero falls on
/// the nonnegative side (label 1).
pub fn gaussian_bin(z: f64, spec: &BinningSpec) -> Result<i8> {
    spec.validate()?;
    if !z.is_finite() {
        return Err(CmgError::numerical("gaussian_bin requires finite z"));
    }
    Ok(if z < -spec.outer {
        -3
    } else if z < -spec.inner {
        -2
    } else if z < 0.0 {
        -1
    } else if z < spec.inner {
        1
    } else if z < spec.outer {
        2
    } else {
        3
    })
}

/// Full target pipeline: crossovers on the feature matrix's macd columns,
/// successor moves, expanding standardization, Gaussian binning.
pub fn build_target_events(
    series: &OhlcSeries,
    features: &FeatureMatrix,
    spec: &BinningSpec,
    min_history: usize,
) -> Result<Vec<TargetEvent>> {
    spec.validate()?;
    let macd = features
        .column("macd")
        .ok_or_else(|| CmgError::invalid("feature matrix lacks macd column"))?;
    let signal = features
        .column("macd_signal")
        .ok_or_else(|| CmgError::invalid("feature matrix lacks macd_signal column"))?;
    let macd: Vec<f64> = macd.to_vec();
    let signal: Vec<f64> = signal.to_vec();
    let events = detect_crossovers(series, &macd, &signal, features.valid_from)?;
    let targets = build_targets(&events)?;
    let y: Vec<f64> = targets.iter().map(|t| t.2).collect();
    let (z, usable) = expanding_standardize(&y, min_history);
    let mut out = Vec::with_capacity(targets.len());
    for (i, (event, outcome_bar_index, y_raw)) in targets.into_iter().enumerate() {
        out.push(TargetEvent {
            event,
            outcome_bar_index,
            y_raw,
            z: z[i],
            label: gaussian_bin(z[i], spec)?,
            usable: usable[i],
        });
    }
    Ok(out)
}
