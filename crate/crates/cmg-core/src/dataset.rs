//! Dataset assembly: per-day feature standardization, event alignment,
//! chronological splitting, and fixed-length windowing.

use ndarray::{Array2, ArrayView2};

use crate::error::{CmgError, Result};
use crate::indicators::FeatureMatrix;
use crate::ohlc::TradingDay;
use crate::target::TargetEvent;

/// One aligned training example: standardized features at a signal event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSample {
    pub features: Vec<f64>,
    /// Sentiment class in {-3,-2,-1,1,2,3}.
    pub label: i8,
    pub day_id: usize,
    pub bar_index: usize,
    /// Bar at which this sample's outcome was measured (the next event).
    pub outcome_bar_index: usize,
}

/// Class index 0..5 for a label, in the order (-3,-2,-1,1,2,3).
pub fn label_to_class(label: i8) -> Option<usize> {
    match label {
        -3 => Some(0),
        -2 => Some(1),
        -1 => Some(2),
        1 => Some(3),
        2 => Some(4),
        3 => Some(5),
        _ => None,
    }
}

pub fn class_to_label(class: usize) -> Option<i8> {
    [-3, -2, -1, 1, 2, 3].get(class).copied()
}

/// Z-scores every column within every day using that day's own mean and
/// population sigma, so no information crosses a day boundary. Rows before
/// the warm-up horizon stay untouched; a day/column with sigma below 1e-12
/// becomes zeros.
pub fn standardize_features_per_day(
    features: &FeatureMatrix,
    days: &[TradingDay],
) -> Result<FeatureMatrix> {
    let rows = features.n_rows();
    if days.is_empty() || days.last().unwrap().end_index + 1 != rows {
        return Err(CmgError::invalid("day ranges must cover the feature rows"));
    }
    let mut values = features.values.clone();
    for day in days {
        let lo = day.start_index.max(features.valid_from);
        if lo > day.end_index {
            continue;
        }
        let count = (day.end_index - lo + 1) as f64;
        for col in 0..features.n_features() {
            let mut sum = 0.0;
            for row in lo..=day.end_index {
                sum += values[(row, col)];
            }
            let mean = sum / count;
            let mut ss = 0.0;
            for row in lo..=day.end_index {
                let d = values[(row, col)] - mean;
                ss += d * d;
            }
            let sigma = (ss / count).sqrt();
            for row in lo..=day.end_index {
                values[(row, col)] = if sigma < 1e-12 {
                    0.0
                } else {
                    (values[(row, col)] - mean) / sigma
                };
            }
        }
    }
    Ok(FeatureMatrix { names: features.names.clone(), values, valid_from: features.valid_from })
}

#[derive(Debug, Clone)]
pub struct AlignResult {
    pub samples: Vec<EventSample>,
    /// Events discarded because they fired before the indicator warm-up.
    pub dropped_before_warmup: usize,
    /// Usable-flag rejects (standardization still warming up).
    pub skipped_unusable: usize,
}

/// Joins target events to standardized feature rows. Events before the
/// warm-up horizon are dropped and counted rather than treated as errors.
pub fn align_events(
    events: &[TargetEvent],
    std_features: &FeatureMatrix,
    days: &[TradingDay],
) -> Result<AlignResult> {
    let mut samples = Vec::new();
    let mut dropped_before_warmup = 0usize;
    let mut skipped_unusable = 0usize;
    for ev in events {
        let bar = ev.event.bar_index;
        if bar < std_features.valid_from {
            dropped_before_warmup += 1;
            continue;
        }
        if !ev.usable {
            skipped_unusable += 1;
            continue;
        }
        if bar >= std_features.n_rows() {
            return Err(CmgError::invalid("event beyond the feature matrix"));
        }
        let day_id = days
            .iter()
            .find(|d| (d.start_index..=d.end_index).contains(&bar))
            .map(|d| d.day_id)
            .ok_or_else(|| CmgError::invalid("event outside every trading day"))?;
        let features: Vec<f64> = std_features.values.row(bar).to_vec();
        if features.iter().any(|v| !v.is_finite()) {
            return Err(CmgError::numerical("non-finite standardized feature"));
        }
        samples.push(EventSample {
            features,
            label: ev.label,
            day_id,
            bar_index: bar,
            outcome_bar_index: ev.outcome_bar_index,
        });
    }
    Ok(AlignResult { samples, dropped_before_warmup, skipped_unusable })
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: Vec<EventSample>,
    pub test: Vec<EventSample>,
    /// Day id of the first test day.
    pub first_test_day: usize,
    /// Train samples discarded because their outcome bar lands in the test
    /// period; keeping them would leak future prices into training labels.
    pub dropped_unresolved: usize,
}

/// Splits by day: the last ceil(test_fraction * D) of the D segmented days
/// form the test period. D counts segmented calendar days, so the boundary
/// depends only on the series' timestamps, never on where events landed;
/// otherwise a test-period edit could move the boundary and leak backwards.
pub fn chronological_split(
    samples: &[EventSample],
    days: &[TradingDay],
    test_fraction: f64,
) -> Result<SplitResult> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CmgError::invalid("test fraction must lie in (0, 1)"));
    }
    let first = samples.first().ok_or_else(|| CmgError::invalid("no samples to split"))?;
    if days.len() < 2 || samples.last().map(|s| s.day_id) == Some(first.day_id) {
        return Err(CmgError::invalid("need at least 2 distinct days to split"));
    }
    let n_test = ((test_fraction * days.len() as f64).ceil() as usize)
        .max(1)
        .min(days.len() - 1);
    let boundary = &days[days.len() - n_test];
    let first_test_day = boundary.day_id;
    let test_start_bar = boundary.start_index;

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut dropped_unresolved = 0usize;
    for s in samples {
        if s.day_id >= first_test_day {
            test.push(s.clone());
        } else if s.outcome_bar_index >= test_start_bar {
            dropped_unresolved += 1;
        } else {
            train.push(s.clone());
        }
    }
    Ok(SplitResult { train, test, first_test_day, dropped_unresolved })
}

/// A run of L consecutive samples. Encoder and decoder consume the same
/// rows; the single shared matrix keeps that identity by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    features: Array2<f64>,
    /// Class indices 0..5.
    pub labels: Vec<usize>,
    pub last_day_id: usize,
    pub last_bar_index: usize,
}

impl SequenceWindow {
    pub fn encoder_input(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn decoder_input(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Sliding windows of length `l`, stride 1, over time-ordered samples.
pub fn make_windows(samples: &[EventSample], l: usize) -> Result<Vec<SequenceWindow>> {
    if l < 1 {
        return Err(CmgError::invalid("window length must be >= 1"));
    }
    if samples.len() < l {
        return Err(CmgError::invalid("too few samples for one window"));
    }
    let n_features = samples[0].features.len();
    let mut windows = Vec::with_capacity(samples.len() - l + 1);
    for chunk in samples.windows(l) {
        let mut features = Array2::zeros((l, n_features));
        let mut labels = Vec::with_capacity(l);
        for (row, s) in chunk.iter().enumerate() {
            if s.features.len() != n_features {
                return Err(CmgError::invalid("ragged feature vectors"));
            }
            for (col, v) in s.features.iter().enumerate() {
                features[(row, col)] = *v;
            }
            labels.push(
                label_to_class(s.label)
                    .ok_or_else(|| CmgError::invalid("label outside the six classes"))?,
            );
        }
        let last = chunk.last().unwrap();
        windows.push(SequenceWindow {
            features,
            labels,
            last_day_id: last.day_id,
            last_bar_index: last.bar_index,
        });
    }
    Ok(windows)
}
