//! End-to-end comparison: builds the event dataset from each input series,
//! trains the sequence model plus the three classical baselines, scores
//! daybreak calls on the held-out days, and assembles the report.
//!
//! All randomness flows from the one pipeline seed: index k's model seed is
//! `derive_seed(seed, "model", k)`, and epoch shuffles derive from that in
//! turn. Two runs with the same inputs and seed produce byte-identical
//! artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baselines::{fit_binary_lr, fit_gnb, fit_multinomial_lr, GnbModel, LinearModel};
use crate::dataset::{
    align_events, chronological_split, make_windows, standardize_features_per_day, EventSample,
};
use crate::derive_seed;
use crate::error::{CmgError, Result};
use crate::eval::{build_report, evaluate_daybreak, EvalReport, ModelColumn};
use crate::float_fmt::fmt_f64;
use crate::indicators::compute_features;
use crate::model::{
    init_params, predict_next, save_params, train, CmgParams, Direction, EpochStats, ModelConfig,
    TrainConfig,
};
use crate::ohlc::{segment_days, OhlcSeries};
use crate::target::{build_target_events, BinningSpec};

pub const MODEL_CMG: &str = "CMG";
pub const MODEL_BINARY_LR: &str = "Logistic Regression";
pub const MODEL_MULTI_LR: &str = "Multi Logistic Regression";
pub const MODEL_GNB: &str = "Gaussian Naive Bayes";

#[derive(Debug, Clone)]
pub struct PipelineSettings {
    pub seed: u64,
    /// Event-window length fed to the sequence model.
    pub window: usize,
    pub test_fraction: f64,
    /// Events needed before expanding standardization is trusted.
    pub min_history: usize,
    pub binning: BinningSpec,
    pub train: TrainConfig,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub lstm_hidden: usize,
    pub baseline_l2: f64,
    pub baseline_lr: f64,
    pub baseline_epochs: usize,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            seed: 42,
            window: 8,
            test_fraction: 0.3,
            min_history: 20,
            binning: BinningSpec::default(),
            train: TrainConfig::default(),
            d_model: 32,
            n_heads: 2,
            d_ff: 64,
            lstm_hidden: 32,
            baseline_l2: 1e-4,
            baseline_lr: 0.1,
            baseline_epochs: 300,
        }
    }
}

impl PipelineSettings {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(CmgError::invalid("window must be >= 1"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CmgError::invalid("test fraction must lie in (0, 1)"));
        }
        self.binning.validate()?;
        self.train.validate()
    }

    fn model_config(&self, n_features: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
            d_ff: self.d_ff,
            lstm_hidden: self.lstm_hidden,
            window: self.window,
            n_features,
            n_classes: 6,
            seed,
        }
    }
}

/// Everything produced for one input series.
#[derive(Debug, Clone)]
pub struct IndexOutcome {
    pub name: String,
    /// Positions into the day list that were scored.
    pub scored_days: Vec<usize>,
    /// Per-model 0/1 correctness aligned with `scored_days`; fixed model
    /// order CMG, binary LR, multinomial LR, GNB.
    pub per_model_correct: Vec<(String, Vec<f64>)>,
    pub cmg: CmgParams,
    pub multinomial: LinearModel,
    pub binary: LinearModel,
    pub gnb: GnbModel,
    pub history: Vec<EpochStats>,
    pub samples_csv: String,
    pub split_csv: String,
    pub n_train: usize,
    pub n_test: usize,
}

impl IndexOutcome {
    pub fn accuracy(&self, model: &str) -> Option<f64> {
        self.per_model_correct.iter().find(|(n, _)| n == model).map(|(_, v)| {
            v.iter().sum::<f64>() / v.len() as f64
        })
    }
}

fn samples_csv(samples: &[EventSample], n_features: usize) -> String {
    let mut out = String::from("day_id,bar_index,outcome_bar_index,label");
    for j in 0..n_features {
        out.push_str(&format!(",f{j}"));
    }
    out.push('\n');
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{}",
            s.day_id, s.bar_index, s.outcome_bar_index, s.label
        ));
        for v in &s.features {
            out.push_str(&format!(",{}", fmt_f64(*v)));
        }
        out.push('\n');
    }
    out
}

fn split_csv(train: &[EventSample], test: &[EventSample], first_test_day: usize) -> String {
    let mut out = format!("role,day_id,bar_index\n# first_test_day={first_test_day}\n");
    for (role, set) in [("train", train), ("test", test)] {
        for s in set {
            out.push_str(&format!("{role},{},{}\n", s.day_id, s.bar_index));
        }
    }
    out
}

/// Dataset stages shared by `train`, `evaluate`, and `compare`.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub days: Vec<crate::ohlc::TradingDay>,
    /// All aligned samples in bar order, train and test alike.
    pub samples: Vec<EventSample>,
    pub split: crate::dataset::SplitResult,
    pub n_features: usize,
}

pub fn build_dataset(series: &OhlcSeries, settings: &PipelineSettings) -> Result<DatasetBundle> {
    settings.validate()?;
    let features = compute_features(series)?;
    let days = segment_days(series);
    let events = build_target_events(series, &features, &settings.binning, settings.min_history)?;
    let std_features = standardize_features_per_day(&features, &days)?;
    let aligned = align_events(&events, &std_features, &days)?;
    let split = chronological_split(&aligned.samples, &days, settings.test_fraction)?;
    Ok(DatasetBundle {
        days,
        samples: aligned.samples,
        split,
        n_features: std_features.n_features(),
    })
}

/// Test days that can be scored: each has a successor day and at least
/// `window` events by its close. Returns (day position, range of the
/// trailing `window` samples) pairs; scoring the same day set for every
/// model keeps significance tests paired.
pub fn scorable_days(bundle: &DatasetBundle, window: usize) -> Vec<(usize, std::ops::Range<usize>)> {
    let mut out = Vec::new();
    for (di, day) in bundle.days.iter().enumerate() {
        if day.day_id < bundle.split.first_test_day || di + 1 >= bundle.days.len() {
            continue;
        }
        let upto = bundle
            .samples
            .iter()
            .take_while(|s| s.bar_index <= day.end_index)
            .count();
        if upto < window {
            continue;
        }
        out.push((di, upto - window..upto));
    }
    out
}

/// Trains the sequence model on an assembled dataset: windows from the
/// training samples, chronological tail held out for validation.
pub fn train_cmg(
    bundle: &DatasetBundle,
    settings: &PipelineSettings,
    model_seed: u64,
) -> Result<crate::model::TrainOutcome> {
    if bundle.split.train.len() < settings.window + 1 {
        return Err(CmgError::invalid(format!(
            "too few training events ({}) for window {}",
            bundle.split.train.len(),
            settings.window
        )));
    }
    let windows = make_windows(&bundle.split.train, settings.window)?;
    let n_val = ((windows.len() as f64 * settings.train.val_fraction).round() as usize)
        .clamp(1, windows.len() - 1);
    let cut = windows.len() - n_val;
    let config = settings.model_config(bundle.n_features, model_seed);
    let initial = init_params(config)?;
    train(&initial, &windows[..cut], &windows[cut..], &settings.train)
}

/// Runs the full pipeline on one series. `model_seed` already incorporates
/// the index position.
pub fn run_index(
    name: &str,
    series: &OhlcSeries,
    settings: &PipelineSettings,
    model_seed: u64,
) -> Result<IndexOutcome> {
    let bundle = build_dataset(series, settings)?;
    let days = &bundle.days;
    let split = &bundle.split;
    let outcome = train_cmg(&bundle, settings, model_seed)?;

    let multinomial = fit_multinomial_lr(
        &split.train,
        settings.baseline_l2,
        settings.baseline_lr,
        settings.baseline_epochs,
    )?;
    let binary = fit_binary_lr(
        &split.train,
        settings.baseline_l2,
        settings.baseline_lr,
        settings.baseline_epochs,
    )?;
    let gnb = fit_gnb(&split.train)?;

    let scorable = scorable_days(&bundle, settings.window);
    if scorable.is_empty() {
        return Err(CmgError::invalid(format!("{name}: no scorable test days")));
    }
    let scored_days: Vec<usize> = scorable.iter().map(|(di, _)| *di).collect();
    let windows_by_day: Vec<&[EventSample]> =
        scorable.iter().map(|(_, r)| &bundle.samples[r.clone()]).collect();

    let mut cmg_preds = Vec::with_capacity(scored_days.len());
    let mut bin_preds = Vec::with_capacity(scored_days.len());
    let mut multi_preds = Vec::with_capacity(scored_days.len());
    let mut gnb_preds = Vec::with_capacity(scored_days.len());
    for (&di, chunk) in scored_days.iter().zip(&windows_by_day) {
        let w = make_windows(chunk, settings.window)?;
        let (_, dir) = predict_next(&outcome.params, &w[0])?;
        cmg_preds.push((di, dir));
        let last = &chunk[chunk.len() - 1];
        bin_preds.push((di, binary.predict(&last.features)?.1));
        multi_preds.push((di, multinomial.predict(&last.features)?.1));
        gnb_preds.push((di, gnb.predict(&last.features)?.1));
    }

    let mut per_model_correct = Vec::new();
    for (model, preds) in [
        (MODEL_CMG, &cmg_preds),
        (MODEL_BINARY_LR, &bin_preds),
        (MODEL_MULTI_LR, &multi_preds),
        (MODEL_GNB, &gnb_preds),
    ] {
        let eval = evaluate_daybreak(series, days, preds)?;
        let correct: Vec<f64> =
            eval.outcomes.iter().map(|o| if o.correct { 1.0 } else { 0.0 }).collect();
        per_model_correct.push((model.to_string(), correct));
    }

    Ok(IndexOutcome {
        name: name.to_string(),
        scored_days,
        per_model_correct,
        cmg: outcome.params,
        multinomial,
        binary,
        gnb,
        history: outcome.history,
        samples_csv: samples_csv(&bundle.samples, bundle.n_features),
        split_csv: split_csv(&split.train, &split.test, split.first_test_day),
        n_train: split.train.len(),
        n_test: split.test.len(),
    })
}

#[derive(Debug, Clone)]
pub struct CompareResult {
    pub report: EvalReport,
    pub markdown: String,
    pub csv: String,
    pub indices: Vec<IndexOutcome>,
}

/// Full comparison over one or more input series. Workers run in parallel,
/// one per index; assembly is serialized and order-stable.
pub fn compare(inputs: &[(String, OhlcSeries)], settings: &PipelineSettings) -> Result<CompareResult> {
    if inputs.is_empty() {
        return Err(CmgError::invalid("no input series"));
    }
    let mut names: Vec<&str> = inputs.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CmgError::invalid("duplicate index names"));
    }
    let indices: Vec<IndexOutcome> = inputs
        .par_iter()
        .enumerate()
        .map(|(k, (name, series))| {
            run_index(name, series, settings, derive_seed(settings.seed, "model", k as u64))
        })
        .collect::<Result<_>>()?;

    // One index: pair models per scored day. Several: pair per index mean.
    let model_names = [MODEL_CMG, MODEL_BINARY_LR, MODEL_MULTI_LR, MODEL_GNB];
    let columns: Vec<ModelColumn> = if indices.len() == 1 {
        indices[0]
            .per_model_correct
            .iter()
            .map(|(name, correct)| ModelColumn { name: name.clone(), per_unit: correct.clone() })
            .collect()
    } else {
        model_names
            .iter()
            .map(|m| ModelColumn {
                name: m.to_string(),
                per_unit: indices.iter().map(|ix| ix.accuracy(m).unwrap()).collect(),
            })
            .collect()
    };
    let report = build_report(&columns, MODEL_CMG)?;
    let markdown = report.render_markdown();
    let csv = report.render_csv();
    Ok(CompareResult { report, markdown, csv, indices })
}

fn file_slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Writes the report plus per-index dataset dumps and checkpoints. Returns
/// the paths written, in a fixed order.
pub fn write_artifacts(result: &CompareResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let dataset_dir = out_dir.join("dataset");
    let ckpt_dir = out_dir.join("checkpoints");
    fs::create_dir_all(&dataset_dir)?;
    fs::create_dir_all(&ckpt_dir)?;
    let mut written = Vec::new();
    let put = |path: PathBuf, contents: &str| -> Result<PathBuf> {
        fs::write(&path, contents)?;
        Ok(path)
    };
    written.push(put(out_dir.join("report.md"), &result.markdown)?);
    written.push(put(out_dir.join("report.csv"), &result.csv)?);
    for ix in &result.indices {
        let slug = file_slug(&ix.name);
        written.push(put(dataset_dir.join(format!("{slug}_samples.csv")), &ix.samples_csv)?);
        written.push(put(dataset_dir.join(format!("{slug}_split.csv")), &ix.split_csv)?);
        let cmg_path = ckpt_dir.join(format!("{slug}_cmg.bin"));
        save_params(&ix.cmg, &cmg_path)?;
        written.push(cmg_path);
        written.push(put(
            ckpt_dir.join(format!("{slug}_multinomial_lr.csv")),
            &ix.multinomial.to_csv(),
        )?);
        written.push(put(ckpt_dir.join(format!("{slug}_binary_lr.csv")), &ix.binary.to_csv())?);
        written.push(put(ckpt_dir.join(format!("{slug}_gnb.csv")), &ix.gnb.to_csv())?);
    }
    Ok(written)
}

/// Majority direction over training labels; scoring a constant call of that
/// direction is the floor any trained model should clear.
pub fn majority_direction(samples: &[EventSample]) -> Direction {
    let bullish = samples.iter().filter(|s| s.label > 0).count();
    if bullish * 2 >= samples.len() { Direction::Bullish } else { Direction::Bearish }
}
