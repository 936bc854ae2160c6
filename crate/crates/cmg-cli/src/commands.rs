//! Subcommand handlers. Each returns the one-line summary printed on
//! success; artifacts land under the resolved output directory.

use std::fs;
use std::path::{Path, PathBuf};

use cmg_core::chaos::{
    autocorr_delay, chaos_battery, chaos_gate, export_phase_space, ChaosConfig, EmbeddingSpec,
    GateThresholds,
};
use cmg_core::dataset::make_windows;
use cmg_core::eval::evaluate_daybreak;
use cmg_core::float_fmt::fmt_f64;
use cmg_core::indicators::compute_features;
use cmg_core::model::{load_params, predict_next, save_params, Direction};
use cmg_core::ohlc::{parse_csv, segment_days, serialize_csv, OhlcSeries};
use cmg_core::pipeline::{
    build_dataset, compare as run_compare, scorable_days, train_cmg, write_artifacts,
    PipelineSettings,
};
use cmg_core::synth::synth_generate;
use cmg_core::target::{build_target_events, BinningSpec};
use cmg_core::{derive_seed, CmgError};

use crate::config::FileConfig;
use crate::{CliError, ModelArgs};

pub struct Ctx<'a> {
    pub cfg: &'a FileConfig,
    pub out: PathBuf,
    pub seed_flag: Option<u64>,
}

/// Config value overrides the default; a flag overrides both.
fn over<T>(slot: &mut T, cfg_val: Option<T>, flag: Option<T>) {
    if let Some(v) = cfg_val {
        *slot = v;
    }
    if let Some(v) = flag {
        *slot = v;
    }
}

fn settings(ctx: &Ctx, margs: &ModelArgs) -> Result<PipelineSettings, CliError> {
    let cfg = ctx.cfg;
    let mut s = PipelineSettings::default();
    over(&mut s.seed, cfg.get_u64("pipeline", "seed")?, ctx.seed_flag);
    over(&mut s.window, cfg.get_usize("pipeline", "window")?, margs.window);
    over(
        &mut s.test_fraction,
        cfg.get_f64("pipeline", "test_fraction")?,
        margs.test_fraction,
    );
    over(&mut s.min_history, cfg.get_usize("pipeline", "min_history")?, margs.min_history);
    over(&mut s.baseline_l2, cfg.get_f64("pipeline", "baseline_l2")?, None);
    over(&mut s.baseline_lr, cfg.get_f64("pipeline", "baseline_lr")?, None);
    over(&mut s.baseline_epochs, cfg.get_usize("pipeline", "baseline_epochs")?, None);
    over(&mut s.d_model, cfg.get_usize("model", "d_model")?, margs.d_model);
    over(&mut s.n_heads, cfg.get_usize("model", "n_heads")?, margs.n_heads);
    over(&mut s.d_ff, cfg.get_usize("model", "d_ff")?, margs.d_ff);
    over(&mut s.lstm_hidden, cfg.get_usize("model", "lstm_hidden")?, margs.lstm_hidden);
    over(
        &mut s.train.learning_rate,
        cfg.get_f64("train", "learning_rate")?,
        margs.learning_rate,
    );
    over(&mut s.train.max_epochs, cfg.get_usize("train", "max_epochs")?, margs.max_epochs);
    over(&mut s.train.patience, cfg.get_usize("train", "patience")?, margs.patience);
    over(&mut s.train.batch_size, cfg.get_usize("train", "batch_size")?, margs.batch_size);
    over(&mut s.train.clip_norm, cfg.get_f64("train", "clip_norm")?, margs.clip_norm);
    over(
        &mut s.train.val_fraction,
        cfg.get_f64("train", "val_fraction")?,
        margs.val_fraction,
    );
    Ok(s)
}

struct SynthParams {
    days: usize,
    bars_per_day: usize,
    r: f64,
    vol: f64,
}

fn synth_params(
    cfg: &FileConfig,
    days: Option<usize>,
    bars_per_day: Option<usize>,
    r: Option<f64>,
    vol: Option<f64>,
) -> Result<SynthParams, CliError> {
    let mut p = SynthParams { days: 360, bars_per_day: 96, r: 3.9, vol: 0.005 };
    over(&mut p.days, cfg.get_usize("synth", "days")?, days);
    over(&mut p.bars_per_day, cfg.get_usize("synth", "bars_per_day")?, bars_per_day);
    over(&mut p.r, cfg.get_f64("synth", "r")?, r);
    over(&mut p.vol, cfg.get_f64("synth", "vol")?, vol);
    Ok(p)
}

fn load_series(path: &Path) -> Result<OhlcSeries, CliError> {
    let text = fs::read_to_string(path).map_err(CmgError::from)?;
    let symbol = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("SERIES")
        .to_string();
    Ok(parse_csv(&text, &symbol)?)
}

fn series_values(series: &OhlcSeries, kind: Option<String>) -> Result<(Vec<f64>, &'static str), CliError> {
    match kind.as_deref().unwrap_or("close") {
        "close" => Ok((series.closes(), "close")),
        "log-return" | "logret" => {
            let c = series.closes();
            if c.len() < 2 {
                return Err(CmgError::invalid("need at least 2 bars for log returns").into());
            }
            Ok((c.windows(2).map(|w| (w[1] / w[0]).ln()).collect(), "log-return"))
        }
        other => Err(CliError::Usage(format!(
            "unknown series kind {other:?} (use close or log-return)"
        ))),
    }
}

fn dir_str(d: Direction) -> &'static str {
    match d {
        Direction::Bullish => "bullish",
        Direction::Bearish => "bearish",
    }
}

pub fn synth(
    ctx: &Ctx,
    days: Option<usize>,
    bars_per_day: Option<usize>,
    r: Option<f64>,
    vol: Option<f64>,
) -> Result<String, CliError> {
    let s = settings(ctx, &ModelArgs::default())?;
    let p = synth_params(ctx.cfg, days, bars_per_day, r, vol)?;
    let series = synth_generate(s.seed, p.days, p.bars_per_day, p.r, p.vol)?;
    let path = ctx.out.join("synth.csv");
    fs::write(&path, serialize_csv(&series))?;
    Ok(format!(
        "synth: {} bars over {} days (seed {}) -> {}",
        series.len(),
        p.days,
        s.seed,
        path.display()
    ))
}

pub fn ingest(ctx: &Ctx, input: &Path, symbol: Option<String>) -> Result<String, CliError> {
    let text = fs::read_to_string(input).map_err(CmgError::from)?;
    let symbol = symbol.unwrap_or_else(|| {
        input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("SERIES")
            .to_string()
    });
    let series = parse_csv(&text, &symbol)?;
    let days = segment_days(&series).len();
    let path = ctx.out.join("ohlc.csv");
    fs::write(&path, serialize_csv(&series))?;
    Ok(format!(
        "ingest: {} valid bars over {days} days as {symbol} -> {}",
        series.len(),
        path.display()
    ))
}

pub fn features(ctx: &Ctx, input: &Path) -> Result<String, CliError> {
    let series = load_series(input)?;
    let fm = compute_features(&series)?;
    let mut text = String::from("bar_index");
    for name in &fm.names {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    text.push_str(&format!("# valid_from={}\n", fm.valid_from));
    for i in 0..fm.n_rows() {
        text.push_str(&i.to_string());
        for j in 0..fm.n_features() {
            text.push(',');
            text.push_str(&fmt_f64(fm.values[(i, j)]));
        }
        text.push('\n');
    }
    let path = ctx.out.join("features.csv");
    fs::write(&path, text)?;
    Ok(format!(
        "features: {} columns x {} rows (defined from row {}) -> {}",
        fm.n_features(),
        fm.n_rows(),
        fm.valid_from,
        path.display()
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn chaos(
    ctx: &Ctx,
    input: &Path,
    kind: Option<String>,
    m: Option<usize>,
    tau: Option<usize>,
    theiler: Option<usize>,
    fit_lo: Option<usize>,
    fit_hi: Option<usize>,
    r_frac: Option<f64>,
) -> Result<String, CliError> {
    let cfg = ctx.cfg;
    let series = load_series(input)?;
    let (x, kind_name) = series_values(&series, kind)?;
    let m = m.or(cfg.get_usize("chaos", "m")?);
    let tau = tau.or(cfg.get_usize("chaos", "tau")?);
    let theiler = theiler.or(cfg.get_usize("chaos", "theiler")?);
    let fit_lo = fit_lo.or(cfg.get_usize("chaos", "fit_lo")?);
    let fit_hi = fit_hi.or(cfg.get_usize("chaos", "fit_hi")?);
    let r_frac = r_frac.or(cfg.get_f64("chaos", "r_frac")?);
    let embedding = if m.is_some() || tau.is_some() {
        let tau = tau.unwrap_or_else(|| autocorr_delay(&x));
        Some(EmbeddingSpec::new(m.unwrap_or(3), tau)?)
    } else {
        None
    };
    let fit = match (fit_lo, fit_hi) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(1), hi.unwrap_or(10))),
    };
    let config = ChaosConfig {
        embedding,
        theiler,
        fit,
        entropy_m: None,
        r_frac,
        radii: None,
        scales: None,
    };
    let report = chaos_battery(&x, &config, kind_name)?;
    let gate = chaos_gate(&report, &GateThresholds::default());
    let mut text = String::from("index,lambda,d2,apen,sampen,dfa_alpha,spectral_entropy\n");
    text.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        series.symbol,
        fmt_f64(report.lambda),
        fmt_f64(report.d2),
        fmt_f64(report.apen),
        fmt_f64(report.sampen),
        fmt_f64(report.dfa_alpha),
        fmt_f64(report.spectral_entropy),
    ));
    let path = ctx.out.join("chaos.csv");
    fs::write(&path, text)?;
    let gate_str = if gate.pass { "pass" } else { "fail" };
    let reasons = if gate.reasons.is_empty() {
        String::new()
    } else {
        format!(" ({})", gate.reasons.join("; "))
    };
    Ok(format!(
        "chaos: {} n={} {kind_name} gate={gate_str}{reasons} -> {}",
        series.symbol,
        report.n,
        path.display()
    ))
}

pub fn target(ctx: &Ctx, input: &Path, min_history: Option<usize>) -> Result<String, CliError> {
    let series = load_series(input)?;
    let fm = compute_features(&series)?;
    let min_history = min_history
        .or(ctx.cfg.get_usize("pipeline", "min_history")?)
        .unwrap_or(20);
    let events = build_target_events(&series, &fm, &BinningSpec::default(), min_history)?;
    let usable = events.iter().filter(|e| e.usable).count();
    let mut text = String::from("bar_index,timestamp,direction,y_raw,z,label,usable\n");
    for e in &events {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.event.bar_index,
            e.event.timestamp,
            e.event.direction,
            fmt_f64(e.y_raw),
            fmt_f64(e.z),
            e.label,
            u8::from(e.usable),
        ));
    }
    let path = ctx.out.join("targets.csv");
    fs::write(&path, text)?;
    Ok(format!(
        "target: {} crossover events ({usable} usable) -> {}",
        events.len(),
        path.display()
    ))
}

pub fn train(ctx: &Ctx, input: &Path, margs: &ModelArgs) -> Result<String, CliError> {
    let s = settings(ctx, margs)?;
    let series = load_series(input)?;
    let bundle = build_dataset(&series, &s)?;
    let outcome = train_cmg(&bundle, &s, derive_seed(s.seed, "model", 0))?;
    let ckpt = ctx.out.join("cmg.bin");
    save_params(&outcome.params, &ckpt)?;
    let mut history = String::from("epoch,train_loss,val_accuracy\n");
    for e in &outcome.history {
        history.push_str(&format!(
            "{},{},{}\n",
            e.epoch,
            fmt_f64(e.train_loss),
            fmt_f64(e.val_accuracy)
        ));
    }
    fs::write(ctx.out.join("history.csv"), history)?;
    Ok(format!(
        "train: best val accuracy {:.4} at epoch {} ({} train / {} test events) -> {}",
        outcome.best_accuracy,
        outcome.best_epoch,
        bundle.split.train.len(),
        bundle.split.test.len(),
        ckpt.display()
    ))
}

pub fn evaluate(
    ctx: &Ctx,
    input: &Path,
    checkpoint: &Path,
    test_fraction: Option<f64>,
    min_history: Option<usize>,
) -> Result<String, CliError> {
    let params = load_params(checkpoint)?;
    let mut s = settings(ctx, &ModelArgs::default())?;
    if let Some(f) = test_fraction {
        s.test_fraction = f;
    }
    if let Some(h) = min_history {
        s.min_history = h;
    }
    s.window = params.config.window;
    let series = load_series(input)?;
    let bundle = build_dataset(&series, &s)?;
    if bundle.n_features != params.config.n_features {
        return Err(CmgError::invalid(format!(
            "checkpoint expects {} features, dataset has {}",
            params.config.n_features, bundle.n_features
        ))
        .into());
    }
    let scorable = scorable_days(&bundle, s.window);
    if scorable.is_empty() {
        return Err(CmgError::invalid("no scorable test days").into());
    }
    let mut preds = Vec::with_capacity(scorable.len());
    for (di, range) in &scorable {
        let w = make_windows(&bundle.samples[range.clone()], s.window)?;
        preds.push((*di, predict_next(&params, &w[0])?.1));
    }
    let eval = evaluate_daybreak(&series, &bundle.days, &preds)?;
    let mut text = String::from("day_id,prediction,prev_close,fq_high,fq_low,correct\n");
    for o in &eval.outcomes {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            o.day_id,
            dir_str(o.prediction),
            fmt_f64(o.prev_close),
            fmt_f64(o.fq_high),
            fmt_f64(o.fq_low),
            u8::from(o.correct),
        ));
    }
    let path = ctx.out.join("evaluate.csv");
    fs::write(&path, text)?;
    Ok(format!(
        "evaluate: daybreak accuracy {:.4} over {} days -> {}",
        eval.accuracy,
        eval.outcomes.len(),
        path.display()
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn compare(
    ctx: &Ctx,
    inputs: &[PathBuf],
    synth: bool,
    days: Option<usize>,
    bars_per_day: Option<usize>,
    r: Option<f64>,
    vol: Option<f64>,
    margs: &ModelArgs,
) -> Result<String, CliError> {
    let s = settings(ctx, margs)?;
    let series: Vec<(String, OhlcSeries)> = if synth {
        if !inputs.is_empty() {
            return Err(CliError::Usage("--synth conflicts with --input".to_string()));
        }
        let p = synth_params(ctx.cfg, days, bars_per_day, r, vol)?;
        vec![(
            "SYNTH".to_string(),
            synth_generate(s.seed, p.days, p.bars_per_day, p.r, p.vol)?,
        )]
    } else {
        if inputs.is_empty() {
            return Err(CliError::Usage(
                "compare needs at least one --input file, or --synth".to_string(),
            ));
        }
        let mut v = Vec::with_capacity(inputs.len());
        for path in inputs {
            let series = load_series(path)?;
            v.push((series.symbol.clone(), series));
        }
        v
    };
    let result = run_compare(&series, &s)?;
    write_artifacts(&result, &ctx.out)?;
    let units = result.report.models.first().map_or(0, |m| m.per_unit.len());
    Ok(format!(
        "compare: {} models over {units} paired values -> {}",
        result.report.models.len(),
        ctx.out.join("report.md").display()
    ))
}

fn parse_window(s: &str) -> Result<std::ops::Range<usize>, CliError> {
    let parsed = s.split_once("..").and_then(|(a, b)| {
        let a: usize = a.trim().parse().ok()?;
        let b: usize = b.trim().parse().ok()?;
        Some(a..b)
    });
    match parsed {
        Some(r) if r.start < r.end => Ok(r),
        _ => Err(CliError::Usage(format!("--window expects START..END, got {s:?}"))),
    }
}

pub fn phase_space(
    ctx: &Ctx,
    input: &Path,
    kind: Option<String>,
    m: Option<usize>,
    tau: Option<usize>,
    window: Option<String>,
) -> Result<String, CliError> {
    let series = load_series(input)?;
    let (x, kind_name) = series_values(&series, kind)?;
    let m = m.or(ctx.cfg.get_usize("chaos", "m")?).unwrap_or(3);
    let tau = tau
        .or(ctx.cfg.get_usize("chaos", "tau")?)
        .unwrap_or_else(|| autocorr_delay(&x));
    let spec = EmbeddingSpec::new(m, tau)?;
    let range = window.as_deref().map(parse_window).transpose()?;
    let csv = export_phase_space(&x, &spec, range)?;
    let rows = csv.lines().count();
    let path = ctx.out.join("phase_space.csv");
    fs::write(&path, csv)?;
    Ok(format!(
        "phase-space: {rows} points (m={m}, tau={tau}, {kind_name}) -> {}",
        path.display()
    ))
}
