//! Daybreak sentiment scoring and the cross-model comparison report.
//!
//! A forecast made at a day's close is judged against the next day's first
//! quarter: bullish is correct when the previous close sits below the
//! quarter's highest high, bearish when it sits above the lowest low. Wide
//! opening ranges can satisfy both directions; the rule is applied as
//! stated.

use crate::error::{CmgError, Result};
use crate::float_fmt::fmt_f64;
use crate::model::Direction;
use crate::ohlc::{first_quarter, Candle, OhlcSeries, TradingDay};
use crate::stats::{paired_t_test, wilcoxon_signed_rank, TTestResult, WilcoxonResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaybreakOutcome {
    pub day_id: usize,
    pub prediction: Direction,
    pub prev_close: f64,
    pub fq_high: f64,
    pub fq_low: f64,
    pub correct: bool,
}

/// Scores one daybreak call against the first-quarter bars of the following
/// day.
pub fn score_daybreak(
    prediction: Direction,
    prev_close: f64,
    first_quarter_bars: &[Candle],
) -> Result<bool> {
    if first_quarter_bars.is_empty() {
        return Err(CmgError::invalid("empty first-quarter range"));
    }
    let fq_high = first_quarter_bars.iter().map(|c| c.high).fold(f64::MIN, f64::max);
    let fq_low = first_quarter_bars.iter().map(|c| c.low).fold(f64::MAX, f64::min);
    Ok(match prediction {
        Direction::Bullish => prev_close < fq_high,
        Direction::Bearish => prev_close > fq_low,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaybreakEval {
    pub accuracy: f64,
    pub outcomes: Vec<DaybreakOutcome>,
}

/// Scores per-day predictions. Each entry pairs an index into `days` with
/// the direction called at that day's close; the day after it supplies the
/// first quarter.
pub fn evaluate_daybreak(
    series: &OhlcSeries,
    days: &[TradingDay],
    predictions: &[(usize, Direction)],
) -> Result<DaybreakEval> {
    if predictions.is_empty() {
        return Err(CmgError::invalid("no scorable days"));
    }
    let mut outcomes = Vec::with_capacity(predictions.len());
    let mut correct = 0usize;
    for &(di, prediction) in predictions {
        if di + 1 >= days.len() {
            return Err(CmgError::invalid("test day without successor"));
        }
        let day = &days[di];
        if day.end_index >= series.candles.len() {
            return Err(CmgError::invalid("day range outside series"));
        }
        let prev_close = series.candles[day.end_index].close;
        let (s, e) = first_quarter(&days[di + 1]);
        let bars = &series.candles[s..=e];
        let fq_high = bars.iter().map(|c| c.high).fold(f64::MIN, f64::max);
        let fq_low = bars.iter().map(|c| c.low).fold(f64::MAX, f64::min);
        let ok = score_daybreak(prediction, prev_close, bars)?;
        if ok {
            correct += 1;
        }
        outcomes.push(DaybreakOutcome {
            day_id: day.day_id,
            prediction,
            prev_close,
            fq_high,
            fq_low,
            correct: ok,
        });
    }
    Ok(DaybreakEval {
        accuracy: correct as f64 / predictions.len() as f64,
        outcomes,
    })
}

/// One model's accuracy values over the comparison units (market indices,
/// or per-day 0/1 correctness in a single-index run).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelColumn {
    pub name: String,
    pub per_unit: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub name: String,
    pub per_unit: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTest {
    pub baseline: String,
    pub n: usize,
    pub t: Option<TTestResult>,
    pub wilcoxon: Option<WilcoxonResult>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub reference: String,
    pub models: Vec<ModelSummary>,
    pub tests: Vec<PairwiseTest>,
    pub notices: Vec<String>,
}

/// Aggregates model columns into mean accuracies plus reference-vs-baseline
/// significance tests. Ordering is deterministic: mean descending, ties by
/// name.
pub fn build_report(columns: &[ModelColumn], reference: &str) -> Result<EvalReport> {
    if columns.is_empty() {
        return Err(CmgError::invalid("no models to report"));
    }
    let units = columns[0].per_unit.len();
    if units == 0 {
        return Err(CmgError::invalid("no accuracy values"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in columns {
        if !seen.insert(c.name.as_str()) {
            return Err(CmgError::invalid(format!("duplicate model name {}", c.name)));
        }
        if c.per_unit.len() != units {
            return Err(CmgError::invalid("model columns differ in length"));
        }
        if c.per_unit.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(CmgError::invalid(format!("accuracy outside [0,1] for {}", c.name)));
        }
    }
    let mut models: Vec<ModelSummary> = columns
        .iter()
        .map(|c| ModelSummary {
            name: c.name.clone(),
            per_unit: c.per_unit.clone(),
            mean: c.per_unit.iter().sum::<f64>() / units as f64,
        })
        .collect();
    models.sort_by(|a, b| {
        b.mean
            .partial_cmp(&a.mean)
            .unwrap()
            .then_with(|| a.name.cmp(&b.name))
    });

    let mut notices = Vec::new();
    let mut tests = Vec::new();
    if columns.len() < 2 {
        notices.push("significance tests skipped: only one model".to_string());
    } else if units < 2 {
        notices.push("significance tests skipped: need at least 2 paired values".to_string());
    } else {
        let reference_col = columns
            .iter()
            .find(|c| c.name == reference)
            .ok_or_else(|| CmgError::invalid(format!("reference model {reference} not found")))?;
        let mut others: Vec<&ModelColumn> =
            columns.iter().filter(|c| c.name != reference).collect();
        others.sort_by(|a, b| a.name.cmp(&b.name));
        for other in others {
            let mut notes = Vec::new();
            let t = match paired_t_test(&reference_col.per_unit, &other.per_unit) {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(format!("paired t-test unavailable: {e}"));
                    None
                }
            };
            let wilcoxon = match wilcoxon_signed_rank(&reference_col.per_unit, &other.per_unit)
            {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(format!("wilcoxon test unavailable: {e}"));
                    None
                }
            };
            tests.push(PairwiseTest { baseline: other.name.clone(), n: units, t, wilcoxon, notes });
        }
    }
    Ok(EvalReport { reference: reference.to_string(), models, tests, notices })
}

fn md_num(v: f64) -> String {
    format!("{v:.4}")
}

impl EvalReport {
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Daybreak Sentiment Evaluation\n\n");
        let units = self.models.first().map_or(0, |m| m.per_unit.len());
        out.push_str(&format!(
            "Reference model: {}. Paired values per model: {units}.\n\n",
            self.reference
        ));
        out.push_str("## Average Daybreak Sentiment Prediction Accuracy\n\n");
        out.push_str("| Model | Mean Accuracy |\n|---|---|\n");
        for m in &self.models {
            out.push_str(&format!("| {} | {} |\n", m.name, md_num(m.mean)));
        }
        if !self.tests.is_empty() {
            out.push_str(&format!("\n## Paired t-test ({} vs baseline)\n\n", self.reference));
            out.push_str("| Baseline | t | df | p | n |\n|---|---|---|---|---|\n");
            for test in &self.tests {
                match &test.t {
                    Some(r) => out.push_str(&format!(
                        "| {} | {} | {} | {} | {} |\n",
                        test.baseline,
                        md_num(r.t),
                        r.df as usize,
                        md_num(r.p),
                        test.n
                    )),
                    None => out.push_str(&format!(
                        "| {} | - | - | - | {} |\n",
                        test.baseline, test.n
                    )),
                }
            }
            out.push_str(&format!(
                "\n## Wilcoxon signed-rank ({} vs baseline)\n\n",
                self.reference
            ));
            out.push_str("| Baseline | W | p | n_effective |\n|---|---|---|---|\n");
            for test in &self.tests {
                match &test.wilcoxon {
                    Some(r) => out.push_str(&format!(
                        "| {} | {} | {} | {} |\n",
                        test.baseline,
                        md_num(r.w),
                        md_num(r.p),
                        r.n_effective
                    )),
                    None => out.push_str(&format!("| {} | - | - | - |\n", test.baseline)),
                }
            }
        }
        let all_notes: Vec<&String> = self
            .notices
            .iter()
            .chain(self.tests.iter().flat_map(|t| t.notes.iter()))
            .collect();
        if !all_notes.is_empty() {
            out.push_str("\n## Notes\n\n");
            for n in all_notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        out
    }

    /// Full-precision dump; one row per value so downstream tooling never
    /// parses markdown.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("section,model,key,value\n");
        for m in &self.models {
            out.push_str(&format!("mean,{},,{}\n", m.name, fmt_f64(m.mean)));
        }
        for m in &self.models {
            for (i, v) in m.per_unit.iter().enumerate() {
                out.push_str(&format!("per_unit,{},{i},{}\n", m.name, fmt_f64(*v)));
            }
        }
        for t in &self.tests {
            if let Some(r) = &t.t {
                out.push_str(&format!("ttest,{},t,{}\n", t.baseline, fmt_f64(r.t)));
                out.push_str(&format!("ttest,{},df,{}\n", t.baseline, fmt_f64(r.df)));
                out.push_str(&format!("ttest,{},p,{}\n", t.baseline, fmt_f64(r.p)));
            }
            if let Some(r) = &t.wilcoxon {
                out.push_str(&format!("wilcoxon,{},w,{}\n", t.baseline, fmt_f64(r.w)));
                out.push_str(&format!("wilcoxon,{},p,{}\n", t.baseline, fmt_f64(r.p)));
                out.push_str(&format!(
                    "wilcoxon,{},n_effective,{}\n",
                    t.baseline, r.n_effective
                ));
            }
            for (i, note) in t.notes.iter().enumerate() {
                out.push_str(&format!("note,{},{i},{note}\n", t.baseline));
            }
        }
        for (i, n) in self.notices.iter().enumerate() {
            out.push_str(&format!("note,,{i},{n}\n"));
        }
        out
    }
}
