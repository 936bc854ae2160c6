//! OHLC series ingestion, validation, and day segmentation.
//!
//! Key invariants: candle timestamps are strictly increasing, every candle
//! satisfies `low <= min(open, close) <= max(open, close) <= high` with all
//! prices positive, and day index ranges partition `0..n`.

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::error::{CmgError, Result};

pub const CSV_HEADER: &str = "timestamp,open,high,low,close";

/// One bar. `timestamp` is seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candle {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Candle {
    pub fn new(timestamp: i64, open: f64, high: f64, low: f64, close: f64) -> Result<Self> {
        let c = Candle { timestamp, open, high, low, close };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(CmgError::invalid("candle prices must be positive and finite"));
        }
        if self.low > self.open.min(self.close) || self.open.max(self.close) > self.high {
            return Err(CmgError::invalid("OHLC violation"));
        }
        Ok(())
    }
}

/// Ordered candles for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct OhlcSeries {
    pub symbol: String,
    /// Nominal bar spacing in seconds. Gaps are allowed.
    pub bar_interval: u32,
    pub candles: Vec<Candle>,
}

impl OhlcSeries {
    pub fn new(symbol: impl Into<String>, bar_interval: u32, candles: Vec<Candle>) -> Result<Self> {
        let symbol = symbol.into();
        if symbol.is_empty() {
            return Err(CmgError::invalid("empty symbol"));
        }
        for c in &candles {
            c.validate()?;
        }
        for w in candles.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(CmgError::invalid("non-increasing timestamps"));
            }
        }
        Ok(OhlcSeries { symbol, bar_interval, candles })
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.close).collect()
    }
}

/// Contiguous candle range sharing one calendar date.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TradingDay {
    pub day_id: usize,
    pub date: NaiveDate,
    /// Inclusive candle-index range.
    pub start_index: usize,
    pub end_index: usize,
}

impl TradingDay {
    pub fn len(&self) -> usize {
        self.end_index - self.start_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn parse_timestamp(field: &str) -> Option<i64> {
    let field = field.trim();
    if !field.is_empty() && field.bytes().all(|b| b.is_ascii_digit()) {
        return field.parse::<i64>().ok();
    }
    NaiveDateTime::parse_from_str(field, "%Y-%m-%dT%H:%M:%SZ")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

fn parse_price(field: &str) -> Option<f64> {
    let v: f64 = field.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parses `timestamp,open,high,low,close` CSV text. Timestamps are ISO-8601
/// with a `Z` suffix or all-digit epoch seconds. Error messages carry 1-based
/// line numbers counting the header.
pub fn parse_csv(text: &str, symbol: &str) -> Result<OhlcSeries> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CmgError::invalid("empty file"))?;
    if header.trim() != CSV_HEADER {
        return Err(CmgError::Parse {
            line: 1,
            msg: format!("expected header `{CSV_HEADER}`"),
        });
    }

    let mut candles = Vec::new();
    let mut prev_ts: Option<i64> = None;
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(CmgError::Parse {
                line,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let ts = parse_timestamp(fields[0]).ok_or_else(|| CmgError::Parse {
            line,
            msg: format!("bad timestamp `{}`", fields[0].trim()),
        })?;
        let mut prices = [0.0f64; 4];
        for (slot, field) in prices.iter_mut().zip(&fields[1..]) {
            *slot = parse_price(field).ok_or_else(|| CmgError::Parse {
                line,
                msg: format!("bad price `{}`", field.trim()),
            })?;
        }
        let [open, high, low, close] = prices;
        if prices.iter().any(|p| *p <= 0.0) {
            return Err(CmgError::Parse { line, msg: "non-positive price".into() });
        }
        if low > open.min(close) || open.max(close) > high {
            return Err(CmgError::Parse { line, msg: "OHLC violation".into() });
        }
        if let Some(prev) = prev_ts {
            if ts <= prev {
                return Err(CmgError::Parse { line, msg: "non-increasing timestamps".into() });
            }
        }
        prev_ts = Some(ts);
        candles.push(Candle { timestamp: ts, open, high, low, close });
    }
    if candles.is_empty() {
        return Err(CmgError::invalid("empty file"));
    }
    OhlcSeries::new(symbol, 60, candles)
}

pub fn format_timestamp(ts: i64) -> String {
    DateTime::from_timestamp(ts, 0)
        .map(|dt| dt.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| ts.to_string())
}

/// Inverse of [`parse_csv`]: floats use the shortest exact representation, so
/// a parse -> serialize -> parse loop reproduces the numbers bit for bit.
pub fn serialize_csv(series: &OhlcSeries) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &series.candles {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_timestamp(c.timestamp),
            c.open,
            c.high,
            c.low,
            c.close
        ));
    }
    out
}

/// Groups candles by UTC calendar date. `offset_seconds` shifts the boundary
/// for instruments whose session does not align with UTC midnight.
pub fn segment_days_offset(series: &OhlcSeries, offset_seconds: i32) -> Vec<TradingDay> {
    let mut days: Vec<TradingDay> = Vec::new();
    for (i, c) in series.candles.iter().enumerate() {
        let date = DateTime::from_timestamp(c.timestamp + offset_seconds as i64, 0)
            .expect("timestamp in range")
            .date_naive();
        match days.last_mut() {
            Some(day) if day.date == date => day.end_index = i,
            _ => days.push(TradingDay {
                day_id: days.len(),
                date,
                start_index: i,
                end_index: i,
            }),
        }
    }
    days
}

pub fn segment_days(series: &OhlcSeries) -> Vec<TradingDay> {
    segment_days_offset(series, 0)
}

/// First `ceil(n/4)` bars of the day, as an inclusive index range.
pub fn first_quarter(day: &TradingDay) -> (usize, usize) {
    let n = day.len();
    let count = n.div_ceil(4);
    (day.start_index, day.start_index + count - 1)
}
