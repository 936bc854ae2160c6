//! Float rendering for CSV and report output.

/// Shortest decimal form that parses back to the same bits (the standard
/// library Display guarantee). Non-finite values render as Display does.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
