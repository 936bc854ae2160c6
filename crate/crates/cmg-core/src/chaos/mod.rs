//! Chaos diagnostics: a six-metric battery (largest Lyapunov exponent,
//! correlation dimension, approximate and sample entropy, detrended
//! fluctuation exponent, spectral entropy), a pass/fail gate, and
//! phase-space export.

pub mod dfa;
pub mod dimension;
pub mod embed;
pub mod entropy;
pub mod lyapunov;
pub mod spectral;

pub use dfa::{default_scales, dfa};
pub use dimension::{correlation_dimension, correlation_sums, default_radii};
pub use embed::{autocorr_delay, delay_embed, EmbeddingSpec};
pub use entropy::{approx_entropy, sample_entropy};
pub use lyapunov::lyapunov_rosenstein;
pub use spectral::{entropy_of_psd, periodogram, spectral_entropy};

use crate::error::{CmgError, Result};
use crate::float_fmt::fmt_f64;

/// Estimator settings actually used for a battery run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosParams {
    pub embedding: EmbeddingSpec,
    pub theiler: usize,
    pub fit: (usize, usize),
    pub entropy_m: usize,
    pub r_frac: f64,
}

/// Battery configuration; `None` fields are derived from the series.
#[derive(Debug, Clone, Default)]
pub struct ChaosConfig {
    pub embedding: Option<EmbeddingSpec>,
    pub theiler: Option<usize>,
    pub fit: Option<(usize, usize)>,
    pub entropy_m: Option<usize>,
    pub r_frac: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub scales: Option<Vec<usize>>,
}

/// All six metrics for one series, plus the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosReport {
    pub lambda: f64,
    pub d2: f64,
    pub apen: f64,
    pub sampen: f64,
    pub dfa_alpha: f64,
    pub spectral_entropy: f64,
    pub n: usize,
    pub params: ChaosParams,
    /// Which series variant the battery ran on (for example "standardized
    /// targets").
    pub source: String,
}

/// Runs every metric with shared embedding defaults: m = 3, delay at the
/// autocorrelation 1/e crossing, Theiler window equal to the delay, fit
/// steps 1..10, entropies at m = 2 with r = 0.2 sigma.
pub fn chaos_battery(x: &[f64], config: &ChaosConfig, source: &str) -> Result<ChaosReport> {
    let embedding = config.embedding.unwrap_or_else(|| EmbeddingSpec::auto(x));
    let theiler = config.theiler.unwrap_or(embedding.tau);
    let fit = config.fit.unwrap_or((1, 10));
    let entropy_m = config.entropy_m.unwrap_or(2);
    let r_frac = config.r_frac.unwrap_or(0.2);
    let radii = match &config.radii {
        Some(r) => r.clone(),
        None => default_radii(x, 24)?,
    };
    let scales = match &config.scales {
        Some(s) => s.clone(),
        None => default_scales(x.len(), 12)?,
    };

    let report = ChaosReport {
        lambda: lyapunov_rosenstein(x, &embedding, theiler, fit)?,
        d2: correlation_dimension(x, &embedding, theiler, &radii)?,
        apen: approx_entropy(x, entropy_m, r_frac)?,
        sampen: sample_entropy(x, entropy_m, r_frac)?,
        dfa_alpha: dfa(x, &scales)?,
        spectral_entropy: spectral_entropy(x)?,
        n: x.len(),
        params: ChaosParams { embedding, theiler, fit, entropy_m, r_frac },
        source: source.to_string(),
    };
    if report.d2 < -0.05 {
        return Err(CmgError::numerical("negative correlation dimension"));
    }
    Ok(report)
}

/// Gate thresholds; every cutoff is configurable.
#[derive(Debug, Clone, Copy)]
pub struct GateThresholds {
    /// Pass requires lambda strictly above this.
    pub lambda_min: f64,
    /// Warn when |d2 - round(d2)| falls below this.
    pub integer_dim_tol: f64,
    /// Warn when sample entropy falls below this.
    pub sampen_min: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        GateThresholds { lambda_min: 0.0, integer_dim_tol: 0.05, sampen_min: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateOutcome {
    pub pass: bool,
    /// Fail reason first when failing, then any non-fatal warnings.
    pub reasons: Vec<String>,
}

/// Chaos gate: pass iff the Lyapunov exponent is positive. Integer-like
/// correlation dimension and near-zero sample entropy add warnings without
/// failing the gate.
pub fn chaos_gate(report: &ChaosReport, thresholds: &GateThresholds) -> GateOutcome {
    let mut reasons = Vec::new();
    let pass = report.lambda > thresholds.lambda_min;
    if !pass {
        reasons.push("non-positive Lyapunov exponent".to_string());
    }
    if (report.d2 - report.d2.round()).abs() < thresholds.integer_dim_tol {
        reasons.push(format!(
            "integer-like correlation dimension ({})",
            fmt_f64(report.d2)
        ));
    }
    if report.sampen < thresholds.sampen_min {
        reasons.push(format!("near-zero sample entropy ({})", fmt_f64(report.sampen)));
    }
    GateOutcome { pass, reasons }
}

/// Embeds the series and renders one CSV row per point (no header). The
/// optional window selects a consecutive run of embedded points. Unlike the
/// metric estimators, short exports are allowed: plotting a handful of
/// points is legitimate.
pub fn export_phase_space(
    x: &[f64],
    spec: &EmbeddingSpec,
    window: Option<std::ops::Range<usize>>,
) -> Result<String> {
    let count = spec
        .point_count(x.len())
        .filter(|c| *c >= 1)
        .ok_or_else(|| CmgError::invalid("series too short for embedding"))?;
    let range = window.unwrap_or(0..count);
    if range.start >= range.end || range.end > count {
        return Err(CmgError::invalid("window out of range"));
    }
    let mut out = String::new();
    for i in range {
        for j in 0..spec.m {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(x[i + j * spec.tau]));
        }
        out.push('\n');
    }
    Ok(out)
}
