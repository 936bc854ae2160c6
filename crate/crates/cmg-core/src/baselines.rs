//! Classical baselines trained on the same event samples as the sequence
//! model: six-class softmax regression, binary direction regression, and
//! Gaussian naive Bayes.

use ndarray::Array2;

use crate::dataset::EventSample;
use crate::error::{CmgError, Result};
use crate::float_fmt::fmt_f64;
use crate::model::Direction;

const CANONICAL_CLASSES: [i8; 6] = [-3, -2, -1, 1, 2, 3];

fn direction_of(label: i8) -> Direction {
    if label > 0 {
        Direction::Bullish
    } else {
        Direction::Bearish
    }
}

/// Linear classifier: score_c = w_c . x + b_c, argmax wins, ties to the
/// lower class index.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Array2<f64>,
    pub bias: Vec<f64>,
    pub classes: Vec<i8>,
}

impl LinearModel {
    pub fn scores(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.weights.ncols() {
            return Err(CmgError::invalid("feature dimension mismatch"));
        }
        Ok((0..self.classes.len())
            .map(|c| {
                self.bias[c]
                    + features
                        .iter()
                        .enumerate()
                        .map(|(j, x)| self.weights[(c, j)] * x)
                        .sum::<f64>()
            })
            .collect())
    }

    pub fn predict(&self, features: &[f64]) -> Result<(i8, Direction)> {
        let scores = self.scores(features)?;
        let mut best = 0usize;
        for c in 1..scores.len() {
            if scores[c] > scores[best] {
                best = c;
            }
        }
        let class = self.classes[best];
        Ok((class, direction_of(class)))
    }

    /// Human-inspectable dump: one row per class with bias then weights.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,bias");
        for j in 0..self.weights.ncols() {
            out.push_str(&format!(",w{j}"));
        }
        out.push('\n');
        for (c, label) in self.classes.iter().enumerate() {
            out.push_str(&format!("{label},{}", fmt_f64(self.bias[c])));
            for j in 0..self.weights.ncols() {
                out.push_str(&format!(",{}", fmt_f64(self.weights[(c, j)])));
            }
            out.push('\n');
        }
        out
    }
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

fn validate_lr_inputs(samples: &[EventSample], lr: f64, epochs: usize) -> Result<usize> {
    if samples.is_empty() {
        return Err(CmgError::invalid("no samples"));
    }
    if !(lr.is_finite() && lr > 0.0) || epochs < 1 {
        return Err(CmgError::invalid("learning rate and epochs must be positive"));
    }
    let f = samples[0].features.len();
    if samples.iter().any(|s| s.features.len() != f) {
        return Err(CmgError::invalid("ragged feature vectors"));
    }
    Ok(f)
}

/// Full-batch softmax-regression gradient descent over classes and targets
/// supplied by the caller. L2 applies to weights only, so with heavy
/// regularization the bias still learns the class priors.
fn fit_softmax(
    samples: &[EventSample],
    classes: &[i8],
    targets: &[usize],
    l2: f64,
    lr: f64,
    epochs: usize,
) -> Result<LinearModel> {
    let f = validate_lr_inputs(samples, lr, epochs)?;
    let c = classes.len();
    let n = samples.len() as f64;
    let mut weights = Array2::<f64>::zeros((c, f));
    let mut bias = vec![0.0; c];
    for _ in 0..epochs {
        let mut gw = Array2::<f64>::zeros((c, f));
        let mut gb = vec![0.0; c];
        for (s, target) in samples.iter().zip(targets) {
            let mut p: Vec<f64> = (0..c)
                .map(|k| {
                    bias[k]
                        + s.features
                            .iter()
                            .enumerate()
                            .map(|(j, x)| weights[(k, j)] * x)
                            .sum::<f64>()
                })
                .collect();
            softmax_in_place(&mut p);
            for k in 0..c {
                let err = p[k] - if k == *target { 1.0 } else { 0.0 };
                gb[k] += err / n;
                for (j, x) in s.features.iter().enumerate() {
                    gw[(k, j)] += err * x / n;
                }
            }
        }
        // Data-gradient step, then exact shrinkage for the quadratic
        // penalty; stays stable even when lr * l2 >> 1. Bias is never
        // shrunk so it can absorb the class priors.
        let shrink = 1.0 / (1.0 + lr * l2);
        for k in 0..c {
            bias[k] -= lr * gb[k];
            for j in 0..f {
                weights[(k, j)] = (weights[(k, j)] - lr * gw[(k, j)]) * shrink;
            }
        }
    }
    if weights.iter().any(|v| !v.is_finite()) || bias.iter().any(|v| !v.is_finite()) {
        return Err(CmgError::numerical("regression diverged"));
    }
    Ok(LinearModel { weights, bias, classes: classes.to_vec() })
}

/// Six-class softmax regression over the canonical label order.
pub fn fit_multinomial_lr(
    samples: &[EventSample],
    l2: f64,
    lr: f64,
    epochs: usize,
) -> Result<LinearModel> {
    let mut present: Vec<i8> = samples.iter().map(|s| s.label).collect();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(CmgError::invalid("single-class data"));
    }
    let targets: Vec<usize> = samples
        .iter()
        .map(|s| {
            CANONICAL_CLASSES
                .iter()
                .position(|c| *c == s.label)
                .ok_or_else(|| CmgError::invalid("label outside the six classes"))
        })
        .collect::<Result<_>>()?;
    fit_softmax(samples, &CANONICAL_CLASSES, &targets, l2, lr, epochs)
}

/// Binary logistic regression on direction (sign of the class).
pub fn fit_binary_lr(
    samples: &[EventSample],
    l2: f64,
    lr: f64,
    epochs: usize,
) -> Result<LinearModel> {
    let f = validate_lr_inputs(samples, lr, epochs)?;
    let ys: Vec<f64> = samples.iter().map(|s| if s.label > 0 { 1.0 } else { 0.0 }).collect();
    if ys.iter().all(|y| *y == 1.0) || ys.iter().all(|y| *y == 0.0) {
        return Err(CmgError::invalid("single-class data"));
    }
    let n = samples.len() as f64;
    let mut w = vec![0.0; f];
    let mut b = 0.0;
    for _ in 0..epochs {
        let mut gw = vec![0.0; f];
        let mut gb = 0.0;
        for (s, y) in samples.iter().zip(&ys) {
            let z = b + w
                .iter()
                .zip(&s.features)
                .map(|(wi, x)| wi * x)
                .sum::<f64>();
            let p = 1.0 / (1.0 + (-z).exp());
            let err = p - y;
            gb += err / n;
            for (j, x) in s.features.iter().enumerate() {
                gw[j] += err * x / n;
            }
        }
        let shrink = 1.0 / (1.0 + lr * l2);
        b -= lr * gb;
        for j in 0..f {
            w[j] = (w[j] - lr * gw[j]) * shrink;
        }
    }
    if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
        return Err(CmgError::numerical("regression diverged"));
    }
    // Stored as a two-row model with class -1 as the zero reference, so
    // argmax reproduces sign(w.x + b) and exact zero favors bearish.
    let mut weights = Array2::zeros((2, f));
    for j in 0..f {
        weights[(1, j)] = w[j];
    }
    Ok(LinearModel { weights, bias: vec![0.0, b], classes: vec![-1, 1] })
}

/// Per-class Gaussians with a shared variance floor.
#[derive(Debug, Clone, PartialEq)]
pub struct GnbModel {
    pub classes: Vec<i8>,
    pub priors: Vec<f64>,
    pub means: Array2<f64>,
    pub vars: Array2<f64>,
}

pub const GNB_VAR_FLOOR: f64 = 1e-9;

pub fn fit_gnb(samples: &[EventSample]) -> Result<GnbModel> {
    if samples.is_empty() {
        return Err(CmgError::invalid("no samples"));
    }
    let f = samples[0].features.len();
    let mut classes: Vec<i8> = samples.iter().map(|s| s.label).collect();
    classes.sort_unstable();
    classes.dedup();
    let c = classes.len();
    let mut counts = vec![0usize; c];
    let mut means = Array2::<f64>::zeros((c, f));
    for s in samples {
        if s.features.len() != f {
            return Err(CmgError::invalid("ragged feature vectors"));
        }
        let k = classes.binary_search(&s.label).unwrap();
        counts[k] += 1;
        for (j, x) in s.features.iter().enumerate() {
            means[(k, j)] += x;
        }
    }
    if let Some(k) = counts.iter().position(|n| *n < 2) {
        return Err(CmgError::invalid(format!(
            "class {} has fewer than 2 samples",
            classes[k]
        )));
    }
    for k in 0..c {
        for j in 0..f {
            means[(k, j)] /= counts[k] as f64;
        }
    }
    let mut vars = Array2::<f64>::zeros((c, f));
    for s in samples {
        let k = classes.binary_search(&s.label).unwrap();
        for (j, x) in s.features.iter().enumerate() {
            let d = x - means[(k, j)];
            vars[(k, j)] += d * d;
        }
    }
    for k in 0..c {
        for j in 0..f {
            vars[(k, j)] = (vars[(k, j)] / counts[k] as f64).max(GNB_VAR_FLOOR);
        }
    }
    let n = samples.len() as f64;
    let priors: Vec<f64> = counts.iter().map(|cnt| *cnt as f64 / n).collect();
    Ok(GnbModel { classes, priors, means, vars })
}

impl GnbModel {
    fn log_joint(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.means.ncols() {
            return Err(CmgError::invalid("feature dimension mismatch"));
        }
        Ok((0..self.classes.len())
            .map(|k| {
                let mut lp = self.priors[k].ln();
                for (j, x) in features.iter().enumerate() {
                    let v = self.vars[(k, j)];
                    let d = x - self.means[(k, j)];
                    lp += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - d * d / (2.0 * v);
                }
                lp
            })
            .collect())
    }

    pub fn predict(&self, features: &[f64]) -> Result<(i8, Direction)> {
        let lp = self.log_joint(features)?;
        let mut best = 0usize;
        for k in 1..lp.len() {
            if lp[k] > lp[best] {
                best = k;
            }
        }
        let class = self.classes[best];
        Ok((class, direction_of(class)))
    }

    /// Normalized class posteriors.
    pub fn posterior(&self, features: &[f64]) -> Result<Vec<f64>> {
        let mut lp = self.log_joint(features)?;
        softmax_in_place(&mut lp);
        Ok(lp)
    }

    pub fn to_csv(&self) -> String {
        let f = self.means.ncols();
        let mut out = String::from("class,role,prior");
        for j in 0..f {
            out.push_str(&format!(",f{j}"));
        }
        out.push('\n');
        for (k, label) in self.classes.iter().enumerate() {
            for (role, row) in [("mean", &self.means), ("var", &self.vars)] {
                out.push_str(&format!("{label},{role},{}", fmt_f64(self.priors[k])));
                for j in 0..f {
                    out.push_str(&format!(",{}", fmt_f64(row[(k, j)])));
                }
                out.push('\n');
            }
        }
        out
    }
}
