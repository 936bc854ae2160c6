//! Adaptive-moment training with global-norm clipping and early stopping
//! on validation accuracy.

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use crate::dataset::SequenceWindow;
use crate::derive_seed;
use crate::error::{CmgError, Result};

use super::network::{forward, loss_and_grad};
use super::params::CmgParams;

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub clip_norm: f64,
    /// Fraction of train days carved out for validation by the pipeline.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 200,
            patience: 10,
            batch_size: 32,
            clip_norm: 1.0,
            val_fraction: 0.15,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience < 1 {
            return Err(CmgError::invalid("patience must be >= 1"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return Err(CmgError::invalid("validation fraction must lie in (0, 0.5)"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(CmgError::invalid("learning rate must be finite and >= 0"));
        }
        if self.batch_size < 1 || self.max_epochs < 1 {
            return Err(CmgError::invalid("batch size and epochs must be >= 1"));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return Err(CmgError::invalid("clip norm must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the best validation accuracy.
    pub params: CmgParams,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_accuracy: f64,
}

/// Fraction of windows whose last-position argmax matches the last label.
pub fn last_position_accuracy(params: &CmgParams, windows: &[SequenceWindow]) -> Result<f64> {
    if windows.is_empty() {
        return Err(CmgError::invalid("no windows to score"));
    }
    let mut hits = 0usize;
    for w in windows {
        let logits = forward(params, w)?;
        let last = logits.row(logits.nrows() - 1);
        let mut best = 0usize;
        for k in 1..last.len() {
            if last[k] > last[best] {
                best = k;
            }
        }
        if best == w.labels[w.labels.len() - 1] {
            hits += 1;
        }
    }
    Ok(hits as f64 / windows.len() as f64)
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    m: CmgParams,
    v: CmgParams,
    t: u64,
}

impl Adam {
    fn new(template: &CmgParams) -> Result<Self> {
        Ok(Adam {
            m: CmgParams::zeros(template.config)?,
            v: CmgParams::zeros(template.config)?,
            t: 0,
        })
    }

    fn step(&mut self, params: &mut CmgParams, grads: &CmgParams, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        let mut ps = params.tensors_mut();
        let gs = grads.tensors();
        let mut ms = self.m.tensors_mut();
        let mut vs = self.v.tensors_mut();
        for idx in 0..ps.len() {
            let p = &mut ps[idx].1;
            let g = gs[idx].1;
            let m = &mut ms[idx].1;
            let v = &mut vs[idx].1;
            for ((pe, ge), (me, ve)) in
                p.iter_mut().zip(g.iter()).zip(m.iter_mut().zip(v.iter_mut()))
            {
                *me = BETA1 * *me + (1.0 - BETA1) * ge;
                *ve = BETA2 * *ve + (1.0 - BETA2) * ge * ge;
                let mhat = *me / bc1;
                let vhat = *ve / bc2;
                *pe -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
        }
    }
}

fn clip_global_norm(grads: &mut CmgParams, max_norm: f64) {
    let norm: f64 = grads
        .tensors()
        .iter()
        .map(|(_, t)| t.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for (_, t) in grads.tensors_mut() {
            t.mapv_inplace(|v| v * scale);
        }
    }
}

/// Trains until validation last-position accuracy stops improving for
/// `patience` epochs, shuffling batches with a per-epoch seeded
/// permutation. Returns the best-accuracy snapshot.
pub fn train(
    initial: &CmgParams,
    train_windows: &[SequenceWindow],
    val_windows: &[SequenceWindow],
    tcfg: &TrainConfig,
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    if train_windows.is_empty() || val_windows.is_empty() {
        return Err(CmgError::invalid("train and validation sets must be nonempty"));
    }
    let mut params = initial.clone();
    let mut adam = Adam::new(&params)?;
    let mut history = Vec::new();
    let mut best = params.clone();
    let mut best_accuracy = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut stale = 0usize;

    for epoch in 1..=tcfg.max_epochs {
        let mut order: Vec<usize> = (0..train_windows.len()).collect();
        let shuffle_seed = derive_seed(params.config.seed, "shuffle", epoch as u64);
        order.shuffle(&mut ChaCha20Rng::seed_from_u64(shuffle_seed));

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(tcfg.batch_size) {
            let batch: Vec<&SequenceWindow> =
                chunk.iter().map(|i| &train_windows[*i]).collect();
            let (loss, mut grads) = loss_and_grad(&params, &batch)?;
            if !loss.is_finite() {
                return Err(CmgError::numerical(format!("divergence at epoch {epoch}")));
            }
            clip_global_norm(&mut grads, tcfg.clip_norm);
            adam.step(&mut params, &grads, tcfg.learning_rate);
            epoch_loss += loss;
            batches += 1;
        }

        let val_accuracy = last_position_accuracy(&params, val_windows)?;
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / batches as f64,
            val_accuracy,
        });
        if val_accuracy > best_accuracy {
            best_accuracy = val_accuracy;
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= tcfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome { params: best, history, best_epoch, best_accuracy })
}
