//! Finite-difference validation of the analytic gradients.

use crate::dataset::SequenceWindow;
use crate::error::Result;

use super::network::{forward, loss_and_grad};
use super::params::CmgParams;

/// Batch loss without gradients, for finite-difference probes.
pub fn batch_loss(params: &CmgParams, windows: &[&SequenceWindow]) -> Result<f64> {
    let c = params.config;
    let mut total = 0.0;
    let denom = (windows.len() * c.window) as f64;
    for w in windows {
        let logits = forward(params, w)?;
        for pos in 0..c.window {
            let row = logits.row(pos);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
            total -= (row[w.labels[pos]] - max - z.ln()) / denom;
        }
    }
    Ok(total)
}

/// Worst relative disagreement between analytic and central-difference
/// gradients over every element of every tensor. The relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3); the floor keeps
/// near-zero pairs from blowing up the ratio.
pub fn max_gradient_error(
    params: &CmgParams,
    windows: &[&SequenceWindow],
    eps: f64,
) -> Result<(f64, &'static str)> {
    let (_, grads) = loss_and_grad(params, windows)?;
    let mut worst = 0.0f64;
    let mut worst_tensor = "";
    let mut probe = params.clone();
    let names = CmgParams::tensor_names();
    for t_idx in 0..names.len() {
        let (rows, cols) = grads.tensors()[t_idx].1.dim();
        for i in 0..rows {
            for j in 0..cols {
                {
                    let mut ts = probe.tensors_mut();
                    ts[t_idx].1[(i, j)] += eps;
                }
                let hi = batch_loss(&probe, windows)?;
                {
                    let mut ts = probe.tensors_mut();
                    ts[t_idx].1[(i, j)] -= 2.0 * eps;
                }
                let lo = batch_loss(&probe, windows)?;
                {
                    let mut ts = probe.tensors_mut();
                    ts[t_idx].1[(i, j)] += eps;
                }
                let numeric = (hi - lo) / (2.0 * eps);
                let analytic = grads.tensors()[t_idx].1[(i, j)];
                let rel = (analytic - numeric).abs()
                    / analytic.abs().max(numeric.abs()).max(1e-3);
                if rel > worst {
                    worst = rel;
                    worst_tensor = names[t_idx];
                }
            }
        }
    }
    Ok((worst, worst_tensor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::network::test_util::{random_window, tiny_config};
    use crate::model::params::init_params;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let params = init_params(tiny_config(31)).unwrap();
        let w1 = random_window(&mut rng, 4, 5);
        let w2 = random_window(&mut rng, 4, 5);
        let (err, tensor) = max_gradient_error(&params, &[&w1, &w2], 1e-4).unwrap();
        assert!(err < 1e-4, "max rel error {err} in {tensor}");
    }

    #[test]
    fn loss_only_path_agrees_with_the_training_loss() {
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        let params = init_params(tiny_config(32)).unwrap();
        let w = random_window(&mut rng, 4, 5);
        let (full, _) = loss_and_grad(&params, &[&w]).unwrap();
        let lean = batch_loss(&params, &[&w]).unwrap();
        assert!((full - lean).abs() < 1e-12);
    }
}
