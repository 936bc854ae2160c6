//! The full network: embedding, encoder block, decoder block, LSTM head,
//! classifier; forward, loss with exact gradients, and prediction.

use ndarray::{Array2, ArrayView2, Axis};

use crate::dataset::{class_to_label, SequenceWindow};
use crate::error::{CmgError, Result};

use super::attention::{
    attention_backward, attention_forward, diagonal_mask, full_mask, transposed_causal_mask,
    AttnCache, AttnWeights, Mask,
};
use super::layers::{
    ff_backward, ff_forward, layer_norm_backward, layer_norm_forward, FfCache, LnCache,
};
use super::lstm::{lstm_backward, lstm_forward, LstmCache};
use super::params::CmgParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Bullish,
    Bearish,
}

fn colsum(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(Axis(0)).insert_axis(Axis(0))
}

fn check_finite(name: &str, m: &Array2<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CmgError::numerical(format!("non-finite activation in {name}")))
    }
}

fn enc_attn<'a>(p: &'a CmgParams) -> AttnWeights<'a> {
    AttnWeights {
        wq: &p.enc_wq,
        bq: &p.enc_bq,
        wk: &p.enc_wk,
        bk: &p.enc_bk,
        wv: &p.enc_wv,
        bv: &p.enc_bv,
        wo: &p.enc_wo,
        bo: &p.enc_bo,
    }
}

fn dec_attn<'a>(p: &'a CmgParams) -> AttnWeights<'a> {
    AttnWeights {
        wq: &p.dec_wq,
        bq: &p.dec_bq,
        wk: &p.dec_wk,
        bk: &p.dec_bk,
        wv: &p.dec_wv,
        bv: &p.dec_bv,
        wo: &p.dec_wo,
        bo: &p.dec_bo,
    }
}

fn crs_attn<'a>(p: &'a CmgParams) -> AttnWeights<'a> {
    AttnWeights {
        wq: &p.crs_wq,
        bq: &p.crs_bq,
        wk: &p.crs_wk,
        bk: &p.crs_bk,
        wv: &p.crs_wv,
        bv: &p.crs_bv,
        wo: &p.crs_wo,
        bo: &p.crs_bo,
    }
}

/// Input projection plus trainable positional table.
pub fn embed(params: &CmgParams, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let c = &params.config;
    if x.nrows() != c.window || x.ncols() != c.n_features {
        return Err(CmgError::invalid(format!(
            "window shape {}x{} does not match config {}x{}",
            x.nrows(),
            x.ncols(),
            c.window,
            c.n_features
        )));
    }
    let e0 = x.dot(&params.w_in) + &params.b_in + &params.pos;
    check_finite("embedding", &e0)?;
    Ok(e0)
}

struct EncoderCache {
    ln1: LnCache,
    attn: AttnCache,
    ln2: LnCache,
    ff: FfCache,
}

fn encoder_block(params: &CmgParams, e0: &Array2<f64>) -> Result<(Array2<f64>, EncoderCache)> {
    let l = e0.nrows();
    let (y1, ln1) = layer_norm_forward(e0, &params.ln_enc_attn_g, &params.ln_enc_attn_b);
    let (attn_out, attn) =
        attention_forward(&enc_attn(params), &y1, &y1, &full_mask(l), params.config.n_heads)?;
    let a_e = e0 + &attn_out;
    check_finite("encoder self-attention", &a_e)?;
    let (y2, ln2) = layer_norm_forward(&a_e, &params.ln_enc_ff_g, &params.ln_enc_ff_b);
    let (ff_out, ff) = ff_forward(
        &params.enc_ff_w1,
        &params.enc_ff_b1,
        &params.enc_ff_w2,
        &params.enc_ff_b2,
        &y2,
    );
    let memory = &a_e + &ff_out;
    check_finite("encoder feed-forward", &memory)?;
    Ok((memory, EncoderCache { ln1, attn, ln2, ff }))
}

struct DecoderCache {
    ln3: LnCache,
    self_attn: AttnCache,
    ln4: LnCache,
    cross: AttnCache,
    ln5: LnCache,
    ff: FfCache,
    lstm: LstmCache,
    h_out: Array2<f64>,
}

fn decoder_stack(
    params: &CmgParams,
    e0: &Array2<f64>,
    memory: &Array2<f64>,
    cross_mask: &Mask,
) -> Result<(Array2<f64>, DecoderCache)> {
    let l = e0.nrows();
    let heads = params.config.n_heads;
    let (y3, ln3) = layer_norm_forward(e0, &params.ln_dec_self_g, &params.ln_dec_self_b);
    let (self_out, self_attn) =
        attention_forward(&dec_attn(params), &y3, &y3, &diagonal_mask(l), heads)?;
    let a_d = e0 + &self_out;
    check_finite("decoder self-attention", &a_d)?;
    let (y4, ln4) = layer_norm_forward(&a_d, &params.ln_dec_cross_g, &params.ln_dec_cross_b);
    let (cross_out, cross) = attention_forward(&crs_attn(params), &y4, memory, cross_mask, heads)?;
    let b_d = &a_d + &cross_out;
    check_finite("cross-attention", &b_d)?;
    let (y5, ln5) = layer_norm_forward(&b_d, &params.ln_dec_ff_g, &params.ln_dec_ff_b);
    let (ff_out, ff) = ff_forward(
        &params.dec_ff_w1,
        &params.dec_ff_b1,
        &params.dec_ff_w2,
        &params.dec_ff_b2,
        &y5,
    );
    let d_out = &b_d + &ff_out;
    check_finite("decoder feed-forward", &d_out)?;
    let (h_out, lstm) = lstm_forward(&params.lstm_wx, &params.lstm_wh, &params.lstm_b, &d_out);
    check_finite("lstm", &h_out)?;
    let logits = h_out.dot(&params.cls_w) + &params.cls_b;
    check_finite("classifier", &logits)?;
    let cache =
        DecoderCache { ln3, self_attn, ln4, cross, ln5, ff, lstm, h_out };
    Ok((logits, cache))
}

/// Embeds and runs the encoder block; the result is the cross-attention
/// memory.
pub fn encode(params: &CmgParams, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let e0 = embed(params, x)?;
    Ok(encoder_block(params, &e0)?.0)
}

/// Embeds and runs the decoder stack against the supplied memory and
/// cross-attention mask. Exposed separately so the future-only masking can
/// be probed against perturbed memory rows and alternative masks.
pub fn decode(
    params: &CmgParams,
    x: ArrayView2<f64>,
    memory: &Array2<f64>,
    cross_mask: &Mask,
) -> Result<Array2<f64>> {
    let e0 = embed(params, x)?;
    Ok(decoder_stack(params, &e0, memory, cross_mask)?.0)
}

/// Full forward pass with the future-only cross mask: logits, one row per
/// window position, one column per class.
pub fn forward(params: &CmgParams, window: &SequenceWindow) -> Result<Array2<f64>> {
    let x = window.encoder_input();
    let e0 = embed(params, x)?;
    let (memory, _) = encoder_block(params, &e0)?;
    let mask = transposed_causal_mask(params.config.window);
    Ok(decoder_stack(params, &e0, &memory, &mask)?.0)
}

/// Softmax cross-entropy averaged over every position of every window,
/// with analytic gradients for all tensors.
pub fn loss_and_grad(
    params: &CmgParams,
    windows: &[&SequenceWindow],
) -> Result<(f64, CmgParams)> {
    if windows.is_empty() {
        return Err(CmgError::invalid("empty batch"));
    }
    let c = params.config;
    let mask = transposed_causal_mask(c.window);
    let mut grads = CmgParams::zeros(c)?;
    let mut total_loss = 0.0;
    let denom = (windows.len() * c.window) as f64;

    for window in windows {
        let x = window.encoder_input();
        let e0 = embed(params, x)?;
        let (memory, enc) = encoder_block(params, &e0)?;
        let (logits, dec) = decoder_stack(params, &e0, &memory, &mask)?;

        // Softmax cross-entropy per position; dlogits = (p - onehot)/denom.
        let mut dlogits = Array2::zeros(logits.dim());
        for pos in 0..c.window {
            let row = logits.row(pos);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let label = window.labels[pos];
            total_loss -= ((exps[label] / z).ln()) / denom;
            for k in 0..c.n_classes {
                let p = exps[k] / z;
                dlogits[(pos, k)] = (p - if k == label { 1.0 } else { 0.0 }) / denom;
            }
        }

        backward_window(params, &mut grads, &e0, &enc, &dec, &memory, &mask, x, &dlogits);
    }
    if !total_loss.is_finite() {
        return Err(CmgError::numerical("non-finite loss"));
    }
    Ok((total_loss, grads))
}

#[allow(clippy::too_many_arguments)]
fn backward_window(
    params: &CmgParams,
    grads: &mut CmgParams,
    e0: &Array2<f64>,
    enc: &EncoderCache,
    dec: &DecoderCache,
    _memory: &Array2<f64>,
    cross_mask: &Mask,
    x: ArrayView2<f64>,
    dlogits: &Array2<f64>,
) {
    let heads = params.config.n_heads;
    let l = e0.nrows();

    grads.cls_w += &dec.h_out.t().dot(dlogits);
    grads.cls_b += &colsum(dlogits);
    let dh_out = dlogits.dot(&params.cls_w.t());

    let (dd_out, dwx, dwh, db) =
        lstm_backward(&params.lstm_wx, &params.lstm_wh, &dec.lstm, &dh_out);
    grads.lstm_wx += &dwx;
    grads.lstm_wh += &dwh;
    grads.lstm_b += &db;

    // Decoder feed-forward residual.
    let (dy5, dw1, db1, dw2, db2) =
        ff_backward(&params.dec_ff_w1, &params.dec_ff_w2, &dec.ff, &dd_out);
    grads.dec_ff_w1 += &dw1;
    grads.dec_ff_b1 += &db1;
    grads.dec_ff_w2 += &dw2;
    grads.dec_ff_b2 += &db2;
    let (db_d_ln, dg5, dbeta5) = layer_norm_backward(&dec.ln5, &params.ln_dec_ff_g, &dy5);
    grads.ln_dec_ff_g += &dg5;
    grads.ln_dec_ff_b += &dbeta5;
    let db_d = &dd_out + &db_d_ln;

    // Cross-attention residual: queries from the decoder stream, keys and
    // values from the encoder memory.
    let cg = attention_backward(&crs_attn(params), &dec.cross, cross_mask, heads, &db_d);
    grads.crs_wq += &cg.wq;
    grads.crs_bq += &cg.bq;
    grads.crs_wk += &cg.wk;
    grads.crs_bk += &cg.bk;
    grads.crs_wv += &cg.wv;
    grads.crs_bv += &cg.bv;
    grads.crs_wo += &cg.wo;
    grads.crs_bo += &cg.bo;
    let (da_d_ln, dg4, dbeta4) = layer_norm_backward(&dec.ln4, &params.ln_dec_cross_g, &cg.xq);
    grads.ln_dec_cross_g += &dg4;
    grads.ln_dec_cross_b += &dbeta4;
    let da_d = &db_d + &da_d_ln;
    let d_memory = cg.xkv;

    // Decoder self-attention residual (query and key/value share one input).
    let sg = attention_backward(&dec_attn(params), &dec.self_attn, &diagonal_mask(l), heads, &da_d);
    grads.dec_wq += &sg.wq;
    grads.dec_bq += &sg.bq;
    grads.dec_wk += &sg.wk;
    grads.dec_bk += &sg.bk;
    grads.dec_wv += &sg.wv;
    grads.dec_bv += &sg.bv;
    grads.dec_wo += &sg.wo;
    grads.dec_bo += &sg.bo;
    let dy3 = &sg.xq + &sg.xkv;
    let (de0_dec_ln, dg3, dbeta3) = layer_norm_backward(&dec.ln3, &params.ln_dec_self_g, &dy3);
    grads.ln_dec_self_g += &dg3;
    grads.ln_dec_self_b += &dbeta3;
    let de0_dec = &da_d + &de0_dec_ln;

    // Encoder feed-forward residual.
    let (dy2, dw1e, db1e, dw2e, db2e) =
        ff_backward(&params.enc_ff_w1, &params.enc_ff_w2, &enc.ff, &d_memory);
    grads.enc_ff_w1 += &dw1e;
    grads.enc_ff_b1 += &db1e;
    grads.enc_ff_w2 += &dw2e;
    grads.enc_ff_b2 += &db2e;
    let (da_e_ln, dg2, dbeta2) = layer_norm_backward(&enc.ln2, &params.ln_enc_ff_g, &dy2);
    grads.ln_enc_ff_g += &dg2;
    grads.ln_enc_ff_b += &dbeta2;
    let da_e = &d_memory + &da_e_ln;

    // Encoder self-attention residual.
    let eg = attention_backward(&enc_attn(params), &enc.attn, &full_mask(l), heads, &da_e);
    grads.enc_wq += &eg.wq;
    grads.enc_bq += &eg.bq;
    grads.enc_wk += &eg.wk;
    grads.enc_bk += &eg.bk;
    grads.enc_wv += &eg.wv;
    grads.enc_bv += &eg.bv;
    grads.enc_wo += &eg.wo;
    grads.enc_bo += &eg.bo;
    let dy1 = &eg.xq + &eg.xkv;
    let (de0_enc_ln, dg1, dbeta1) = layer_norm_backward(&enc.ln1, &params.ln_enc_attn_g, &dy1);
    grads.ln_enc_attn_g += &dg1;
    grads.ln_enc_attn_b += &dbeta1;
    let de0_enc = &da_e + &de0_enc_ln;

    // The embedding feeds both streams.
    let de0 = &de0_dec + &de0_enc;
    grads.pos += &de0;
    grads.b_in += &colsum(&de0);
    grads.w_in += &x.t().dot(&de0);
}

/// Class and direction from the last position's logits; ties break toward
/// the lower class index.
pub fn predict_next(params: &CmgParams, window: &SequenceWindow) -> Result<(i8, Direction)> {
    let logits = forward(params, window)?;
    let last = logits.row(logits.nrows() - 1);
    let mut best = 0usize;
    for k in 1..last.len() {
        if last[k] > last[best] {
            best = k;
        }
    }
    let label = class_to_label(best)
        .ok_or_else(|| CmgError::invalid("class index outside the label set"))?;
    let direction = if label > 0 { Direction::Bullish } else { Direction::Bearish };
    Ok((label, direction))
}

#[cfg(test)]
pub(crate) mod test_util {
    use crate::dataset::{make_windows, EventSample, SequenceWindow};
    use crate::model::params::ModelConfig;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    pub(crate) fn tiny_config(seed: u64) -> ModelConfig {
        ModelConfig {
            d_model: 8,
            n_heads: 2,
            d_ff: 16,
            lstm_hidden: 8,
            window: 4,
            n_features: 5,
            n_classes: 6,
            seed,
        }
    }

    pub(crate) fn random_window(
        rng: &mut ChaCha20Rng,
        l: usize,
        f: usize,
    ) -> SequenceWindow {
        let labels = [-3i8, -2, -1, 1, 2, 3];
        let samples: Vec<EventSample> = (0..l)
            .map(|i| EventSample {
                features: (0..f).map(|_| rng.random_range(-10.0..10.0)).collect(),
                label: labels[rng.random_range(0..6)],
                day_id: 0,
                bar_index: i,
                outcome_bar_index: i + 1,
            })
            .collect();
        make_windows(&samples, l).unwrap().pop().unwrap()
    }
}
