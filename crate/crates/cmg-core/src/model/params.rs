//! Model configuration, parameter tensors, initialization, and the
//! checkpoint format.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use crate::error::{CmgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub lstm_hidden: usize,
    /// Window length L.
    pub window: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Default sizes for a given window and feature count.
    pub fn default_for(window: usize, n_features: usize, seed: u64) -> Self {
        ModelConfig {
            d_model: 32,
            n_heads: 2,
            d_ff: 64,
            lstm_hidden: 32,
            window,
            n_features,
            n_classes: 6,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.d_model,
            self.n_heads,
            self.d_ff,
            self.lstm_hidden,
            self.window,
            self.n_features,
            self.n_classes,
        ];
        if dims.iter().any(|d| *d < 1) {
            return Err(CmgError::invalid("model dimensions must be >= 1"));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(CmgError::invalid("head count must divide d_model"));
        }
        Ok(())
    }
}

/// Every trainable tensor. Biases and per-row affine terms are 1xN so the
/// whole set iterates uniformly as matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CmgParams {
    pub config: ModelConfig,
    pub w_in: Array2<f64>,
    pub b_in: Array2<f64>,
    pub pos: Array2<f64>,
    pub ln_enc_attn_g: Array2<f64>,
    pub ln_enc_attn_b: Array2<f64>,
    pub enc_wq: Array2<f64>,
    pub enc_bq: Array2<f64>,
    pub enc_wk: Array2<f64>,
    pub enc_bk: Array2<f64>,
    pub enc_wv: Array2<f64>,
    pub enc_bv: Array2<f64>,
    pub enc_wo: Array2<f64>,
    pub enc_bo: Array2<f64>,
    pub ln_enc_ff_g: Array2<f64>,
    pub ln_enc_ff_b: Array2<f64>,
    pub enc_ff_w1: Array2<f64>,
    pub enc_ff_b1: Array2<f64>,
    pub enc_ff_w2: Array2<f64>,
    pub enc_ff_b2: Array2<f64>,
    pub ln_dec_self_g: Array2<f64>,
    pub ln_dec_self_b: Array2<f64>,
    pub dec_wq: Array2<f64>,
    pub dec_bq: Array2<f64>,
    pub dec_wk: Array2<f64>,
    pub dec_bk: Array2<f64>,
    pub dec_wv: Array2<f64>,
    pub dec_bv: Array2<f64>,
    pub dec_wo: Array2<f64>,
    pub dec_bo: Array2<f64>,
    pub ln_dec_cross_g: Array2<f64>,
    pub ln_dec_cross_b: Array2<f64>,
    pub crs_wq: Array2<f64>,
    pub crs_bq: Array2<f64>,
    pub crs_wk: Array2<f64>,
    pub crs_bk: Array2<f64>,
    pub crs_wv: Array2<f64>,
    pub crs_bv: Array2<f64>,
    pub crs_wo: Array2<f64>,
    pub crs_bo: Array2<f64>,
    pub ln_dec_ff_g: Array2<f64>,
    pub ln_dec_ff_b: Array2<f64>,
    pub dec_ff_w1: Array2<f64>,
    pub dec_ff_b1: Array2<f64>,
    pub dec_ff_w2: Array2<f64>,
    pub dec_ff_b2: Array2<f64>,
    pub lstm_wx: Array2<f64>,
    pub lstm_wh: Array2<f64>,
    pub lstm_b: Array2<f64>,
    pub cls_w: Array2<f64>,
    pub cls_b: Array2<f64>,
}

/// Fixed iteration order for updates, checkpoints, and gradient checks.
/// Must list every tensor field exactly once.
macro_rules! tensor_registry {
    ($($field:ident),* $(,)?) => {
        impl CmgParams {
            pub fn tensor_names() -> &'static [&'static str] {
                &[$(stringify!($field)),*]
            }

            pub fn tensors(&self) -> Vec<(&'static str, &Array2<f64>)> {
                vec![$((stringify!($field), &self.$field)),*]
            }

            pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Array2<f64>)> {
                vec![$((stringify!($field), &mut self.$field)),*]
            }
        }
    };
}

tensor_registry!(
    w_in, b_in, pos,
    ln_enc_attn_g, ln_enc_attn_b,
    enc_wq, enc_bq, enc_wk, enc_bk, enc_wv, enc_bv, enc_wo, enc_bo,
    ln_enc_ff_g, ln_enc_ff_b,
    enc_ff_w1, enc_ff_b1, enc_ff_w2, enc_ff_b2,
    ln_dec_self_g, ln_dec_self_b,
    dec_wq, dec_bq, dec_wk, dec_bk, dec_wv, dec_bv, dec_wo, dec_bo,
    ln_dec_cross_g, ln_dec_cross_b,
    crs_wq, crs_bq, crs_wk, crs_bk, crs_wv, crs_bv, crs_wo, crs_bo,
    ln_dec_ff_g, ln_dec_ff_b,
    dec_ff_w1, dec_ff_b1, dec_ff_w2, dec_ff_b2,
    lstm_wx, lstm_wh, lstm_b,
    cls_w, cls_b,
);

impl CmgParams {
    /// All tensors zero, shaped for the config.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let f = config.n_features;
        let l = config.window;
        let ff = config.d_ff;
        let u = config.lstm_hidden;
        let c = config.n_classes;
        let z = |r, cl| Array2::zeros((r, cl));
        Ok(CmgParams {
            config,
            w_in: z(f, d),
            b_in: z(1, d),
            pos: z(l, d),
            ln_enc_attn_g: z(1, d),
            ln_enc_attn_b: z(1, d),
            enc_wq: z(d, d),
            enc_bq: z(1, d),
            enc_wk: z(d, d),
            enc_bk: z(1, d),
            enc_wv: z(d, d),
            enc_bv: z(1, d),
            enc_wo: z(d, d),
            enc_bo: z(1, d),
            ln_enc_ff_g: z(1, d),
            ln_enc_ff_b: z(1, d),
            enc_ff_w1: z(d, ff),
            enc_ff_b1: z(1, ff),
            enc_ff_w2: z(ff, d),
            enc_ff_b2: z(1, d),
            ln_dec_self_g: z(1, d),
            ln_dec_self_b: z(1, d),
            dec_wq: z(d, d),
            dec_bq: z(1, d),
            dec_wk: z(d, d),
            dec_bk: z(1, d),
            dec_wv: z(d, d),
            dec_bv: z(1, d),
            dec_wo: z(d, d),
            dec_bo: z(1, d),
            ln_dec_cross_g: z(1, d),
            ln_dec_cross_b: z(1, d),
            crs_wq: z(d, d),
            crs_bq: z(1, d),
            crs_wk: z(d, d),
            crs_bk: z(1, d),
            crs_wv: z(d, d),
            crs_bv: z(1, d),
            crs_wo: z(d, d),
            crs_bo: z(1, d),
            ln_dec_ff_g: z(1, d),
            ln_dec_ff_b: z(1, d),
            dec_ff_w1: z(d, ff),
            dec_ff_b1: z(1, ff),
            dec_ff_w2: z(ff, d),
            dec_ff_b2: z(1, d),
            lstm_wx: z(d, 4 * u),
            lstm_wh: z(u, 4 * u),
            lstm_b: z(1, 4 * u),
            cls_w: z(u, c),
            cls_b: z(1, c),
        })
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

fn xavier(rng: &mut ChaCha20Rng, t: &mut Array2<f64>) {
    let bound = (6.0 / (t.nrows() + t.ncols()) as f64).sqrt();
    for v in t.iter_mut() {
        *v = rng.random_range(-bound..bound);
    }
}

/// Deterministic initialization: projection and gate weights are
/// Xavier-uniform in registry order, layer-norm gains start at 1, the
/// positional table starts sinusoidal (it remains trainable), the LSTM
/// forget-gate bias starts at 1, and every other bias is 0.
pub fn init_params(config: ModelConfig) -> Result<CmgParams> {
    let mut p = CmgParams::zeros(config)?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    xavier(&mut rng, &mut p.w_in);
    for i in 0..config.window {
        for j in 0..config.d_model {
            let angle =
                i as f64 / 10000f64.powf((2 * (j / 2)) as f64 / config.d_model as f64);
            p.pos[(i, j)] = if j % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    p.ln_enc_attn_g.fill(1.0);
    xavier(&mut rng, &mut p.enc_wq);
    xavier(&mut rng, &mut p.enc_wk);
    xavier(&mut rng, &mut p.enc_wv);
    xavier(&mut rng, &mut p.enc_wo);
    p.ln_enc_ff_g.fill(1.0);
    xavier(&mut rng, &mut p.enc_ff_w1);
    xavier(&mut rng, &mut p.enc_ff_w2);
    p.ln_dec_self_g.fill(1.0);
    xavier(&mut rng, &mut p.dec_wq);
    xavier(&mut rng, &mut p.dec_wk);
    xavier(&mut rng, &mut p.dec_wv);
    xavier(&mut rng, &mut p.dec_wo);
    p.ln_dec_cross_g.fill(1.0);
    xavier(&mut rng, &mut p.crs_wq);
    xavier(&mut rng, &mut p.crs_wk);
    xavier(&mut rng, &mut p.crs_wv);
    xavier(&mut rng, &mut p.crs_wo);
    p.ln_dec_ff_g.fill(1.0);
    xavier(&mut rng, &mut p.dec_ff_w1);
    xavier(&mut rng, &mut p.dec_ff_w2);
    xavier(&mut rng, &mut p.lstm_wx);
    xavier(&mut rng, &mut p.lstm_wh);
    let u = config.lstm_hidden;
    for j in u..2 * u {
        p.lstm_b[(0, j)] = 1.0;
    }
    xavier(&mut rng, &mut p.cls_w);
    Ok(p)
}

const MAGIC: &[u8; 4] = b"CMG1";

/// Writes the checkpoint: magic, nine little-endian u32 header words
/// (d_model, n_heads, d_ff, lstm_hidden, window, n_features, n_classes,
/// seed low word, seed high word), then every tensor in registry order as
/// little-endian f32. Returns the byte count.
pub fn save_params(params: &CmgParams, path: &Path) -> Result<u64> {
    let c = params.config;
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    let header = [
        c.d_model as u32,
        c.n_heads as u32,
        c.d_ff as u32,
        c.lstm_hidden as u32,
        c.window as u32,
        c.n_features as u32,
        c.n_classes as u32,
        c.seed as u32,
        (c.seed >> 32) as u32,
    ];
    for word in header {
        buf.extend_from_slice(&word.to_le_bytes());
    }
    for (_, t) in params.tensors() {
        for v in t.iter() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(buf.len() as u64)
}

pub fn checkpoint_size_kb(bytes: u64) -> f64 {
    bytes as f64 / 1024.0
}

pub fn load_params(path: &Path) -> Result<CmgParams> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CmgError::Format("bad magic".to_string()));
    }
    if bytes.len() < 4 + 9 * 4 {
        return Err(CmgError::Format("truncated file".to_string()));
    }
    let word = |i: usize| {
        u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap())
    };
    let config = ModelConfig {
        d_model: word(0) as usize,
        n_heads: word(1) as usize,
        d_ff: word(2) as usize,
        lstm_hidden: word(3) as usize,
        window: word(4) as usize,
        n_features: word(5) as usize,
        n_classes: word(6) as usize,
        seed: word(7) as u64 | ((word(8) as u64) << 32),
    };
    config
        .validate()
        .map_err(|e| CmgError::Format(format!("bad header: {e}")))?;
    let mut p = CmgParams::zeros(config)?;
    let mut offset = 4 + 9 * 4;
    for (name, t) in p.tensors_mut() {
        for v in t.iter_mut() {
            let end = offset + 4;
            if end > bytes.len() {
                return Err(CmgError::Format(format!("truncated file in {name}")));
            }
            *v = f32::from_le_bytes(bytes[offset..end].try_into().unwrap()) as f64;
            offset = end;
        }
    }
    if offset != bytes.len() {
        return Err(CmgError::Format("trailing bytes".to_string()));
    }
    Ok(p)
}
