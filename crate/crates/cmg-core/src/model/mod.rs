//! Sentiment-class sequence model: transformer encoder-decoder with a
//! future-only cross-attention mask, diagonal decoder self-attention, an
//! LSTM head scanned from the far end, and a six-class output.

pub mod attention;
pub mod gradcheck;
pub mod layers;
pub mod lstm;
pub mod network;
pub mod params;
pub mod train;

pub use attention::{
    causal_mask, diagonal_mask, full_mask, transposed_causal_mask, Mask,
};
pub use gradcheck::{batch_loss, max_gradient_error};
pub use network::{decode, embed, encode, forward, loss_and_grad, predict_next, Direction};
pub use params::{
    checkpoint_size_kb, init_params, load_params, save_params, CmgParams, ModelConfig,
};
pub use train::{last_position_accuracy, train, EpochStats, TrainConfig, TrainOutcome};
