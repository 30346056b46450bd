//! Sequence surrogate for the leg wrench: two stacked LSTM layers over a
//! 16-step window of (flow speed, joint angles, joint rates), then a linear
//! head on the final hidden state.
//!
//! Batches are laid out time-major (`row = t * batch + b`) so every time step
//! is one contiguous block and each gate update is a single matrix product.

mod eval;
mod io;
mod model;
mod train;

pub use eval::{
    aggregate, box_summary, ef_window_predictions, evaluate, lstm_predictions, speed_boxes, BoxSummary, ErrorStats,
    Evaluation, SetStats, SpeedStats, AGGREGATE_CHANNELS,
};
pub use io::{FORMAT, VERSION};
pub use model::{LayerParams, LstmModel, Norm, Weights, TENSOR_NAMES};
pub use train::{
    batch_loss, dataset_mse, fit, fit_model, loss_and_grad, train_epoch, EpochRecord, Optimizer, PlateauSchedule,
    TrainConfig, TrainHistory, UpdateRule, WindowDataset,
};

/// Hidden units per layer.
pub const HIDDEN: usize = 64;
/// Wrench channels predicted.
pub const OUTPUT_WIDTH: usize = 6;
