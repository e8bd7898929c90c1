//! Training: masked losses, the anchor-window batch sampler, Adam and the
//! training loop with early stopping.

pub mod adam;
pub mod losses;
pub mod sampler;
pub mod trainer;

pub use adam::{adam_step, AdamState};
pub use losses::{batch_loss, mape_loss, mase_loss, naive_scale, smape_loss, BatchLoss, LossKind};
pub use sampler::{latest_input, sample_batch, TrainBatch, TrainPlan};
pub use trainer::{
    train_model, training_log_csv, validation_smape, write_training_log, TrainLogRow, TrainOutcome,
};
