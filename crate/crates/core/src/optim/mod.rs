//! Losses, L2 regularization, the AMSGrad/Adam update, checkpoints and the
//! training loop.

mod amsgrad;
mod checkpoint;
mod l2;
mod loss;
mod train;

pub use amsgrad::{amsgrad_step, AmsgradState, Optimizer, OptimizerKind};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use l2::l2_penalty;
pub use loss::{loss, LossKind, PROB_FLOOR};
pub use train::{
    batches_per_epoch, evaluate, train, EarlyStopping, EpochRecord, Example, StopDecision, TrainConfig, TrainHistory,
    Trainer,
};
