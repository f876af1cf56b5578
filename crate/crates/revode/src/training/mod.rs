//! Dataset handling, optimizers, and the training loop.

mod data;
mod halton;
mod obs;
mod optim;
mod train;

pub use data::generate_data;
pub use halton::{halton_box, Halton};
pub use obs::{quadratic_loss, write_trajectory_csv, Dataset, Observation, Trajectory};
pub use optim::{decayed_lr, sgd_step, AdamW, OptimizerKind};
pub use train::{train, TrainConfig, TrainOutcome, TrainRecord, TrainRow, TrainStatus};
