//! Pushforward training for the bundle surrogates.
//!
//! Multi-step unrolled training where earlier predictions are treated as
//! constants: the loss compares only the final predicted bundle against
//! its reference over fluid cells, and gradients flow through the last
//! prediction step alone. The unroll depth and learning rate follow the
//! stepwise schedules in [`schedule`].

pub mod error;
pub mod loop_;
pub mod optimizer;
pub mod sampler;
pub mod schedule;

pub use error::{Result, TrainError};
pub use loop_::{
    history_to_csv, pushforward_loss, train, EpochRow, PushforwardReport, StopReason,
    TrainOutcome,
};
pub use optimizer::Adam;
pub use sampler::{draw_samples, TrainSample};
pub use schedule::{lr_schedule, unroll_schedule, TrainConfig};
