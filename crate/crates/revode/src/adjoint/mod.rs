//! Exact gradients of trajectory losses through reversible integration.
//!
//! The forward drivers record only step sizes and a handful of observation
//! checkpoints. This module walks those records backward, inverting the state
//! and transposing each sub-step's Jacobian in closed form, so the gradient
//! of the discrete loss is exact to round-off while peak memory stays
//! independent of the number of steps.

mod gradients;
mod oracle;
mod pair;
mod steps;

pub use gradients::{
    compute_gradients, loss_with_frozen_trace, GradResult, Projection,
};
pub(crate) use gradients::compute_gradients_with_entry_scale;
pub use oracle::{finite_difference_oracle, full_storage_oracle};
pub use pair::{AdjointPair, ScalingMap};
pub use steps::{
    alf2_adjoint_back, alf_adjoint_back, method_adjoint_back, yoshida_adjoint_back,
    AdjointScratch,
};
