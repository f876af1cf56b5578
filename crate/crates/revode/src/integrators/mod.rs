//! Step kernels, adaptivity, and trajectory drivers.
//!
//! The primitive is a one-evaluation explicit step on an augmented pair
//! `(z, v)` whose inverse is the same map with the step negated. Two
//! half-steps give a second-order symmetric method, and palindromic
//! triple-jump compositions raise the order by two per level while staying
//! exactly reversible. The adaptive driver wraps any of these in
//! step-doubling error control and records accepted step sizes in a
//! [`StepTrace`] so the backward pass can replay the exact grid.

mod controller;
mod drive;
pub mod memhook;
mod method;
mod rk45;
mod state;
mod step;

pub use controller::{propose_step, step_with_error, ErrorWeights, StepDecision};
pub use drive::{
    integrate_backward, integrate_forward, BackwardRun, ForwardRun, IntegrateOptions, Mode,
    StepTrace, TraceRow,
};
pub use method::{yoshida_coefficients, Method};
pub use rk45::{rk45_path, rk45_reference};
pub use state::{init_augmented, AugmentedState};
pub use step::{alf_step, alf_step_raw, method_step, StepScratch};
