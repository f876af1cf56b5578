//! Reversible, arbitrarily high even-order explicit ODE integration with
//! exact memory-constant adjoint gradients.
//!
//! The building block is the asynchronous leapfrog step: an explicit one-step
//! map on an augmented pair `(z, v)` that costs exactly one field evaluation
//! and whose inverse is the same map with the step negated. Composing two
//! half-steps yields a second-order symmetric method, and triple-jump
//! compositions raise the order by two per level. Because every accepted step
//! can be undone exactly, the backward gradient pass reconstructs states on
//! the fly instead of storing the trajectory, so memory stays constant in the
//! number of steps.
//!
//! Crate layout:
//! - [`dynamics`]: the vector-field contract plus the built-in systems
//!   (Kepler, coupled Duffing chains, multilayer perceptron fields, a
//!   discretized wave equation).
//! - [`integrators`]: step kernels, step-doubling error control, forward and
//!   backward drivers, the step trace, and a Dormand-Prince reference.
//! - [`adjoint`]: exact per-step transposes, the gradient driver, and the
//!   full-storage / finite-difference oracles used to validate it.
//! - [`training`]: quadratic losses, SGD/AdamW, data generation, and the
//!   training loop used for parameter identification.
//! - [`bench`]: the experiment kernels behind the `revode` CLI.

pub mod adjoint;
pub mod bench;
pub mod dynamics;
pub mod error;
pub mod integrators;
pub mod stats;
pub mod training;

pub(crate) mod vecops;

pub use error::{Error, Result};
