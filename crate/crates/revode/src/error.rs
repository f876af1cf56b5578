//! Crate-wide error type.

/// Errors raised by fields, drivers, and the training loop.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A field was evaluated inside its excluded region.
    #[error("singularity: |q| = {norm:.3e} is below the guard radius {guard:.1e}")]
    Singularity { norm: f64, guard: f64 },

    /// A NaN or infinity appeared where a finite number was required.
    #[error("non-finite value in {context} at component {index}")]
    NonFinite {
        context: &'static str,
        index: usize,
    },

    /// A slice had the wrong length for the operation.
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The forward driver exceeded its step budget before reaching the target time.
    #[error("step limit {max_steps} exceeded before reaching t = {target}")]
    Diverged { max_steps: usize, target: f64 },

    /// The controller rejected too many consecutive attempts.
    #[error("{rejects} consecutive step rejections near t = {t:.6e}; problem looks stiff at this tolerance")]
    Stiff { rejects: usize, t: f64 },

    /// A trace was replayed with a driver call it does not belong to.
    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    /// A precondition on arguments was violated.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// Training aborted because the loss stopped being finite.
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns a [`Error::NonFinite`] if any entry of `xs` is NaN or infinite.
pub fn ensure_finite(context: &'static str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(index) => Err(Error::NonFinite { context, index }),
    }
}

/// Returns a [`Error::Shape`] unless `got == expected`.
pub fn ensure_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Shape {
            what,
            expected,
            got,
        })
    }
}
