//! The backward-propagated state/sensitivity pair and the diagonal scaling
//! map acting on its velocity sensitivity block.

use crate::error::{Error, Result};
use crate::integrators::AugmentedState;

/// State plus loss sensitivities, walked backward through a recorded run.
///
/// `lz` and `lv` hold the sensitivities of the loss with respect to the
/// position and velocity blocks of `state` at the pair's current time. At the
/// terminal observation, `lz` is the loss gradient in `z` and `lv` is zero.
#[derive(Debug, Clone)]
pub struct AdjointPair {
    pub state: AugmentedState,
    pub lz: Vec<f64>,
    pub lv: Vec<f64>,
}

impl AdjointPair {
    /// Pair anchored at `state` with zero sensitivities.
    pub fn new(state: AugmentedState) -> Self {
        let d = state.dim();
        Self {
            state,
            lz: vec![0.0; d],
            lv: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }
}

/// Diagonal map multiplying only the `lv` block by a fixed factor.
///
/// Composing a map with its inverse factor is the identity; nothing besides
/// `lv` is ever touched.
#[derive(Debug, Clone, Copy)]
pub struct ScalingMap {
    alpha: f64,
}

impl ScalingMap {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha != 0.0) {
            return Err(Error::Invalid(format!(
                "scaling factor must be finite and nonzero, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inverse(&self) -> Self {
        Self { alpha: 1.0 / self.alpha }
    }

    pub fn apply(&self, pair: &mut AdjointPair) {
        for x in pair.lv.iter_mut() {
            *x *= self.alpha;
        }
    }
}
