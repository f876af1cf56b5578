//! The augmented state advanced by the reversible steps.

use super::memhook;
use crate::dynamics::VectorField;
use crate::error::{ensure_finite, ensure_len, Result};

/// State `(z, v, t)` advanced by the reversible one-step maps.
///
/// `z` is the system state, `v` an auxiliary velocity that consistent
/// initialization ties to `f(z, t)`, and `t` the current time. Instances
/// report construction and drop to [`memhook`], which is how the
/// memory-contract tests count simultaneously live states; `Clone` and `Drop`
/// are therefore implemented by hand.
#[derive(Debug, PartialEq)]
pub struct AugmentedState {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl AugmentedState {
    pub fn new(z: Vec<f64>, v: Vec<f64>, t: f64) -> Self {
        assert_eq!(z.len(), v.len(), "z and v must have equal length");
        memhook::created();
        Self { z, v, t }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Max-norm over both blocks, used for relative round-trip bounds.
    pub fn max_abs(&self) -> f64 {
        crate::vecops::max_abs(&self.z).max(crate::vecops::max_abs(&self.v))
    }

    /// Max-norm distance to `other` over both blocks.
    pub fn distance(&self, other: &Self) -> f64 {
        let dz = self
            .z
            .iter()
            .zip(&other.z)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let dv = self
            .v
            .iter()
            .zip(&other.v)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        dz.max(dv)
    }
}

impl Clone for AugmentedState {
    fn clone(&self) -> Self {
        memhook::created();
        Self {
            z: self.z.clone(),
            v: self.v.clone(),
            t: self.t,
        }
    }
}

impl Drop for AugmentedState {
    fn drop(&mut self) {
        memhook::dropped();
    }
}

/// Builds the augmented start state `(z0, f(z0, t0), t0)`.
///
/// Costs exactly one field evaluation. The caller supplies the field through
/// whatever counting wrapper it uses so the evaluation is billed.
pub fn init_augmented(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
) -> Result<AugmentedState> {
    ensure_len("initial state", z0.len(), field.dim())?;
    ensure_finite("initial state", z0)?;
    let mut v = vec![0.0; z0.len()];
    field.eval(z0, t0, theta, &mut v)?;
    Ok(AugmentedState::new(z0.to_vec(), v, t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Linear;

    #[test]
    fn init_ties_v_to_the_field() {
        let f = Linear::new(2);
        let phi = init_augmented(&f, &[], &[1.0, -2.0], 0.5).unwrap();
        assert_eq!(phi.z, vec![1.0, -2.0]);
        assert_eq!(phi.v, vec![1.0, -2.0]);
        assert_eq!(phi.t, 0.5);
    }

    #[test]
    fn distance_is_max_norm() {
        let a = AugmentedState::new(vec![0.0, 0.0], vec![0.0, 0.0], 0.0);
        let b = AugmentedState::new(vec![0.1, 0.0], vec![0.0, -0.3], 0.0);
        assert!((a.distance(&b) - 0.3).abs() < 1e-15);
    }
}
