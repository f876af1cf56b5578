//! Planar gravitational two-body problem with a learnable coupling strength.

use super::{check_call, VectorField};
use crate::error::{ensure_finite, Error, Result};

/// Planar Kepler system, state `(q1, q2, v1, v2)`:
///
/// dq/dt = v,  dv/dt = -alpha * q / |q|^3
///
/// The single parameter `alpha` is the coupling strength. Evaluation inside
/// `|q| < GUARD` is rejected as a singularity.
pub struct Kepler;

impl Kepler {
    /// Exclusion radius around the attracting center.
    pub const GUARD: f64 = 1e-8;

    /// Coupling strength used when generating ground-truth data.
    pub fn alpha_truth() -> f64 {
        std::f64::consts::FRAC_PI_4
    }

    /// Start state used by the identification experiments:
    /// `(0.75, 0, 0, 0.9 * (pi/4) * sqrt(5/3))`.
    pub fn start_state() -> [f64; 4] {
        [
            0.75,
            0.0,
            0.0,
            0.9 * std::f64::consts::FRAC_PI_4 * (5.0f64 / 3.0).sqrt(),
        ]
    }

    /// Total energy `|v|^2 / 2 - alpha / |q|`.
    pub fn energy(z: &[f64], alpha: f64) -> f64 {
        let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
        0.5 * (z[2] * z[2] + z[3] * z[3]) - alpha / r
    }

    /// Angular momentum `q1 v2 - q2 v1`.
    pub fn angular_momentum(z: &[f64]) -> f64 {
        z[0] * z[3] - z[1] * z[2]
    }

    fn radius(q1: f64, q2: f64) -> Result<f64> {
        let r = (q1 * q1 + q2 * q2).sqrt();
        if r < Self::GUARD {
            Err(Error::Singularity {
                norm: r,
                guard: Self::GUARD,
            })
        } else {
            Ok(r)
        }
    }
}

impl VectorField for Kepler {
    fn dim(&self) -> usize {
        4
    }

    fn param_count(&self) -> usize {
        1
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        vec![("alpha".to_string(), 0..1)]
    }

    fn eval(&self, z: &[f64], _t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), 4)?;
        let (q1, q2) = (z[0], z[1]);
        let r = Self::radius(q1, q2)?;
        let s = theta[0] / (r * r * r);
        out[0] = z[2];
        out[1] = z[3];
        out[2] = -s * q1;
        out[3] = -s * q2;
        ensure_finite("kepler eval", out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), 4)?;
        let (q1, q2) = (z[0], z[1]);
        let r = Self::radius(q1, q2)?;
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        let alpha = theta[0];
        // dv/dq block is symmetric: -alpha (I / r^3 - 3 q q^T / r^5)
        let qw = q1 * w[2] + q2 * w[3];
        out[0] = -alpha * (w[2] / r3 - 3.0 * q1 * qw / r5);
        out[1] = -alpha * (w[3] / r3 - 3.0 * q2 * qw / r5);
        out[2] = w[0];
        out[3] = w[1];
        ensure_finite("kepler vjp_state", out)
    }

    fn vjp_params(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), 1)?;
        let (q1, q2) = (z[0], z[1]);
        let r = Self::radius(q1, q2)?;
        let r3 = r * r * r;
        out[0] = -(q1 * w[2] + q2 * w[3]) / r3;
        ensure_finite("kepler vjp_params", out)
    }
}
