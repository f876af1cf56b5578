//! Scalar non-autonomous test problem for convergence studies.

use super::{check_call, VectorField};
use crate::error::{ensure_finite, Result};

/// `dz/dt = z^2 + t + sin(z t) + 1 / (z^2 + 1)`, a deliberately unstructured
/// scalar problem: non-autonomous, non-polynomial, and without conserved
/// quantities, so convergence orders measured on it are not flattered by
/// accidental symmetry.
pub struct ExampleOde;

impl ExampleOde {
    /// Default initial value used by the order study.
    pub const Z0: f64 = 0.0;
}

impl VectorField for ExampleOde {
    fn dim(&self) -> usize {
        1
    }

    fn param_count(&self) -> usize {
        0
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        Vec::new()
    }

    fn eval(&self, z: &[f64], t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), 1)?;
        let z = z[0];
        out[0] = z * z + t + (z * t).sin() + 1.0 / (z * z + 1.0);
        ensure_finite("example ODE eval", out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), 1)?;
        let z = z[0];
        let denom = z * z + 1.0;
        let dfdz = 2.0 * z + t * (z * t).cos() - 2.0 * z / (denom * denom);
        out[0] = dfdz * w[0];
        ensure_finite("example ODE vjp_state", out)
    }

    fn vjp_params(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        _w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), 0)?;
        Ok(())
    }
}
