//! Trivial fields used by tests and worked examples.

use super::{check_call, VectorField};
use crate::error::Result;

/// `f(z) = z` in any dimension; no parameters.
pub struct Linear {
    dim: usize,
}

impl Linear {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl VectorField for Linear {
    fn dim(&self) -> usize {
        self.dim
    }

    fn param_count(&self) -> usize {
        0
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        Vec::new()
    }

    fn eval(&self, z: &[f64], _t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), self.dim)?;
        out.copy_from_slice(z);
        Ok(())
    }

    fn vjp_state(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), self.dim)?;
        out.copy_from_slice(w);
        Ok(())
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

/// `f(z) = 0` in any dimension; no parameters.
pub struct Zero {
    dim: usize,
}

impl Zero {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl VectorField for Zero {
    fn dim(&self) -> usize {
        self.dim
    }

    fn param_count(&self) -> usize {
        0
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        Vec::new()
    }

    fn eval(&self, z: &[f64], _t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), self.dim)?;
        out.fill(0.0);
        Ok(())
    }

    fn vjp_state(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        _w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), self.dim)?;
        out.fill(0.0);
        Ok(())
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
