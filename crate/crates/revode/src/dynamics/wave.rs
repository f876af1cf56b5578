//! Discretized wave-type systems on a periodic mesh.

use super::{check_call, VectorField};
use crate::error::{ensure_finite, Result};

/// Second-order system `du/dt = v, dv/dt = f(u)` on `M` mesh points, with the
/// force `f: R^M -> R^M` supplied by an inner field (typically a network).
/// State layout is `(u_1..u_M, v_1..v_M)`, so `dim = 2M`; parameters are the
/// inner field's parameters.
pub struct WaveField {
    inner: Box<dyn VectorField>,
    m: usize,
}

impl WaveField {
    pub fn new(m: usize, inner: Box<dyn VectorField>) -> Self {
        assert_eq!(inner.dim(), m, "inner force must map R^M to R^M");
        Self { inner, m }
    }

    pub fn mesh_points(&self) -> usize {
        self.m
    }

    pub fn inner(&self) -> &dyn VectorField {
        self.inner.as_ref()
    }
}

impl VectorField for WaveField {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        self.inner.param_views()
    }

    fn eval(&self, z: &[f64], t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), 2 * self.m)?;
        let (u, v) = z.split_at(self.m);
        let (ou, ov) = out.split_at_mut(self.m);
        ou.copy_from_slice(v);
        self.inner.eval(u, t, theta, ov)?;
        ensure_finite("wave eval", out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), 2 * self.m)?;
        let u = &z[..self.m];
        let (wu, wv) = w.split_at(self.m);
        let (ou, ov) = out.split_at_mut(self.m);
        self.inner.vjp_state(u, t, theta, wv, ou)?;
        ov.copy_from_slice(wu);
        ensure_finite("wave vjp_state", out)
    }

    fn vjp_params(
        &self,
        z: &[f64],
        t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), self.param_count())?;
        let u = &z[..self.m];
        let wv = &w[self.m..];
        self.inner.vjp_params(u, t, theta, wv, out)?;
        ensure_finite("wave vjp_params", out)
    }
}

/// Ground-truth force on the periodic unit interval: the centered
/// second-difference Laplacian minus the identity,
/// `f(u)_i = (u_{i-1} - 2 u_i + u_{i+1}) / dx^2 - u_i` with `dx = 1/M`.
pub struct WaveTruth {
    m: usize,
}

impl WaveTruth {
    pub fn new(m: usize) -> Self {
        assert!(m >= 3);
        Self { m }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Frequency of the `k`-th mesh Fourier mode of `d^2u/dt^2 = (Lap - I) u`:
    /// `sqrt(1 + (4/dx^2) sin^2(pi k dx))`. This is the dispersion of the
    /// mesh operator, which approaches the continuum value as the mesh
    /// refines.
    pub fn mode_frequency(&self, k: usize) -> f64 {
        let dx = self.dx();
        let s = (std::f64::consts::PI * k as f64 * dx).sin();
        (1.0 + 4.0 / (dx * dx) * s * s).sqrt()
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let m = self.m;
        let inv_dx2 = (m * m) as f64;
        for i in 0..m {
            let left = u[(i + m - 1) % m];
            let right = u[(i + 1) % m];
            out[i] = inv_dx2 * (left - 2.0 * u[i] + right) - u[i];
        }
    }
}

/// Convenience constructor for the full ground-truth system `(u, v)` on `M`
/// mesh points.
pub fn wave_truth_field(m: usize) -> WaveField {
    WaveField::new(m, Box::new(WaveTruth::new(m)))
}

impl VectorField for WaveTruth {
    fn dim(&self) -> usize {
        self.m
    }

    fn param_count(&self) -> usize {
        0
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        Vec::new()
    }

    fn eval(&self, z: &[f64], _t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), self.m)?;
        self.apply(z, out);
        ensure_finite("wave-truth eval", out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), self.m)?;
        // the stencil is symmetric, so J^T w = J w
        self.apply(w, out);
        ensure_finite("wave-truth vjp_state", out)
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
