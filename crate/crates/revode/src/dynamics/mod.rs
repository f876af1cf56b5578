//! Vector-field contract and the built-in dynamical systems.
//!
//! A [`VectorField`] is the right-hand side `f(z, t, theta)` of a first-order
//! system `dz/dt = f`, together with hand-written analytic adjoint products:
//! `vjp_state` applies `(df/dz)^T` to a probe vector and `vjp_params` applies
//! `(df/dtheta)^T`. All three are deterministic, allocation-light, and checked
//! against finite differences by the test suite.

mod counted;
mod duffing;
mod example_ode;
mod kepler;
mod mlp;
mod params;
mod potential;
mod simple;
mod wave;

pub use counted::{CountingField, EvalCounts};
pub use duffing::Duffing;
pub use example_ode::ExampleOde;
pub use kepler::Kepler;
pub use mlp::{Activation, MlpField};
pub use params::Params;
pub use potential::DuffingPotentialField;
pub use simple::{Linear, Zero};
pub use wave::{wave_truth_field, WaveField, WaveTruth};

use crate::error::{ensure_finite, ensure_len, Result};

/// Right-hand side of `dz/dt = f(z, t, theta)` with analytic adjoint products.
///
/// Implementations write into caller-provided output slices so that hot loops
/// can reuse buffers. Outputs must be fully overwritten and finite; inputs of
/// the wrong length are rejected with a shape error.
pub trait VectorField: Send + Sync {
    /// State dimension `d`.
    fn dim(&self) -> usize;

    /// Parameter count `P`.
    fn param_count(&self) -> usize;

    /// Named, disjoint index ranges that jointly cover `0..param_count()`.
    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)>;

    /// `out = f(z, t, theta)`; `out.len() == dim()`.
    fn eval(&self, z: &[f64], t: f64, theta: &[f64], out: &mut [f64]) -> Result<()>;

    /// `out = (df/dz)^T w`; `out.len() == dim()`.
    fn vjp_state(&self, z: &[f64], t: f64, theta: &[f64], w: &[f64], out: &mut [f64])
        -> Result<()>;

    /// `out = (df/dtheta)^T w`; `out.len() == param_count()`.
    fn vjp_params(
        &self,
        z: &[f64],
        t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()>;

    /// All-zero parameter vector with this field's named views.
    fn zero_params(&self) -> Params {
        Params::zeros(self.param_count(), self.param_views())
    }
}

/// Validates the common slice shapes of a field call.
pub(crate) fn check_call(
    field: &dyn VectorField,
    z: &[f64],
    theta: &[f64],
    out_len: usize,
    expected_out: usize,
) -> Result<()> {
    ensure_len("state", z.len(), field.dim())?;
    ensure_len("parameters", theta.len(), field.param_count())?;
    ensure_len("output", out_len, expected_out)?;
    ensure_finite("state input", z)
}

#[cfg(test)]
pub(crate) mod field_test_util {
    //! Shared probe machinery for checking analytic adjoint products against
    //! directional finite differences.

    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Directional derivative (f(z + eps u) - f(z - eps u)) / (2 eps).
    pub fn dir_state_derivative(
        field: &dyn VectorField,
        z: &[f64],
        t: f64,
        theta: &[f64],
        u: &[f64],
        eps: f64,
    ) -> Vec<f64> {
        let d = field.dim();
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        for i in 0..d {
            zp[i] += eps * u[i];
            zm[i] -= eps * u[i];
        }
        let mut fp = vec![0.0; d];
        let mut fm = vec![0.0; d];
        field.eval(&zp, t, theta, &mut fp).unwrap();
        field.eval(&zm, t, theta, &mut fm).unwrap();
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
    }

    /// Directional derivative of f along a parameter direction.
    pub fn dir_param_derivative(
        field: &dyn VectorField,
        z: &[f64],
        t: f64,
        theta: &[f64],
        u: &[f64],
        eps: f64,
    ) -> Vec<f64> {
        let d = field.dim();
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        for i in 0..theta.len() {
            tp[i] += eps * u[i];
            tm[i] -= eps * u[i];
        }
        let mut fp = vec![0.0; d];
        let mut fm = vec![0.0; d];
        field.eval(z, t, &tp, &mut fp).unwrap();
        field.eval(z, t, &tm, &mut fm).unwrap();
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
    }

    /// Checks `<vjp_state(w), u> == <w, df/dz u>` and the parameter analogue
    /// over `probes` random draws; panics with context on failure.
    ///
    /// `sample_state` supplies admissible states for the field.
    pub fn check_vjps_against_fd(
        field: &dyn VectorField,
        theta: &[f64],
        mut sample_state: impl FnMut(&mut StdRng) -> Vec<f64>,
        seed: u64,
        probes: usize,
        tol: f64,
    ) {
        let d = field.dim();
        let p = field.param_count();
        let eps = 1e-6;
        let mut rng = StdRng::seed_from_u64(seed);
        for probe in 0..probes {
            let z = sample_state(&mut rng);
            let t = rng.gen_range(-1.0..1.0);
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let mut jt_w = vec![0.0; d];
            field.vjp_state(&z, t, theta, &w, &mut jt_w).unwrap();
            let lhs = crate::vecops::dot(&jt_w, &u);
            let ju = dir_state_derivative(field, &z, t, theta, &u, eps);
            let rhs = crate::vecops::dot(&w, &ju);
            let scale = lhs.abs().max(rhs.abs()).max(1e-3);
            assert!(
                (lhs - rhs).abs() / scale < tol,
                "vjp_state probe {probe}: {lhs} vs {rhs}"
            );

            if p > 0 {
                let up: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut gt_w = vec![0.0; p];
                field.vjp_params(&z, t, theta, &w, &mut gt_w).unwrap();
                let lhs = crate::vecops::dot(&gt_w, &up);
                let jup = dir_param_derivative(field, &z, t, theta, &up, eps);
                let rhs = crate::vecops::dot(&w, &jup);
                let scale = lhs.abs().max(rhs.abs()).max(1e-3);
                assert!(
                    (lhs - rhs).abs() / scale < tol,
                    "vjp_params probe {probe}: {lhs} vs {rhs}"
                );
            }
        }
    }
}
