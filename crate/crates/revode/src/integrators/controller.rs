//! Step-doubling error estimation and the step-size controller.

use super::method::Method;
use super::state::AugmentedState;
use super::step::{method_step, StepScratch};
use crate::dynamics::VectorField;
use crate::error::{Error, Result};

/// Componentwise error weights `atol + rtol * max(|before|, |after|)`.
#[derive(Debug, Clone, Copy)]
pub struct ErrorWeights {
    pub atol: f64,
    pub rtol: f64,
}

impl ErrorWeights {
    pub fn new(atol: f64, rtol: f64) -> Result<Self> {
        if atol < 0.0 || rtol < 0.0 || (atol == 0.0 && rtol == 0.0) {
            return Err(Error::Invalid(
                "error weights need atol >= 0, rtol >= 0, not both zero".into(),
            ));
        }
        Ok(Self { atol, rtol })
    }
}

/// Controller verdict for one attempted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecision {
    pub accept: bool,
    pub h_next: f64,
}

/// Candidate step with a step-doubling error estimate.
///
/// Advances a copy of `phi` once by `h` and a second copy by two `h/2` steps,
/// and returns the two-half-step state together with the weighted RMS of the
/// Richardson error estimate `(fine - coarse) / (2^p - 1)`, which estimates
/// the local error of the returned state. Costs three method-steps of field
/// evaluations. The returned state, not an extrapolation, is what the driver
/// commits, so the recorded grid replays exactly.
///
/// For the single-step scheme the norm covers only the `z` components. Its
/// auxiliary `v` is reflected across the field line on every step, so one
/// full step and two half steps disagree in `v` by twice the current drift
/// `v - f(z, t)` no matter how small `h` gets. Feeding that h-independent
/// gap to the controller makes it shrink `h` geometrically without advancing
/// once the drift passes the tolerance weights. Compositions reflect an even
/// number of times per step, their `v` converges, and both blocks stay in
/// the norm.
pub fn step_with_error(
    field: &dyn VectorField,
    theta: &[f64],
    phi: &AugmentedState,
    method: Method,
    h: f64,
    weights: ErrorWeights,
    scratch: &mut StepScratch,
) -> Result<(AugmentedState, f64)> {
    let mut full = phi.clone();
    method_step(field, theta, &mut full, method, h, scratch)?;
    let mut half = phi.clone();
    method_step(field, theta, &mut half, method, 0.5 * h, scratch)?;
    method_step(field, theta, &mut half, method, 0.5 * h, scratch)?;

    let p = method.order();
    let denom = 2f64.powi(p as i32) - 1.0;
    let d = phi.dim();
    let include_v = !matches!(method, Method::Alf);
    let weighted = |before: f64, fine: f64, coarse: f64| {
        let est = (fine - coarse) / denom;
        let w = weights.atol + weights.rtol * before.abs().max(fine.abs());
        (est / w) * (est / w)
    };
    let mut sum_sq = 0.0;
    let mut terms = d;
    for i in 0..d {
        sum_sq += weighted(phi.z[i], half.z[i], full.z[i]);
    }
    if include_v {
        terms += d;
        for i in 0..d {
            sum_sq += weighted(phi.v[i], half.v[i], full.v[i]);
        }
    }
    let err_norm = (sum_sq / terms as f64).sqrt();
    Ok((half, err_norm))
}

/// Accept/reject and the next step size:
///
/// accept iff err <= 1;  h_next = h * clamp(0.9 * err^(-1/(p+1)), 0.2, 5)
///
/// A zero error maps to the maximum growth factor 5.
pub fn propose_step(err_norm: f64, h: f64, p: u32) -> StepDecision {
    let factor = if err_norm == 0.0 {
        5.0
    } else {
        (0.9 * err_norm.powf(-1.0 / (p as f64 + 1.0))).clamp(0.2, 5.0)
    };
    StepDecision {
        accept: err_norm <= 1.0,
        h_next: h * factor,
    }
}
