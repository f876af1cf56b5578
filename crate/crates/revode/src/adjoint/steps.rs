//! Closed-form backward sweeps through the reversible step kernels.
//!
//! Each forward sub-step is inverted in state and transposed in sensitivity
//! using one field evaluation, one `vjp_state` call, and one `vjp_params`
//! call at the recovered midpoint. Composite steps carry the velocity
//! sensitivity in a rescaled form between sub-steps; the diagonal rescalings
//! depend only on the sub-step sizes and collapse to ratios of their squares.

use super::pair::{AdjointPair, ScalingMap};
use crate::dynamics::VectorField;
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::integrators::{AugmentedState, Method};

/// Reusable buffers for one sequential backward sweep.
pub struct AdjointScratch {
    mid: Vec<f64>,
    fm: Vec<f64>,
    u: Vec<f64>,
    g: Vec<f64>,
    gtheta: Vec<f64>,
    subs: Vec<f64>,
}

impl AdjointScratch {
    pub fn for_field(field: &dyn VectorField) -> Self {
        let d = field.dim();
        Self {
            mid: vec![0.0; d],
            fm: vec![0.0; d],
            u: vec![0.0; d],
            g: vec![0.0; d],
            gtheta: vec![0.0; field.param_count()],
            subs: Vec::new(),
        }
    }
}

fn check_back_call(
    field: &dyn VectorField,
    pair: &AdjointPair,
    h: f64,
    grad: &[f64],
) -> Result<()> {
    if h == 0.0 {
        return Err(Error::Invalid("step size must be nonzero".into()));
    }
    ensure_len("state", pair.dim(), field.dim())?;
    ensure_len("gradient", grad.len(), field.param_count())
}

/// Reconstructs the pre-step state in place via the shared midpoint
/// `z - (h/2) v = z_prev + (h/2) v_prev` and returns the midpoint time.
/// The midpoint stays in `scratch.mid` for the sensitivity updates.
fn alf_state_back(
    field: &dyn VectorField,
    theta: &[f64],
    state: &mut AugmentedState,
    h: f64,
    scratch: &mut AdjointScratch,
) -> Result<f64> {
    let d = state.dim();
    for i in 0..d {
        scratch.mid[i] = state.z[i] - 0.5 * h * state.v[i];
    }
    let t_mid = state.t - 0.5 * h;
    field.eval(&scratch.mid, t_mid, theta, &mut scratch.fm)?;
    for i in 0..d {
        state.z[i] -= h * scratch.fm[i];
        state.v[i] = 2.0 * scratch.fm[i] - state.v[i];
    }
    state.t -= h;
    ensure_finite("reconstructed z", &state.z)?;
    ensure_finite("reconstructed v", &state.v)?;
    Ok(t_mid)
}

/// Shared tail of the two sub-step variants: evaluates the Jacobian-transpose
/// products at the midpoint for the probe already in `scratch.u`, accumulates
/// the parameter gradient, and returns with `scratch.g` holding `J^T u`.
fn apply_midpoint_vjps(
    field: &dyn VectorField,
    theta: &[f64],
    t_mid: f64,
    grad: &mut [f64],
    scratch: &mut AdjointScratch,
) -> Result<()> {
    field.vjp_state(&scratch.mid, t_mid, theta, &scratch.u, &mut scratch.g)?;
    if !grad.is_empty() {
        field.vjp_params(&scratch.mid, t_mid, theta, &scratch.u, &mut scratch.gtheta)?;
        for (gi, &ci) in grad.iter_mut().zip(scratch.gtheta.iter()) {
            *gi += ci;
        }
    }
    Ok(())
}

/// Exact transpose of one forward sub-step of size `h`, walked in place:
///
/// state: mid = z - (h/2) v at t - h/2; z -= h f(mid); v <- 2 f(mid) - v
/// probe: u = h lz + 2 lv (the sensitivities arriving from the later time)
/// lz <- lz + J^T u;  lv <- (h/2) J^T u - lv;  grad += G^T u
///
/// with J = df/dz and G = df/dtheta at the midpoint. One evaluation and one
/// call of each adjoint product; the midpoint is shared between state
/// reconstruction and the sensitivity updates.
pub fn alf_adjoint_back(
    field: &dyn VectorField,
    theta: &[f64],
    pair: &mut AdjointPair,
    h: f64,
    grad: &mut [f64],
    scratch: &mut AdjointScratch,
) -> Result<()> {
    check_back_call(field, pair, h, grad)?;
    let t_mid = alf_state_back(field, theta, &mut pair.state, h, scratch)?;
    let d = pair.dim();
    for i in 0..d {
        scratch.u[i] = h * pair.lz[i] + 2.0 * pair.lv[i];
    }
    apply_midpoint_vjps(field, theta, t_mid, grad, scratch)?;
    for i in 0..d {
        pair.lz[i] += scratch.g[i];
        pair.lv[i] = 0.5 * h * scratch.g[i] - pair.lv[i];
    }
    Ok(())
}

/// [`alf_adjoint_back`] conjugated by the sub-step's own scaling: `pair.lv`
/// holds `alpha * lv` with `alpha = -h^2/4` on entry and exit. Identical
/// physical probe, so the gradient accumulation is unchanged.
fn alf_rescaled_back(
    field: &dyn VectorField,
    theta: &[f64],
    pair: &mut AdjointPair,
    h: f64,
    grad: &mut [f64],
    scratch: &mut AdjointScratch,
) -> Result<()> {
    let t_mid = alf_state_back(field, theta, &mut pair.state, h, scratch)?;
    let d = pair.dim();
    let probe_v = -8.0 / (h * h);
    let update_v = -h * h * h / 8.0;
    for i in 0..d {
        scratch.u[i] = h * pair.lz[i] + probe_v * pair.lv[i];
    }
    apply_midpoint_vjps(field, theta, t_mid, grad, scratch)?;
    for i in 0..d {
        pair.lz[i] += scratch.g[i];
        pair.lv[i] = update_v * scratch.g[i] - pair.lv[i];
    }
    Ok(())
}

/// Sub-step scaling factor: a sub-step of size `s` conjugates its rescaled
/// sensitivity walk by the `lv`-block factor `-s^2/4`.
fn sub_scaling(s: f64) -> f64 {
    -0.25 * s * s
}

/// Backward walk of a composite step as a rescaled sub-step chain:
///
/// W(1/alpha_first) o R(s_1) o ... o W(alpha_i/alpha_{i+1}) o ... o R(s_m) o W(alpha_last)
///
/// applied right to left, where `R` is the rescaled sub-step walk and
/// `alpha_i = -s_i^2/4`. Because every `R(s)` equals the conjugation of the
/// exact sub-step transpose by its own scaling, the chain is the exact
/// transpose of the whole composite step; between equal-size sub-steps the
/// ratio is one and is skipped. `entry_scale` multiplies the first scaling
/// factor only and exists for fault-injection checks; pass 1 for correct
/// sweeps.
pub(crate) fn composition_adjoint_back(
    field: &dyn VectorField,
    theta: &[f64],
    pair: &mut AdjointPair,
    method: Method,
    h: f64,
    grad: &mut [f64],
    scratch: &mut AdjointScratch,
    entry_scale: f64,
) -> Result<()> {
    check_back_call(field, pair, h, grad)?;
    if !method.reversible() {
        return Err(Error::Invalid(format!(
            "{} has no reversible backward sweep",
            method.name()
        )));
    }
    scratch.subs.clear();
    method.push_substeps(h, &mut scratch.subs);
    let m = scratch.subs.len();
    let s_last = scratch.subs[m - 1];
    ScalingMap::new(sub_scaling(s_last) * entry_scale)?.apply(pair);
    for i in (0..m).rev() {
        let s = scratch.subs[i];
        alf_rescaled_back(field, theta, pair, s, grad, scratch)?;
        if i > 0 {
            let s_prev = scratch.subs[i - 1];
            if s_prev != s {
                ScalingMap::new(sub_scaling(s_prev) / sub_scaling(s))?.apply(pair);
            }
        }
    }
    let s_first = scratch.subs[0];
    ScalingMap::new(1.0 / sub_scaling(s_first))?.apply(pair);
    Ok(())
}

/// Backward sweep of one ALF2 step: the rescaled chain over its two
/// half-size sub-steps (the inner ratio is one and drops out).
pub fn alf2_adjoint_back(
    field: &dyn VectorField,
    theta: &[f64],
    pair: &mut AdjointPair,
    h: f64,
    grad: &mut [f64],
    scratch: &mut AdjointScratch,
) -> Result<()> {
    composition_adjoint_back(field, theta, pair, Method::Alf2, h, grad, scratch, 1.0)
}

/// Backward sweep of one composition step of the given even order >= 4, as
/// the rescaled chain over its flattened sub-steps with square-ratio
/// scalings at block boundaries.
pub fn yoshida_adjoint_back(
    order: u32,
    field: &dyn VectorField,
    theta: &[f64],
    pair: &mut AdjointPair,
    h: f64,
    grad: &mut [f64],
    scratch: &mut AdjointScratch,
) -> Result<()> {
    let method = Method::yoshida(order)?;
    composition_adjoint_back(field, theta, pair, method, h, grad, scratch, 1.0)
}

/// Backward sweep of one step of any reversible method.
pub fn method_adjoint_back(
    field: &dyn VectorField,
    theta: &[f64],
    pair: &mut AdjointPair,
    method: Method,
    h: f64,
    grad: &mut [f64],
    scratch: &mut AdjointScratch,
) -> Result<()> {
    match method {
        Method::Alf => alf_adjoint_back(field, theta, pair, h, grad, scratch),
        Method::Alf2 | Method::Yoshida(_) => {
            composition_adjoint_back(field, theta, pair, method, h, grad, scratch, 1.0)
        }
        Method::Rk45Reference => Err(Error::Invalid(
            "rk45 has no reversible backward sweep".into(),
        )),
    }
}
