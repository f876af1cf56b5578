//! Loss gradients from a recorded forward run, at memory independent of the
//! number of steps.

use super::pair::AdjointPair;
use super::steps::{composition_adjoint_back, method_adjoint_back, AdjointScratch};
use crate::dynamics::{CountingField, EvalCounts, VectorField};
use crate::error::{ensure_len, Error, Result};
use crate::integrators::{init_augmented, method_step, ForwardRun, StepScratch, StepTrace};

/// Selection of observed state components: `P z = z[indices]`.
#[derive(Debug, Clone)]
pub struct Projection {
    indices: Vec<usize>,
    dim: usize,
}

impl Projection {
    /// Strictly increasing component indices, all below `dim`.
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Invalid("projection must observe something".into()));
        }
        for pair in indices.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Invalid(
                    "projection indices must be strictly increasing".into(),
                ));
            }
        }
        if *indices.last().unwrap() >= dim {
            return Err(Error::Invalid(format!(
                "projection index {} outside state dimension {dim}",
                indices.last().unwrap()
            )));
        }
        Ok(Self { indices, dim })
    }

    /// Observes every component.
    pub fn full(dim: usize) -> Self {
        Self { indices: (0..dim).collect(), dim }
    }

    pub fn observed(&self) -> usize {
        self.indices.len()
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `out = P z - target`.
    pub fn residual_into(&self, z: &[f64], target: &[f64], out: &mut [f64]) -> Result<()> {
        ensure_len("state", z.len(), self.dim)?;
        ensure_len("target", target.len(), self.indices.len())?;
        ensure_len("residual", out.len(), self.indices.len())?;
        for (k, &idx) in self.indices.iter().enumerate() {
            out[k] = z[idx] - target[k];
        }
        Ok(())
    }
}

/// Output of a backward gradient sweep.
#[derive(Debug, Clone)]
pub struct GradResult {
    /// Sum over observations of the squared projected residual.
    pub loss: f64,
    /// d loss / d theta, exact for the discrete trajectory map.
    pub grad: Vec<f64>,
    /// Position sensitivity after walking back to the start time.
    pub lz_at_t0: Vec<f64>,
    /// Velocity sensitivity after walking back to the start time (already
    /// consumed by the gradient's initialization term).
    pub lv_at_t0: Vec<f64>,
    /// Field work done by this sweep (the forward run's work is in its trace).
    pub counts: EvalCounts,
}

fn check_observation_shapes(
    field: &dyn VectorField,
    z0: &[f64],
    targets: &[Vec<f64>],
    proj: &Projection,
    trace: &StepTrace,
    num_states: usize,
) -> Result<()> {
    ensure_len("initial state", z0.len(), field.dim())?;
    ensure_len("projection", proj.state_dim(), field.dim())?;
    if targets.len() != trace.num_segments() || targets.len() != num_states {
        return Err(Error::TraceMismatch(format!(
            "{} targets against {} trace segments and {} checkpoints",
            targets.len(),
            trace.num_segments(),
            num_states
        )));
    }
    for y in targets {
        ensure_len("target", y.len(), proj.observed())?;
    }
    Ok(())
}

/// Exact gradient of `sum_i ||P z(t_i) - y_i||^2` over the recorded run.
///
/// Walks the trace segments backward from the last observation. At each
/// observation time the position sensitivity receives the jump `2 P^T r_i`;
/// at each segment boundary the carried state snaps to the stored checkpoint.
/// After reaching the start, the dependence of the initial velocity
/// `v0 = f(z0, t0, theta)` on theta contributes one extra `vjp_params` term.
/// Peak retained state is a handful of vectors beyond the checkpoints the
/// forward run already holds, regardless of step count.
pub fn compute_gradients(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    targets: &[Vec<f64>],
    proj: &Projection,
    run: &ForwardRun,
) -> Result<GradResult> {
    backward_sweep(field, theta, z0, t0, targets, proj, run, None, 1.0)
}

/// [`compute_gradients`] with fault injection: `entry_scale` multiplies the
/// first rescaling factor of every composite backward step. Exists so the
/// gradient checker can demonstrate sensitivity to the scaling constants;
/// 1.0 reproduces the exact sweep.
pub(crate) fn compute_gradients_with_entry_scale(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    targets: &[Vec<f64>],
    proj: &Projection,
    run: &ForwardRun,
    entry_scale: f64,
) -> Result<GradResult> {
    backward_sweep(field, theta, z0, t0, targets, proj, run, None, entry_scale)
}

#[allow(clippy::too_many_arguments)]
fn backward_sweep(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    targets: &[Vec<f64>],
    proj: &Projection,
    run: &ForwardRun,
    lv_seed: Option<&[f64]>,
    entry_scale: f64,
) -> Result<GradResult> {
    let trace = &run.trace;
    check_observation_shapes(field, z0, targets, proj, trace, run.states.len())?;
    if trace.dim != field.dim() {
        return Err(Error::TraceMismatch(format!(
            "trace dim {} against field dim {}",
            trace.dim,
            field.dim()
        )));
    }
    let num_obs = targets.len();
    let counted = CountingField::new(field);
    let mut pair = AdjointPair::new(run.states[num_obs - 1].clone());
    if let Some(lv) = lv_seed {
        pair.lv.copy_from_slice(lv);
    }
    let mut scratch = AdjointScratch::for_field(field);
    let p = field.param_count();
    let mut grad = vec![0.0; p];
    let mut res = vec![0.0; proj.observed()];
    let mut loss = 0.0;

    for i in (0..num_obs).rev() {
        if i + 1 < num_obs {
            // snap the carried state to the stored checkpoint, killing the
            // round-off drift accumulated across the segment walked so far
            pair.state.z.copy_from_slice(&run.states[i].z);
            pair.state.v.copy_from_slice(&run.states[i].v);
            pair.state.t = run.states[i].t;
        }
        proj.residual_into(&pair.state.z, &targets[i], &mut res)?;
        for (k, &idx) in proj.indices().iter().enumerate() {
            loss += res[k] * res[k];
            pair.lz[idx] += 2.0 * res[k];
        }
        for &h in trace.steps[trace.segment_range(i)].iter().rev() {
            if entry_scale == 1.0 {
                method_adjoint_back(
                    &counted,
                    theta,
                    &mut pair,
                    trace.method,
                    h,
                    &mut grad,
                    &mut scratch,
                )?;
            } else {
                composition_adjoint_back(
                    &counted,
                    theta,
                    &mut pair,
                    trace.method,
                    h,
                    &mut grad,
                    &mut scratch,
                    entry_scale,
                )?;
            }
        }
    }

    if p > 0 {
        // the initial velocity is itself a field value, so its parameter
        // dependence contributes once at the start
        let mut g0 = vec![0.0; p];
        counted.vjp_params(z0, t0, theta, &pair.lv, &mut g0)?;
        for (gi, ci) in grad.iter_mut().zip(g0) {
            *gi += ci;
        }
    }

    Ok(GradResult {
        loss,
        grad,
        lz_at_t0: pair.lz.clone(),
        lv_at_t0: pair.lv.clone(),
        counts: counted.counts(),
    })
}

/// Loss of the recorded step sequence replayed under (possibly different)
/// parameters. The grid is held fixed, so finite differences of this
/// function differentiate exactly what the backward sweep differentiates,
/// also for adaptively chosen traces.
pub fn loss_with_frozen_trace(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    targets: &[Vec<f64>],
    proj: &Projection,
    trace: &StepTrace,
) -> Result<f64> {
    check_observation_shapes(field, z0, targets, proj, trace, targets.len())?;
    let mut phi = init_augmented(field, theta, z0, t0)?;
    let mut scratch = StepScratch::for_dim(field.dim());
    let mut res = vec![0.0; proj.observed()];
    let mut loss = 0.0;
    for (i, target) in targets.iter().enumerate() {
        for &h in &trace.steps[trace.segment_range(i)] {
            method_step(field, theta, &mut phi, trace.method, h, &mut scratch)?;
        }
        proj.residual_into(&phi.z, target, &mut res)?;
        for r in &res {
            loss += r * r;
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjoint::steps::alf_adjoint_back;
    use crate::dynamics::{Kepler, Zero};
    use crate::integrators::{integrate_forward, IntegrateOptions, Method, Mode};

    fn kepler_run(method: Method, h: f64, obs: &[f64]) -> (Kepler, Vec<f64>, Vec<f64>, ForwardRun) {
        let f = Kepler;
        let theta = vec![Kepler::alpha_truth()];
        let z0 = Kepler::start_state().to_vec();
        let run = integrate_forward(
            &f,
            &theta,
            &z0,
            0.0,
            obs,
            method,
            Mode::Fixed { h },
            IntegrateOptions::default(),
        )
        .unwrap();
        (f, theta, z0, run)
    }

    #[test]
    fn projection_validates_and_projects() {
        assert!(Projection::new(vec![], 4).is_err());
        assert!(Projection::new(vec![1, 1], 4).is_err());
        assert!(Projection::new(vec![2, 1], 4).is_err());
        assert!(Projection::new(vec![0, 4], 4).is_err());
        let p = Projection::new(vec![0, 2], 4).unwrap();
        let mut r = vec![0.0; 2];
        p.residual_into(&[1.0, 9.0, 3.0, 9.0], &[0.5, 1.0], &mut r).unwrap();
        assert_eq!(r, vec![0.5, 2.0]);
        assert_eq!(Projection::full(3).indices(), &[0, 1, 2]);
    }

    #[test]
    fn perfect_fit_has_zero_loss_and_zero_gradient() {
        let (f, theta, z0, run) = kepler_run(Method::Yoshida(4), 0.05, &[1.0, 2.0]);
        let proj = Projection::new(vec![0, 1], 4).unwrap();
        let targets: Vec<Vec<f64>> = run
            .states
            .iter()
            .map(|s| vec![s.z[0], s.z[1]])
            .collect();
        let out = compute_gradients(&f, &theta, &z0, 0.0, &targets, &proj, &run).unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(out.grad, vec![0.0]);
        assert_eq!(out.lz_at_t0, vec![0.0; 4]);
        assert_eq!(out.lv_at_t0, vec![0.0; 4]);
    }

    #[test]
    fn zero_parameter_field_reports_empty_gradient() {
        let f = Zero::new(2);
        let run = integrate_forward(
            &f,
            &[],
            &[1.0, -1.0],
            0.0,
            &[1.0],
            Method::Alf2,
            Mode::Fixed { h: 0.25 },
            IntegrateOptions::default(),
        )
        .unwrap();
        let proj = Projection::full(2);
        let targets = vec![vec![0.0, 0.0]];
        let out =
            compute_gradients(&f, &[], &[1.0, -1.0], 0.0, &targets, &proj, &run).unwrap();
        assert!(out.grad.is_empty());
        // zero field freezes z, so the residual is the initial state itself
        assert!((out.loss - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_step_sweep_equals_the_manual_chain() {
        let (f, theta, z0, run) = kepler_run(Method::Alf, 0.5, &[0.5]);
        let proj = Projection::new(vec![0, 1], 4).unwrap();
        let targets = vec![vec![0.2, -0.1]];
        let out = compute_gradients(&f, &theta, &z0, 0.0, &targets, &proj, &run).unwrap();

        let mut pair = AdjointPair::new(run.states[0].clone());
        let mut res = vec![0.0; 2];
        proj.residual_into(&pair.state.z, &targets[0], &mut res).unwrap();
        for (k, &idx) in proj.indices().iter().enumerate() {
            pair.lz[idx] += 2.0 * res[k];
        }
        let mut grad = vec![0.0; 1];
        let mut scratch = AdjointScratch::for_field(&f);
        alf_adjoint_back(&f, &theta, &mut pair, 0.5, &mut grad, &mut scratch).unwrap();
        let mut g0 = vec![0.0; 1];
        f.vjp_params(&z0, 0.0, &theta, &pair.lv, &mut g0).unwrap();
        grad[0] += g0[0];

        assert!((out.grad[0] - grad[0]).abs() <= 1e-14 * grad[0].abs().max(1.0));
        let manual_loss: f64 = res.iter().map(|r| r * r).sum();
        assert!((out.loss - manual_loss).abs() < 1e-15);
    }

    #[test]
    fn frozen_trace_replay_reproduces_the_recorded_loss() {
        let (f, theta, z0, run) = kepler_run(Method::Yoshida(4), 0.02, &[1.0, 2.0, 3.0]);
        let proj = Projection::new(vec![0, 1], 4).unwrap();
        let targets = vec![vec![0.1, 0.2], vec![-0.3, 0.0], vec![0.4, 0.4]];
        let swept = compute_gradients(&f, &theta, &z0, 0.0, &targets, &proj, &run).unwrap();
        let replayed =
            loss_with_frozen_trace(&f, &theta, &z0, 0.0, &targets, &proj, &run.trace).unwrap();
        assert!(
            (swept.loss - replayed).abs() <= 1e-12 * replayed.abs(),
            "{} vs {replayed}",
            swept.loss
        );
    }

    #[test]
    fn nonzero_terminal_velocity_sensitivity_changes_the_gradient() {
        let (f, theta, z0, run) = kepler_run(Method::Alf2, 0.05, &[1.0]);
        let proj = Projection::new(vec![0, 1], 4).unwrap();
        let targets = vec![vec![0.2, -0.1]];
        let clean =
            backward_sweep(&f, &theta, &z0, 0.0, &targets, &proj, &run, None, 1.0).unwrap();
        let seeded = backward_sweep(
            &f,
            &theta,
            &z0,
            0.0,
            &targets,
            &proj,
            &run,
            Some(&[0.1, -0.2, 0.3, 0.4]),
            1.0,
        )
        .unwrap();
        assert!(
            (clean.grad[0] - seeded.grad[0]).abs() > 1e-8,
            "sweep ignored the terminal velocity sensitivity"
        );
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let (f, theta, z0, run) = kepler_run(Method::Alf2, 0.1, &[1.0]);
        let proj = Projection::new(vec![0, 1], 4).unwrap();
        let too_many = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(compute_gradients(&f, &theta, &z0, 0.0, &too_many, &proj, &run).is_err());
        let bad_width = vec![vec![0.0, 0.0, 0.0]];
        assert!(compute_gradients(&f, &theta, &z0, 0.0, &bad_width, &proj, &run).is_err());
    }
}
