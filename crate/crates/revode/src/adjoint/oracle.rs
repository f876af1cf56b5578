//! Independent gradient oracles for verifying the backward sweep.
//!
//! The full-storage oracle re-integrates the recorded grid with its own
//! forward kernel, stores every sub-step state, and applies the sensitivity
//! recursion using the stored (not reconstructed) midpoints. The finite
//! difference oracle knows nothing about the structure at all. Both exist
//! only to cross-check `compute_gradients`; neither is memory-frugal.

use super::gradients::Projection;
use crate::dynamics::VectorField;
use crate::error::{Error, Result};
use crate::integrators::StepTrace;

/// Loss and gradient over a recorded trace, computed with every intermediate
/// state stored. Memory grows with the sub-step count by design.
pub fn full_storage_oracle(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    targets: &[Vec<f64>],
    proj: &Projection,
    trace: &StepTrace,
) -> Result<(f64, Vec<f64>)> {
    let d = field.dim();
    let p = field.param_count();
    if targets.len() != trace.num_segments() {
        return Err(Error::TraceMismatch(format!(
            "{} targets against {} trace segments",
            targets.len(),
            trace.num_segments()
        )));
    }

    // forward replay, storing (z, v, t) ahead of every sub-step
    let mut subs: Vec<f64> = Vec::new();
    for &h in &trace.steps {
        trace.method.push_substeps(h, &mut subs);
    }
    let per_step = subs.len() / trace.steps.len().max(1);
    let mut stored: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(subs.len());
    let mut z = z0.to_vec();
    let mut v = vec![0.0; d];
    field.eval(&z, t0, theta, &mut v)?;
    let mut t = t0;
    let mut mid = vec![0.0; d];
    let mut fm = vec![0.0; d];
    let mut obs_z: Vec<Vec<f64>> = Vec::with_capacity(targets.len());
    let mut next_seg = 0;
    for (step_idx, &h) in trace.steps.iter().enumerate() {
        let mut block = Vec::new();
        trace.method.push_substeps(h, &mut block);
        for &s in &block {
            stored.push((z.clone(), v.clone(), t));
            for i in 0..d {
                mid[i] = z[i] + 0.5 * s * v[i];
            }
            field.eval(&mid, t + 0.5 * s, theta, &mut fm)?;
            for i in 0..d {
                z[i] += s * fm[i];
                v[i] = 2.0 * fm[i] - v[i];
            }
            t += s;
        }
        while next_seg < trace.seg_ends.len() && trace.seg_ends[next_seg] == step_idx + 1 {
            obs_z.push(z.clone());
            next_seg += 1;
        }
    }
    if obs_z.len() != targets.len() {
        return Err(Error::TraceMismatch(
            "trace segment markers do not line up with its steps".into(),
        ));
    }

    // backward recursion on the stored states
    let mut lz = vec![0.0; d];
    let mut lv = vec![0.0; d];
    let mut u = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut gtheta = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut res = vec![0.0; proj.observed()];
    let mut loss = 0.0;
    let mut cursor = stored.len();
    for i in (0..targets.len()).rev() {
        proj.residual_into(&obs_z[i], &targets[i], &mut res)?;
        for (k, &idx) in proj.indices().iter().enumerate() {
            loss += res[k] * res[k];
            lz[idx] += 2.0 * res[k];
        }
        let range = trace.segment_range(i);
        let n_sub = (range.end - range.start) * per_step;
        for _ in 0..n_sub {
            cursor -= 1;
            let (zb, vb, tb) = &stored[cursor];
            let s = subs[cursor];
            for i in 0..d {
                mid[i] = zb[i] + 0.5 * s * vb[i];
            }
            let t_mid = tb + 0.5 * s;
            for i in 0..d {
                u[i] = s * lz[i] + 2.0 * lv[i];
            }
            field.vjp_state(&mid, t_mid, theta, &u, &mut g)?;
            if p > 0 {
                field.vjp_params(&mid, t_mid, theta, &u, &mut gtheta)?;
                for (gi, &ci) in grad.iter_mut().zip(gtheta.iter()) {
                    *gi += ci;
                }
            }
            for i in 0..d {
                lz[i] += g[i];
                lv[i] = 0.5 * s * g[i] - lv[i];
            }
        }
    }
    debug_assert_eq!(cursor, 0);

    if p > 0 {
        field.vjp_params(z0, t0, theta, &lv, &mut gtheta)?;
        for (gi, &ci) in grad.iter_mut().zip(gtheta.iter()) {
            *gi += ci;
        }
    }
    Ok((loss, grad))
}

/// Central-difference gradient of an arbitrary scalar function of theta.
pub fn finite_difference_oracle(
    loss: &mut dyn FnMut(&[f64]) -> Result<f64>,
    theta: &[f64],
    eps: f64,
) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {eps}")));
    }
    let mut grad = vec![0.0; theta.len()];
    let mut work = theta.to_vec();
    for j in 0..theta.len() {
        work[j] = theta[j] + eps;
        let fp = loss(&work)?;
        work[j] = theta[j] - eps;
        let fm = loss(&work)?;
        work[j] = theta[j];
        grad[j] = (fp - fm) / (2.0 * eps);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjoint::{compute_gradients, loss_with_frozen_trace};
    use crate::dynamics::{Duffing, Kepler};
    use crate::integrators::{integrate_forward, ForwardRun, IntegrateOptions, Method, Mode};

    fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / scale)
            .fold(0.0, f64::max)
    }

    fn kepler_problem(
        method: Method,
        mode: Mode,
    ) -> (Kepler, Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Projection, ForwardRun) {
        let f = Kepler;
        let theta = vec![Kepler::alpha_truth()];
        let z0 = Kepler::start_state().to_vec();
        let run = integrate_forward(
            &f,
            &theta,
            &z0,
            0.0,
            &[1.0, 2.0, 3.0],
            method,
            mode,
            IntegrateOptions::default(),
        )
        .unwrap();
        let proj = Projection::new(vec![0, 1], 4).unwrap();
        // slightly off-trajectory targets so residuals and sensitivities are
        // nonzero
        let targets: Vec<Vec<f64>> = run
            .states
            .iter()
            .map(|s| vec![s.z[0] - 0.05, s.z[1] + 0.08])
            .collect();
        (f, theta, z0, targets, proj, run)
    }

    #[test]
    fn fd_oracle_handles_polynomials() {
        let mut square = |th: &[f64]| Ok(th[0] * th[0]);
        let g = finite_difference_oracle(&mut square, &[3.0], 1e-6).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let mut line = |th: &[f64]| Ok(2.5 * th[0] - th[1]);
        let g = finite_difference_oracle(&mut line, &[1.0, 2.0], 1e-6).unwrap();
        assert!((g[0] - 2.5).abs() < 1e-9);
        assert!((g[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_storage_zero_residual_gives_zero_gradient() {
        let (f, theta, z0, _, proj, run) = kepler_problem(
            Method::Alf2,
            Mode::Fixed { h: 0.05 },
        );
        let exact: Vec<Vec<f64>> =
            run.states.iter().map(|s| vec![s.z[0], s.z[1]]).collect();
        let (loss, grad) =
            full_storage_oracle(&f, &theta, &z0, 0.0, &exact, &proj, &run.trace).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grad, vec![0.0]);
    }

    #[test]
    fn sweep_matches_full_storage_on_fixed_grids() {
        for method in [Method::Alf, Method::Alf2, Method::Yoshida(4), Method::Yoshida(6)] {
            let (f, theta, z0, targets, proj, run) =
                kepler_problem(method, Mode::Fixed { h: 0.05 });
            let swept = compute_gradients(&f, &theta, &z0, 0.0, &targets, &proj, &run).unwrap();
            let (loss, grad) =
                full_storage_oracle(&f, &theta, &z0, 0.0, &targets, &proj, &run.trace).unwrap();
            assert!(
                (swept.loss - loss).abs() <= 1e-12 * loss.abs().max(1.0),
                "{method:?} loss {} vs {loss}",
                swept.loss
            );
            let rel = max_rel_diff(&swept.grad, &grad);
            assert!(rel <= 1e-10, "{method:?} gradient mismatch {rel}");
        }
    }

    #[test]
    fn sweep_matches_full_storage_on_adaptive_traces() {
        for method in [Method::Alf2, Method::Yoshida(4)] {
            let (f, theta, z0, targets, proj, run) = kepler_problem(
                method,
                Mode::Adaptive { atol: 1e-8, rtol: 1e-8, h0: None },
            );
            let swept = compute_gradients(&f, &theta, &z0, 0.0, &targets, &proj, &run).unwrap();
            let (_, grad) =
                full_storage_oracle(&f, &theta, &z0, 0.0, &targets, &proj, &run.trace).unwrap();
            let rel = max_rel_diff(&swept.grad, &grad);
            assert!(rel <= 1e-9, "{method:?} gradient mismatch {rel}");
        }
    }

    #[test]
    fn sweep_matches_finite_differences_on_kepler() {
        for mode in [
            Mode::Fixed { h: 0.05 },
            Mode::Adaptive { atol: 1e-8, rtol: 1e-8, h0: None },
        ] {
            let (f, theta, z0, targets, proj, run) = kepler_problem(Method::Yoshida(4), mode);
            let swept = compute_gradients(&f, &theta, &z0, 0.0, &targets, &proj, &run).unwrap();
            let mut frozen = |th: &[f64]| {
                loss_with_frozen_trace(&f, th, &z0, 0.0, &targets, &proj, &run.trace)
            };
            let fd = finite_difference_oracle(&mut frozen, &theta, 1e-6).unwrap();
            let rel = max_rel_diff(&swept.grad, &fd);
            assert!(rel <= 1e-5, "gradient vs FD mismatch {rel}");
        }
    }

    #[test]
    fn sweep_matches_finite_differences_on_duffing() {
        let f = Duffing::new(2);
        let theta = vec![1.0, 1.1, 0.4, 0.3, 0.2];
        let z0 = vec![0.6, -0.4, 0.1, 0.3];
        let run = integrate_forward(
            &f,
            &theta,
            &z0,
            0.0,
            &[1.0, 2.0],
            Method::Alf2,
            Mode::Fixed { h: 0.05 },
            IntegrateOptions::default(),
        )
        .unwrap();
        let proj = Projection::full(4);
        let targets: Vec<Vec<f64>> = run
            .states
            .iter()
            .map(|s| s.z.iter().map(|x| x + 0.1).collect())
            .collect();
        let swept = compute_gradients(&f, &theta, &z0, 0.0, &targets, &proj, &run).unwrap();
        let mut frozen =
            |th: &[f64]| loss_with_frozen_trace(&f, th, &z0, 0.0, &targets, &proj, &run.trace);
        let fd = finite_difference_oracle(&mut frozen, &theta, 1e-6).unwrap();
        let rel = max_rel_diff(&swept.grad, &fd);
        assert!(rel <= 1e-5, "gradient vs FD mismatch {rel}");
    }
}
