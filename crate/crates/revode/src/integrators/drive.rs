//! Forward integration driver with fixed or adaptive stepping, and the exact
//! backward replay of a recorded step sequence.

use std::io::Write as IoWrite;

use serde::{Deserialize, Serialize};

use super::controller::{propose_step, step_with_error, ErrorWeights};
use super::method::Method;
use super::state::{init_augmented, AugmentedState};
use super::step::{method_step, StepScratch};
use crate::dynamics::{CountingField, VectorField};
use crate::error::{Error, Result};

/// Stepping mode for [`integrate_forward`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fixed { h: f64 },
    Adaptive { atol: f64, rtol: f64, h0: Option<f64> },
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// Accepted-step budget before reporting divergence.
    pub max_steps: u64,
    /// Consecutive rejections before reporting stiffness.
    pub max_consecutive_rejects: u32,
    /// Keep one [`TraceRow`] per attempt for export.
    pub record_rows: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            max_steps: 1_000_000,
            max_consecutive_rejects: 30,
            record_rows: false,
        }
    }
}

/// One attempted step, for diagnostics export.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: f64,
    pub h: f64,
    pub accepted: bool,
    pub err_norm: f64,
}

/// The exact accepted step sequence of a forward run.
///
/// `steps` holds every accepted step size in order. An adaptive accept
/// contributes its two committed half-steps as two consecutive entries, so
/// replaying `steps` reproduces the forward state sequence bit for bit.
/// `seg_ends[i]` is the index one past the last step of the segment ending at
/// observation time `i`.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub method: Method,
    pub dim: usize,
    pub steps: Vec<f64>,
    pub seg_ends: Vec<usize>,
    pub fevals: u64,
    pub rejected: u64,
    pub rows: Option<Vec<TraceRow>>,
}

impl StepTrace {
    pub fn num_segments(&self) -> usize {
        self.seg_ends.len()
    }

    /// Step-index range of segment `i`.
    pub fn segment_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = if i == 0 { 0 } else { self.seg_ends[i - 1] };
        start..self.seg_ends[i]
    }

    pub fn total_time(&self) -> f64 {
        self.steps.iter().sum()
    }

    /// Writes the per-attempt rows as CSV. Requires `record_rows`.
    pub fn write_rows_csv<W: IoWrite>(&self, w: &mut W) -> Result<()> {
        let rows = self
            .rows
            .as_ref()
            .ok_or_else(|| Error::Invalid("trace rows were not recorded".into()))?;
        writeln!(w, "index,t,h,accepted,err_norm").map_err(|e| Error::Invalid(e.to_string()))?;
        for (i, r) in rows.iter().enumerate() {
            writeln!(
                w,
                "{},{:.17e},{:.17e},{},{:.17e}",
                i, r.t, r.h, r.accepted as u8, r.err_norm
            )
            .map_err(|e| Error::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}

/// Forward run output: the state at each observation time plus the trace.
#[derive(Debug, Clone)]
pub struct ForwardRun {
    pub states: Vec<AugmentedState>,
    pub trace: StepTrace,
}

/// Backward replay output.
#[derive(Debug, Clone)]
pub struct BackwardRun {
    pub state: AugmentedState,
    pub fevals: u64,
}

fn validate_obs_times(t0: f64, obs_times: &[f64]) -> Result<()> {
    if obs_times.is_empty() {
        return Err(Error::Invalid("need at least one observation time".into()));
    }
    let mut prev = t0;
    for &t in obs_times {
        if !(t > prev) {
            return Err(Error::Invalid(format!(
                "observation times must be strictly increasing and start after t0: {t} after {prev}"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Integrates from `(z0, t0)` through each observation time in order.
///
/// Observation times are hit exactly by clipping the final step of each
/// segment. In adaptive mode the committed state of every accepted step is
/// the two-half-step solution from the error estimator and the trace records
/// those two halves; field failures (singularity, non-finite output) during a
/// trial are treated as rejections with the step halved.
pub fn integrate_forward(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    obs_times: &[f64],
    method: Method,
    mode: Mode,
    opts: IntegrateOptions,
) -> Result<ForwardRun> {
    if !method.reversible() {
        return Err(Error::Invalid(format!(
            "integrate_forward drives reversible compositions, not {}",
            method.name()
        )));
    }
    validate_obs_times(t0, obs_times)?;
    let t_end = *obs_times.last().unwrap();
    let (fixed_h, weights, mut h_ctrl) = match mode {
        Mode::Fixed { h } => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Invalid(format!("fixed step must be positive, got {h}")));
            }
            (Some(h), None, h)
        }
        Mode::Adaptive { atol, rtol, h0 } => {
            let w = ErrorWeights::new(atol, rtol)?;
            let h0 = h0.unwrap_or((t_end - t0) / 100.0);
            if !(h0 > 0.0 && h0.is_finite()) {
                return Err(Error::Invalid(format!("initial step must be positive, got {h0}")));
            }
            (None, Some(w), h0)
        }
    };

    let counted = CountingField::new(field);
    let mut phi = init_augmented(&counted, theta, z0, t0)?;
    let mut scratch = StepScratch::for_dim(phi.dim());
    let p = method.order();

    let mut steps: Vec<f64> = Vec::new();
    let mut seg_ends: Vec<usize> = Vec::new();
    let mut rows: Option<Vec<TraceRow>> = if opts.record_rows { Some(Vec::new()) } else { None };
    let mut rejected: u64 = 0;
    let mut states: Vec<AugmentedState> = Vec::new();

    for &t_target in obs_times {
        let tiny = 1e-12 * t_target.abs().max(1.0);
        let mut consec: u32 = 0;
        loop {
            let remaining = t_target - phi.t;
            if remaining <= tiny {
                break;
            }
            if let Some(h) = fixed_h {
                let h_att = if remaining < h * (1.0 + 1e-9) { remaining } else { h };
                method_step(&counted, theta, &mut phi, method, h_att, &mut scratch)?;
                steps.push(h_att);
                if let Some(rows) = rows.as_mut() {
                    rows.push(TraceRow { t: phi.t - h_att, h: h_att, accepted: true, err_norm: 0.0 });
                }
            } else {
                let weights = weights.unwrap();
                let h_att = if remaining <= h_ctrl * 1.1 { remaining } else { h_ctrl };
                let attempt =
                    step_with_error(&counted, theta, &phi, method, h_att, weights, &mut scratch);
                let reject = |err: f64,
                                  rows: &mut Option<Vec<TraceRow>>,
                                  rejected: &mut u64,
                                  consec: &mut u32|
                 -> Result<()> {
                    if let Some(rows) = rows.as_mut() {
                        rows.push(TraceRow { t: phi.t, h: h_att, accepted: false, err_norm: err });
                    }
                    *rejected += 1;
                    *consec += 1;
                    if *consec > opts.max_consecutive_rejects {
                        return Err(Error::Stiff { rejects: *consec as usize, t: phi.t });
                    }
                    Ok(())
                };
                match attempt {
                    Err(Error::Singularity { .. }) | Err(Error::NonFinite { .. }) => {
                        reject(f64::INFINITY, &mut rows, &mut rejected, &mut consec)?;
                        h_ctrl = 0.5 * h_att;
                        continue;
                    }
                    Err(e) => return Err(e),
                    Ok((half, err_norm)) => {
                        if !err_norm.is_finite() {
                            reject(err_norm, &mut rows, &mut rejected, &mut consec)?;
                            h_ctrl = 0.5 * h_att;
                            continue;
                        }
                        let dec = propose_step(err_norm, h_att, p);
                        if let Some(rows) = rows.as_mut() {
                            rows.push(TraceRow {
                                t: phi.t,
                                h: h_att,
                                accepted: dec.accept,
                                err_norm,
                            });
                        }
                        if dec.accept {
                            phi = half;
                            steps.push(0.5 * h_att);
                            steps.push(0.5 * h_att);
                            consec = 0;
                        } else {
                            rejected += 1;
                            consec += 1;
                            if consec > opts.max_consecutive_rejects {
                                return Err(Error::Stiff { rejects: consec as usize, t: phi.t });
                            }
                        }
                        h_ctrl = dec.h_next;
                    }
                }
            }
            if steps.len() as u64 > opts.max_steps {
                return Err(Error::Diverged { max_steps: opts.max_steps as usize, target: t_target });
            }
        }
        seg_ends.push(steps.len());
        states.push(phi.clone());
    }

    let counts = counted.counts();
    Ok(ForwardRun {
        states,
        trace: StepTrace {
            method,
            dim: z0.len(),
            steps,
            seg_ends,
            fevals: counts.evals,
            rejected,
            rows,
        },
    })
}

/// Replays the recorded steps in reverse with negated sizes, mapping the end
/// state of a forward run back to its start. Uses the same per-step maps, so
/// the mismatch is round-off only.
pub fn integrate_backward(
    field: &dyn VectorField,
    theta: &[f64],
    end: &AugmentedState,
    trace: &StepTrace,
) -> Result<BackwardRun> {
    if end.dim() != trace.dim {
        return Err(Error::TraceMismatch(format!(
            "trace dim {} does not match state dim {}",
            trace.dim,
            end.dim()
        )));
    }
    let counted = CountingField::new(field);
    let mut phi = end.clone();
    let mut scratch = StepScratch::for_dim(phi.dim());
    for &h in trace.steps.iter().rev() {
        method_step(&counted, theta, &mut phi, trace.method, -h, &mut scratch)?;
    }
    Ok(BackwardRun { state: phi, fevals: counted.counts().evals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Duffing, Linear};

    fn duffing_theta(f: &Duffing) -> Vec<f64> {
        let mut theta = vec![0.0; f.param_count()];
        for (i, x) in theta.iter_mut().enumerate() {
            *x = 0.3 + 0.1 * i as f64;
        }
        theta
    }

    #[test]
    fn fixed_grid_covers_interval_exactly() {
        let f = Linear::new(1);
        let run = integrate_forward(
            &f,
            &[],
            &[1.0],
            0.0,
            &[1.0],
            Method::Alf2,
            Mode::Fixed { h: 0.1 },
            IntegrateOptions::default(),
        )
        .unwrap();
        assert_eq!(run.trace.steps.len(), 10);
        assert_eq!(run.trace.seg_ends, vec![10]);
        assert!((run.trace.total_time() - 1.0).abs() < 1e-14);
        // 1 init eval + 2 per ALF2 step
        assert_eq!(run.trace.fevals, 1 + 20);
        assert!((run.states[0].z[0] - 1f64.exp()).abs() < 2e-3);
        assert!((run.states[0].t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_grid_clips_the_final_step() {
        let f = Linear::new(1);
        let run = integrate_forward(
            &f,
            &[],
            &[1.0],
            0.0,
            &[1.0],
            Method::Alf2,
            Mode::Fixed { h: 0.3 },
            IntegrateOptions::default(),
        )
        .unwrap();
        assert_eq!(run.trace.steps.len(), 4);
        let last = *run.trace.steps.last().unwrap();
        assert!(last > 0.09 && last < 0.11, "clip step {last}");
        assert!((run.trace.total_time() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn segments_partition_the_trace_and_sum_to_their_lengths() {
        let f = Duffing::new(2);
        let theta = duffing_theta(&f);
        let obs = [0.5, 1.0, 2.0];
        let run = integrate_forward(
            &f,
            &theta,
            &[0.4, -0.3, 0.1, 0.2],
            0.0,
            &obs,
            Method::Yoshida(4),
            Mode::Adaptive { atol: 1e-8, rtol: 1e-8, h0: None },
            IntegrateOptions::default(),
        )
        .unwrap();
        assert_eq!(run.states.len(), 3);
        assert_eq!(run.trace.num_segments(), 3);
        let mut prev_t = 0.0;
        for (i, &t_obs) in obs.iter().enumerate() {
            let sum: f64 = run.trace.steps[run.trace.segment_range(i)].iter().sum();
            assert!(
                (sum - (t_obs - prev_t)).abs() <= 1e-14 * t_obs.max(1.0),
                "segment {i} sums to {sum}"
            );
            assert!((run.states[i].t - t_obs).abs() <= 1e-12 * t_obs.max(1.0));
            prev_t = t_obs;
        }
        assert_eq!(*run.trace.seg_ends.last().unwrap(), run.trace.steps.len());
    }

    #[test]
    fn adaptive_accepts_record_matching_half_pairs_and_bill_evals() {
        let f = Duffing::new(1);
        let theta = vec![1.0, 0.4];
        let run = integrate_forward(
            &f,
            &theta,
            &[0.7, 0.0],
            0.0,
            &[3.0],
            Method::Alf2,
            Mode::Adaptive { atol: 1e-9, rtol: 1e-9, h0: None },
            IntegrateOptions { record_rows: true, ..Default::default() },
        )
        .unwrap();
        let steps = &run.trace.steps;
        assert!(steps.len() % 2 == 0 && !steps.is_empty());
        for pair in steps.chunks(2) {
            assert_eq!(pair[0], pair[1]);
        }
        let attempts = (steps.len() / 2) as u64 + run.trace.rejected;
        // each attempt runs three ALF2 method-steps on top of the init eval
        assert_eq!(run.trace.fevals, 1 + 6 * attempts);
        let rows = run.trace.rows.as_ref().unwrap();
        assert_eq!(rows.len() as u64, attempts);
        assert_eq!(
            rows.iter().filter(|r| r.accepted).count(),
            steps.len() / 2
        );
    }

    #[test]
    fn backward_replay_recovers_the_start_in_both_modes() {
        let f = Duffing::new(2);
        let theta = duffing_theta(&f);
        let z0 = [0.5, -0.2, 0.3, 0.8];
        for mode in [
            Mode::Fixed { h: 0.02 },
            Mode::Adaptive { atol: 1e-10, rtol: 1e-10, h0: None },
        ] {
            let run = integrate_forward(
                &f,
                &theta,
                &z0,
                0.0,
                &[2.0],
                Method::Yoshida(4),
                mode,
                IntegrateOptions::default(),
            )
            .unwrap();
            let back = integrate_backward(&f, &theta, &run.states[0], &run.trace).unwrap();
            let start = init_augmented(&f, &theta, &z0, 0.0).unwrap();
            let scale = 1.0 + start.max_abs();
            assert!(
                back.state.distance(&start) <= 1e-11 * scale,
                "round trip error {}",
                back.state.distance(&start)
            );
            assert_eq!(back.fevals, run.trace.steps.len() as u64 * 6);
        }
    }

    struct WallField;

    impl VectorField for WallField {
        fn dim(&self) -> usize {
            1
        }
        fn param_count(&self) -> usize {
            0
        }
        fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
            Vec::new()
        }
        fn eval(&self, _z: &[f64], t: f64, _theta: &[f64], out: &mut [f64]) -> Result<()> {
            if t > 0.0 {
                return Err(Error::Singularity { norm: t, guard: 0.0 });
            }
            out[0] = 1.0;
            Ok(())
        }
        fn vjp_state(
            &self,
            _z: &[f64],
            _t: f64,
            _theta: &[f64],
            _w: &[f64],
            out: &mut [f64],
        ) -> Result<()> {
            out[0] = 0.0;
            Ok(())
        }
        fn vjp_params(
            &self,
            _z: &[f64],
            _t: f64,
            _theta: &[f64],
            _w: &[f64],
            _out: &mut [f64],
        ) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn persistent_field_failure_reports_stiffness() {
        let err = integrate_forward(
            &WallField,
            &[],
            &[0.0],
            0.0,
            &[1.0],
            Method::Alf2,
            Mode::Adaptive { atol: 1e-8, rtol: 1e-8, h0: None },
            IntegrateOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Stiff { .. }), "got {err:?}");
    }

    #[test]
    fn step_budget_exhaustion_reports_divergence() {
        let f = Linear::new(1);
        let err = integrate_forward(
            &f,
            &[],
            &[1.0],
            0.0,
            &[1.0],
            Method::Alf2,
            Mode::Fixed { h: 1e-4 },
            IntegrateOptions { max_steps: 100, ..Default::default() },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Diverged { max_steps: 100, .. }), "got {err:?}");
    }

    #[test]
    fn backward_rejects_mismatched_dimension() {
        let f = Linear::new(1);
        let run = integrate_forward(
            &f,
            &[],
            &[1.0],
            0.0,
            &[0.5],
            Method::Alf2,
            Mode::Fixed { h: 0.1 },
            IntegrateOptions::default(),
        )
        .unwrap();
        let f2 = Linear::new(2);
        let bad = init_augmented(&f2, &[], &[1.0, 2.0], 0.5).unwrap();
        assert!(integrate_backward(&f2, &[], &bad, &run.trace).is_err());
    }

    #[test]
    fn row_export_produces_csv() {
        let f = Linear::new(1);
        let run = integrate_forward(
            &f,
            &[],
            &[1.0],
            0.0,
            &[0.5],
            Method::Alf2,
            Mode::Adaptive { atol: 1e-6, rtol: 1e-6, h0: None },
            IntegrateOptions { record_rows: true, ..Default::default() },
        )
        .unwrap();
        let mut buf = Vec::new();
        run.trace.write_rows_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "index,t,h,accepted,err_norm");
        assert!(lines.count() >= 1);
    }
}
