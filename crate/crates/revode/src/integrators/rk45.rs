//! Dormand-Prince 5(4) reference integrator.
//!
//! Non-reversible, classic embedded pair with FSAL, used to manufacture
//! ground-truth trajectories and reference endpoints for convergence studies.
//! Shares the acceptance rule and step-size update of the main driver.

use super::controller::propose_step;
use super::drive::IntegrateOptions;
use crate::dynamics::{CountingField, VectorField};
use crate::error::{ensure_finite, Error, Result};

const STAGES: usize = 7;

const C: [f64; STAGES] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights (identical to the last A row: FSAL).
const B5: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Fourth-order embedded weights.
const B4: [f64; STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    0.025,
];

struct Rk45Scratch {
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Rk45Scratch {
    fn for_dim(d: usize) -> Self {
        Self {
            k: vec![vec![0.0; d]; STAGES],
            stage: vec![0.0; d],
            y_new: vec![0.0; d],
        }
    }
}

/// One trial step from `(y, t)` by `h`; `k[0]` must hold `f(y, t)` on entry.
/// On success `y_new` and `k[6] = f(y_new)` are filled and the weighted error
/// norm is returned.
fn rk45_trial(
    field: &dyn VectorField,
    theta: &[f64],
    y: &[f64],
    t: f64,
    h: f64,
    atol: f64,
    rtol: f64,
    s: &mut Rk45Scratch,
) -> Result<f64> {
    let d = y.len();
    for stage in 1..STAGES {
        for i in 0..d {
            let mut acc = 0.0;
            for (j, kj) in s.k[..stage].iter().enumerate() {
                acc += A[stage][j] * kj[i];
            }
            s.stage[i] = y[i] + h * acc;
        }
        if stage == STAGES - 1 {
            s.y_new.copy_from_slice(&s.stage);
        }
        field.eval(&s.stage, t + C[stage] * h, theta, &mut s.k[stage])?;
    }
    ensure_finite("trial state", &s.y_new)?;

    let mut sum_sq = 0.0;
    for i in 0..d {
        let mut e = 0.0;
        for j in 0..STAGES {
            e += (B5[j] - B4[j]) * s.k[j][i];
        }
        e *= h;
        let w = atol + rtol * y[i].abs().max(s.y_new[i].abs());
        sum_sq += (e / w) * (e / w);
    }
    Ok((sum_sq / d as f64).sqrt())
}

/// Integrates through each observation time with the embedded 5(4) pair and
/// returns the state at every observation time.
pub fn rk45_path(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    obs_times: &[f64],
    atol: f64,
    rtol: f64,
) -> Result<Vec<Vec<f64>>> {
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
    if atol < 0.0 || rtol < 0.0 || (atol == 0.0 && rtol == 0.0) {
        return Err(Error::Invalid("rk45 needs atol >= 0, rtol >= 0, not both zero".into()));
    }
    let opts = IntegrateOptions::default();
    let counted = CountingField::new(field);
    let d = z0.len();
    let mut s = Rk45Scratch::for_dim(d);
    let mut y = z0.to_vec();
    let mut t = t0;
    let t_end = *obs_times.last().unwrap();
    let mut h_ctrl = (t_end - t0) / 100.0;
    let mut k1_fresh = false;
    let mut accepted: u64 = 0;
    let mut out = Vec::with_capacity(obs_times.len());

    for &t_target in obs_times {
        let tiny = 1e-12 * t_target.abs().max(1.0);
        let mut consec: u32 = 0;
        loop {
            let remaining = t_target - t;
            if remaining <= tiny {
                break;
            }
            if !k1_fresh {
                let (first, _) = s.k.split_first_mut().unwrap();
                counted.eval(&y, t, theta, first)?;
                k1_fresh = true;
            }
            let h_att = if remaining <= h_ctrl * 1.1 { remaining } else { h_ctrl };
            match rk45_trial(&counted, theta, &y, t, h_att, atol, rtol, &mut s) {
                Err(Error::Singularity { .. }) | Err(Error::NonFinite { .. }) => {
                    consec += 1;
                    if consec > opts.max_consecutive_rejects {
                        return Err(Error::Stiff { rejects: consec as usize, t });
                    }
                    h_ctrl = 0.5 * h_att;
                }
                Err(e) => return Err(e),
                Ok(err_norm) => {
                    let dec = propose_step(err_norm, h_att, 4);
                    if dec.accept {
                        y.copy_from_slice(&s.y_new);
                        t += h_att;
                        s.k.swap(0, STAGES - 1);
                        consec = 0;
                        accepted += 1;
                        if accepted > opts.max_steps {
                            return Err(Error::Diverged {
                                max_steps: opts.max_steps as usize,
                                target: t_target,
                            });
                        }
                    } else {
                        consec += 1;
                        if consec > opts.max_consecutive_rejects {
                            return Err(Error::Stiff { rejects: consec as usize, t });
                        }
                    }
                    h_ctrl = dec.h_next;
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// End state at a single target time; tight-tolerance convenience wrapper.
pub fn rk45_reference(
    field: &dyn VectorField,
    theta: &[f64],
    z0: &[f64],
    t0: f64,
    t1: f64,
    atol: f64,
    rtol: f64,
) -> Result<Vec<f64>> {
    let mut path = rk45_path(field, theta, z0, t0, &[t1], atol, rtol)?;
    Ok(path.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Duffing, Kepler, Linear};

    #[test]
    fn exponential_growth_matches_closed_form() {
        let f = Linear::new(1);
        let y = rk45_reference(&f, &[], &[1.0], 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((y[0] - 1f64.exp()).abs() < 1e-10, "got {}", y[0]);
    }

    #[test]
    fn harmonic_oscillator_hits_observation_times_exactly() {
        // Duffing with a=1, b=0 is q'' = -q, so q(t) = cos(t) from (1, 0)
        let f = Duffing::new(1);
        let theta = [1.0, 0.0];
        let pi = std::f64::consts::PI;
        let path = rk45_path(
            &f,
            &theta,
            &[1.0, 0.0],
            0.0,
            &[0.5 * pi, pi, 2.0 * pi],
            1e-12,
            1e-12,
        )
        .unwrap();
        assert!(path[0][0].abs() < 1e-9);
        assert!((path[1][0] + 1.0).abs() < 1e-9);
        assert!((path[2][0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kepler_energy_is_conserved_at_tight_tolerance() {
        let f = Kepler;
        let theta = [Kepler::alpha_truth()];
        let z0 = Kepler::start_state();
        let e0 = Kepler::energy(&z0, theta[0]);
        let y = rk45_reference(&f, &theta, &z0, 0.0, 10.0, 1e-12, 1e-11).unwrap();
        let e1 = Kepler::energy(&y, theta[0]);
        assert!((e1 - e0).abs() < 1e-8 * e0.abs(), "drift {}", (e1 - e0).abs());
    }

    #[test]
    fn tolerance_controls_the_endpoint_error() {
        let f = Duffing::new(1);
        let theta = [1.0, 1.0];
        let z0 = [1.2, 0.0];
        let tight = rk45_reference(&f, &theta, &z0, 0.0, 5.0, 1e-13, 1e-13).unwrap();
        let loose = rk45_reference(&f, &theta, &z0, 0.0, 5.0, 1e-5, 1e-5).unwrap();
        let mid = rk45_reference(&f, &theta, &z0, 0.0, 5.0, 1e-9, 1e-9).unwrap();
        let err_loose = (loose[0] - tight[0]).abs() + (loose[1] - tight[1]).abs();
        let err_mid = (mid[0] - tight[0]).abs() + (mid[1] - tight[1]).abs();
        assert!(err_mid < err_loose, "{err_mid} vs {err_loose}");
        assert!(err_mid < 1e-6);
    }

    #[test]
    fn rejects_bad_observation_times() {
        let f = Linear::new(1);
        assert!(rk45_path(&f, &[], &[1.0], 0.0, &[], 1e-8, 1e-8).is_err());
        assert!(rk45_path(&f, &[], &[1.0], 0.0, &[1.0, 0.5], 1e-8, 1e-8).is_err());
        assert!(rk45_path(&f, &[], &[1.0], 1.0, &[0.5], 1e-8, 1e-8).is_err());
    }
}
