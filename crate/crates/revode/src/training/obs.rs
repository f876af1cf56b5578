//! Observed trajectory data and the quadratic observation loss.

use std::io::Write as IoWrite;

use crate::adjoint::Projection;
use crate::dynamics::VectorField;
use crate::error::{ensure_len, Error, Result};
use crate::integrators::AugmentedState;

/// One snapshot: the projected state target at a time.
#[derive(Debug, Clone)]
pub struct Observation {
    pub t: f64,
    pub target: Vec<f64>,
}

/// A trajectory's start plus its observations, in increasing time order.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub z0: Vec<f64>,
    pub t0: f64,
    pub obs: Vec<Observation>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.obs.iter().map(|o| o.t).collect()
    }

    pub fn targets(&self) -> Vec<Vec<f64>> {
        self.obs.iter().map(|o| o.target.clone()).collect()
    }
}

/// Trajectories sharing one projection (the same components are observed on
/// every snapshot).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub proj: Projection,
    pub trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn validate(&self, field: &dyn VectorField) -> Result<()> {
        ensure_len("projection", self.proj.state_dim(), field.dim())?;
        if self.trajectories.is_empty() {
            return Err(Error::Invalid("dataset has no trajectories".into()));
        }
        for (i, traj) in self.trajectories.iter().enumerate() {
            ensure_len("initial state", traj.z0.len(), field.dim())?;
            if traj.obs.is_empty() {
                return Err(Error::Invalid(format!("trajectory {i} has no observations")));
            }
            let mut prev = traj.t0;
            for o in &traj.obs {
                if !(o.t > prev) {
                    return Err(Error::Invalid(format!(
                        "trajectory {i}: observation times must increase from t0"
                    )));
                }
                prev = o.t;
                ensure_len("target", o.target.len(), self.proj.observed())?;
            }
        }
        Ok(())
    }
}

/// Sum of squared projected residuals plus the per-observation gradients
/// `2 P^T (P z - y)`, expanded to full state width.
pub fn quadratic_loss(
    predicted: &[AugmentedState],
    obs: &[Observation],
    proj: &Projection,
) -> Result<(f64, Vec<Vec<f64>>)> {
    ensure_len("predictions", predicted.len(), obs.len())?;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(obs.len());
    let mut res = vec![0.0; proj.observed()];
    for (state, o) in predicted.iter().zip(obs) {
        proj.residual_into(&state.z, &o.target, &mut res)?;
        let mut g = vec![0.0; proj.state_dim()];
        for (k, &idx) in proj.indices().iter().enumerate() {
            value += res[k] * res[k];
            g[idx] = 2.0 * res[k];
        }
        grads.push(g);
    }
    Ok((value, grads))
}

/// One CSV row per observation: time, then the target components.
pub fn write_trajectory_csv<W: IoWrite>(w: &mut W, traj: &Trajectory) -> Result<()> {
    let width = traj.obs.first().map_or(0, |o| o.target.len());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..width).map(|k| format!("y{k}")))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(|e| Error::Invalid(e.to_string()))?;
    for o in &traj.obs {
        let mut row = format!("{:.17e}", o.t);
        for y in &o.target {
            row.push_str(&format!(",{y:.17e}"));
        }
        writeln!(w, "{row}").map_err(|e| Error::Invalid(e.to_string()))?;
    }
    Ok(())
}
