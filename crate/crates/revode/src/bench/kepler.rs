//! Central-force parameter recovery: identify the attraction strength of a
//! planar two-body orbit from a handful of position-only observations,
//! starting from deliberately bad guesses.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adjoint::Projection;
use crate::dynamics::Kepler;
use crate::error::{Error, Result};
use crate::integrators::{Method, Mode};
use crate::training::{
    generate_data, train, Dataset, OptimizerKind, TrainConfig, TrainStatus,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeplerConfig {
    /// Starting guesses for the attraction strength; the truth is pi/4.
    pub inits: Vec<f64>,
    pub methods: Vec<Method>,
    pub obs_times: Vec<f64>,
    pub atol: f64,
    pub rtol: f64,
    pub lr0: f64,
    pub decay: f64,
    pub target_loss: f64,
    pub max_epochs: usize,
}

impl Default for KeplerConfig {
    fn default() -> Self {
        Self {
            inits: vec![0.1, 0.7, 0.75, 0.8, 1.3],
            methods: vec![Method::Alf, Method::Yoshida(4)],
            obs_times: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            atol: 1e-8,
            rtol: 1e-8,
            lr0: 0.1,
            decay: 0.99,
            target_loss: 1e-8,
            max_epochs: 400,
        }
    }
}

impl KeplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inits.is_empty() || self.methods.is_empty() || self.obs_times.is_empty() {
            return Err(Error::Invalid(
                "orbit study needs at least one init, method, and observation".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KeplerRow {
    pub init: f64,
    pub method: String,
    pub epochs: usize,
    pub seconds: f64,
    pub fevals: u64,
    pub final_loss: f64,
    pub alpha_error: f64,
    pub reached_target: bool,
}

#[derive(Debug, Clone)]
pub struct KeplerStudy {
    pub rows: Vec<KeplerRow>,
}

impl KeplerStudy {
    /// Total field evaluations one method spent across all starting guesses.
    pub fn fevals_for(&self, method: &Method) -> u64 {
        let name = method.name();
        self.rows.iter().filter(|r| r.method == name).map(|r| r.fevals).sum()
    }
}

/// One orbit from the standard start state, observed at the given times
/// through a position-only projection, generated by a tight reference pass
/// at the true attraction strength.
pub fn canonical_dataset(obs_times: &[f64]) -> Result<Dataset> {
    generate_data(
        &Kepler,
        &[Kepler::alpha_truth()],
        &[Kepler::start_state().to_vec()],
        0.0,
        obs_times,
        Projection::new(vec![0, 1], 4)?,
        1e-12,
        1e-12,
    )
}

/// Train the attraction strength from every starting guess with every
/// method, all in adaptive mode, and record cost and accuracy. The truth is
/// never fed to the optimizer; it only scores the recovered parameter.
pub fn run_kepler_study(cfg: &KeplerConfig) -> Result<KeplerStudy> {
    cfg.validate()?;
    let dataset = canonical_dataset(&cfg.obs_times)?;
    let truth = [Kepler::alpha_truth()];
    let mut rows = Vec::new();
    for &init in &cfg.inits {
        for method in &cfg.methods {
            let tc = TrainConfig {
                optimizer: OptimizerKind::Sgd,
                lr0: cfg.lr0,
                decay: cfg.decay,
                batch_size: None,
                max_epochs: cfg.max_epochs,
                target_loss: cfg.target_loss,
                method: *method,
                mode: Mode::Adaptive { atol: cfg.atol, rtol: cfg.rtol, h0: None },
                seed: 0,
            };
            let started = Instant::now();
            let out = train(&Kepler, &dataset, &[init], Some(&truth), &tc)?;
            let seconds = started.elapsed().as_secs_f64();
            rows.push(KeplerRow {
                init,
                method: method.name(),
                epochs: out.record.rows.len(),
                seconds,
                fevals: out.record.total_fevals(),
                final_loss: out.record.final_loss().unwrap_or(f64::NAN),
                alpha_error: (out.params[0] - FRAC_PI_4).abs(),
                reached_target: matches!(out.status, TrainStatus::ReachedTargetLoss { .. }),
            });
        }
    }
    Ok(KeplerStudy { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_dataset_shape() {
        let ds = canonical_dataset(&[0.5, 1.0]).unwrap();
        assert_eq!(ds.trajectories.len(), 1);
        assert_eq!(ds.trajectories[0].obs.len(), 2);
        assert_eq!(ds.trajectories[0].obs[0].target.len(), 2);
    }

    #[test]
    fn near_truth_start_recovers_quickly() {
        let cfg = KeplerConfig {
            inits: vec![0.78],
            methods: vec![Method::Yoshida(4)],
            max_epochs: 150,
            ..KeplerConfig::default()
        };
        let study = run_kepler_study(&cfg).unwrap();
        let row = &study.rows[0];
        assert!(row.reached_target, "final loss {}", row.final_loss);
        assert!(row.alpha_error < 1e-3, "alpha error {}", row.alpha_error);
        assert!(row.fevals > 0);
    }
}
