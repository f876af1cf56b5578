//! Learning a mesh force from wave echoes. Reference data comes from a
//! known linear wave system on a fine periodic mesh; a network force is then
//! trained on a coarse subsampled mesh to reproduce the endpoint snapshots,
//! and judged on trajectories it never saw.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adjoint::Projection;
use crate::dynamics::{wave_truth_field, Activation, MlpField, VectorField, WaveField};
use crate::error::{Error, Result};
use crate::integrators::{integrate_forward, rk45_path, IntegrateOptions, Method, Mode};
use crate::training::{
    quadratic_loss, train, Dataset, Observation, OptimizerKind, TrainConfig, Trajectory,
    TrainRecord, TrainStatus,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveConfig {
    /// Coarse mesh size the force is learned on.
    pub m: usize,
    /// Reference data is generated on a mesh `fine_factor` times finer and
    /// subsampled back down.
    pub fine_factor: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub t_end: f64,
    /// Hidden width of the learned force network.
    pub hidden: usize,
    pub methods: Vec<Method>,
    pub atol: f64,
    pub rtol: f64,
    pub max_epochs: usize,
    pub target_loss: f64,
    pub lr0: f64,
    pub decay: f64,
    pub seed: u64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            m: 20,
            fine_factor: 4,
            n_train: 12,
            n_test: 4,
            t_end: 0.3,
            hidden: 32,
            methods: vec![Method::Alf, Method::Yoshida(4)],
            atol: 1e-6,
            rtol: 1e-6,
            max_epochs: 200,
            target_loss: 1e-3,
            lr0: 2e-2,
            decay: 0.997,
            seed: 0,
        }
    }
}

impl WaveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 4 {
            return Err(Error::Invalid(format!("mesh needs at least 4 points, got {}", self.m)));
        }
        if self.fine_factor < 1 {
            return Err(Error::Invalid("fine_factor must be at least 1".into()));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Invalid("need both training and held-out trajectories".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Invalid("wave study needs at least one method".into()));
        }
        Ok(())
    }
}

/// Spectral weight of mesh mode `k`: essentially one for the first two
/// modes, zero beyond, so the data is smooth on any mesh used here.
pub fn mode_weight(k: usize) -> f64 {
    (-4.0 * (k as f64).powi(8)).exp()
}

/// One random periodic profile on `points` mesh nodes: weighted Gaussian
/// Fourier coefficients, truncated where the weight underflows.
fn random_profile(points: usize, rng: &mut StdRng) -> Vec<f64> {
    let mut out = vec![0.0; points];
    let mut k = 0;
    loop {
        let w = mode_weight(k);
        if w < 1e-16 {
            break;
        }
        let a: f64 = rng.sample::<f64, _>(StandardNormal) * w;
        let b: f64 = rng.sample::<f64, _>(StandardNormal) * w;
        for (j, o) in out.iter_mut().enumerate() {
            let x = j as f64 / points as f64;
            let phase = 2.0 * std::f64::consts::PI * k as f64 * x;
            *o += a * phase.cos();
            if k > 0 {
                *o += b * phase.sin();
            }
        }
        k += 1;
    }
    out
}

/// Generate `count` echo pairs: integrate the fine-mesh truth from random
/// smooth data, then keep every `fine_factor`-th node of the start and end
/// states for the coarse mesh.
pub fn wave_dataset(cfg: &WaveConfig, count: usize, seed: u64) -> Result<Dataset> {
    let fine_m = cfg.m * cfg.fine_factor;
    let truth = wave_truth_field(fine_m);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut trajectories = Vec::with_capacity(count);
    for _ in 0..count {
        let u = random_profile(fine_m, &mut rng);
        let v = random_profile(fine_m, &mut rng);
        let mut z0_fine = u;
        z0_fine.extend(v);
        let path = rk45_path(&truth, &[], &z0_fine, 0.0, &[cfg.t_end], 1e-11, 1e-11)?;
        let subsample = |zf: &[f64]| -> Vec<f64> {
            let mut out = Vec::with_capacity(2 * cfg.m);
            for block in 0..2 {
                for j in 0..cfg.m {
                    out.push(zf[block * fine_m + j * cfg.fine_factor]);
                }
            }
            out
        };
        trajectories.push(Trajectory {
            z0: subsample(&z0_fine),
            t0: 0.0,
            obs: vec![Observation { t: cfg.t_end, target: subsample(&path[0]) }],
        });
    }
    Ok(Dataset { proj: Projection::full(2 * cfg.m), trajectories })
}

/// Mean endpoint loss of the model over a dataset, integrating each
/// trajectory with the given method.
pub fn mean_loss(
    field: &WaveField,
    theta: &[f64],
    dataset: &Dataset,
    method: Method,
    mode: Mode,
) -> Result<f64> {
    let mut total = 0.0;
    for traj in &dataset.trajectories {
        let run = integrate_forward(
            field,
            theta,
            &traj.z0,
            traj.t0,
            &traj.times(),
            method,
            mode,
            IntegrateOptions::default(),
        )?;
        let (loss, _) = quadratic_loss(&run.states, &traj.obs, &dataset.proj)?;
        total += loss;
    }
    Ok(total / dataset.trajectories.len() as f64)
}

#[derive(Debug, Clone)]
pub struct WaveRun {
    pub method: String,
    pub record: TrainRecord,
    pub final_train_loss: f64,
    pub untrained_test_loss: f64,
    pub trained_test_loss: f64,
    pub epochs: usize,
    pub fevals: u64,
    pub seconds: f64,
    pub reached_target: bool,
}

#[derive(Debug, Clone)]
pub struct WaveStudy {
    pub m: usize,
    pub param_count: usize,
    pub runs: Vec<WaveRun>,
}

/// Train the network force on the echo data with each method in adaptive
/// mode, scoring held-out echoes before and after training.
pub fn run_wave_study(cfg: &WaveConfig) -> Result<WaveStudy> {
    cfg.validate()?;
    let train_set = wave_dataset(cfg, cfg.n_train, cfg.seed)?;
    let test_set = wave_dataset(cfg, cfg.n_test, cfg.seed.wrapping_add(0x5eed))?;

    let mlp = MlpField::new(&[cfg.m, cfg.hidden, cfg.m], Activation::Relu);
    let theta_init = mlp.random_params(cfg.seed).values().to_vec();
    let field = WaveField::new(cfg.m, Box::new(mlp));

    let mut runs = Vec::new();
    for method in &cfg.methods {
        let mode = Mode::Adaptive { atol: cfg.atol, rtol: cfg.rtol, h0: None };
        let untrained = mean_loss(&field, &theta_init, &test_set, *method, mode)?;
        let tc = TrainConfig {
            optimizer: OptimizerKind::Adamw,
            lr0: cfg.lr0,
            decay: cfg.decay,
            batch_size: None,
            max_epochs: cfg.max_epochs,
            target_loss: cfg.target_loss,
            method: *method,
            mode,
            seed: cfg.seed,
        };
        let started = Instant::now();
        let out = train(&field, &train_set, &theta_init, None, &tc)?;
        let seconds = started.elapsed().as_secs_f64();
        let trained = mean_loss(&field, &out.params, &test_set, *method, mode)?;
        runs.push(WaveRun {
            method: method.name(),
            final_train_loss: out.record.final_loss().unwrap_or(f64::NAN),
            untrained_test_loss: untrained,
            trained_test_loss: trained,
            epochs: out.record.rows.len(),
            fevals: out.record.total_fevals(),
            seconds,
            reached_target: matches!(out.status, TrainStatus::ReachedTargetLoss { .. }),
            record: out.record,
        });
    }
    Ok(WaveStudy { m: cfg.m, param_count: field.param_count(), runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_weights_cut_off_sharply() {
        assert_eq!(mode_weight(0), 1.0);
        assert!((mode_weight(1) - (-4.0f64).exp()).abs() < 1e-18);
        assert_eq!(mode_weight(2), 0.0);
    }

    #[test]
    fn profiles_are_smooth_and_deterministic() {
        let mut a = StdRng::seed_from_u64(7);
        let mut b = StdRng::seed_from_u64(7);
        let pa = random_profile(16, &mut a);
        let pb = random_profile(16, &mut b);
        assert_eq!(pa, pb);
        // only two modes are active, so second differences stay small
        // relative to the profile itself
        let scale = pa.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for j in 0..16 {
            let d2 = pa[(j + 1) % 16] - 2.0 * pa[j] + pa[(j + 15) % 16];
            assert!(d2.abs() < 0.6 * scale, "d2 {d2} scale {scale}");
        }
    }

    #[test]
    fn dataset_has_coarse_width_and_matches_fine_start() {
        let cfg = WaveConfig { m: 8, fine_factor: 2, ..WaveConfig::default() };
        let ds = wave_dataset(&cfg, 2, 3).unwrap();
        assert_eq!(ds.trajectories.len(), 2);
        assert_eq!(ds.trajectories[0].z0.len(), 16);
        assert_eq!(ds.trajectories[0].obs[0].target.len(), 16);
    }

    #[test]
    fn small_study_improves_on_held_out_echoes() {
        let cfg = WaveConfig {
            m: 8,
            fine_factor: 2,
            n_train: 4,
            n_test: 2,
            hidden: 12,
            max_epochs: 25,
            methods: vec![Method::Yoshida(4)],
            ..WaveConfig::default()
        };
        let study = run_wave_study(&cfg).unwrap();
        let run = &study.runs[0];
        assert!(run.trained_test_loss < run.untrained_test_loss);
        assert!(run.final_train_loss < run.record.rows[0].loss);
    }
}
