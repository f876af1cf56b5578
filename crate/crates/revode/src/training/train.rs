//! Gradient-descent parameter identification driven by the adjoint sweep.

use std::io::Write as IoWrite;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint::compute_gradients;
use crate::dynamics::VectorField;
use crate::error::{ensure_len, Error, Result};
use crate::integrators::{integrate_forward, IntegrateOptions, Method, Mode};
use crate::training::obs::Dataset;
use crate::training::optim::{decayed_lr, sgd_step, AdamW, OptimizerKind};
use crate::vecops::axpy;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    /// Base learning rate; epoch `e` uses `lr0 * decay^e`.
    pub lr0: f64,
    pub decay: f64,
    /// Trajectories drawn per epoch without replacement; `None` takes all.
    pub batch_size: Option<usize>,
    pub max_epochs: usize,
    /// Stop once the batch loss is at or below this.
    pub target_loss: f64,
    pub method: Method,
    pub mode: Mode,
    /// Seeds the minibatch sampler; unused for full-batch runs.
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) || !self.lr0.is_finite() {
            return Err(Error::Invalid("lr0 must be positive and finite".into()));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Invalid("decay must lie in (0, 1]".into()));
        }
        if !(self.target_loss >= 0.0) {
            return Err(Error::Invalid("target_loss must be nonnegative".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Invalid("batch_size must be at least 1".into()));
        }
        if !self.method.reversible() {
            return Err(Error::Invalid(format!(
                "training requires a reversible method, not {}",
                self.method.name()
            )));
        }
        Ok(())
    }
}

/// One epoch's bookkeeping, captured before the parameter update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub epoch: usize,
    /// Batch-mean observation loss at the epoch's incoming parameters.
    pub loss: f64,
    /// Wall-clock seconds since training started.
    pub seconds: f64,
    /// Cumulative field evaluations, forward and adjoint, rejected steps
    /// included.
    pub fevals: u64,
    /// Root-mean-square parameter error against the generating truth, when
    /// the truth was supplied.
    pub param_error: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainRecord {
    pub rows: Vec<TrainRow>,
}

impl TrainRecord {
    pub fn final_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.loss)
    }

    pub fn total_fevals(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.fevals)
    }

    pub fn write_csv<W: IoWrite>(&self, w: &mut W) -> Result<()> {
        let io = |e: std::io::Error| Error::Invalid(e.to_string());
        writeln!(w, "epoch,loss,seconds,fevals,param_error").map_err(io)?;
        for r in &self.rows {
            let pe = match r.param_error {
                Some(v) => format!("{v:.17e}"),
                None => "nan".to_string(),
            };
            writeln!(
                w,
                "{},{:.17e},{:.6},{},{}",
                r.epoch, r.loss, r.seconds, r.fevals, pe
            )
            .map_err(io)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    ReachedTargetLoss { epoch: usize },
    EpochBudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub record: TrainRecord,
    pub status: TrainStatus,
}

fn rms_error(theta: &[f64], truth: &[f64]) -> f64 {
    let n = theta.len().max(1);
    let ss: f64 = theta.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / n as f64).sqrt()
}

/// Loss, gradient, and field-evaluation count for one trajectory at fixed
/// parameters. The count covers the forward pass (rejections included) and
/// the backward sweep's state reconstruction.
fn trajectory_loss_grad(
    field: &(dyn VectorField + Sync),
    theta: &[f64],
    dataset: &Dataset,
    times: &[f64],
    targets: &[Vec<f64>],
    index: usize,
    method: Method,
    mode: Mode,
) -> Result<(f64, Vec<f64>, u64)> {
    let traj = &dataset.trajectories[index];
    let run = integrate_forward(
        field,
        theta,
        &traj.z0,
        traj.t0,
        times,
        method,
        mode,
        IntegrateOptions::default(),
    )?;
    let res = compute_gradients(
        field,
        theta,
        &traj.z0,
        traj.t0,
        targets,
        &dataset.proj,
        &run,
    )?;
    let fevals = run.trace.fevals + res.counts.evals;
    Ok((res.loss, res.grad, fevals))
}

/// Runs gradient descent on the dataset's observation loss.
///
/// Per epoch: the batch's trajectories are evaluated in parallel, collected
/// in index order, and reduced sequentially, so results are bit-identical at
/// any thread count. The loss row is recorded before the parameter update;
/// training stops once the batch loss reaches `target_loss` or the epoch
/// budget runs out. A non-finite batch loss aborts with
/// [`Error::TrainingDiverged`].
pub fn train(
    field: &(dyn VectorField + Sync),
    dataset: &Dataset,
    theta_init: &[f64],
    theta_true: Option<&[f64]>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    dataset.validate(field)?;
    ensure_len("parameters", theta_init.len(), field.param_count())?;
    if let Some(truth) = theta_true {
        ensure_len("true parameters", truth.len(), field.param_count())?;
    }

    let n = dataset.trajectories.len();
    let batch = config.batch_size.unwrap_or(n).min(n);
    let prepared: Vec<(Vec<f64>, Vec<Vec<f64>>)> = dataset
        .trajectories
        .iter()
        .map(|tr| (tr.times(), tr.targets()))
        .collect();

    let mut theta = theta_init.to_vec();
    let mut adamw = AdamW::new(theta.len());
    let mut rng = StdRng::seed_from_u64(config.seed);
    let mut record = TrainRecord::default();
    let mut cum_fevals = 0u64;
    let mut status = TrainStatus::EpochBudgetExhausted;
    let start = Instant::now();

    for epoch in 0..config.max_epochs {
        let mut indices: Vec<usize> = if batch == n {
            (0..n).collect()
        } else {
            rand::seq::index::sample(&mut rng, n, batch).into_vec()
        };
        indices.sort_unstable();

        let theta_ref = &theta;
        let per_traj: Vec<(f64, Vec<f64>, u64)> = indices
            .par_iter()
            .map(|&i| {
                trajectory_loss_grad(
                    field,
                    theta_ref,
                    dataset,
                    &prepared[i].0,
                    &prepared[i].1,
                    i,
                    config.method,
                    config.mode,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let mut loss = 0.0;
        let mut grad = vec![0.0; theta.len()];
        for (l, g, fe) in &per_traj {
            loss += l;
            axpy(1.0, g, &mut grad);
            cum_fevals += fe;
        }
        let scale = 1.0 / batch as f64;
        loss *= scale;
        for g in &mut grad {
            *g *= scale;
        }
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss });
        }

        record.rows.push(TrainRow {
            epoch,
            loss,
            seconds: start.elapsed().as_secs_f64(),
            fevals: cum_fevals,
            param_error: theta_true.map(|truth| rms_error(&theta, truth)),
        });

        if loss <= config.target_loss {
            status = TrainStatus::ReachedTargetLoss { epoch };
            break;
        }

        let lr = decayed_lr(config.lr0, config.decay, epoch);
        match config.optimizer {
            OptimizerKind::Sgd => sgd_step(&mut theta, &grad, lr),
            OptimizerKind::Adamw => adamw.step(&mut theta, &grad, lr),
        }
    }

    Ok(TrainOutcome {
        params: theta,
        record,
        status,
    })
}
