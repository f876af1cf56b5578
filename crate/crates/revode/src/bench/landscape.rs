//! Loss landscape around the true attraction strength, and how its minimum
//! drifts with the step size. Discretization biases the landscape by an
//! offset scaling like `h^p`, so halving `h` repeatedly traces out the
//! method order as a straight line in loglog drift.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::dynamics::Kepler;
use crate::error::{Error, Result};
use crate::integrators::{integrate_forward, IntegrateOptions, Method, Mode};
use crate::stats::{loglog_slope, parabola_vertex};
use crate::training::{quadratic_loss, Dataset};

use super::kepler::canonical_dataset;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeConfig {
    /// Grid resolution of every scan.
    pub grid_points: usize,
    /// Shared step for the two-method overlay plot.
    pub plot_h: f64,
    pub plot_half_width: f64,
    /// Step ladders for the drift fits; each entry gets its own scan.
    pub alf_ladder: Vec<f64>,
    pub alf_half_width: f64,
    pub y4_ladder: Vec<f64>,
    pub y4_half_width: f64,
    pub obs_times: Vec<f64>,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            grid_points: 300,
            plot_h: 0.02,
            plot_half_width: 1e-4,
            alf_ladder: vec![0.01, 0.005, 0.0025],
            alf_half_width: 2e-3,
            y4_ladder: vec![0.1, 0.05, 0.025],
            y4_half_width: 1e-4,
            obs_times: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        }
    }
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 5 {
            return Err(Error::Invalid(format!(
                "landscape scans need at least 5 grid points, got {}",
                self.grid_points
            )));
        }
        for (name, w) in [
            ("plot_half_width", self.plot_half_width),
            ("alf_half_width", self.alf_half_width),
            ("y4_half_width", self.y4_half_width),
        ] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {w}")));
            }
        }
        if self.alf_ladder.len() < 2 || self.y4_ladder.len() < 2 {
            return Err(Error::Invalid("drift fits need at least two step sizes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeCurve {
    pub method: String,
    pub h: f64,
    pub alphas: Vec<f64>,
    pub losses: Vec<f64>,
    /// Parabola-refined location of the scan minimum.
    pub argmin: f64,
    /// `|argmin - pi/4|`.
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftFit {
    pub method: String,
    pub hs: Vec<f64>,
    pub drifts: Vec<f64>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LandscapeStudy {
    pub overlay: Vec<LandscapeCurve>,
    pub drift_curves: Vec<LandscapeCurve>,
    pub fits: Vec<DriftFit>,
}

/// Quadratic position-only loss of the fixed-step flow at attraction
/// strength `alpha` against the reference data.
fn loss_at(dataset: &Dataset, alpha: f64, method: Method, h: f64) -> Result<f64> {
    let traj = &dataset.trajectories[0];
    let run = integrate_forward(
        &Kepler,
        &[alpha],
        &traj.z0,
        traj.t0,
        &traj.times(),
        method,
        Mode::Fixed { h },
        IntegrateOptions::default(),
    )?;
    let (loss, _) = quadratic_loss(&run.states, &traj.obs, &dataset.proj)?;
    Ok(loss)
}

/// Sub-grid minimum location: parabola through the discrete argmin and its
/// neighbors. A minimum on the window edge is returned as-is; callers size
/// the window so that does not happen in practice.
fn refined_argmin(alphas: &[f64], losses: &[f64]) -> f64 {
    let mut k = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[k] {
            k = i;
        }
    }
    if k == 0 || k + 1 == losses.len() {
        return alphas[k];
    }
    parabola_vertex(
        [alphas[k - 1], alphas[k], alphas[k + 1]],
        [losses[k - 1], losses[k], losses[k + 1]],
    )
}

fn scan(
    dataset: &Dataset,
    method: Method,
    h: f64,
    half_width: f64,
    n: usize,
) -> Result<LandscapeCurve> {
    let lo = FRAC_PI_4 - half_width;
    let step = 2.0 * half_width / (n - 1) as f64;
    let alphas: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let mut losses = Vec::with_capacity(n);
    for &a in &alphas {
        losses.push(loss_at(dataset, a, method, h)?);
    }
    let argmin = refined_argmin(&alphas, &losses);
    Ok(LandscapeCurve {
        method: method.name(),
        h,
        argmin,
        drift: (argmin - FRAC_PI_4).abs(),
        alphas,
        losses,
    })
}

/// Scan the landscape for the overlay plot and fit the loglog drift of its
/// minimum across each method's step ladder.
pub fn run_landscape_study(cfg: &LandscapeConfig) -> Result<LandscapeStudy> {
    cfg.validate()?;
    let dataset = canonical_dataset(&cfg.obs_times)?;
    let n = cfg.grid_points;

    let overlay = vec![
        scan(&dataset, Method::Alf, cfg.plot_h, cfg.plot_half_width, n)?,
        scan(&dataset, Method::Yoshida(4), cfg.plot_h, cfg.plot_half_width, n)?,
    ];

    let mut drift_curves = Vec::new();
    let mut fits = Vec::new();
    for (method, ladder, width) in [
        (Method::Alf, &cfg.alf_ladder, cfg.alf_half_width),
        (Method::Yoshida(4), &cfg.y4_ladder, cfg.y4_half_width),
    ] {
        let mut hs = Vec::new();
        let mut drifts = Vec::new();
        for &h in ladder {
            let curve = scan(&dataset, method, h, width, n)?;
            hs.push(h);
            drifts.push(curve.drift);
            drift_curves.push(curve);
        }
        fits.push(DriftFit {
            method: method.name(),
            slope: loglog_slope(&hs, &drifts),
            hs,
            drifts,
        });
    }
    Ok(LandscapeStudy { overlay, drift_curves, fits })
}
