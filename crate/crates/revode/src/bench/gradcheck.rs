//! Gradient verification sweep: the memory-constant backward sweep against a
//! stored-trajectory oracle and against finite differences of the
//! frozen-grid loss, across systems, methods, and stepping modes.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::adjoint::{
    compute_gradients, compute_gradients_with_entry_scale, finite_difference_oracle,
    full_storage_oracle, loss_with_frozen_trace, Projection,
};
use crate::dynamics::{Activation, Duffing, Kepler, Linear, MlpField, VectorField};
use crate::error::{Error, Result};
use crate::integrators::{integrate_forward, rk45_path, IntegrateOptions, Method, Mode};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckConfig {
    pub oracle_tol: f64,
    pub fd_tol: f64,
    pub fd_eps: f64,
    /// Directional probes used for fields too wide for a full
    /// coordinate-by-coordinate difference.
    pub probes: usize,
    pub seed: u64,
    /// Deliberately mis-scale the backward rescaling chain. The sweep is
    /// expected to fail; a pass under corruption would mean the checker
    /// cannot see the scaling constants at all.
    pub corrupt_scaling: bool,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            oracle_tol: 1e-10,
            fd_tol: 1e-5,
            fd_eps: 1e-6,
            probes: 12,
            seed: 0,
            corrupt_scaling: false,
        }
    }
}

impl GradcheckConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("oracle_tol", self.oracle_tol),
            ("fd_tol", self.fd_tol),
            ("fd_eps", self.fd_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.probes < 10 {
            return Err(Error::Invalid(format!(
                "directional checks need at least 10 probes, got {}",
                self.probes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckCase {
    pub system: String,
    pub params: usize,
    pub method: String,
    pub mode: String,
    pub rel_oracle: f64,
    pub rel_fd: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub cases: Vec<GradcheckCase>,
    pub oracle_tol: f64,
    pub fd_tol: f64,
    pub pass: bool,
}

impl GradcheckReport {
    pub fn worst_oracle(&self) -> f64 {
        self.cases.iter().fold(0.0, |m: f64, c| m.max(c.rel_oracle))
    }

    pub fn worst_fd(&self) -> f64 {
        self.cases.iter().fold(0.0, |m: f64, c| m.max(c.rel_fd))
    }
}

/// How the finite-difference arm probes the parameter space.
enum FdStyle {
    /// Central difference in every coordinate.
    Full,
    /// Central differences along seeded random unit directions.
    Directional,
}

struct CaseSetup {
    name: &'static str,
    field: Box<dyn VectorField>,
    theta: Vec<f64>,
    z0: Vec<f64>,
    obs_times: Vec<f64>,
    targets: Vec<Vec<f64>>,
    proj: Projection,
    fixed_h: f64,
    fd: FdStyle,
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = 1.0 + max_abs(b);
    a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs() / scale))
}

/// Targets from a tight Dormand-Prince pass under `theta_data`, so residuals
/// at the evaluation parameters are nonzero and every adjoint term is live.
fn synthetic_targets(
    field: &dyn VectorField,
    theta_data: &[f64],
    z0: &[f64],
    obs_times: &[f64],
    proj: &Projection,
) -> Result<Vec<Vec<f64>>> {
    let path = rk45_path(field, theta_data, z0, 0.0, obs_times, 1e-12, 1e-12)?;
    Ok(path
        .iter()
        .map(|z| proj.indices().iter().map(|&i| z[i]).collect())
        .collect())
}

fn case_setups(cfg: &GradcheckConfig) -> Result<Vec<CaseSetup>> {
    let mut out = Vec::new();

    let kepler = Kepler;
    let proj = Projection::new(vec![0, 1], 4)?;
    let z0 = Kepler::start_state().to_vec();
    let obs: Vec<f64> = vec![0.25, 0.5, 0.75, 1.0];
    let targets = synthetic_targets(&kepler, &[Kepler::alpha_truth()], &z0, &obs, &proj)?;
    out.push(CaseSetup {
        name: "kepler",
        field: Box::new(kepler),
        theta: vec![0.8],
        z0,
        obs_times: obs,
        targets,
        proj,
        fixed_h: 0.05,
        fd: FdStyle::Full,
    });

    let duffing = Duffing::new(2);
    let proj = Projection::full(4);
    let z0 = vec![0.3, -0.2, 0.1, 0.4];
    let obs = vec![0.25, 0.5];
    let theta_data = vec![1.0, 0.7, 0.4, 0.3, 0.2];
    let targets = synthetic_targets(&duffing, &theta_data, &z0, &obs, &proj)?;
    let theta_eval: Vec<f64> = theta_data.iter().map(|a| a + 0.05).collect();
    out.push(CaseSetup {
        name: "duffing2",
        field: Box::new(duffing),
        theta: theta_eval,
        z0,
        obs_times: obs,
        targets,
        proj,
        fixed_h: 0.05,
        fd: FdStyle::Full,
    });

    let mlp = MlpField::new(&[3, 8, 3], Activation::Tanh);
    let proj = Projection::full(3);
    let z0 = vec![0.4, -0.3, 0.2];
    let obs = vec![0.3, 0.6];
    let theta_data = mlp.random_params(cfg.seed.wrapping_add(1)).values().to_vec();
    let targets = synthetic_targets(&mlp, &theta_data, &z0, &obs, &proj)?;
    let theta_eval = mlp.random_params(cfg.seed).values().to_vec();
    out.push(CaseSetup {
        name: "mlp",
        field: Box::new(mlp),
        theta: theta_eval,
        z0,
        obs_times: obs,
        targets,
        proj,
        fixed_h: 0.05,
        fd: FdStyle::Directional,
    });

    let linear = Linear::new(2);
    let proj = Projection::full(2);
    let z0 = vec![0.5, -0.25];
    let obs = vec![0.5, 1.0];
    let targets = synthetic_targets(&linear, &[], &z0, &obs, &proj)?;
    out.push(CaseSetup {
        name: "none",
        field: Box::new(linear),
        theta: Vec::new(),
        z0,
        obs_times: obs,
        targets,
        proj,
        fixed_h: 0.1,
        fd: FdStyle::Full,
    });

    Ok(out)
}

/// Run the full sweep. Every system is exercised under every reversible
/// method in fixed and adaptive mode; the backward-sweep gradient must match
/// the stored-trajectory oracle tightly and finite differences loosely. With
/// zero parameters both gaps are identically zero and the case passes with
/// an empty gradient.
pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    cfg.validate()?;
    let methods = [Method::Alf, Method::Alf2, Method::Yoshida(4), Method::Yoshida(6)];
    let mut cases = Vec::new();
    for setup in case_setups(cfg)? {
        let field = setup.field.as_ref();
        for method in methods {
            for (mode_name, mode) in [
                ("fixed", Mode::Fixed { h: setup.fixed_h }),
                ("adaptive", Mode::Adaptive { atol: 1e-8, rtol: 1e-8, h0: None }),
            ] {
                let run = integrate_forward(
                    field,
                    &setup.theta,
                    &setup.z0,
                    0.0,
                    &setup.obs_times,
                    method,
                    mode,
                    IntegrateOptions::default(),
                )?;
                let res = if cfg.corrupt_scaling {
                    compute_gradients_with_entry_scale(
                        field,
                        &setup.theta,
                        &setup.z0,
                        0.0,
                        &setup.targets,
                        &setup.proj,
                        &run,
                        1.01,
                    )?
                } else {
                    compute_gradients(
                        field,
                        &setup.theta,
                        &setup.z0,
                        0.0,
                        &setup.targets,
                        &setup.proj,
                        &run,
                    )?
                };

                let (_, oracle) = full_storage_oracle(
                    field,
                    &setup.theta,
                    &setup.z0,
                    0.0,
                    &setup.targets,
                    &setup.proj,
                    &run.trace,
                )?;
                let rel_oracle = rel_gap(&res.grad, &oracle);

                let mut frozen = |theta: &[f64]| {
                    loss_with_frozen_trace(
                        field,
                        theta,
                        &setup.z0,
                        0.0,
                        &setup.targets,
                        &setup.proj,
                        &run.trace,
                    )
                };
                let rel_fd = match setup.fd {
                    FdStyle::Full => {
                        let fd = finite_difference_oracle(&mut frozen, &setup.theta, cfg.fd_eps)?;
                        rel_gap(&res.grad, &fd)
                    }
                    FdStyle::Directional => {
                        let mut rng = StdRng::seed_from_u64(cfg.seed.wrapping_add(17));
                        let p = setup.theta.len();
                        let mut worst: f64 = 0.0;
                        let mut work = setup.theta.clone();
                        for _ in 0..cfg.probes {
                            let mut u: Vec<f64> =
                                (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
                            let n = max_abs(&u).max(1e-300);
                            u.iter_mut().for_each(|x| *x /= n);
                            for i in 0..p {
                                work[i] = setup.theta[i] + cfg.fd_eps * u[i];
                            }
                            let fp = frozen(&work)?;
                            for i in 0..p {
                                work[i] = setup.theta[i] - cfg.fd_eps * u[i];
                            }
                            let fm = frozen(&work)?;
                            work.copy_from_slice(&setup.theta);
                            let fd_dir = (fp - fm) / (2.0 * cfg.fd_eps);
                            let along: f64 =
                                res.grad.iter().zip(&u).map(|(g, ui)| g * ui).sum();
                            worst = worst.max((along - fd_dir).abs() / (1.0 + fd_dir.abs()));
                        }
                        worst
                    }
                };

                cases.push(GradcheckCase {
                    system: setup.name.to_string(),
                    params: setup.theta.len(),
                    method: method.name(),
                    mode: mode_name.to_string(),
                    rel_oracle,
                    rel_fd,
                    pass: rel_oracle <= cfg.oracle_tol && rel_fd <= cfg.fd_tol,
                });
            }
        }
    }
    let pass = cases.iter().all(|c| c.pass);
    Ok(GradcheckReport { cases, oracle_tol: cfg.oracle_tol, fd_tol: cfg.fd_tol, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_too_few_probes() {
        let cfg = GradcheckConfig { probes: 3, ..GradcheckConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_parameter_case_passes_with_empty_gradient() {
        // run just the parameterless setup by filtering the report
        let cfg = GradcheckConfig::default();
        let report = run_gradcheck(&cfg).unwrap();
        let none: Vec<_> = report.cases.iter().filter(|c| c.system == "none").collect();
        assert_eq!(none.len(), 8);
        for c in none {
            assert_eq!(c.params, 0);
            assert_eq!(c.rel_oracle, 0.0);
            assert_eq!(c.rel_fd, 0.0);
            assert!(c.pass);
        }
    }

    #[test]
    fn sweep_passes_clean_and_fails_corrupted() {
        let report = run_gradcheck(&GradcheckConfig::default()).unwrap();
        assert!(report.pass, "worst oracle {} fd {}", report.worst_oracle(), report.worst_fd());
        assert!(report.worst_oracle() <= 1e-10);
        assert!(report.worst_fd() <= 1e-5);

        let corrupt =
            run_gradcheck(&GradcheckConfig { corrupt_scaling: true, ..GradcheckConfig::default() })
                .unwrap();
        assert!(!corrupt.pass);
    }
}
