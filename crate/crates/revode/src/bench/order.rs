//! Order-of-convergence study on the scalar benchmark equation, plus the
//! tolerance sweep that exercises the adaptive controller.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ExampleOde, VectorField};
use crate::error::{Error, Result};
use crate::integrators::{
    integrate_forward, rk45_reference, IntegrateOptions, Method, Mode,
};
use crate::stats::loglog_slope;

/// Points whose error already sits at round-off are excluded from slope
/// fits; below this the loglog data bends flat and says nothing about the
/// method order.
pub const SLOPE_FLOOR: f64 = 1e-12;

/// Points far above the solution scale are excluded as well: an error this
/// large means the coarse step left the convergence regime entirely (the
/// high-order compositions overshoot the quadratic growth term at the
/// largest steps), and such points measure blowup, not order.
pub const SLOPE_CEILING: f64 = 1e2;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrderConfig {
    /// Step sizes are `0.5 * 2^{-i}` for `i` in `0..levels`.
    pub levels: usize,
    pub t_end: f64,
    pub methods: Vec<Method>,
}

impl Default for OrderConfig {
    fn default() -> Self {
        Self {
            levels: 10,
            t_end: 1.0,
            methods: vec![Method::Alf, Method::Alf2, Method::Yoshida(4), Method::Yoshida(6)],
        }
    }
}

impl OrderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Invalid(format!(
                "order study needs at least two step sizes, got {}",
                self.levels
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Invalid(format!(
                "end time must be positive, got {}",
                self.t_end
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Invalid("order study needs at least one method".into()));
        }
        for m in &self.methods {
            if !m.reversible() {
                return Err(Error::Invalid(format!(
                    "order study drives reversible methods, not {}",
                    m.name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderRow {
    pub method: String,
    pub h: f64,
    pub err_z: f64,
    pub err_v: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderSlope {
    pub method: String,
    pub order: u32,
    pub slope_z: Option<f64>,
    pub slope_v: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OrderStudy {
    pub rows: Vec<OrderRow>,
    pub slopes: Vec<OrderSlope>,
    pub reference_z: f64,
    pub reference_v: f64,
}

/// Fit a loglog slope through `(h, err)` pairs, keeping only points inside
/// the asymptotic regime: finite, above the round-off floor, and below the
/// blowup ceiling. Returns `None` when fewer than two points survive.
pub fn regime_slope(hs: &[f64], errs: &[f64]) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&h, &e) in hs.iter().zip(errs) {
        if e.is_finite() && e > SLOPE_FLOOR && e < SLOPE_CEILING {
            xs.push(h);
            ys.push(e);
        }
    }
    loglog_slope(&xs, &ys)
}

/// Integrate the scalar benchmark equation from `z = 0` to `t_end` with every
/// method over the dyadic step ladder and compare against a tight
/// Dormand-Prince reference. The position error is `|z - z_ref|`; the
/// velocity error compares the augmented velocity against `f(z_ref, t_end)`,
/// which is what it shadows when the pair stays coherent.
pub fn run_order_study(cfg: &OrderConfig) -> Result<OrderStudy> {
    cfg.validate()?;
    let field = ExampleOde;
    let theta: [f64; 0] = [];
    let z0 = [0.0];
    let zref = rk45_reference(&field, &theta, &z0, 0.0, cfg.t_end, 1e-13, 1e-13)?;
    let mut vref = vec![0.0; 1];
    field.eval(&zref, cfg.t_end, &theta, &mut vref)?;

    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for method in &cfg.methods {
        let mut hs = Vec::new();
        let mut ez = Vec::new();
        let mut ev = Vec::new();
        for i in 0..cfg.levels {
            let h = 0.5 * cfg.t_end * 0.5f64.powi(i as i32);
            let run = integrate_forward(
                &field,
                &theta,
                &z0,
                0.0,
                &[cfg.t_end],
                *method,
                Mode::Fixed { h },
                IntegrateOptions::default(),
            )?;
            let end = &run.states[0];
            let err_z = (end.z[0] - zref[0]).abs();
            let err_v = (end.v[0] - vref[0]).abs();
            rows.push(OrderRow { method: method.name(), h, err_z, err_v });
            hs.push(h);
            ez.push(err_z);
            ev.push(err_v);
        }
        slopes.push(OrderSlope {
            method: method.name(),
            order: method.order(),
            slope_z: regime_slope(&hs, &ez),
            slope_v: regime_slope(&hs, &ev),
        });
    }
    Ok(OrderStudy { rows, slopes, reference_z: zref[0], reference_v: vref[0] })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub method: Method,
    /// Loosest tolerance; used for both the absolute and relative weight.
    pub rtol_start: f64,
    /// Tightest tolerance; the ladder stops once it would pass below this.
    pub rtol_end: f64,
    /// Multiplier between consecutive tolerances.
    pub factor: f64,
    pub t_end: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            method: Method::Alf2,
            rtol_start: 1e-6,
            rtol_end: 1e-12,
            factor: 0.5,
            t_end: 1.0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol_end > 0.0 && self.rtol_end < self.rtol_start) {
            return Err(Error::Invalid(format!(
                "tolerance ladder needs 0 < rtol_end < rtol_start, got {} and {}",
                self.rtol_end, self.rtol_start
            )));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::Invalid(format!(
                "ladder factor must be in (0, 1), got {}",
                self.factor
            )));
        }
        Ok(())
    }

    fn ladder(&self) -> Vec<f64> {
        let mut tols = Vec::new();
        let mut t = self.rtol_start;
        // the strict floor gets a hair of slack so an exact product endpoint
        // is kept rather than dropped to accumulated rounding
        while t >= self.rtol_end * (1.0 - 1e-9) {
            tols.push(t);
            t *= self.factor;
        }
        tols
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub rtol: f64,
    pub err: f64,
    pub accepted: usize,
    pub fevals: u64,
}

#[derive(Debug, Clone)]
pub struct SweepStudy {
    pub rows: Vec<SweepRow>,
    /// Fitted slope of `log accepted` against `log rtol`; the step-doubling
    /// controller predicts `-1/(p+1)`.
    pub step_exponent: Option<f64>,
}

/// Drive the adaptive controller across a tolerance ladder on the scalar
/// benchmark equation and record end-state error and accepted-step counts.
pub fn run_tolerance_sweep(cfg: &SweepConfig) -> Result<SweepStudy> {
    cfg.validate()?;
    let field = ExampleOde;
    let theta: [f64; 0] = [];
    let z0 = [0.0];
    let zref = rk45_reference(&field, &theta, &z0, 0.0, cfg.t_end, 1e-13, 1e-13)?;
    let mut rows = Vec::new();
    let mut tols = Vec::new();
    let mut counts = Vec::new();
    for tol in cfg.ladder() {
        let run = integrate_forward(
            &field,
            &theta,
            &z0,
            0.0,
            &[cfg.t_end],
            cfg.method,
            Mode::Adaptive { atol: tol, rtol: tol, h0: None },
            IntegrateOptions::default(),
        )?;
        let err = (run.states[0].z[0] - zref[0]).abs();
        // each accepted step is stored as its two halves
        let accepted = run.trace.steps.len() / 2;
        rows.push(SweepRow { rtol: tol, err, accepted, fevals: run.trace.fevals });
        tols.push(tol);
        counts.push(accepted as f64);
    }
    Ok(SweepStudy { step_exponent: loglog_slope(&tols, &counts), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_configs() {
        let mut cfg = OrderConfig { levels: 1, ..OrderConfig::default() };
        assert!(cfg.validate().is_err());
        cfg.levels = 3;
        cfg.methods = vec![Method::Rk45Reference];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn regime_slope_ignores_saturated_points() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errs = [1e-4, 2.5e-5, 6.25e-6, 1e-13];
        let s = regime_slope(&hs, &errs).unwrap();
        assert!((s - 2.0).abs() < 1e-9, "slope {s}");
        assert!(regime_slope(&hs[..1], &errs[..1]).is_none());
        // a blown-up coarse point must not drag the fit either
        let hs = [0.2, 0.1, 0.05, 0.025];
        let errs = [1e9, 1e-4, 6.25e-6, 3.90625e-7];
        let s = regime_slope(&hs, &errs).unwrap();
        assert!((s - 4.0).abs() < 1e-9, "slope {s}");
    }

    #[test]
    fn second_order_method_measures_second_order() {
        let cfg = OrderConfig {
            levels: 5,
            methods: vec![Method::Alf2],
            ..OrderConfig::default()
        };
        let study = run_order_study(&cfg).unwrap();
        let s = study.slopes[0].slope_z.unwrap();
        assert!((1.7..2.3).contains(&s), "slope {s}");
        // errors decay monotonically over the ladder
        for w in study.rows.windows(2) {
            assert!(w[1].err_z < w[0].err_z);
        }
    }

    #[test]
    fn ladder_spans_the_requested_range() {
        let cfg = SweepConfig { factor: 0.1, ..SweepConfig::default() };
        let tols = cfg.ladder();
        assert_eq!(tols.len(), 7);
        assert_eq!(tols[0], 1e-6);
        assert!((tols[6] - 1e-12).abs() < 1e-20);
        assert!(SweepConfig { factor: 1.5, ..SweepConfig::default() }.validate().is_err());
    }

    #[test]
    fn sweep_counts_rise_as_tolerance_tightens() {
        let cfg = SweepConfig {
            rtol_start: 1e-4,
            rtol_end: 1e-7,
            factor: 0.1,
            ..SweepConfig::default()
        };
        let study = run_tolerance_sweep(&cfg).unwrap();
        for w in study.rows.windows(2) {
            assert!(w[1].accepted >= w[0].accepted);
        }
        let ex = study.step_exponent.unwrap();
        assert!(ex < 0.0, "exponent {ex}");
    }
}
