//! Reversible step kernels.

use super::method::Method;
use super::state::AugmentedState;
use crate::dynamics::VectorField;
use crate::error::{ensure_finite, Error, Result};

/// Reusable buffers for the step kernels; one per sequential driver.
pub struct StepScratch {
    mid: Vec<f64>,
    fm: Vec<f64>,
    subs: Vec<f64>,
}

impl StepScratch {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            mid: vec![0.0; dim],
            fm: vec![0.0; dim],
            subs: Vec::new(),
        }
    }
}

/// One asynchronous-leapfrog step of size `h`, in place:
///
/// z' = z + h f(z + (h/2) v, t + h/2)
/// v' = 2 f(z + (h/2) v, t + h/2) - v
/// t' = t + h
///
/// Exactly one field evaluation. Applying the map again with `-h` undoes it:
/// the midpoint rewritten in primed variables is z' - (h/2) v', which equals
/// z + (h/2) v, so the same evaluation point is recovered.
pub fn alf_step(
    field: &dyn VectorField,
    theta: &[f64],
    phi: &mut AugmentedState,
    h: f64,
    scratch: &mut StepScratch,
) -> Result<()> {
    if h == 0.0 {
        return Err(Error::Invalid("step size must be nonzero".into()));
    }
    let d = phi.dim();
    debug_assert_eq!(scratch.mid.len(), d);
    for i in 0..d {
        scratch.mid[i] = phi.z[i] + 0.5 * h * phi.v[i];
    }
    let t_mid = phi.t + 0.5 * h;
    field.eval(&scratch.mid, t_mid, theta, &mut scratch.fm)?;
    for i in 0..d {
        phi.z[i] += h * scratch.fm[i];
        phi.v[i] = 2.0 * scratch.fm[i] - phi.v[i];
    }
    phi.t += h;
    ensure_finite("alf step z", &phi.z)?;
    ensure_finite("alf step v", &phi.v)
}

/// [`alf_step`] without scratch reuse, for callers outside the hot loops.
pub fn alf_step_raw(
    field: &dyn VectorField,
    theta: &[f64],
    phi: &mut AugmentedState,
    h: f64,
) -> Result<()> {
    let mut scratch = StepScratch::for_dim(phi.dim());
    alf_step(field, theta, phi, h, &mut scratch)
}

/// One step of `method` of size `h`, in place, as its flat sub-step sequence.
///
/// Costs exactly `method.evals_per_step()` field evaluations. Rejects the
/// non-reversible reference method.
pub fn method_step(
    field: &dyn VectorField,
    theta: &[f64],
    phi: &mut AugmentedState,
    method: Method,
    h: f64,
    scratch: &mut StepScratch,
) -> Result<()> {
    if !method.reversible() {
        return Err(Error::Invalid(
            "the reference method has no reversible step; use rk45_reference".into(),
        ));
    }
    scratch.subs.clear();
    method.push_substeps(h, &mut scratch.subs);
    for i in 0..scratch.subs.len() {
        let hs = scratch.subs[i];
        alf_step(field, theta, phi, hs, scratch)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{CountingField, Duffing, Linear, VectorField, Zero};
    use crate::integrators::init_augmented;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn linear_start() -> AugmentedState {
        AugmentedState::new(vec![1.0], vec![1.0], 0.0)
    }

    #[test]
    fn alf_hand_value_and_inverse() {
        // f = z from (1, 1, 0) with h = 0.2:
        // mid = 1.1, z' = 1.22, v' = 1.2
        let f = Linear::new(1);
        let mut phi = linear_start();
        alf_step_raw(&f, &[], &mut phi, 0.2).unwrap();
        assert!((phi.z[0] - 1.22).abs() < 1e-15);
        assert!((phi.v[0] - 1.2).abs() < 1e-15);
        assert!((phi.t - 0.2).abs() < 1e-15);
        // the same map with -h returns exactly
        alf_step_raw(&f, &[], &mut phi, -0.2).unwrap();
        assert!((phi.z[0] - 1.0).abs() < 1e-15);
        assert!((phi.v[0] - 1.0).abs() < 1e-15);
        assert!(phi.t.abs() < 1e-15);
    }

    #[test]
    fn zero_field_reflects_v() {
        let f = Zero::new(2);
        let mut phi = AugmentedState::new(vec![0.5, -0.5], vec![1.0, 2.0], 0.0);
        alf_step_raw(&f, &[], &mut phi, 0.3).unwrap();
        assert_eq!(phi.z, vec![0.5, -0.5]);
        assert_eq!(phi.v, vec![-1.0, -2.0]);
    }

    #[test]
    fn alf2_hand_value_beats_single_step() {
        // two half-steps: mid1 = 1.05 -> (1.105, 1.10); mid2 = 1.16 -> (1.2210, 1.22)
        let f = Linear::new(1);
        let mut phi = linear_start();
        let mut scratch = StepScratch::for_dim(1);
        method_step(&f, &[], &mut phi, Method::Alf2, 0.2, &mut scratch).unwrap();
        assert!((phi.z[0] - 1.2210).abs() < 1e-12);
        assert!((phi.v[0] - 1.22).abs() < 1e-12);
        let exact = 0.2f64.exp();
        assert!((phi.z[0] - exact).abs() < (1.22 - exact).abs());
    }

    #[test]
    fn yoshida4_is_fourth_order_accurate_on_exp() {
        let f = Linear::new(1);
        let mut phi = linear_start();
        let mut scratch = StepScratch::for_dim(1);
        method_step(&f, &[], &mut phi, Method::Yoshida(4), 0.1, &mut scratch).unwrap();
        assert!((phi.z[0] - 0.1f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn step_evaluation_counts_are_exact() {
        let duffing = Duffing::new(2);
        let theta = vec![1.0, 0.8, 0.9, 1.1, 0.4];
        let z0 = [0.3, -0.2, 0.1, 0.4];
        for m in [Method::Alf, Method::Alf2, Method::Yoshida(4), Method::Yoshida(6)] {
            let counted = CountingField::new(&duffing);
            let mut phi = init_augmented(&counted, &theta, &z0, 0.0).unwrap();
            let before = counted.counts().evals;
            let mut scratch = StepScratch::for_dim(4);
            method_step(&counted, &theta, &mut phi, m, 0.05, &mut scratch).unwrap();
            assert_eq!(counted.counts().evals - before, m.evals_per_step());
        }
    }

    #[test]
    fn zero_step_is_rejected() {
        let f = Linear::new(1);
        let mut phi = linear_start();
        assert!(alf_step_raw(&f, &[], &mut phi, 0.0).is_err());
    }

    #[test]
    fn single_step_round_trips_stay_at_round_off() {
        let duffing = Duffing::new(2);
        let theta = vec![1.0, 0.8, 0.9, 1.1, 0.4];
        let mut rng = StdRng::seed_from_u64(2024);
        let mut scratch = StepScratch::for_dim(4);
        for m in [Method::Alf, Method::Alf2, Method::Yoshida(4), Method::Yoshida(6)] {
            for _ in 0..250 {
                let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let phi0 = init_augmented(&duffing, &theta, &z, 0.0).unwrap();
                let h = rng.gen_range(1e-3..0.3);
                let mut phi = phi0.clone();
                method_step(&duffing, &theta, &mut phi, m, h, &mut scratch).unwrap();
                method_step(&duffing, &theta, &mut phi, m, -h, &mut scratch).unwrap();
                let tol = 1e-13 * (1.0 + phi0.max_abs());
                assert!(
                    phi.distance(&phi0) <= tol,
                    "{m:?} round trip drifted {}",
                    phi.distance(&phi0)
                );
            }
        }
    }
}
