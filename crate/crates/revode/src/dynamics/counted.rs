//! Evaluation-counting wrapper around a field.

use std::sync::atomic::{AtomicU64, Ordering};

use super::VectorField;
use crate::error::Result;

/// Snapshot of the three call counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub evals: u64,
    pub vjp_states: u64,
    pub vjp_params: u64,
}

impl EvalCounts {
    pub fn total(&self) -> u64 {
        self.evals + self.vjp_states + self.vjp_params
    }
}

/// Wraps a field and counts every call; drivers read the counters afterwards.
///
/// Counters are relaxed atomics so the wrapper stays `Sync`; each trajectory
/// pass owns its own wrapper, so no precision is lost to contention.
pub struct CountingField<'a> {
    inner: &'a dyn VectorField,
    evals: AtomicU64,
    vjp_states: AtomicU64,
    vjp_params: AtomicU64,
}

impl<'a> CountingField<'a> {
    pub fn new(inner: &'a dyn VectorField) -> Self {
        Self {
            inner,
            evals: AtomicU64::new(0),
            vjp_states: AtomicU64::new(0),
            vjp_params: AtomicU64::new(0),
        }
    }

    pub fn counts(&self) -> EvalCounts {
        EvalCounts {
            evals: self.evals.load(Ordering::Relaxed),
            vjp_states: self.vjp_states.load(Ordering::Relaxed),
            vjp_params: self.vjp_params.load(Ordering::Relaxed),
        }
    }
}

impl VectorField for CountingField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        self.inner.param_views()
    }

    fn eval(&self, z: &[f64], t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(z, t, theta, out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.vjp_states.fetch_add(1, Ordering::Relaxed);
        self.inner.vjp_state(z, t, theta, w, out)
    }

    fn vjp_params(
        &self,
        z: &[f64],
        t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.vjp_params.fetch_add(1, Ordering::Relaxed);
        self.inner.vjp_params(z, t, theta, w, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Linear;

    #[test]
    fn counts_every_call_kind() {
        let field = Linear::new(2);
        let counted = CountingField::new(&field);
        let z = [1.0, 2.0];
        let mut out = [0.0; 2];
        counted.eval(&z, 0.0, &[], &mut out).unwrap();
        counted.eval(&z, 0.0, &[], &mut out).unwrap();
        counted.vjp_state(&z, 0.0, &[], &[1.0, 0.0], &mut out).unwrap();
        let mut pout = [];
        counted.vjp_params(&z, 0.0, &[], &[1.0, 0.0], &mut pout).unwrap();
        let c = counted.counts();
        assert_eq!(c.evals, 2);
        assert_eq!(c.vjp_states, 1);
        assert_eq!(c.vjp_params, 1);
        assert_eq!(c.total(), 4);
    }
}
