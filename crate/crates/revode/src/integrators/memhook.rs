//! Live-instance accounting for integrator states.
//!
//! Every construction, clone, and drop of an augmented state or adjoint pair
//! reports here. The peak live count is how tests verify the memory contract
//! of the gradient pass: it must stay bounded by a small constant plus the
//! stored observation checkpoints, independent of step count. Two relaxed
//! atomic operations per state are cheap next to a field evaluation.

use std::sync::atomic::{AtomicUsize, Ordering};

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

pub(crate) fn created() {
    let now = LIVE.fetch_add(1, Ordering::Relaxed) + 1;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

pub(crate) fn dropped() {
    LIVE.fetch_sub(1, Ordering::Relaxed);
}

/// Number of augmented states and adjoint pairs currently alive.
pub fn live() -> usize {
    LIVE.load(Ordering::Relaxed)
}

/// High-water mark of [`live`] since the last [`reset_peak`].
pub fn peak() -> usize {
    PEAK.load(Ordering::Relaxed)
}

/// Restarts peak tracking at the current live count.
///
/// Measurements are only meaningful while no other thread is creating
/// states; the test suite runs its measurement windows sequentially.
pub fn reset_peak() {
    PEAK.store(LIVE.load(Ordering::Relaxed), Ordering::Relaxed);
}
