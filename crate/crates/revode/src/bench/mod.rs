//! Experiment kernels behind the benchmark binary.
//!
//! Each study takes a serde config with strict field checking, runs
//! entirely in-process, and returns plain row structs; the CLI layer only
//! formats them. Keeping the kernels here lets integration tests drive the
//! exact code paths the binary ships.

pub mod gradcheck;
pub mod kepler;
pub mod landscape;
pub mod order;
pub mod oscillator;
pub mod wave;

pub use gradcheck::{run_gradcheck, GradcheckCase, GradcheckConfig, GradcheckReport};
pub use kepler::{canonical_dataset, run_kepler_study, KeplerConfig, KeplerRow, KeplerStudy};
pub use landscape::{run_landscape_study, DriftFit, LandscapeConfig, LandscapeCurve, LandscapeStudy};
pub use order::{
    regime_slope, run_order_study, run_tolerance_sweep, OrderConfig, OrderRow, OrderSlope,
    OrderStudy, SweepConfig, SweepRow, SweepStudy,
};
pub use oscillator::{
    default_theta, run_oscillator_study, MethodRun, OscillatorConfig, OscillatorStudy,
};
pub use wave::{mode_weight, run_wave_study, WaveConfig, WaveRun, WaveStudy};

