//! Seeded simulation harness: covariate design, test functions, quality
//! metrics, Monte Carlo replication and threshold calibration.
//!
//! One master seed determines everything. Stream 0 of the seeded ChaCha20
//! generator draws the shared covariates; replication `r` uses stream `r + 1`,
//! so its responses do not depend on how many other replications run.

mod calibrate;
mod design;
mod functions;
mod metrics;
mod monte_carlo;

pub use calibrate::{
    calibrate_sweep, calibrate_threshold, fit_through_origin, reference_scale, CalibrationSweep,
    GridSpec, SweepAxis, SweepPoint, ThresholdCurve,
};
pub use design::{covariate_design, covariate_trend};
pub use functions::{test_function, TestFunction, TestFunctionKind};
pub use metrics::{rmise, snr};
pub use monte_carlo::{
    design_rng, replication_rng, run_monte_carlo, run_replication, Aggregate, DesignSummary,
    PlotData, ReplicationRecord, SimulationConfig, SimulationDesign, SimulationReport,
};
