//! Wavelet-penalized maximum-likelihood estimation of generalized partially
//! linear models `G(E[Y | X, t]) = Xᵀβ + f(t)`, together with a seeded
//! simulation harness for Monte Carlo studies and threshold calibration.

pub mod error;
pub mod estimator;
pub mod expfam;
pub mod simulate;
pub mod wavelet;

pub use error::{GplmError, Result};
pub use estimator::{backfit, Dataset, FitConfig, GplmFit, LambdaPolicy, PenaltyConfig, PenaltyKind, ThresholdRule};
pub use expfam::FamilySpec;
pub use wavelet::{WaveletFilter, WaveletKind};
pub use simulate::{run_monte_carlo, SimulationConfig, SimulationReport, TestFunctionKind};
