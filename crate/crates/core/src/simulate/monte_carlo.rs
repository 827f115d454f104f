use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GplmError, Result};
use crate::estimator::{backfit, Dataset, FitConfig};
use crate::expfam::FamilySpec;
use crate::wavelet::dyadic_levels;

use super::design::covariate_design;
use super::functions::{test_function, TestFunctionKind};
use super::metrics::{rmise, snr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub family: FamilySpec,
    pub function: TestFunctionKind,
    /// Target SNR of `f₀` measured against the family's dispersion with unit
    /// variance function.
    pub snr_f: f64,
    /// Optional target SNR of `Xβ₀`. For the Gaussian family it is reached by
    /// solving for `φ` (β₀ is kept); otherwise β₀ is rescaled.
    pub snr_beta: Option<f64>,
    pub n: usize,
    pub p: usize,
    /// Common value of every entry of β₀ before any SNR rescaling.
    pub beta0: f64,
    pub replications: usize,
    pub seed: u64,
    pub fit: FitConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            family: FamilySpec::Gaussian { phi: 1.0 },
            function: TestFunctionKind::Sinus,
            snr_f: 9.0,
            snr_beta: None,
            n: 256,
            p: 1,
            beta0: 1.0,
            replications: 500,
            seed: 0,
            fit: FitConfig::default(),
        }
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(GplmError::Config(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.family.validated()?;
        dyadic_levels(self.n)?;
        if self.p == 0 || self.p >= self.n {
            return Err(GplmError::Config(format!(
                "need 1 <= p < n, got p = {} and n = {}",
                self.p, self.n
            )));
        }
        if self.replications == 0 {
            return Err(GplmError::Config("at least one replication is required".into()));
        }
        check_nonnegative("snr_f", self.snr_f)?;
        if let Some(s) = self.snr_beta {
            check_nonnegative("snr_beta", s)?;
            if s == 0.0 && matches!(self.family, FamilySpec::Gaussian { .. }) {
                return Err(GplmError::Config(
                    "gaussian snr_beta must be positive (it fixes the dispersion)".into(),
                ));
            }
        }
        if !self.beta0.is_finite() {
            return Err(GplmError::Config(format!("beta0 must be finite, got {}", self.beta0)));
        }
        self.fit.validate()?;
        self.fit.penalty.layout(self.n)?;
        Ok(())
    }

    /// Hex SHA-256 of the JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Generator of the shared covariates (stream 0 of the master seed).
pub fn design_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Generator of replication `r`; depends only on `(seed, r)`.
pub fn replication_rng(seed: u64, r: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(r as u64 + 1);
    rng
}

/// Covariates, truth and family shared by all replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDesign {
    pub family: FamilySpec,
    pub x: DMatrix<f64>,
    pub beta0: Vec<f64>,
    pub f0: Vec<f64>,
}

impl SimulationDesign {
    pub fn from_config(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let (n, p) = (config.n, config.p);
        let x = covariate_design(n, p, &mut design_rng(config.seed));
        let mut beta0 = vec![config.beta0; p];
        let lin_ms = |b: &[f64]| {
            (0..n)
                .map(|i| (0..p).map(|j| x[(i, j)] * b[j]).sum::<f64>().powi(2))
                .sum::<f64>()
                / n as f64
        };
        let mut family = config.family;
        if let Some(target) = config.snr_beta {
            let ms = lin_ms(&beta0);
            if !(ms > 0.0) && target > 0.0 {
                return Err(GplmError::Config(
                    "snr_beta cannot be reached with a zero linear predictor".into(),
                ));
            }
            match family {
                FamilySpec::Gaussian { .. } => family = FamilySpec::Gaussian { phi: ms / (target * target) },
                _ => {
                    let scale = if target == 0.0 {
                        0.0
                    } else {
                        target / (ms / family.dispersion()).sqrt()
                    };
                    beta0.iter_mut().for_each(|b| *b *= scale);
                }
            }
        }
        let amplitude = config.snr_f * family.dispersion().sqrt();
        let f0 = test_function(config.function, n, amplitude)?.values;
        Ok(Self { family, x, beta0, f0 })
    }

    pub fn n(&self) -> usize {
        self.f0.len()
    }

    /// Draw responses at `η = Xβ₀ + f₀` in grid order.
    pub fn sample_responses(&self, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
        (0..self.n())
            .map(|i| {
                let lin: f64 = self.beta0.iter().enumerate().map(|(j, b)| self.x[(i, j)] * b).sum();
                self.family.sample(lin + self.f0[i], rng)
            })
            .collect()
    }

    pub fn snr(&self) -> Result<(f64, f64)> {
        snr(&self.family, &self.x, &self.beta0, &self.f0, self.family.dispersion())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub beta: Option<Vec<f64>>,
    pub rmise: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub dispersion: f64,
    pub beta0: Vec<f64>,
    pub f0_rms: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub successes: usize,
    pub failures: usize,
    /// Empty when every replication failed.
    pub mean_beta: Vec<f64>,
    /// Sample standard deviation (0 with fewer than two successes).
    pub sd_beta: Vec<f64>,
    pub mean_rmise: Option<f64>,
    pub mean_snr_f: f64,
    pub mean_snr_beta: f64,
    pub mean_iterations: f64,
    pub converged: usize,
}

impl Aggregate {
    /// Summaries of the successful replications. The design is fixed across
    /// replications, so the SNRs are those of the design.
    pub fn from_records(records: &[ReplicationRecord], p: usize, snr: (f64, f64)) -> Self {
        let betas: Vec<&Vec<f64>> = records.iter().filter_map(|r| r.beta.as_ref()).collect();
        let k = betas.len();
        let mut mean_beta = vec![0.0; p];
        let mut sd_beta = vec![0.0; p];
        if k > 0 {
            for j in 0..p {
                let m = betas.iter().map(|b| b[j]).sum::<f64>() / k as f64;
                mean_beta[j] = m;
                if k > 1 {
                    let ss = betas.iter().map(|b| (b[j] - m).powi(2)).sum::<f64>();
                    sd_beta[j] = (ss / (k - 1) as f64).sqrt();
                }
            }
        } else {
            mean_beta.clear();
            sd_beta.clear();
        }
        let rm: Vec<f64> = records.iter().filter_map(|r| r.rmise).collect();
        let mean_rmise = (!rm.is_empty()).then(|| rm.iter().sum::<f64>() / rm.len() as f64);
        Self {
            successes: k,
            failures: records.len() - k,
            mean_beta,
            sd_beta,
            mean_rmise,
            mean_snr_f: snr.0,
            mean_snr_beta: snr.1,
            mean_iterations: records.iter().map(|r| r.iterations as f64).sum::<f64>()
                / records.len().max(1) as f64,
            converged: records.iter().filter(|r| r.converged).count(),
        }
    }
}

/// Plot-ready columns: grid, truth and the first successful estimate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotData {
    pub t: Vec<f64>,
    pub f0: Vec<f64>,
    pub f_hat: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub config_hash: String,
    pub seed: u64,
    pub design: DesignSummary,
    pub aggregate: Aggregate,
    pub replications: Vec<ReplicationRecord>,
    #[serde(skip)]
    pub plot: PlotData,
    /// Not serialized so that reports are reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Run one replication on the shared design.
pub fn run_replication(
    design: &SimulationDesign,
    fit: &FitConfig,
    seed: u64,
    r: usize,
) -> (ReplicationRecord, Option<Vec<f64>>) {
    let attempt = || -> Result<_> {
        let y = design.sample_responses(&mut replication_rng(seed, r))?;
        let data = Dataset::new(y, design.x.clone())?;
        let fit = backfit(&data, &design.family, fit)?;
        let err = rmise(&fit.f_hat, &design.f0)?;
        Ok((fit, err))
    };
    match attempt() {
        Ok((fit, err)) => (
            ReplicationRecord {
                index: r,
                beta: Some(fit.beta),
                rmise: Some(err),
                iterations: fit.iterations,
                converged: fit.converged,
                error: None,
            },
            Some(fit.f_hat),
        ),
        Err(e) => (
            ReplicationRecord {
                index: r,
                beta: None,
                rmise: None,
                iterations: 0,
                converged: false,
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

/// Monte Carlo study: one design drawn from the master seed, `R` independent
/// response draws, one fit per draw. Fit failures are recorded, not fatal.
pub fn run_monte_carlo(config: &SimulationConfig) -> Result<SimulationReport> {
    let start = Instant::now();
    let design = SimulationDesign::from_config(config)?;
    let snr = design.snr()?;
    let mut replications = Vec::with_capacity(config.replications);
    let mut example = None;
    for r in 0..config.replications {
        let (record, f_hat) = run_replication(&design, &config.fit, config.seed, r);
        if example.is_none() {
            example = f_hat;
        }
        replications.push(record);
    }
    let aggregate = Aggregate::from_records(&replications, config.p, snr);
    let n = config.n;
    let f0_rms = (design.f0.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    Ok(SimulationReport {
        config: config.clone(),
        config_hash: config.hash(),
        seed: config.seed,
        design: DesignSummary {
            dispersion: design.family.dispersion(),
            lambda: config.fit.penalty.resolve_lambda(&design.family, n),
            beta0: design.beta0,
            f0_rms,
        },
        aggregate,
        replications,
        plot: PlotData {
            t: (1..=n).map(|i| i as f64 / n as f64).collect(),
            f0: design.f0,
            f_hat: example,
        },
        wall_time: start.elapsed(),
    })
}
