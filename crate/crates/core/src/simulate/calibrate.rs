use serde::{Deserialize, Serialize};

use crate::error::{GplmError, Result};
use crate::estimator::LambdaPolicy;
use crate::expfam::FamilySpec;

use super::monte_carlo::{run_replication, SimulationConfig, SimulationDesign};

/// Mean root-MISE as a function of a fixed threshold λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub lambdas: Vec<f64>,
    /// Mean root-MISE over the replications that succeed at every λ.
    pub mean_rmise: Vec<f64>,
    /// Failed fits per λ.
    pub failures: Vec<usize>,
    /// Replications entering `mean_rmise`.
    pub common_replications: usize,
    pub argmin: usize,
    pub lambda_star: f64,
    /// `sqrt(φ log n)`.
    pub reference_scale: f64,
    /// `λ* / sqrt(φ log n)`.
    pub ratio: f64,
}

/// `sqrt(φ log n)`.
pub fn reference_scale(family: &FamilySpec, n: usize) -> f64 {
    (family.dispersion() * (n as f64).ln()).sqrt()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(GplmError::Config("threshold grid is empty".into()));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(GplmError::Config(format!("grid value {v} is not a finite nonnegative number")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GplmError::Config("threshold grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Sweep fixed thresholds over `grid`. Every λ sees the same design and the
/// same response draws, and the curve averages over the replications whose
/// fits succeed at every λ, so curve differences are due to λ alone.
pub fn calibrate_threshold(config: &SimulationConfig, grid: &[f64]) -> Result<ThresholdCurve> {
    check_grid(grid)?;
    let design = SimulationDesign::from_config(config)?;
    // errors[λ][r]; NaN marks a failed fit
    let mut errors = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut fit = config.fit;
        fit.penalty.lambda = LambdaPolicy::Fixed { lambda };
        let row: Vec<f64> = (0..config.replications)
            .map(|r| run_replication(&design, &fit, config.seed, r).0.rmise.unwrap_or(f64::NAN))
            .collect();
        errors.push(row);
    }
    let failures: Vec<usize> = errors.iter().map(|row| row.iter().filter(|e| e.is_nan()).count()).collect();
    let common: Vec<usize> = (0..config.replications)
        .filter(|&r| errors.iter().all(|row| !row[r].is_nan()))
        .collect();
    if common.is_empty() {
        return Err(GplmError::Numeric(
            "no replication succeeded at every grid point".into(),
        ));
    }
    let mean_rmise: Vec<f64> = errors
        .iter()
        .map(|row| common.iter().map(|&r| row[r]).sum::<f64>() / common.len() as f64)
        .collect();
    // first minimum on ties
    let argmin = mean_rmise
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < mean_rmise[best] { i } else { best });
    let lambda_star = grid[argmin];
    let scale = reference_scale(&design.family, config.n);
    Ok(ThresholdCurve {
        lambdas: grid.to_vec(),
        mean_rmise,
        failures,
        common_replications: common.len(),
        argmin,
        lambda_star,
        reference_scale: scale,
        ratio: lambda_star / scale,
    })
}

/// Parameter varied across a calibration sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Binomial trial counts; `φ = 1/m`. Requires nothing of the base family.
    BinomialM { values: Vec<u32> },
    /// Gaussian dispersions.
    Dispersion { values: Vec<f64> },
    SampleSize { values: Vec<usize> },
}

impl SweepAxis {
    fn len(&self) -> usize {
        match self {
            SweepAxis::BinomialM { values } => values.len(),
            SweepAxis::Dispersion { values } => values.len(),
            SweepAxis::SampleSize { values } => values.len(),
        }
    }

    /// Configuration at sweep point `i`. Noise axes keep the base design's
    /// `f₀` and `β₀` and change only the family.
    fn apply(&self, base: &SimulationConfig, i: usize) -> Result<(f64, SimulationConfig)> {
        let mut cfg = base.clone();
        let (value, family) = match self {
            SweepAxis::SampleSize { values } => {
                cfg.n = values[i];
                return Ok((values[i] as f64, cfg));
            }
            SweepAxis::BinomialM { values } => {
                (f64::from(values[i]), FamilySpec::Binomial { m: values[i] })
            }
            SweepAxis::Dispersion { values } => {
                if !matches!(base.family, FamilySpec::Gaussian { .. }) {
                    return Err(GplmError::Config(
                        "a dispersion sweep needs the gaussian family".into(),
                    ));
                }
                (values[i], FamilySpec::Gaussian { phi: values[i] })
            }
        };
        let design = SimulationDesign::from_config(base)?;
        let family = family.validated()?;
        cfg.family = family;
        cfg.snr_beta = None;
        cfg.beta0 = design.beta0.first().copied().unwrap_or(base.beta0);
        cfg.snr_f = base.snr_f * (design.family.dispersion() / family.dispersion()).sqrt();
        Ok((value, cfg))
    }
}

/// Threshold grid of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "snake_case")]
pub enum GridSpec {
    Absolute { lambdas: Vec<f64> },
    /// Multiples of `sqrt(φ log n)` at each sweep point.
    Relative { multiples: Vec<f64> },
}

impl GridSpec {
    pub fn lambdas(&self, family: &FamilySpec, n: usize) -> Vec<f64> {
        match self {
            GridSpec::Absolute { lambdas } => lambdas.clone(),
            GridSpec::Relative { multiples } => {
                let s = reference_scale(family, n);
                multiples.iter().map(|c| c * s).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub curve: ThresholdCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSweep {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `λ*` on `sqrt(φ log n)` through the origin.
    pub slope: f64,
    /// `1 - SS_res / SS_tot` with `SS_tot` taken about the mean of `λ*`.
    pub r_squared: f64,
}

/// Least squares `y ≈ c x` without intercept; returns `(c, R²)`.
///
/// `R²` is NaN when all `y` coincide.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.is_empty() {
        return Err(GplmError::Dimension(format!(
            "regression needs matching nonempty samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(GplmError::Numeric("regressor is identically zero".into()));
    }
    let c = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN };
    Ok((c, r2))
}

/// One threshold curve per sweep value, then the regression of `λ*` on
/// `sqrt(φ log n)`.
pub fn calibrate_sweep(
    base: &SimulationConfig,
    axis: &SweepAxis,
    grid: &GridSpec,
) -> Result<CalibrationSweep> {
    if axis.len() == 0 {
        return Err(GplmError::Config("sweep has no values".into()));
    }
    let mut points = Vec::with_capacity(axis.len());
    for i in 0..axis.len() {
        let (value, cfg) = axis.apply(base, i)?;
        let lambdas = grid.lambdas(&cfg.family, cfg.n);
        let curve = calibrate_threshold(&cfg, &lambdas)?;
        points.push(SweepPoint { value, curve });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.curve.reference_scale).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.curve.lambda_star).collect();
    let (slope, r_squared) = fit_through_origin(&xs, &ys)?;
    Ok(CalibrationSweep {
        axis: axis.clone(),
        points,
        slope,
        r_squared,
    })
}
