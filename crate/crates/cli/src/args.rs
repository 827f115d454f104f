use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gplm::estimator::{LambdaPolicy, PenaltyConfig, PenaltyKind, ThresholdRule};
use gplm::simulate::{GridSpec, SweepAxis, TestFunctionKind};
use gplm::{FamilySpec, FitConfig, SimulationConfig, WaveletKind};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "gplm",
    version,
    about = "Wavelet-penalized estimation of generalized partially linear models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print progress and timing to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a dataset file.
    Fit(FitCmd),
    /// Monte Carlo study on simulated data.
    Simulate(SimulateCmd),
    /// Root-MISE as a function of the threshold λ.
    Calibrate(CalibrateCmd),
}

#[derive(Debug, Args)]
pub struct FitCmd {
    /// Delimited text with header y,x1,...,xp.
    #[arg(long, required_unless_present = "config")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateCmd {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// λ values: "a,b,c" or "lo:hi:count" (inclusive, evenly spaced).
    #[arg(long, required_unless_present = "config")]
    pub grid: Option<String>,
    /// Read grid values as multiples of sqrt(φ log n).
    #[arg(long)]
    pub relative: bool,
    /// Sweep binomial m values, e.g. "8,24,96,200".
    #[arg(long, group = "sweep")]
    pub sweep_m: Option<String>,
    /// Sweep sample sizes, e.g. "128,256,512".
    #[arg(long, group = "sweep")]
    pub sweep_n: Option<String>,
    /// Sweep gaussian dispersions.
    #[arg(long, group = "sweep")]
    pub sweep_phi: Option<String>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Output directory; reports go to stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Re-run from the configuration embedded in a previous report.
    /// Other model options are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyName {
    Gaussian,
    Binomial,
    Poisson,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: FamilyName,
    /// Binomial trials per observation.
    #[arg(long, default_value_t = 24)]
    pub m: u32,
    /// Gaussian variance.
    #[arg(long, default_value_t = 1.0)]
    pub phi: f64,
}

impl FamilyArgs {
    pub fn family(&self) -> CliResult<FamilySpec> {
        let f = match self.family {
            FamilyName::Gaussian => FamilySpec::Gaussian { phi: self.phi },
            FamilyName::Binomial => FamilySpec::Binomial { m: self.m },
            FamilyName::Poisson => FamilySpec::Poisson,
        };
        Ok(f.validated()?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyName {
    Universal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyName {
    L1,
    Sobolev,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleName {
    InverseWeight,
    Literal,
}

/// Estimator options; unset values take the library defaults.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// Fixed threshold λ (default: the family's universal threshold).
    #[arg(long, conflicts_with = "lambda_policy")]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub lambda_policy: Option<PolicyName>,
    #[arg(long, value_enum, default_value = "l1")]
    pub penalty: PenaltyName,
    /// Sobolev smoothness (must exceed 1/2).
    #[arg(long, default_value_t = 2.0)]
    pub sobolev_s: f64,
    /// haar, daubechies-4, daubechies-6, daubechies-8 or symmlet-8.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long)]
    pub coarse_level: Option<usize>,
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub j1: Option<usize>,
    #[arg(long)]
    pub j2: Option<usize>,
    /// Clamp ‖f‖∞ to this bound.
    #[arg(long)]
    pub sup_bound: Option<f64>,
    #[arg(long, value_enum)]
    pub threshold_rule: Option<RuleName>,
    #[arg(long)]
    pub relaxation_halvings: Option<usize>,
    #[arg(long)]
    pub divergence_window: Option<usize>,
    /// Keep f at zero and fit β only (a plain GLM).
    #[arg(long)]
    pub linear_only: bool,
}

impl FitArgs {
    pub fn fit_config(&self) -> CliResult<FitConfig> {
        let d = FitConfig::default();
        let filter = match &self.filter {
            Some(name) => name.parse::<WaveletKind>()?,
            None => d.filter,
        };
        let penalty = PenaltyConfig {
            kind: match self.penalty {
                PenaltyName::L1 => PenaltyKind::L1Soft,
                PenaltyName::Sobolev => PenaltyKind::SobolevQuadratic { s: self.sobolev_s },
            },
            lambda: match self.lambda {
                Some(lambda) => LambdaPolicy::Fixed { lambda },
                None => LambdaPolicy::Universal,
            },
            coarse_level: self.coarse_level,
            threshold_rule: match self.threshold_rule {
                Some(RuleName::Literal) => ThresholdRule::Literal,
                Some(RuleName::InverseWeight) => ThresholdRule::InverseWeight,
                None => d.penalty.threshold_rule,
            },
        };
        let cfg = FitConfig {
            kappa: self.kappa.unwrap_or(d.kappa),
            delta: self.delta.unwrap_or(d.delta),
            j1: self.j1.unwrap_or(d.j1),
            j2: self.j2.unwrap_or(d.j2),
            sup_bound: self.sup_bound.or(d.sup_bound),
            filter,
            penalty,
            estimate_function: !self.linear_only,
            divergence_window: self.divergence_window.unwrap_or(d.divergence_window),
            relaxation_halvings: self.relaxation_halvings.unwrap_or(d.relaxation_halvings),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Sample size (a power of two).
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, value_enum, default_value = "sinus")]
    pub function: FunctionName,
    #[arg(long, default_value_t = 9.0)]
    pub snr_f: f64,
    /// Target SNR of the linear part.
    #[arg(long)]
    pub snr_beta: Option<f64>,
    /// Common value of the entries of β₀.
    #[arg(long, default_value_t = 1.0)]
    pub beta0: f64,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FunctionName {
    Sinus,
    Blocs,
    Pics,
}

impl SimArgs {
    pub fn simulation_config(&self, family: FamilySpec, fit: FitConfig) -> CliResult<SimulationConfig> {
        let cfg = SimulationConfig {
            family,
            function: match self.function {
                FunctionName::Sinus => TestFunctionKind::Sinus,
                FunctionName::Blocs => TestFunctionKind::Blocs,
                FunctionName::Pics => TestFunctionKind::Pics,
            },
            snr_f: self.snr_f,
            snr_beta: self.snr_beta,
            n: self.n,
            p: self.p,
            beta0: self.beta0,
            replications: self.reps,
            seed: self.seed,
            fit,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("{what}: cannot parse '{}'", v.trim())))
        })
        .collect()
}

/// "a,b,c" or "lo:hi:count".
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list("--grid", s),
        [lo, hi, count] => {
            let bad = || CliError::Input(format!("--grid: cannot parse range '{s}'"));
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            match count {
                0 => Err(bad()),
                1 => Ok(vec![lo]),
                _ => Ok((0..count)
                    .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                    .collect()),
            }
        }
        _ => Err(CliError::Input(format!("--grid: expected a list or lo:hi:count, got '{s}'"))),
    }
}

impl CalibrateCmd {
    pub fn grid_spec(&self) -> CliResult<GridSpec> {
        let values = parse_grid(self.grid.as_deref().unwrap_or_default())?;
        Ok(if self.relative {
            GridSpec::Relative { multiples: values }
        } else {
            GridSpec::Absolute { lambdas: values }
        })
    }

    pub fn sweep(&self) -> CliResult<Option<SweepAxis>> {
        Ok(if let Some(s) = &self.sweep_m {
            Some(SweepAxis::BinomialM { values: parse_list("--sweep-m", s)? })
        } else if let Some(s) = &self.sweep_n {
            Some(SweepAxis::SampleSize { values: parse_list("--sweep-n", s)? })
        } else if let Some(s) = &self.sweep_phi {
            Some(SweepAxis::Dispersion { values: parse_list("--sweep-phi", s)? })
        } else {
            None
        })
    }
}
