//! Penalized maximum-likelihood estimation of `η = Xβ + f(t)`.
//!
//! The criterion is `K(f, β) = Σ ℓ(y_i, X_iβ + f(t_i)) - Pen(f)` where the
//! penalty acts on the wavelet detail coefficients of `f` only. It is
//! maximized by backfitting: a functional step updates `f` for fixed `β`
//! and a linear step updates `β` for fixed `f`, each by Fisher scoring.
//! With the l1 penalty each functional scoring sweep soft-thresholds the
//! wavelet coefficients of a pseudo-response; the linear sweep is a
//! weighted least-squares regression on `X`.

mod backfit;
mod penalty;
mod steps;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GplmError, Result};
use crate::wavelet::{default_coarse_level, dyadic_levels, CoefficientLayout, WaveletKind};

pub use backfit::{backfit, Backfitter, IterationRecord};
pub use penalty::{penalty_value, per_coefficient_thresholds, soft_threshold, universal_lambda};
pub use steps::{criterion_value, functional_step, initialize, linear_step};

/// Responses and linear covariates on the equispaced grid `t_i = i/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: DMatrix<f64>,
}

impl Dataset {
    /// `x` is `n × p`. `n` must be a power of two and `1 <= p < n`.
    pub fn new(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        dyadic_levels(n)?;
        if x.nrows() != n {
            return Err(GplmError::Dimension(format!(
                "covariate matrix has {} rows for {n} responses",
                x.nrows()
            )));
        }
        if x.ncols() == 0 || x.ncols() >= n {
            return Err(GplmError::Dimension(format!(
                "need 1 <= p < n, got p = {} and n = {n}",
                x.ncols()
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(GplmError::Numeric("dataset contains non-finite values".into()));
        }
        Ok(Self { y, x })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Design points `t_i = i/n`, `i = 1..=n`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (1..=self.n()).map(|i| i as f64 / n).collect()
    }

    pub(crate) fn x_times(&self, beta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &b) in beta.iter().enumerate() {
            for (o, &xij) in out.iter_mut().zip(self.x.column(j).iter()) {
                *o += xij * b;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `λ Σ |θ_W|`, solved by soft-thresholding.
    L1Soft,
    /// `(λ/2) Σ_j 2^(2js) Σ_k θ_jk²`, solved by per-level linear shrinkage.
    SobolevQuadratic { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum LambdaPolicy {
    /// See [`universal_lambda`].
    Universal,
    Fixed { lambda: f64 },
}

/// Diagonal used in the per-coefficient threshold `λ |Ψ D Ψᵀ 1|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `D = diag(b̈(η))`.
    Literal,
    /// `D = diag(1/b̈(η)) = diag(dη/dμ)`: the threshold scales with the
    /// noise variance of the pseudo-response.
    #[default]
    InverseWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    pub lambda: LambdaPolicy,
    /// Coarse level `j0`; `None` picks a scaling block of `min(8, n)` entries.
    pub coarse_level: Option<usize>,
    #[serde(default)]
    pub threshold_rule: ThresholdRule,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            kind: PenaltyKind::L1Soft,
            lambda: LambdaPolicy::Universal,
            coarse_level: None,
            threshold_rule: ThresholdRule::default(),
        }
    }
}

impl PenaltyConfig {
    pub fn fixed(lambda: f64) -> Self {
        Self {
            lambda: LambdaPolicy::Fixed { lambda },
            ..Self::default()
        }
    }

    pub fn layout(&self, n: usize) -> Result<CoefficientLayout> {
        let j0 = match self.coarse_level {
            Some(j0) => j0,
            None => default_coarse_level(n)?,
        };
        CoefficientLayout::new(n, j0)
    }

    pub fn validate(&self) -> Result<()> {
        if let LambdaPolicy::Fixed { lambda } = self.lambda {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(GplmError::Config(format!(
                    "lambda must be finite and nonnegative, got {lambda}"
                )));
            }
        }
        if let PenaltyKind::SobolevQuadratic { s } = self.kind {
            if !(s.is_finite() && s > 0.5) {
                return Err(GplmError::Config(format!(
                    "sobolev smoothness must exceed 1/2, got {s}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Maximum number of outer iterations.
    pub kappa: usize,
    /// Relative tolerance on `‖β_k - β_{k-1}‖ / ‖β_{k-1}‖`.
    pub delta: f64,
    /// Scoring sweeps per functional step.
    pub j1: usize,
    /// Scoring sweeps per linear step.
    pub j2: usize,
    /// Optional clamp `‖f‖∞ <= C`.
    pub sup_bound: Option<f64>,
    pub filter: WaveletKind,
    pub penalty: PenaltyConfig,
    /// When false, `f` stays at zero and only `β` is fitted (a plain GLM).
    pub estimate_function: bool,
    /// Abort after this many consecutive iterations in which the criterion
    /// drops by more than `1e-6 max(1, |K|)` and the β step does not shrink;
    /// 0 disables.
    pub divergence_window: usize,
    /// Functional updates are relaxed as `f + ω (T(f) - f)` with `ω`
    /// starting at 1 and halved for good whenever the update would be longer
    /// than the previous one, at most this many times. Fixed points are
    /// unchanged. 0 keeps `ω = 1`, the plain scoring iteration.
    pub relaxation_halvings: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            kappa: 5000,
            delta: 1e-20,
            j1: 1,
            j2: 1,
            sup_bound: None,
            filter: WaveletKind::Symmlet8,
            penalty: PenaltyConfig::default(),
            estimate_function: true,
            divergence_window: 50,
            relaxation_halvings: 30,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappa == 0 {
            return Err(GplmError::Config("kappa must be at least 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(GplmError::Config(format!(
                "delta must be nonnegative, got {}",
                self.delta
            )));
        }
        if self.j1 == 0 || self.j2 == 0 {
            return Err(GplmError::Config("J1 and J2 must be at least 1".into()));
        }
        if let Some(c) = self.sup_bound {
            if !(c.is_finite() && c > 0.0) {
                return Err(GplmError::Config(format!("sup bound must be positive, got {c}")));
            }
        }
        self.penalty.validate()
    }
}

/// Result of a backfitting run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GplmFit {
    pub beta: Vec<f64>,
    /// `f̂` on the grid.
    pub f_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// λ actually used.
    pub lambda: f64,
    /// `Σ ℓ(y_i, η̂_i)`.
    pub final_loglik: f64,
    /// Penalized criterion at the returned estimate.
    pub final_criterion: f64,
    /// `‖β_k - β_{k-1}‖` per outer iteration.
    pub trace: Vec<f64>,
    /// Penalized criterion per outer iteration.
    pub criterion_trace: Vec<f64>,
}
