//! One-parameter exponential families with canonical links.
//!
//! A response has density `exp((y η - b(η)) / φ + c(y, φ))`. Only the
//! cumulant `b` and its derivatives are needed here: `c` is constant in `η`
//! and drops out of every criterion, so it is never evaluated.
//!
//! For the binomial and Poisson families every evaluation clamps `η` to
//! `[-ETA_GUARD, ETA_GUARD]`, far outside the range where the models are
//! meaningful, so that `exp` cannot overflow and `b̈` stays positive.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GplmError, Result};

pub const ETA_GUARD: f64 = 30.0;

/// Poisson means above this are sampled by a rounded normal approximation.
const POISSON_INVERSION_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilySpec {
    /// `N(η, φ)` with `φ = σ²`.
    Gaussian { phi: f64 },
    /// `m·y ~ B(m, logistic(η))`, dispersion `φ = 1/m`.
    Binomial { m: u32 },
    Poisson,
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Gaussian { phi } => write!(f, "gaussian(phi={phi})"),
            FamilySpec::Binomial { m } => write!(f, "binomial(m={m})"),
            FamilySpec::Poisson => f.write_str("poisson"),
        }
    }
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() {
        Ok(())
    } else {
        Err(GplmError::Numeric(format!("natural parameter {eta} is not finite")))
    }
}

impl FamilySpec {
    pub fn gaussian(phi: f64) -> Result<Self> {
        Self::Gaussian { phi }.validated()
    }

    pub fn binomial(m: u32) -> Result<Self> {
        Self::Binomial { m }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            FamilySpec::Gaussian { phi } if !(phi.is_finite() && phi > 0.0) => Err(
                GplmError::Config(format!("gaussian dispersion must be positive, got {phi}")),
            ),
            FamilySpec::Binomial { m: 0 } => {
                Err(GplmError::Config("binomial m must be at least 1".into()))
            }
            other => Ok(other),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Gaussian { .. } => "gaussian",
            FamilySpec::Binomial { .. } => "binomial",
            FamilySpec::Poisson => "poisson",
        }
    }

    /// Dispersion `φ`.
    pub fn dispersion(&self) -> f64 {
        match *self {
            FamilySpec::Gaussian { phi } => phi,
            FamilySpec::Binomial { m } => 1.0 / f64::from(m),
            FamilySpec::Poisson => 1.0,
        }
    }

    fn guard(&self, eta: f64) -> f64 {
        match self {
            FamilySpec::Gaussian { .. } => eta,
            _ => eta.clamp(-ETA_GUARD, ETA_GUARD),
        }
    }

    // Unchecked kernels; callers make sure `eta` is finite.

    pub(crate) fn b(&self, eta: f64) -> f64 {
        let eta = self.guard(eta);
        match self {
            FamilySpec::Gaussian { .. } => 0.5 * eta * eta,
            FamilySpec::Binomial { .. } => softplus(eta),
            FamilySpec::Poisson => eta.exp(),
        }
    }

    pub(crate) fn b_dot(&self, eta: f64) -> f64 {
        let eta = self.guard(eta);
        match self {
            FamilySpec::Gaussian { .. } => eta,
            FamilySpec::Binomial { .. } => logistic(eta),
            FamilySpec::Poisson => eta.exp(),
        }
    }

    pub(crate) fn b_ddot(&self, eta: f64) -> f64 {
        let eta = self.guard(eta);
        match self {
            FamilySpec::Gaussian { .. } => 1.0,
            FamilySpec::Binomial { .. } => {
                let mu = logistic(eta);
                let e = (-eta.abs()).exp();
                // mu (1 - mu) without cancellation for large |eta|
                if eta.abs() > 1.0 {
                    e / ((1.0 + e) * (1.0 + e))
                } else {
                    mu * (1.0 - mu)
                }
            }
            FamilySpec::Poisson => eta.exp(),
        }
    }

    pub(crate) fn ell(&self, y: f64, eta: f64) -> f64 {
        y * self.guard(eta) - self.b(eta)
    }

    /// Cumulant `b(η)`.
    pub fn cumulant(&self, eta: f64) -> Result<f64> {
        check_eta(eta)?;
        Ok(self.b(eta))
    }

    /// Conditional mean `μ = ḃ(η)`.
    pub fn mean(&self, eta: f64) -> Result<f64> {
        check_eta(eta)?;
        Ok(self.b_dot(eta))
    }

    /// Variance function `b̈(η)`, i.e. the variance divided by `φ`.
    pub fn variance_function(&self, eta: f64) -> Result<f64> {
        check_eta(eta)?;
        Ok(self.b_ddot(eta))
    }

    /// Conditional variance `φ b̈(η)`.
    pub fn variance(&self, eta: f64) -> Result<f64> {
        Ok(self.dispersion() * self.variance_function(eta)?)
    }

    /// Loglikelihood `ℓ(y, η) = y η - b(η)`, up to terms constant in `η`.
    pub fn loglik(&self, y: f64, eta: f64) -> Result<f64> {
        check_eta(eta)?;
        Ok(self.ell(y, eta))
    }

    fn check_mu(&self, mu: f64) -> Result<()> {
        let ok = match self {
            FamilySpec::Gaussian { .. } => mu.is_finite(),
            FamilySpec::Binomial { .. } => mu > 0.0 && mu < 1.0,
            FamilySpec::Poisson => mu > 0.0 && mu.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(GplmError::Domain(format!(
                "mean {mu} is outside the {} mean domain",
                self.name()
            )))
        }
    }

    /// Canonical link `G(μ) = ḃ⁻¹(μ)`.
    pub fn link(&self, mu: f64) -> Result<f64> {
        self.check_mu(mu)?;
        Ok(match self {
            FamilySpec::Gaussian { .. } => mu,
            FamilySpec::Binomial { .. } => (mu / (1.0 - mu)).ln(),
            FamilySpec::Poisson => mu.ln(),
        })
    }

    /// `dη/dμ = 1 / b̈(G(μ))`.
    pub fn dlink(&self, mu: f64) -> Result<f64> {
        self.check_mu(mu)?;
        Ok(match self {
            FamilySpec::Gaussian { .. } => 1.0,
            FamilySpec::Binomial { .. } => 1.0 / (mu * (1.0 - mu)),
            FamilySpec::Poisson => 1.0 / mu,
        })
    }

    /// Draw a response at natural parameter `η`.
    pub fn sample<R: Rng + ?Sized>(&self, eta: f64, rng: &mut R) -> Result<f64> {
        check_eta(eta)?;
        Ok(match *self {
            FamilySpec::Gaussian { phi } => eta + phi.sqrt() * standard_normal(rng),
            FamilySpec::Binomial { m } => {
                let p = self.b_dot(eta);
                let successes = (0..m).filter(|_| rng.random::<f64>() < p).count();
                successes as f64 / f64::from(m)
            }
            FamilySpec::Poisson => poisson(self.b_dot(eta), rng),
        })
    }

    /// Moment estimate `(1/n) Σ (y - μ)² / b̈(η)` of the dispersion.
    ///
    /// Diagnostic only: fitting always uses the known dispersion.
    pub fn estimate_dispersion(&self, y: &[f64], mu: &[f64], eta: &[f64]) -> Result<f64> {
        if y.len() != mu.len() || y.len() != eta.len() {
            return Err(GplmError::Dimension(format!(
                "y, mu and eta lengths differ ({}, {}, {})",
                y.len(),
                mu.len(),
                eta.len()
            )));
        }
        if y.is_empty() {
            return Err(GplmError::Dimension("empty sample".into()));
        }
        let mut total = 0.0;
        for ((&yi, &mi), &ei) in y.iter().zip(mu).zip(eta) {
            let v = self.variance_function(ei)?;
            if v <= 0.0 {
                return Err(GplmError::Numeric(format!(
                    "variance function vanished at eta = {ei}"
                )));
            }
            total += (yi - mi).powi(2) / v;
        }
        Ok(total / y.len() as f64)
    }
}

/// Box–Muller, cosine branch only: one normal per two uniforms.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // u1 in (0, 1] so the log is finite
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn poisson<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    if mu > POISSON_INVERSION_LIMIT {
        return (mu + mu.sqrt() * standard_normal(rng)).round().max(0.0);
    }
    // sequential search on the cdf
    let u = rng.random::<f64>();
    let mut k = 0u32;
    let mut p = (-mu).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mu / f64::from(k);
        cdf += p;
        if p == 0.0 && cdf < u {
            // rounding left the cdf short of u; we are deep in the tail
            break;
        }
    }
    f64::from(k)
}
