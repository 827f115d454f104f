use crate::error::{GplmError, Result};
use crate::expfam::FamilySpec;
use crate::wavelet::{CoefficientLayout, WaveletTransform};

use super::{PenaltyConfig, PenaltyKind, ThresholdRule};

/// `sign(x) · max(|x| - λ, 0)`.
#[inline]
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// Family-calibrated threshold for a sample of size `n` (`n >= 2`).
///
/// Gaussian: `sqrt(2 φ log n)`; binomial: `0.5 sqrt(φ log n)`;
/// Poisson: `2 sqrt(log n)`.
pub fn universal_lambda(family: &FamilySpec, n: usize) -> f64 {
    let log_n = (n as f64).ln();
    let phi = family.dispersion();
    match family {
        FamilySpec::Gaussian { .. } => (2.0 * phi * log_n).sqrt(),
        FamilySpec::Binomial { .. } => 0.5 * (phi * log_n).sqrt(),
        FamilySpec::Poisson => 2.0 * log_n.sqrt(),
    }
}

/// Thresholds `λ |Ψ D Ψᵀ 1|` for the detail coefficients, where `D = diag(weights)`.
///
/// `synth_ones` must be `Ψᵀ 1` for the transform's layout. Scaling entries
/// are returned as 0; they are never thresholded.
pub(crate) fn thresholds_into(
    lambda: f64,
    weights: &[f64],
    synth_ones: &[f64],
    transform: &mut WaveletTransform,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
        return Err(GplmError::Numeric(format!(
            "threshold weight {bad} is not finite and positive"
        )));
    }
    let layout = transform.layout();
    let first = weights[0];
    if weights.iter().all(|&w| w == first) {
        // Ψ (c I) Ψᵀ 1 = c 1
        out.fill(lambda * first);
    } else {
        for ((s, &w), &v) in scratch.iter_mut().zip(weights).zip(synth_ones) {
            *s = w * v;
        }
        transform.forward_into(scratch, out)?;
        for t in out.iter_mut() {
            *t = (lambda * *t).abs();
        }
    }
    out[layout.scaling_range()].fill(0.0);
    Ok(())
}

/// Per-coefficient thresholds `λ |Ψ W⁻¹ Ψᵀ 1|` given `diag(W⁻¹)`.
pub fn per_coefficient_thresholds(
    lambda: f64,
    w_inv_diag: &[f64],
    transform: &mut WaveletTransform,
) -> Result<Vec<f64>> {
    let layout = transform.layout();
    if w_inv_diag.len() != layout.len() {
        return Err(GplmError::Dimension(format!(
            "{} weights for a transform of length {}",
            w_inv_diag.len(),
            layout.len()
        )));
    }
    let synth_ones = synthesize_ones(transform)?;
    let mut scratch = vec![0.0; layout.len()];
    let mut out = vec![0.0; layout.len()];
    thresholds_into(lambda, w_inv_diag, &synth_ones, transform, &mut scratch, &mut out)?;
    Ok(out)
}

/// `Ψᵀ 1`: the signal whose coefficients are all ones.
pub(crate) fn synthesize_ones(transform: &mut WaveletTransform) -> Result<Vec<f64>> {
    let n = transform.layout().len();
    let mut out = vec![0.0; n];
    transform.inverse_into(&vec![1.0; n], &mut out)?;
    Ok(out)
}

impl ThresholdRule {
    /// Diagonal fed to the threshold formula given `b̈(η_i)`.
    #[inline]
    pub(crate) fn weight(self, b_ddot: f64) -> f64 {
        match self {
            ThresholdRule::Literal => b_ddot,
            ThresholdRule::InverseWeight => 1.0 / b_ddot,
        }
    }
}

/// Penalty of a coefficient vector; only detail coefficients are penalized.
///
/// l1: `λ Σ |θ|`; Sobolev: `(λ/2) Σ_j 2^(2 j s) Σ_k θ_jk²`.
pub fn penalty_value(
    coeffs: &[f64],
    layout: CoefficientLayout,
    kind: PenaltyKind,
    lambda: f64,
) -> Result<f64> {
    if coeffs.len() != layout.len() {
        return Err(GplmError::Dimension(format!(
            "{} coefficients for a layout of length {}",
            coeffs.len(),
            layout.len()
        )));
    }
    Ok(match kind {
        PenaltyKind::L1Soft => lambda * coeffs[layout.details()].iter().map(|t| t.abs()).sum::<f64>(),
        PenaltyKind::SobolevQuadratic { s } => {
            0.5 * lambda
                * layout
                    .detail_levels()
                    .map(|j| {
                        let w = (2.0 * j as f64 * s).exp2();
                        w * coeffs[layout.detail_range(j)].iter().map(|t| t * t).sum::<f64>()
                    })
                    .sum::<f64>()
        }
    })
}

/// Sobolev shrinkage factor of a detail level.
#[inline]
pub(crate) fn sobolev_factor(level: usize, s: f64, lambda: f64) -> f64 {
    1.0 / (1.0 + lambda * (2.0 * level as f64 * s).exp2())
}

impl PenaltyConfig {
    /// The numeric λ for a given family and sample size.
    pub fn resolve_lambda(&self, family: &FamilySpec, n: usize) -> f64 {
        match self.lambda {
            super::LambdaPolicy::Universal => universal_lambda(family, n),
            super::LambdaPolicy::Fixed { lambda } => lambda,
        }
    }
}
