use nalgebra::DMatrix;

use crate::error::{GplmError, Result};
use crate::expfam::FamilySpec;

/// Signal-to-noise ratios `(SNR_f, SNR_β)` of the two model components.
///
/// `SNR_f² = mean(f₀² / (φ b̈(η)))` and `SNR_β² = mean((Xβ₀)² / (φ b̈(η)))`
/// with `η = Xβ₀ + f₀`.
pub fn snr(
    family: &FamilySpec,
    x: &DMatrix<f64>,
    beta0: &[f64],
    f0: &[f64],
    phi: f64,
) -> Result<(f64, f64)> {
    let n = f0.len();
    if x.nrows() != n || x.ncols() != beta0.len() {
        return Err(GplmError::Dimension(format!(
            "snr: X is {}x{}, beta has {} entries, f has {n}",
            x.nrows(),
            x.ncols(),
            beta0.len()
        )));
    }
    if !(phi.is_finite() && phi > 0.0) {
        return Err(GplmError::Domain(format!("snr: dispersion must be positive, got {phi}")));
    }
    let (mut sf, mut sb) = (0.0, 0.0);
    for (i, &f) in f0.iter().enumerate() {
        let lin: f64 = (0..beta0.len()).map(|j| x[(i, j)] * beta0[j]).sum();
        let var = phi * family.b_ddot(lin + f);
        sf += f * f / var;
        sb += lin * lin / var;
    }
    Ok(((sf / n as f64).sqrt(), (sb / n as f64).sqrt()))
}

/// Root mean squared error on the grid, `(mean((f̂ - f₀)²))^½`.
pub fn rmise(f_hat: &[f64], f0: &[f64]) -> Result<f64> {
    if f_hat.len() != f0.len() {
        return Err(GplmError::Dimension(format!(
            "rmise: {} estimates for {} true values",
            f_hat.len(),
            f0.len()
        )));
    }
    if f0.is_empty() {
        return Ok(0.0);
    }
    let ss: f64 = f_hat.iter().zip(f0).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / f0.len() as f64).sqrt())
}
