use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GplmError, Result};
use crate::wavelet::dyadic_levels;

/// Jump / peak locations shared by the blocs and pics signals.
const LOCATIONS: [f64; 11] = [0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOC_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const PIC_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const PIC_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

/// Shapes of the nonparametric component used in simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TestFunctionKind {
    /// `3 sin(4πt) + 2·1{t > 0.7}`: smooth apart from one jump.
    #[default]
    Sinus,
    /// Piecewise constant with 11 jumps.
    Blocs,
    /// 11 sharp localized peaks.
    Pics,
}

impl TestFunctionKind {
    pub const ALL: [TestFunctionKind; 3] = [
        TestFunctionKind::Sinus,
        TestFunctionKind::Blocs,
        TestFunctionKind::Pics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunctionKind::Sinus => "sinus",
            TestFunctionKind::Blocs => "blocs",
            TestFunctionKind::Pics => "pics",
        }
    }

    /// Unscaled shape at `t`.
    pub fn shape(self, t: f64) -> f64 {
        match self {
            TestFunctionKind::Sinus => {
                3.0 * (4.0 * std::f64::consts::PI * t).sin() + if t > 0.7 { 2.0 } else { 0.0 }
            }
            TestFunctionKind::Blocs => LOCATIONS
                .iter()
                .zip(BLOC_HEIGHTS)
                .map(|(&loc, h)| if t > loc { h } else { 0.0 })
                .sum(),
            TestFunctionKind::Pics => LOCATIONS
                .iter()
                .zip(PIC_HEIGHTS)
                .zip(PIC_WIDTHS)
                .map(|((&loc, h), w)| h * (1.0 + ((t - loc) / w).abs()).powi(-4))
                .sum(),
        }
    }
}

impl fmt::Display for TestFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunctionKind {
    type Err = GplmError;

    fn from_str(s: &str) -> Result<Self> {
        TestFunctionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                GplmError::Config(format!(
                    "unknown test function '{s}' (expected sinus, blocs or pics)"
                ))
            })
    }
}

/// A test function sampled on `t_i = i/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub values: Vec<f64>,
    /// Root mean square of `values`, which is the SNR of `f` for a
    /// Gaussian model with unit dispersion.
    pub target_snr: f64,
}

/// Sample `kind` on the grid and rescale it to root mean square `target_snr`.
pub fn test_function(kind: TestFunctionKind, n: usize, target_snr: f64) -> Result<TestFunction> {
    dyadic_levels(n)?;
    if !(target_snr.is_finite() && target_snr >= 0.0) {
        return Err(GplmError::Config(format!(
            "target SNR must be finite and nonnegative, got {target_snr}"
        )));
    }
    let raw: Vec<f64> = (1..=n).map(|i| kind.shape(i as f64 / n as f64)).collect();
    let rms = (raw.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let scale = if rms > 0.0 { target_snr / rms } else { 0.0 };
    Ok(TestFunction {
        kind,
        values: raw.into_iter().map(|v| v * scale).collect(),
        target_snr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocs_is_piecewise_constant() {
        for n in [64usize, 256, 1024] {
            let f = test_function(TestFunctionKind::Blocs, n, 3.0).unwrap();
            let jumps = f.values.windows(2).filter(|w| w[0] != w[1]).count();
            assert!(jumps <= 11, "n={n}: {jumps} jumps");
        }
    }

    #[test]
    fn zero_target_is_zero_function() {
        for kind in TestFunctionKind::ALL {
            let f = test_function(kind, 128, 0.0).unwrap();
            assert!(f.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rms_matches_target() {
        for kind in TestFunctionKind::ALL {
            let f = test_function(kind, 256, 9.0).unwrap();
            let rms = (f.values.iter().map(|v| v * v).sum::<f64>() / 256.0).sqrt();
            assert!((rms - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sinus_has_its_jump() {
        let f = test_function(TestFunctionKind::Sinus, 1024, 1.0).unwrap();
        let i = (0.7 * 1024.0) as usize; // t_i = (i+1)/n crosses 0.7 here
        let step = f.values[i] - f.values[i - 1];
        let smooth = f.values[i - 1] - f.values[i - 2];
        assert!(step.abs() > 10.0 * smooth.abs());
    }

    #[test]
    fn errors() {
        assert!(matches!("waves".parse::<TestFunctionKind>(), Err(GplmError::Config(_))));
        assert!(matches!(
            test_function(TestFunctionKind::Sinus, 100, 1.0),
            Err(GplmError::Dimension(_))
        ));
    }
}
