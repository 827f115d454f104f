use crate::error::{GplmError, Result};

use super::filter::WaveletFilter;
use super::layout::CoefficientLayout;

/// Flat coefficient vector together with its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    values: Vec<f64>,
    layout: CoefficientLayout,
}

impl WaveletCoefficients {
    pub fn new(values: Vec<f64>, layout: CoefficientLayout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(GplmError::Dimension(format!(
                "{} coefficients do not fit a layout of length {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(layout: CoefficientLayout) -> Self {
        Self {
            values: vec![0.0; layout.len()],
            layout,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> CoefficientLayout {
        self.layout
    }

    pub fn scaling(&self) -> &[f64] {
        &self.values[self.layout.scaling_range()]
    }

    pub fn detail(&self, level: usize) -> &[f64] {
        &self.values[self.layout.detail_range(level)]
    }

    /// All detail coefficients, coarse to fine.
    pub fn details(&self) -> &[f64] {
        &self.values[self.layout.details()]
    }

    pub fn details_mut(&mut self) -> &mut [f64] {
        let r = self.layout.details();
        &mut self.values[r]
    }
}

/// Periodic pyramid transform bound to a filter and a layout, with scratch
/// space so repeated transforms do not allocate.
#[derive(Debug, Clone)]
pub struct WaveletTransform {
    filter: WaveletFilter,
    layout: CoefficientLayout,
    work: Vec<f64>,
    tmp: Vec<f64>,
}

impl WaveletTransform {
    pub fn new(filter: WaveletFilter, layout: CoefficientLayout) -> Self {
        let n = layout.len();
        Self {
            filter,
            layout,
            work: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    pub fn layout(&self) -> CoefficientLayout {
        self.layout
    }

    /// Forward transform of `signal` into `out`.
    pub fn forward_into(&mut self, signal: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.layout.len();
        check_len("signal", signal.len(), n)?;
        check_len("coefficient buffer", out.len(), n)?;
        let h = self.filter.lowpass();
        let g = self.filter.highpass();
        self.work.copy_from_slice(signal);
        for level in self.layout.detail_levels().rev() {
            let half = 1usize << level;
            let len = half << 1;
            let input = &self.work[..len];
            let (approx, detail) = self.tmp.split_at_mut(half);
            for k in 0..half {
                let mut a = 0.0;
                let mut d = 0.0;
                let mut idx = 2 * k;
                for (&hm, &gm) in h.iter().zip(g) {
                    if idx >= len {
                        idx %= len;
                    }
                    let x = input[idx];
                    a += hm * x;
                    d += gm * x;
                    idx += 1;
                }
                approx[k] = a;
                detail[k] = d;
            }
            out[half..len].copy_from_slice(&detail[..half]);
            self.work[..half].copy_from_slice(approx);
        }
        let coarse = self.layout.scaling_range();
        out[coarse.clone()].copy_from_slice(&self.work[coarse]);
        Ok(())
    }

    /// Inverse transform of `coeffs` into `out`.
    pub fn inverse_into(&mut self, coeffs: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.layout.len();
        check_len("coefficients", coeffs.len(), n)?;
        check_len("signal buffer", out.len(), n)?;
        let h = self.filter.lowpass();
        let g = self.filter.highpass();
        let coarse = self.layout.scaling_range();
        self.work[coarse.clone()].copy_from_slice(&coeffs[coarse]);
        for level in self.layout.detail_levels() {
            let half = 1usize << level;
            let len = half << 1;
            let next = &mut self.tmp[..len];
            next.fill(0.0);
            let approx = &self.work[..half];
            let detail = &coeffs[half..len];
            for k in 0..half {
                let a = approx[k];
                let d = detail[k];
                let mut idx = 2 * k;
                for (&hm, &gm) in h.iter().zip(g) {
                    if idx >= len {
                        idx %= len;
                    }
                    next[idx] += hm * a + gm * d;
                    idx += 1;
                }
            }
            self.work[..len].copy_from_slice(next);
        }
        out.copy_from_slice(&self.work);
        Ok(())
    }

    pub fn forward(&mut self, signal: &[f64]) -> Result<WaveletCoefficients> {
        let mut out = vec![0.0; self.layout.len()];
        self.forward_into(signal, &mut out)?;
        WaveletCoefficients::new(out, self.layout)
    }

    pub fn inverse(&mut self, coeffs: &WaveletCoefficients) -> Result<Vec<f64>> {
        if coeffs.layout() != self.layout {
            return Err(GplmError::Dimension(
                "coefficient layout does not match the transform".into(),
            ));
        }
        let mut out = vec![0.0; self.layout.len()];
        self.inverse_into(coeffs.values(), &mut out)?;
        Ok(out)
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(GplmError::Dimension(format!(
            "{what} has length {got}, expected {want}"
        )));
    }
    Ok(())
}

/// Orthonormal periodic discrete wavelet transform down to `coarse_level`.
pub fn dwt(
    signal: &[f64],
    filter: &WaveletFilter,
    coarse_level: usize,
) -> Result<WaveletCoefficients> {
    let layout = CoefficientLayout::new(signal.len(), coarse_level)?;
    WaveletTransform::new(filter.clone(), layout).forward(signal)
}

/// Inverse of [`dwt`].
pub fn idwt(coeffs: &WaveletCoefficients, filter: &WaveletFilter) -> Result<Vec<f64>> {
    WaveletTransform::new(filter.clone(), coeffs.layout()).inverse(coeffs)
}
