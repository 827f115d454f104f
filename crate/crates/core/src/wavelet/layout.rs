use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{GplmError, Result};

/// Role of a flat coefficient index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientRole {
    Scaling,
    Detail { level: usize },
}

/// Partition of a length `n = 2^J` coefficient vector.
///
/// Index order is `[scaling (2^j0) | detail j0 (2^j0) | detail j0+1 | ... | detail J-1]`,
/// so the detail block of level `j` occupies `2^j..2^(j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientLayout {
    levels: usize,
    coarse_level: usize,
}

/// `log2(n)` when `n` is a positive power of two.
pub fn dyadic_levels(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(GplmError::Dimension(format!(
            "length {n} is not a power of two"
        )));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Default coarse level: a scaling block of `min(8, n)` entries.
pub fn default_coarse_level(n: usize) -> Result<usize> {
    Ok(dyadic_levels(n)?.min(3))
}

impl CoefficientLayout {
    pub fn new(n: usize, coarse_level: usize) -> Result<Self> {
        let levels = dyadic_levels(n)?;
        if coarse_level > levels {
            return Err(GplmError::Dimension(format!(
                "coarse level {coarse_level} exceeds J = {levels} for n = {n}"
            )));
        }
        Ok(Self {
            levels,
            coarse_level,
        })
    }

    pub fn len(&self) -> usize {
        1 << self.levels
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `J` with `n = 2^J`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn coarse_level(&self) -> usize {
        self.coarse_level
    }

    pub fn scaling_range(&self) -> Range<usize> {
        0..(1 << self.coarse_level)
    }

    /// Detail levels present, coarse to fine.
    pub fn detail_levels(&self) -> Range<usize> {
        self.coarse_level..self.levels
    }

    pub fn detail_range(&self, level: usize) -> Range<usize> {
        debug_assert!(self.detail_levels().contains(&level));
        (1 << level)..(2 << level)
    }

    /// Indices of all detail coefficients.
    pub fn details(&self) -> Range<usize> {
        (1 << self.coarse_level)..self.len()
    }

    pub fn role(&self, index: usize) -> CoefficientRole {
        assert!(index < self.len(), "index {index} out of range");
        if index < (1 << self.coarse_level) {
            CoefficientRole::Scaling
        } else {
            CoefficientRole::Detail {
                level: (usize::BITS - 1 - index.leading_zeros()) as usize,
            }
        }
    }

    pub fn roles(&self) -> Vec<CoefficientRole> {
        (0..self.len()).map(|i| self.role(i)).collect()
    }
}

/// Layout of the coefficients of a length-`n` signal with coarse level `j0`.
pub fn coefficient_layout(n: usize, coarse_level: usize) -> Result<CoefficientLayout> {
    CoefficientLayout::new(n, coarse_level)
}
