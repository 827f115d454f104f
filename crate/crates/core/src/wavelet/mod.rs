//! Periodic orthonormal discrete wavelet transform (Mallat pyramid).
//!
//! Signals have dyadic length `n = 2^J`. Each pyramid stage splits the
//! current approximation of length `2^(j+1)` into `2^j` approximation and
//! `2^j` detail coefficients by circular convolution with the lowpass and
//! highpass filters followed by decimation, so the whole transform costs
//! `O(n L)` for a filter of length `L`. The transform is orthogonal: the
//! inverse is its transpose.

mod filter;
mod layout;
mod transform;

pub use filter::{make_filter, WaveletFilter, WaveletKind};
pub use layout::{
    coefficient_layout, default_coarse_level, dyadic_levels, CoefficientLayout, CoefficientRole,
};
pub use transform::{dwt, idwt, WaveletCoefficients, WaveletTransform};
