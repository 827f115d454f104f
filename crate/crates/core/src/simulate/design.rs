use nalgebra::DMatrix;
use rand::Rng;

use crate::expfam::standard_normal;

/// Deterministic covariate trend `g(x) = 30(x-½)⁴ - 6(x-½)² + (x-½)`.
pub fn covariate_trend(x: f64) -> f64 {
    let u = x - 0.5;
    let u2 = u * u;
    30.0 * u2 * u2 - 6.0 * u2 + u
}

/// `X[i][j] = g(t_i) + ξ_ij` on `t_i = i/n` with iid standard normal `ξ`.
///
/// Every column shares the same trend. Draws are taken row by row.
pub fn covariate_design<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let g = covariate_trend((i + 1) as f64 / n as f64);
        for j in 0..p {
            x[(i, j)] = g + standard_normal(rng);
        }
    }
    x
}
