use nalgebra::{DMatrix, DVector};

use crate::error::{GplmError, Result};
use crate::expfam::FamilySpec;
use crate::wavelet::{CoefficientLayout, WaveletFilter, WaveletTransform};

use super::penalty::{penalty_value, sobolev_factor, soft_threshold, synthesize_ones, thresholds_into};
use super::{Dataset, FitConfig, PenaltyKind};

/// Buffers and resolved settings shared by the scoring steps of one fit.
pub(crate) struct Workspace<'a> {
    pub(crate) data: &'a Dataset,
    pub(crate) family: FamilySpec,
    pub(crate) config: &'a FitConfig,
    pub(crate) lambda: f64,
    transform: WaveletTransform,
    synth_ones: Vec<f64>,
    xb: Vec<f64>,
    eta: Vec<f64>,
    weights: Vec<f64>,
    pseudo: Vec<f64>,
    coeffs: Vec<f64>,
    thresholds: Vec<f64>,
    scratch: Vec<f64>,
    /// `coeffs` holds the wavelet coefficients of the last functional iterate.
    coeffs_current: bool,
}

impl<'a> Workspace<'a> {
    pub(crate) fn new(data: &'a Dataset, family: FamilySpec, config: &'a FitConfig) -> Result<Self> {
        config.validate()?;
        let family = family.validated()?;
        let n = data.n();
        let layout = config.penalty.layout(n)?;
        let mut transform = WaveletTransform::new(WaveletFilter::new(config.filter), layout);
        let synth_ones = synthesize_ones(&mut transform)?;
        Ok(Self {
            data,
            family,
            config,
            lambda: config.penalty.resolve_lambda(&family, n),
            transform,
            synth_ones,
            xb: vec![0.0; n],
            eta: vec![0.0; n],
            weights: vec![0.0; n],
            pseudo: vec![0.0; n],
            coeffs: vec![0.0; n],
            thresholds: vec![0.0; n],
            scratch: vec![0.0; n],
            coeffs_current: false,
        })
    }

    pub(crate) fn layout(&self) -> CoefficientLayout {
        self.transform.layout()
    }

    fn check_len(&self, what: &str, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(GplmError::Dimension(format!(
                "{what} has length {got}, expected {want}"
            )));
        }
        Ok(())
    }

    /// Fill `eta = xb + f`, failing on non-finite entries.
    fn fill_eta(&mut self, f: &[f64], step: &'static str) -> Result<()> {
        for ((e, &a), &b) in self.eta.iter_mut().zip(&self.xb).zip(f) {
            *e = a + b;
        }
        if let Some(i) = self.eta.iter().position(|e| !e.is_finite()) {
            return Err(GplmError::ScoringDivergence {
                step,
                iteration: 0,
                detail: format!("linear predictor is {} at index {i}", self.eta[i]),
            });
        }
        Ok(())
    }

    /// One functional update of `f` for fixed `β`.
    pub(crate) fn functional_step(&mut self, beta: &[f64], f_current: &[f64]) -> Result<Vec<f64>> {
        let n = self.data.n();
        self.check_len("beta", beta.len(), self.data.p())?;
        self.check_len("f", f_current.len(), n)?;
        let layout = self.layout();
        let y = self.data.y();
        self.data.x_times(beta, &mut self.xb);
        let mut f = f_current.to_vec();
        for _ in 0..self.config.j1 {
            self.fill_eta(&f, "functional step")?;
            let rule = self.config.penalty.threshold_rule;
            for i in 0..n {
                let eta = self.eta[i];
                let mu = self.family.b_dot(eta);
                let v = self.family.b_ddot(eta);
                // Y = f + (y - μ) dη/dμ
                self.pseudo[i] = f[i] + (y[i] - mu) / v;
                self.weights[i] = rule.weight(v);
            }
            if let Some(i) = self.pseudo.iter().position(|v| !v.is_finite()) {
                return Err(GplmError::ScoringDivergence {
                    step: "functional step",
                    iteration: 0,
                    detail: format!("pseudo-response is {} at index {i}", self.pseudo[i]),
                });
            }
            self.transform.forward_into(&self.pseudo, &mut self.coeffs)?;
            match self.config.penalty.kind {
                PenaltyKind::L1Soft => {
                    thresholds_into(
                        self.lambda,
                        &self.weights,
                        &self.synth_ones,
                        &mut self.transform,
                        &mut self.scratch,
                        &mut self.thresholds,
                    )?;
                    for i in layout.details() {
                        self.coeffs[i] = soft_threshold(self.coeffs[i], self.thresholds[i]);
                    }
                }
                PenaltyKind::SobolevQuadratic { s } => {
                    for level in layout.detail_levels() {
                        let factor = sobolev_factor(level, s, self.lambda);
                        for c in &mut self.coeffs[layout.detail_range(level)] {
                            *c *= factor;
                        }
                    }
                }
            }
            self.transform.inverse_into(&self.coeffs, &mut f)?;
            self.coeffs_current = true;
            if let Some(bound) = self.config.sup_bound {
                for v in f.iter_mut() {
                    *v = v.clamp(-bound, bound);
                }
                self.coeffs_current = false;
            }
        }
        Ok(f)
    }

    /// One linear update of `β` for fixed `f`.
    pub(crate) fn linear_step(&mut self, beta_current: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        let n = self.data.n();
        let p = self.data.p();
        self.check_len("beta", beta_current.len(), p)?;
        self.check_len("f", f.len(), n)?;
        let x = self.data.x();
        let y = self.data.y();
        let mut beta = beta_current.to_vec();
        for _ in 0..self.config.j2 {
            self.data.x_times(&beta, &mut self.xb);
            self.fill_eta(f, "linear step")?;
            // pseudo-response Xβ + (y - μ) dη/dμ with weights b̈(η)
            for i in 0..n {
                let eta = self.eta[i];
                let v = self.family.b_ddot(eta);
                self.pseudo[i] = self.xb[i] + (y[i] - self.family.b_dot(eta)) / v;
                self.weights[i] = v;
            }
            beta = weighted_least_squares(x, &self.pseudo, &self.weights)?;
            if beta.iter().any(|b| !b.is_finite()) {
                return Err(GplmError::ScoringDivergence {
                    step: "linear step",
                    iteration: 0,
                    detail: format!("non-finite coefficients {beta:?}"),
                });
            }
        }
        Ok(beta)
    }

    /// Penalized criterion at `(β, f)`. Reuses the coefficients of the last
    /// functional iterate when `f` is that iterate.
    pub(crate) fn criterion(&mut self, beta: &[f64], f: &[f64], f_is_last_iterate: bool) -> Result<(f64, f64)> {
        self.data.x_times(beta, &mut self.xb);
        self.fill_eta(f, "criterion")?;
        let loglik: f64 = self
            .data
            .y()
            .iter()
            .zip(&self.eta)
            .map(|(&y, &e)| self.family.ell(y, e))
            .sum();
        if !(f_is_last_iterate && self.coeffs_current) {
            self.transform.forward_into(f, &mut self.coeffs)?;
            self.coeffs_current = false;
        }
        let pen = penalty_value(&self.coeffs, self.layout(), self.config.penalty.kind, self.lambda)?;
        Ok((loglik, loglik - pen))
    }
}

/// Solve `(Xᵀ W X) β = Xᵀ W z` for diagonal `W`.
pub(crate) fn weighted_least_squares(x: &DMatrix<f64>, z: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let p = x.ncols();
    let mut normal = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for a in 0..p {
        let xa = x.column(a);
        rhs[a] = xa.iter().zip(z).zip(w).map(|((&xi, &zi), &wi)| xi * wi * zi).sum();
        for b in 0..=a {
            let xb = x.column(b);
            let v: f64 = xa.iter().zip(xb.iter()).zip(w).map(|((&s, &t), &wi)| s * wi * t).sum();
            normal[(a, b)] = v;
            normal[(b, a)] = v;
        }
    }
    let chol = normal
        .cholesky()
        .ok_or_else(|| GplmError::Rank(format!("{p}x{p} weighted normal matrix is not positive definite")))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Starting point: `β = 0`, `f_i = G(y_i)` with `y_i` pulled into the mean
/// domain (`[1/(2m), 1 - 1/(2m)]` for binomial, `max(y, 1/2)` for Poisson).
pub fn initialize(data: &Dataset, family: &FamilySpec) -> (Vec<f64>, Vec<f64>) {
    let f0 = data
        .y()
        .iter()
        .map(|&y| match *family {
            FamilySpec::Gaussian { .. } => y,
            FamilySpec::Binomial { m } => {
                let eps = 0.5 / f64::from(m);
                let mu = y.clamp(eps, 1.0 - eps);
                (mu / (1.0 - mu)).ln()
            }
            FamilySpec::Poisson => y.max(0.5).ln(),
        })
        .collect();
    (f0, vec![0.0; data.p()])
}

/// Functional scoring step for fixed `β`.
pub fn functional_step(
    data: &Dataset,
    family: &FamilySpec,
    beta: &[f64],
    f_current: &[f64],
    config: &FitConfig,
) -> Result<Vec<f64>> {
    Workspace::new(data, *family, config)?.functional_step(beta, f_current)
}

/// Linear scoring step for fixed `f`.
pub fn linear_step(
    data: &Dataset,
    family: &FamilySpec,
    beta_current: &[f64],
    f: &[f64],
    config: &FitConfig,
) -> Result<Vec<f64>> {
    Workspace::new(data, *family, config)?.linear_step(beta_current, f)
}

/// `K(f, β) = Σ ℓ(y_i, X_iβ + f_i) - Pen(f)`.
pub fn criterion_value(
    data: &Dataset,
    family: &FamilySpec,
    beta: &[f64],
    f: &[f64],
    config: &FitConfig,
) -> Result<f64> {
    let mut ws = Workspace::new(data, *family, config)?;
    ws.check_len("beta", beta.len(), data.p())?;
    ws.check_len("f", f.len(), data.n())?;
    Ok(ws.criterion(beta, f, false)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{LambdaPolicy, PenaltyConfig};
    use crate::wavelet::{dwt, WaveletKind};

    fn toy_data(n: usize, p: usize) -> Dataset {
        let x = DMatrix::from_fn(n, p, |i, j| ((i * (j + 3)) as f64 * 0.37).sin() + 0.1 * j as f64);
        let y = (0..n).map(|i| (i as f64 * 0.21).cos() * 2.0 + 0.3 * i as f64 / n as f64).collect();
        Dataset::new(y, x).unwrap()
    }

    fn config(lambda: f64) -> FitConfig {
        FitConfig {
            penalty: PenaltyConfig::fixed(lambda),
            ..FitConfig::default()
        }
    }

    #[test]
    fn initialize_examples() {
        let d = Dataset::new(vec![1.0, 2.0], DMatrix::from_element(2, 1, 1.0)).unwrap();
        let (f0, b0) = initialize(&d, &FamilySpec::Gaussian { phi: 1.0 });
        assert_eq!((f0, b0), (vec![1.0, 2.0], vec![0.0]));

        let d = Dataset::new(vec![0.0, 1.0], DMatrix::from_element(2, 1, 1.0)).unwrap();
        let (f0, _) = initialize(&d, &FamilySpec::Binomial { m: 24 });
        assert!((f0[0] - (1.0f64 / 47.0).ln()).abs() < 1e-15);
        assert!((f0[0] + 3.850_147_601_710_058).abs() < 1e-12);
        assert!((f0[1] - 47f64.ln()).abs() < 1e-14);

        let (f0, _) = initialize(&d, &FamilySpec::Poisson);
        assert!((f0[0] - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(f0[1], 0.0);
    }

    #[test]
    fn zero_lambda_gaussian_interpolates() {
        let d = toy_data(64, 2);
        let fam = FamilySpec::Gaussian { phi: 1.0 };
        let beta = [0.4, -1.1];
        let f = functional_step(&d, &fam, &beta, &vec![0.3; 64], &config(0.0)).unwrap();
        let mut xb = vec![0.0; 64];
        d.x_times(&beta, &mut xb);
        for i in 0..64 {
            assert!((f[i] - (d.y()[i] - xb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_functional_step_is_soft_thresholded_residual() {
        let d = toy_data(128, 1);
        let fam = FamilySpec::Gaussian { phi: 1.0 };
        let cfg = config(0.8);
        let beta = [0.7];
        let f = functional_step(&d, &fam, &beta, &vec![0.0; 128], &cfg).unwrap();
        let resid: Vec<f64> = (0..128).map(|i| d.y()[i] - d.x()[(i, 0)] * 0.7).collect();
        let filter = WaveletFilter::new(WaveletKind::Symmlet8);
        let c = dwt(&resid, &filter, 3).unwrap();
        let fc = dwt(&f, &filter, 3).unwrap();
        for (i, (&a, &b)) in c.values().iter().zip(fc.values()).enumerate() {
            let expected = if i < 8 { a } else { soft_threshold(a, 0.8) };
            assert!((b - expected).abs() < 1e-12, "index {i}");
        }
    }

    #[test]
    fn coarse_truth_is_recovered_without_details() {
        // noiseless data whose f lives in the scaling block (j0 = 3 -> 8 coarse
        // coefficients); any positive lambda leaves zero detail coefficients
        let n = 64;
        let filter = WaveletFilter::new(WaveletKind::Daubechies4);
        let layout = CoefficientLayout::new(n, 3).unwrap();
        let mut t = WaveletTransform::new(filter.clone(), layout);
        let mut coarse = vec![0.0; n];
        for (k, c) in coarse.iter_mut().take(8).enumerate() {
            *c = (k as f64 - 3.5) * 0.9;
        }
        let mut f0 = vec![0.0; n];
        t.inverse_into(&coarse, &mut f0).unwrap();
        let x = DMatrix::from_fn(n, 1, |i, _| (i as f64 * 1.3).sin());
        let beta0 = 2.0;
        let y: Vec<f64> = (0..n).map(|i| x[(i, 0)] * beta0 + f0[i]).collect();
        let d = Dataset::new(y, x).unwrap();
        let mut cfg = config(0.05);
        cfg.filter = WaveletKind::Daubechies4;
        cfg.penalty.coarse_level = Some(3);
        let f = functional_step(&d, &FamilySpec::Gaussian { phi: 1.0 }, &[beta0], &vec![0.0; n], &cfg).unwrap();
        let fc = dwt(&f, &filter, 3).unwrap();
        assert!(fc.details().iter().all(|&c| c.abs() < 1e-12));
        for (a, b) in fc.scaling().iter().zip(&coarse[..8]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_linear_step_is_ols() {
        let d = toy_data(64, 3);
        let fam = FamilySpec::Gaussian { phi: 1.0 };
        let f: Vec<f64> = (0..64).map(|i| (i as f64 / 10.0).sin()).collect();
        let beta = linear_step(&d, &fam, &[5.0, -2.0, 1.0], &f, &config(1.0)).unwrap();
        // OLS through QR as the oracle
        let resid = DVector::from_iterator(64, d.y().iter().zip(&f).map(|(y, f)| y - f));
        let qr = d.x().clone().qr();
        let ols = qr.r().solve_upper_triangular(&(qr.q().transpose() * resid)).unwrap();
        for (a, b) in beta.iter().zip(ols.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_linear_model_returns_truth() {
        let n = 32;
        let x = DMatrix::from_fn(n, 2, |i, j| (i as f64 + 1.0).powf(0.5 + j as f64 * 0.3).sin());
        let f: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let y: Vec<f64> = (0..n).map(|i| x[(i, 0)] * 1.5 - 0.25 * x[(i, 1)] + f[i]).collect();
        let d = Dataset::new(y, x).unwrap();
        let beta = linear_step(&d, &FamilySpec::Gaussian { phi: 1.0 }, &[0.0, 0.0], &f, &config(1.0)).unwrap();
        assert!((beta[0] - 1.5).abs() < 1e-12 && (beta[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn poisson_linear_step_converges_to_score_root() {
        // p = 1, f = 0: iterate the linear step and compare with a bisection
        // root of Σ (y_i - exp(x_i β)) x_i = 0
        let n = 64;
        let x = DMatrix::from_fn(n, 1, |i, _| ((i as f64) * 0.77).sin());
        let y: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64).collect();
        let d = Dataset::new(y.clone(), x.clone()).unwrap();
        let fam = FamilySpec::Poisson;
        let mut beta = vec![0.0];
        let f = vec![0.0; n];
        let cfg = config(0.0);
        for _ in 0..100 {
            beta = linear_step(&d, &fam, &beta, &f, &cfg).unwrap();
        }
        let score = |b: f64| -> f64 { (0..n).map(|i| (y[i] - (x[(i, 0)] * b).exp()) * x[(i, 0)]).sum() };
        let (mut lo, mut hi) = (-5.0, 5.0);
        assert!(score(lo) > 0.0 && score(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((beta[0] - 0.5 * (lo + hi)).abs() < 1e-8);
    }

    #[test]
    fn singular_design_is_rank_error() {
        let n = 16;
        let x = DMatrix::from_fn(n, 2, |i, _| i as f64);
        let d = Dataset::new(vec![1.0; n], x).unwrap();
        let r = linear_step(&d, &FamilySpec::Gaussian { phi: 1.0 }, &[0.0, 0.0], &vec![0.0; n], &config(1.0));
        assert!(matches!(r, Err(GplmError::Rank(_))));
    }

    #[test]
    fn shrinkage_is_monotone_in_lambda() {
        let d = toy_data(128, 1);
        let fam = FamilySpec::Gaussian { phi: 1.0 };
        let filter = WaveletFilter::new(WaveletKind::Symmlet8);
        let mut prev: Option<Vec<f64>> = None;
        for lambda in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let f = functional_step(&d, &fam, &[0.2], &vec![0.0; 128], &config(lambda)).unwrap();
            let c = dwt(&f, &filter, 3).unwrap().details().to_vec();
            if let Some(p) = &prev {
                for (a, b) in c.iter().zip(p) {
                    assert!(a.abs() <= b.abs() + 1e-12);
                }
            }
            prev = Some(c);
        }
    }

    #[test]
    fn sobolev_step_shrinks_per_level() {
        let d = toy_data(64, 1);
        let fam = FamilySpec::Gaussian { phi: 1.0 };
        let mut cfg = config(0.01);
        cfg.penalty.kind = PenaltyKind::SobolevQuadratic { s: 1.0 };
        let f = functional_step(&d, &fam, &[0.0], &vec![0.0; 64], &cfg).unwrap();
        let filter = WaveletFilter::new(WaveletKind::Symmlet8);
        let c_in = dwt(d.y(), &filter, 3).unwrap();
        let c_out = dwt(&f, &filter, 3).unwrap();
        assert_eq!(c_in.scaling().len(), 8);
        for (a, b) in c_in.scaling().iter().zip(c_out.scaling()) {
            assert!((a - b).abs() < 1e-12);
        }
        for j in 3..6 {
            let factor = 1.0 / (1.0 + 0.01 * 4f64.powi(j as i32));
            for (a, b) in c_in.detail(j).iter().zip(c_out.detail(j)) {
                assert!((a * factor - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sup_bound_clamps() {
        let d = toy_data(64, 1);
        let mut cfg = config(0.0);
        cfg.sup_bound = Some(0.5);
        let f = functional_step(&d, &FamilySpec::Gaussian { phi: 1.0 }, &[0.0], &vec![0.0; 64], &cfg).unwrap();
        assert!(f.iter().all(|v| v.abs() <= 0.5));
        assert!(f.iter().any(|v| v.abs() == 0.5));
    }

    #[test]
    fn criterion_of_constant_f_has_no_penalty() {
        let d = toy_data(64, 1);
        let fam = FamilySpec::Gaussian { phi: 1.0 };
        let cfg = config(2.0);
        let k_const = criterion_value(&d, &fam, &[0.3], &vec![1.1; 64], &cfg).unwrap();
        let loglik: f64 = (0..64)
            .map(|i| fam.loglik(d.y()[i], d.x()[(i, 0)] * 0.3 + 1.1).unwrap())
            .sum();
        assert!((k_const - loglik).abs() < 1e-9);
        let k_zero = criterion_value(&d, &fam, &[0.3], &vec![0.0; 64], &cfg).unwrap();
        let loglik0: f64 = (0..64).map(|i| fam.loglik(d.y()[i], d.x()[(i, 0)] * 0.3).unwrap()).sum();
        assert!((k_zero - loglik0).abs() < 1e-12);
    }

    #[test]
    fn policy_resolution() {
        let cfg = FitConfig::default();
        assert_eq!(cfg.penalty.lambda, LambdaPolicy::Universal);
        let fam = FamilySpec::Poisson;
        assert_eq!(cfg.penalty.resolve_lambda(&fam, 256), crate::estimator::universal_lambda(&fam, 256));
    }
}
