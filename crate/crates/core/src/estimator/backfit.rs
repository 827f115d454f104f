use crate::error::Result;
use crate::expfam::FamilySpec;

use super::steps::{initialize, Workspace};
use super::{Dataset, FitConfig, GplmError, GplmFit};

/// State after one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub beta_step: f64,
    pub loglik: f64,
    pub criterion: f64,
    pub converged: bool,
}

/// Outer backfitting loop, exposed one iteration at a time.
pub struct Backfitter<'a> {
    ws: Workspace<'a>,
    beta: Vec<f64>,
    f: Vec<f64>,
    iteration: usize,
    trace: Vec<f64>,
    criterion_trace: Vec<f64>,
    last_loglik: f64,
    relax_f: Relaxation,
    decreases: usize,
    converged: bool,
}

/// Criterion drops smaller than this, relative to `max(1, |K|)`, are drift
/// rather than divergence and do not count towards the divergence window.
const DECREASE_RTOL: f64 = 1e-6;

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Persistent relaxation factor of one block of unknowns.
#[derive(Debug, Clone, Copy)]
struct Relaxation {
    omega: f64,
    halvings_left: usize,
    last_step: f64,
}

impl Relaxation {
    fn new(budget: usize) -> Self {
        Self {
            omega: 1.0,
            halvings_left: budget,
            last_step: f64::INFINITY,
        }
    }

    /// Replace `proposal` by `current + ω (proposal - current)`, halving `ω`
    /// while the step would outgrow the previous one.
    fn apply(&mut self, current: &[f64], proposal: &mut [f64]) {
        let full = norm(proposal.iter().zip(current).map(|(p, c)| p - c));
        while self.halvings_left > 0 && self.omega * full > self.last_step {
            self.omega *= 0.5;
            self.halvings_left -= 1;
        }
        if self.omega != 1.0 {
            for (p, &c) in proposal.iter_mut().zip(current) {
                *p = c + self.omega * (*p - c);
            }
        }
        self.last_step = self.omega * full;
    }
}

impl<'a> Backfitter<'a> {
    pub fn new(data: &'a Dataset, family: &FamilySpec, config: &'a FitConfig) -> Result<Self> {
        let ws = Workspace::new(data, *family, config)?;
        let (f0, beta0) = initialize(data, family);
        let f = if config.estimate_function {
            f0
        } else {
            vec![0.0; data.n()]
        };
        Ok(Self {
            ws,
            beta: beta0,
            f,
            iteration: 0,
            trace: Vec::new(),
            criterion_trace: Vec::new(),
            last_loglik: f64::NAN,
            relax_f: Relaxation::new(config.relaxation_halvings),
            decreases: 0,
            converged: false,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn lambda(&self) -> f64 {
        self.ws.lambda
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// True once the stopping rule is met or `κ` iterations have run.
    pub fn finished(&self) -> bool {
        self.converged || self.iteration >= self.ws.config.kappa
    }

    /// Run one outer iteration: functional step, then linear step.
    pub fn iterate(&mut self) -> Result<IterationRecord> {
        let k = self.iteration + 1;
        self.iterate_inner().map_err(|e| e.at_iteration(k))
    }

    fn iterate_inner(&mut self) -> Result<IterationRecord> {
        let estimate_function = self.ws.config.estimate_function;
        if estimate_function {
            let mut f = self.ws.functional_step(&self.beta, &self.f)?;
            self.relax_f.apply(&self.f, &mut f);
            self.f = f;
        }
        let beta = self.ws.linear_step(&self.beta, &self.f)?;
        let beta_step = norm(beta.iter().zip(&self.beta).map(|(a, b)| a - b));
        let previous_norm = norm(self.beta.iter().copied());
        self.beta = beta;
        self.iteration += 1;

        let f_exact = estimate_function && self.relax_f.omega == 1.0;
        let (loglik, criterion) = self.ws.criterion(&self.beta, &self.f, f_exact)?;
        // a falling criterion only counts while the iteration is not settling
        if let (Some(&previous), Some(&last_step)) = (self.criterion_trace.last(), self.trace.last()) {
            let drop = previous - criterion;
            if drop > DECREASE_RTOL * previous.abs().max(1.0) && beta_step >= last_step {
                self.decreases += 1;
            } else {
                self.decreases = 0;
            }
        }
        self.trace.push(beta_step);
        self.criterion_trace.push(criterion);
        self.last_loglik = loglik;
        let window = self.ws.config.divergence_window;
        if window > 0 && self.decreases >= window {
            return Err(GplmError::CriterionDecrease {
                iteration: self.iteration,
                consecutive: self.decreases,
            });
        }
        self.converged = beta_step <= self.ws.config.delta * previous_norm;
        Ok(IterationRecord {
            iteration: self.iteration,
            beta_step,
            loglik,
            criterion,
            converged: self.converged,
        })
    }

    /// Iterate until the stopping rule or the iteration cap.
    pub fn run(mut self) -> Result<GplmFit> {
        while !self.finished() {
            self.iterate()?;
        }
        let final_criterion = self.criterion_trace.last().copied().unwrap_or(f64::NAN);
        Ok(GplmFit {
            beta: self.beta,
            f_hat: self.f,
            iterations: self.iteration,
            converged: self.converged,
            lambda: self.ws.lambda,
            final_loglik: self.last_loglik,
            final_criterion,
            trace: self.trace,
            criterion_trace: self.criterion_trace,
        })
    }
}

/// Fit the partially linear model by backfitting.
pub fn backfit(data: &Dataset, family: &FamilySpec, config: &FitConfig) -> Result<GplmFit> {
    Backfitter::new(data, family, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::PenaltyConfig;
    use nalgebra::DMatrix;

    fn data() -> Dataset {
        let n = 64;
        let x = DMatrix::from_fn(n, 1, |i, _| ((i * 13 % 7) as f64 - 3.0) * 0.4);
        let y = (0..n)
            .map(|i| x[(i, 0)] * 1.3 + (i as f64 / 9.0).sin() + ((i * 31 % 11) as f64 - 5.0) * 0.05)
            .collect();
        Dataset::new(y, x).unwrap()
    }

    #[test]
    fn one_iteration_cap() {
        let d = data();
        let cfg = FitConfig {
            kappa: 1,
            penalty: PenaltyConfig::fixed(0.5),
            ..FitConfig::default()
        };
        let fit = backfit(&d, &FamilySpec::Gaussian { phi: 1.0 }, &cfg).unwrap();
        assert_eq!(fit.iterations, 1);
        assert_eq!(fit.trace.len(), 1);
        // from beta = 0 the first step cannot satisfy the relative rule
        assert!(!fit.converged);
    }

    #[test]
    fn gaussian_fit_converges_and_is_deterministic() {
        let d = data();
        let cfg = FitConfig {
            penalty: PenaltyConfig::fixed(0.3),
            ..FitConfig::default()
        };
        let fam = FamilySpec::Gaussian { phi: 1.0 };
        let a = backfit(&d, &fam, &cfg).unwrap();
        let b = backfit(&d, &fam, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.converged, "iterations {}", a.iterations);
        assert!(a.iterations <= cfg.kappa);
        assert_eq!(*a.trace.last().unwrap(), 0.0);
    }

    #[test]
    fn iteration_errors_carry_index() {
        let n = 16;
        let x = DMatrix::from_fn(n, 2, |i, _| i as f64);
        let d = Dataset::new(vec![0.5; n], x).unwrap();
        let err = backfit(&d, &FamilySpec::Gaussian { phi: 1.0 }, &FitConfig::default()).unwrap_err();
        assert!(err.to_string().contains("outer iteration 1"), "{err}");
    }
}
