use serde::{Deserialize, Serialize};

use crate::criteria::pred::{SeqScorer, SeqVariant};
use crate::design::{distance, Design};
use crate::error::{Error, Result};
use crate::gp::{ml_fit_theta, sample_with_factor, sampling_factor, MlFit, Predictor};
use crate::kernels::ModelPair;
use crate::rng::{standard_normals, Rng};

/// Settings of one sequential run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialConfig {
    /// Model generating the data.
    pub truth: usize,
    pub n_max: usize,
    /// Refit both inverse lengths by maximum likelihood at every step.
    pub estimate: bool,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub min_distance: f64,
}

impl Default for SequentialConfig {
    fn default() -> Self {
        Self {
            truth: 0,
            n_max: 50,
            estimate: true,
            theta_lo: 0.1,
            theta_hi: 10.0,
            min_distance: 0.0,
        }
    }
}

/// Fitted parameters of both models on the first `n` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFit {
    pub n: usize,
    pub fit0: MlFit,
    pub fit1: MlFit,
}

impl StepFit {
    /// `ℓ₁ − ℓ₀` at the fitted parameters.
    pub fn log_likelihood_ratio(&self) -> f64 {
        self.fit1.log_likelihood - self.fit0.log_likelihood
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialRun {
    /// Points in order of selection, with their observations.
    pub design: Design,
    /// Candidate index of each point after the initial ones.
    pub chosen: Vec<usize>,
    /// Symmetric-KL score each chosen point was selected with.
    pub scores: Vec<f64>,
    /// One entry per design size `2..=n_max` when estimating.
    pub fits: Vec<StepFit>,
    /// Steps whose fit failed and reused the previous estimates.
    pub fit_failures: usize,
}

impl SequentialRun {
    pub fn fit_at(&self, n: usize) -> Option<&StepFit> {
        self.fits.iter().find(|f| f.n == n)
    }
}

/// Runs the observation-driven design loop: refit, score every candidate by
/// the symmetric KL score, add the best one, and observe it by sampling from
/// the true model conditionally on the data so far.
///
/// The random draws are two for the initial points and one per step, so a run
/// to `n_max` passes through exactly the states of any shorter run.
pub fn sequential_run(
    pair: &ModelPair,
    candidates: &Design,
    initial: &Design,
    config: &SequentialConfig,
    rng: &mut Rng,
) -> Result<SequentialRun> {
    pair.validate()?;
    if config.truth > 1 {
        return Err(Error::InvalidParameter {
            name: "truth",
            value: config.truth as f64,
            reason: "must be 0 or 1",
        });
    }
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if initial.is_empty() {
        return Err(Error::EmptyDesign);
    }
    if config.n_max < initial.len() {
        return Err(Error::InvalidParameter {
            name: "n_max",
            value: config.n_max as f64,
            reason: "smaller than the initial design",
        });
    }
    let truth = *pair.kernel(config.truth);
    let y0 = sample_with_factor(&sampling_factor(&truth, initial)?, rng);
    let mut design = initial.clone().with_observations(y0)?;
    let mut chosen = Vec::new();
    let mut scores = Vec::new();
    let mut fits = Vec::new();
    let mut fit_failures = 0;
    let mut current = *pair;

    loop {
        let n = design.len();
        if config.estimate {
            let f0 = ml_fit_theta(&pair.k0, &design, config.theta_lo, config.theta_hi);
            let f1 = ml_fit_theta(&pair.k1, &design, config.theta_lo, config.theta_hi);
            match (f0, f1) {
                (Ok(f0), Ok(f1)) => {
                    current.k0 = f0.spec(&pair.k0);
                    current.k1 = f1.spec(&pair.k1);
                    fits.push(StepFit { n, fit0: f0, fit1: f1 });
                }
                _ => {
                    fit_failures += 1;
                    if let Some(prev) = fits.last().copied() {
                        fits.push(StepFit { n, ..prev });
                    }
                }
            }
        }
        if n >= config.n_max {
            break;
        }

        let scorer = SeqScorer::new(&current, &design)?;
        let mut best: Option<(usize, f64)> = None;
        for (c, x) in candidates.points().enumerate() {
            if design.points().any(|p| distance(p, x) <= config.min_distance) {
                continue;
            }
            if let Ok(s) = scorer.score(x, SeqVariant::SymKl) {
                if s.is_finite() && best.map_or(true, |(_, b)| s > b) {
                    best = Some((c, s));
                }
            }
        }
        let (c, s) = best.ok_or(Error::NoFeasibleCandidate)?;
        let x = candidates.point(c).to_vec();
        let truth_pred = Predictor::new(truth, design.clone())?;
        let (mean, var) = truth_pred.predict(&x)?;
        let y = mean + var.sqrt() * standard_normals(rng, 1)[0];
        design.push(&x, Some(y))?;
        chosen.push(c);
        scores.push(s);
    }

    Ok(SequentialRun {
        design,
        chosen,
        scores,
        fits,
        fit_failures,
    })
}
