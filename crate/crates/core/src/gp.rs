//! Gaussian-process prediction, cross-model errors, likelihoods, sampling
//! and maximum-likelihood fitting of the inverse correlation length.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{positive, Error, Result};
use crate::kernels::{kernel_matrix, kernel_vector, KernelFamily, KernelSpec, ModelPair};
use crate::linalg::Cholesky;
use crate::optimize::{log_space, scan_then_golden_max};
use crate::rng::{standard_normals, Rng};

/// Relative floor below which a predictive variance is treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Factorised kernel matrix of one model on one design.
#[derive(Clone, Debug)]
pub struct Predictor {
    spec: KernelSpec,
    design: Design,
    chol: Cholesky,
    coef: Option<DVector<f64>>,
}

impl Predictor {
    /// Factorises `K` on `design`; an empty design is allowed and predicts
    /// with the prior. Observations, when present, are pre-solved.
    pub fn new(spec: KernelSpec, design: Design) -> Result<Self> {
        let k = kernel_matrix(&spec, &design)?;
        let chol = Cholesky::new(&k)?;
        let coef = design
            .observations()
            .map(|y| chol.solve(&DVector::from_column_slice(y)));
        Ok(Self {
            spec,
            design,
            chol,
            coef,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    fn k_vec(&self, x: &[f64]) -> Result<DVector<f64>> {
        if self.design.is_empty() {
            return Ok(DVector::zeros(0));
        }
        kernel_vector(&self.spec, &self.design, x)
    }

    /// `K⁻¹k(x)`, the BLUP weights.
    pub fn weights(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.chol.solve(&self.k_vec(x)?))
    }

    /// `k(x)ᵀK⁻¹Y`.
    pub fn blup(&self, x: &[f64]) -> Result<f64> {
        if self.design.is_empty() {
            return Ok(0.0);
        }
        let coef = self.coef.as_ref().ok_or(Error::MissingObservations)?;
        Ok(self.k_vec(x)?.dot(coef))
    }

    /// `ρ²(x) = K(x,x) − k(x)ᵀK⁻¹k(x)`, clamped at zero.
    pub fn pred_var(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.design.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.design.dim(),
                got: x.len(),
            });
        }
        let k = self.k_vec(x)?;
        Ok(clamp_var(self.spec.variance() - self.chol.inv_quad(&k)))
    }

    /// BLUP mean and predictive variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok((self.blup(x)?, self.pred_var(x)?))
    }
}

fn clamp_var(v: f64) -> f64 {
    v.max(0.0)
}

/// The four mean-squared errors `E_t{e_p²(x)}` for truth `t` and predictor
/// `p`, plus `dᵀK₀d` and `dᵀK₁d` where `d` is the difference of the two
/// BLUP weight vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossMse {
    pub e00: f64,
    pub e01: f64,
    pub e10: f64,
    pub e11: f64,
    pub dk0d: f64,
    pub dk1d: f64,
}

impl CrossMse {
    /// `E_truth{e_predictor²}`.
    pub fn get(&self, truth: usize, predictor: usize) -> f64 {
        match (truth, predictor) {
            (0, 0) => self.e00,
            (0, _) => self.e01,
            (_, 0) => self.e10,
            _ => self.e11,
        }
    }
}

/// Both models factorised on the same design.
#[derive(Clone, Debug)]
pub struct PairPredictor {
    pair: ModelPair,
    k0: DMatrix<f64>,
    k1: DMatrix<f64>,
    p0: Predictor,
    p1: Predictor,
}

impl PairPredictor {
    pub fn new(pair: &ModelPair, design: &Design) -> Result<Self> {
        pair.validate()?;
        let design = design.clone().without_observations();
        let p0 = Predictor::new(pair.k0, design.clone())?;
        let p1 = Predictor::new(pair.k1, design.clone())?;
        Ok(Self {
            pair: *pair,
            k0: kernel_matrix(&pair.k0, &design)?,
            k1: kernel_matrix(&pair.k1, &design)?,
            p0,
            p1,
        })
    }

    pub fn pair(&self) -> &ModelPair {
        &self.pair
    }

    pub fn predictor(&self, i: usize) -> &Predictor {
        if i == 0 {
            &self.p0
        } else {
            &self.p1
        }
    }

    pub fn kernel_matrix(&self, i: usize) -> &DMatrix<f64> {
        if i == 0 {
            &self.k0
        } else {
            &self.k1
        }
    }

    /// Cross-model errors at `x`, written as `E_t{e_p²} = E_t{e_t²} + dᵀK_t d`
    /// so that the difference never suffers cancellation.
    pub fn cross_mse(&self, x: &[f64]) -> Result<CrossMse> {
        let k0 = self.p0.k_vec(x)?;
        let k1 = self.p1.k_vec(x)?;
        let a0 = self.p0.chol.solve(&k0);
        let a1 = self.p1.chol.solve(&k1);
        let e00 = clamp_var(self.pair.k0.variance() - k0.dot(&a0));
        let e11 = clamp_var(self.pair.k1.variance() - k1.dot(&a1));
        let d = &a1 - &a0;
        let dk0d = (&self.k0 * &d).dot(&d).max(0.0);
        let dk1d = (&self.k1 * &d).dot(&d).max(0.0);
        Ok(CrossMse {
            e00,
            e01: e00 + dk0d,
            e10: e11 + dk1d,
            e11,
            dk0d,
            dk1d,
        })
    }
}

/// `E_truth{e_predictor²(x)}` written out in full:
/// `K_t(x,x) + k_pᵀK_p⁻¹K_tK_p⁻¹k_p − 2k_pᵀK_p⁻¹k_t`.
pub fn cross_mse(pair: &ModelPair, design: &Design, truth: usize, predictor: usize, x: &[f64]) -> Result<f64> {
    if truth > 1 || predictor > 1 {
        return Err(Error::InvalidParameter {
            name: "model index",
            value: truth.max(predictor) as f64,
            reason: "must be 0 or 1",
        });
    }
    let kt = pair.kernel(truth);
    let kp = pair.kernel(predictor);
    let vt = kt.variance();
    if design.is_empty() {
        return Ok(vt);
    }
    let design = design.clone().without_observations();
    let p = Predictor::new(*kp, design.clone())?;
    let a = p.weights(x)?;
    let big_kt = kernel_matrix(kt, &design)?;
    let k_t = kernel_vector(kt, &design, x)?;
    Ok(clamp_var(vt + (&big_kt * &a).dot(&a) - 2.0 * a.dot(&k_t)))
}

/// `−(n/2)log 2π − ½ log det K − ½ YᵀK⁻¹Y`.
pub fn log_likelihood(spec: &KernelSpec, design: &Design) -> Result<f64> {
    let y = design.observations().ok_or(Error::MissingObservations)?;
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let chol = Cholesky::new(&kernel_matrix(spec, design)?)?;
    Ok(gaussian_log_density(&chol, y))
}

pub(crate) fn gaussian_log_density(chol: &Cholesky, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let q = chol.inv_quad(&DVector::from_column_slice(y));
    -0.5 * n * (2.0 * PI).ln() - 0.5 * chol.log_det() - 0.5 * q
}

/// Factor used for sampling: plain Cholesky, or once with `1e-10·K(x,x)`
/// added to the diagonal.
pub fn sampling_factor(spec: &KernelSpec, design: &Design) -> Result<Cholesky> {
    let mut k = kernel_matrix(spec, design)?;
    match Cholesky::new(&k) {
        Ok(c) => Ok(c),
        Err(_) => {
            let jitter = 1e-10 * spec.variance();
            for i in 0..k.nrows() {
                k[(i, i)] += jitter;
            }
            Cholesky::new(&k)
        }
    }
}

/// `Y = Lz` with `z` standard normal.
pub fn sample_with_factor(chol: &Cholesky, rng: &mut Rng) -> Vec<f64> {
    let z = DVector::from_vec(standard_normals(rng, chol.dim()));
    (chol.l() * z).as_slice().to_vec()
}

/// One draw of the zero-mean field on `design`.
pub fn sample(spec: &KernelSpec, design: &Design, rng: &mut Rng) -> Result<Vec<f64>> {
    Ok(sample_with_factor(&sampling_factor(spec, design)?, rng))
}

/// Result of a profile-likelihood fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlFit {
    /// Fitted inverse length (`θ̂` or `α̂`).
    pub inverse_length: f64,
    /// Profiled variance `YᵀC⁻¹Y/n`.
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub at_boundary: bool,
}

impl MlFit {
    /// `template` with the fitted parameters substituted.
    pub fn spec(&self, template: &KernelSpec) -> KernelSpec {
        template
            .with_inverse_length(self.inverse_length)
            .with_variance(self.sigma2)
    }
}

const ML_GRID: usize = 30;
const ML_TOL: f64 = 1e-5;

/// Profile log-likelihood in the inverse length, `σ²` maximised out.
/// Returns `(loglik, σ̂²)`; `−inf` when the correlation matrix is singular.
pub fn profile_log_likelihood(template: &KernelSpec, design: &Design, inverse_length: f64) -> Result<(f64, f64)> {
    let y = design.observations().ok_or(Error::MissingObservations)?;
    let spec = template.with_inverse_length(inverse_length).with_variance(1.0);
    let chol = match Cholesky::new(&kernel_matrix(&spec, design)?) {
        Ok(c) => c,
        Err(Error::NotPositiveDefinite { .. }) => return Ok((f64::NEG_INFINITY, f64::NAN)),
        Err(e) => return Err(e),
    };
    let n = y.len() as f64;
    let s2 = chol.inv_quad(&DVector::from_column_slice(y)) / n;
    if !(s2 > 0.0) {
        return Ok((f64::NEG_INFINITY, s2));
    }
    let ll = -0.5 * n * ((2.0 * PI).ln() + s2.ln() + 1.0) - 0.5 * chol.log_det();
    Ok((ll, s2))
}

/// Maximum-likelihood inverse length in `[lo, hi]`: a 30-point log grid,
/// then golden section on `log θ` to relative tolerance `1e-5`.
pub fn ml_fit_theta(template: &KernelSpec, design: &Design, lo: f64, hi: f64) -> Result<MlFit> {
    if template.family == KernelFamily::ExponentialScaled {
        return Err(Error::UnsupportedFamily(template.family.name()));
    }
    positive("lo", lo)?;
    positive("hi", hi)?;
    if lo >= hi {
        return Err(Error::InvalidParameter {
            name: "hi",
            value: hi,
            reason: "upper bound must exceed lower bound",
        });
    }
    if design.observations().is_none() {
        return Err(Error::MissingObservations);
    }
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let grid: Vec<f64> = log_space(lo, hi, ML_GRID).iter().map(|t| t.ln()).collect();
    let mut failure = None;
    let mut objective = |lt: f64| match profile_log_likelihood(template, design, lt.exp()) {
        Ok((ll, _)) => ll,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let r = scan_then_golden_max(&mut objective, &grid, ML_TOL);
    if let Some(e) = failure {
        return Err(e);
    }
    if !r.value.is_finite() {
        return Err(Error::FitFailed);
    }
    let theta = r.x.exp();
    let (ll, s2) = profile_log_likelihood(template, design, theta)?;
    Ok(MlFit {
        inverse_length: theta,
        sigma2: s2,
        log_likelihood: ll,
        at_boundary: r.at_boundary,
    })
}
