//! Prediction-based scores for the next design point.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{Design, DesignSpace};
use crate::error::{Error, Result};
use crate::gp::{CrossMse, PairPredictor, Predictor, VARIANCE_FLOOR};
use crate::kernels::{kernel_vector, ModelPair};
use crate::linalg::Cholesky;

/// The sequential scores built from the two conditional predictive laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqVariant {
    /// `ρ₀²/ρ₁² + ρ₁²/ρ₀² + (η̂₁−η̂₀)²(1/ρ₀² + 1/ρ₁²)`
    SymKl,
    /// `(η̂₁−η̂₀)²`
    Diff,
    /// `(η̂₁−η̂₀)²/(ρ₀² + ρ₁²)`
    NormDiff,
    /// `(η̂₁−η̂₀)²(1/ρ₀² + 1/ρ₁²)`
    WeightedDiff,
}

/// Both conditional predictors on a design carrying observations.
#[derive(Clone, Debug)]
pub struct SeqScorer {
    p0: Predictor,
    p1: Predictor,
}

impl SeqScorer {
    pub fn new(pair: &ModelPair, design: &Design) -> Result<Self> {
        pair.validate()?;
        if design.observations().is_none() {
            return Err(Error::MissingObservations);
        }
        Ok(Self {
            p0: Predictor::new(pair.k0, design.clone())?,
            p1: Predictor::new(pair.k1, design.clone())?,
        })
    }

    pub fn score(&self, x: &[f64], variant: SeqVariant) -> Result<f64> {
        let (m0, v0) = self.p0.predict(x)?;
        let (m1, v1) = self.p1.predict(x)?;
        let diff2 = (m1 - m0).powi(2);
        if variant == SeqVariant::Diff {
            return Ok(diff2);
        }
        if v0 <= VARIANCE_FLOOR * self.p0.spec().variance() || v1 <= VARIANCE_FLOOR * self.p1.spec().variance() {
            return Err(Error::DegenerateVariance);
        }
        Ok(match variant {
            SeqVariant::SymKl => v0 / v1 + v1 / v0 + diff2 * (1.0 / v0 + 1.0 / v1),
            SeqVariant::NormDiff => diff2 / (v0 + v1),
            SeqVariant::WeightedDiff => diff2 * (1.0 / v0 + 1.0 / v1),
            SeqVariant::Diff => unreachable!(),
        })
    }
}

pub fn seq_score(pair: &ModelPair, design: &Design, x: &[f64], variant: SeqVariant) -> Result<f64> {
    SeqScorer::new(pair, design)?.score(x, variant)
}

/// `φ_A`, `φ_B` and `φ_KL` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointScores {
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_kl: f64,
}

impl PointScores {
    /// Assembles the three scores. Where both predictive variances vanish
    /// (a design point) every score is 0; if only one does, the normalised
    /// scores are undefined.
    pub fn from_mse(m: &CrossMse, var0: f64, var1: f64) -> Result<Self> {
        let z0 = m.e00 <= VARIANCE_FLOOR * var0;
        let z1 = m.e11 <= VARIANCE_FLOOR * var1;
        if z0 && z1 {
            return Ok(Self {
                phi_a: 0.0,
                phi_b: 0.0,
                phi_kl: 0.0,
            });
        }
        let phi_a = m.dk0d + m.dk1d;
        if z0 || z1 {
            return Err(Error::DegenerateVariance);
        }
        let phi_b = m.dk0d / m.e00 + m.dk1d / m.e11;
        // ½(r + 1/r) − 1 = (r − 1)²/2r with r = e11/e00
        let phi_kl = 0.5 * (m.e11 - m.e00).powi(2) / (m.e00 * m.e11) + 0.5 * phi_b_swapped(m);
        Ok(Self { phi_a, phi_b, phi_kl })
    }

    pub fn get(&self, criterion: &crate::criteria::CriterionId) -> Option<f64> {
        use crate::criteria::CriterionId::*;
        match criterion {
            PhiA => Some(self.phi_a),
            PhiB => Some(self.phi_b),
            PhiKlPoint => Some(self.phi_kl),
            _ => None,
        }
    }
}

fn phi_b_swapped(m: &CrossMse) -> f64 {
    m.dk1d / m.e00 + m.dk0d / m.e11
}

/// Precomputed state for scoring many candidate points against one design.
#[derive(Clone, Debug)]
pub struct PointScorer {
    inner: PairPredictor,
}

impl PointScorer {
    pub fn new(pair: &ModelPair, design: &Design) -> Result<Self> {
        Ok(Self {
            inner: PairPredictor::new(pair, design)?,
        })
    }

    pub fn cross_mse(&self, x: &[f64]) -> Result<CrossMse> {
        self.inner.cross_mse(x)
    }

    pub fn scores(&self, x: &[f64]) -> Result<PointScores> {
        let pair = self.inner.pair();
        PointScores::from_mse(&self.inner.cross_mse(x)?, pair.k0.variance(), pair.k1.variance())
    }
}

/// `E₀{(e₁−e₀)²} + E₁{(e₁−e₀)²}`.
pub fn phi_a(pair: &ModelPair, design: &Design, x: &[f64]) -> Result<f64> {
    Ok(PointScorer::new(pair, design)?.scores(x)?.phi_a)
}

/// `E₀{e₁²}/E₀{e₀²} + E₁{e₀²}/E₁{e₁²} − 2`.
pub fn phi_b(pair: &ModelPair, design: &Design, x: &[f64]) -> Result<f64> {
    Ok(PointScorer::new(pair, design)?.scores(x)?.phi_b)
}

/// `½[E₁{e₀²}/E₀{e₀²} + E₀{e₁²}/E₁{e₁²}] − 1`.
pub fn phi_kl_point(pair: &ModelPair, design: &Design, x: &[f64]) -> Result<f64> {
    Ok(PointScorer::new(pair, design)?.scores(x)?.phi_kl)
}

/// A weighted point set standing in for an integrating measure `μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub points: Design,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn new(points: Design, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite);
        }
        Ok(Self { points, weights })
    }

    /// Tensor midpoint rule with `m` cells per coordinate, total mass 1.
    pub fn midpoint(space: &DesignSpace, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyCandidates);
        }
        let d = space.dim();
        let total = m.pow(d as u32);
        let mut coords = Vec::with_capacity(total * d);
        for flat in 0..total {
            let mut rest = flat;
            let mut p = vec![0.0; d];
            for k in (0..d).rev() {
                let i = rest % m;
                rest /= m;
                let (lo, hi) = (space.lower()[k], space.upper()[k]);
                p[k] = lo + (i as f64 + 0.5) * (hi - lo) / m as f64;
            }
            coords.extend(p);
        }
        Self::new(Design::new(d, coords)?, vec![1.0 / total as f64; total])
    }
}

/// `∫φ_A dμ`, split into the parts computed under each true model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratedPhiA {
    pub under0: f64,
    pub under1: f64,
    pub total: f64,
}

/// `∫φ_A dμ` through `A_i(μ) = Σ w k_i k_iᵀ` and `A₀₁(μ) = Σ w k₀ k₁ᵀ`:
/// with `Q = K₁⁻¹A₁K₁⁻¹ + K₀⁻¹A₀K₀⁻¹ − K₀⁻¹A₀₁K₁⁻¹ − K₁⁻¹A₁₀K₀⁻¹`, the parts
/// are `tr(K₀Q)` and `tr(K₁Q)`.
pub fn integrated_phi_a(pair: &ModelPair, design: &Design, mu: &Quadrature) -> Result<IntegratedPhiA> {
    pair.validate()?;
    if mu.points.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let n = design.len();
    if n == 0 {
        return Ok(IntegratedPhiA {
            under0: 0.0,
            under1: 0.0,
            total: 0.0,
        });
    }
    let pp = PairPredictor::new(pair, design)?;
    let (mut a0, mut a1, mut a01) = (DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n));
    for (x, &w) in mu.points.points().zip(&mu.weights) {
        let k0 = kernel_vector(&pair.k0, design, x)?;
        let k1 = kernel_vector(&pair.k1, design, x)?;
        a0.ger(w, &k0, &k0, 1.0);
        a1.ger(w, &k1, &k1, 1.0);
        a01.ger(w, &k0, &k1, 1.0);
    }
    let c0: &Cholesky = pp.predictor(0).cholesky();
    let c1: &Cholesky = pp.predictor(1).cholesky();
    let sandwich = |c: &Cholesky, a: &DMatrix<f64>| c.solve_mat(&c.solve_mat(a).transpose());
    let x0 = sandwich(c0, &a0);
    let x1 = sandwich(c1, &a1);
    // K₀⁻¹ A₀₁ K₁⁻¹
    let x01 = c0.solve_mat(&c1.solve_mat(&a01.transpose()).transpose());
    let q = x0 + x1 - &x01 - x01.transpose();
    let under0 = pp.kernel_matrix(0).component_mul(&q).sum();
    let under1 = pp.kernel_matrix(1).component_mul(&q).sum();
    Ok(IntegratedPhiA {
        under0,
        under1,
        total: under0 + under1,
    })
}
