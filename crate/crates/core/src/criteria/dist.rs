//! Distance-type criteria between the two kernel matrices of a design, and
//! worst-case calibration of the alternative model's inverse length.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::criteria::CriterionId;
use crate::design::Design;
use crate::error::{positive, Error, Result};
use crate::kernels::{kernel_matrix, kernel_partials, KernelFamily, KernelParam, KernelSpec, ModelPair};
use crate::linalg::{psd_eigenvalues, psd_sqrt, Cholesky};
use crate::optimize::{log_space, scan_then_golden_min};

/// Traces and log-determinants shared by `Φ_KL`, `Φ_U` and `Φ_Γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlParts {
    /// `tr(K₀K₁⁻¹)`
    pub tr01: f64,
    /// `tr(K₁K₀⁻¹)`
    pub tr10: f64,
    pub log_det0: f64,
    pub log_det1: f64,
    pub n: usize,
}

impl KlParts {
    pub fn from_factors(c0: &Cholesky, c1: &Cholesky) -> Self {
        Self {
            tr01: c1.trace_inv_gram(c0.l()),
            tr10: c0.trace_inv_gram(c1.l()),
            log_det0: c0.log_det(),
            log_det1: c1.log_det(),
            n: c0.dim(),
        }
    }

    pub fn from_matrices(k0: &DMatrix<f64>, k1: &DMatrix<f64>) -> Result<Self> {
        Ok(Self::from_factors(&Cholesky::new(k0)?, &Cholesky::new(k1)?))
    }

    pub fn phi_kl(&self) -> f64 {
        0.5 * (self.tr01 + self.tr10) - self.n as f64
    }

    pub fn phi_upper(&self, prior0: f64, prior1: f64) -> f64 {
        0.5 * prior0 * prior1 * (self.tr01 + self.tr10 - 2.0 * self.n as f64)
    }

    /// `Γ₀₁` and `Γ₁₀`.
    pub fn gammas(&self) -> (f64, f64) {
        let n = self.n as f64;
        let ld = self.log_det0 - self.log_det1;
        (self.tr01 - ld - n, self.tr10 + ld - n)
    }

    pub fn phi_gamma(&self, prior0: f64, prior1: f64) -> f64 {
        let (g01, g10) = self.gammas();
        -prior0 * (prior0 + prior1 * (-0.5 * g01).exp()).ln() - prior1 * (prior1 + prior0 * (-0.5 * g10).exp()).ln()
    }
}

fn matrices(pair: &ModelPair, design: &Design) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    pair.validate()?;
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    Ok((kernel_matrix(&pair.k0, design)?, kernel_matrix(&pair.k1, design)?))
}

/// `½[tr(K₀K₁⁻¹) + tr(K₁K₀⁻¹)] − n`.
pub fn phi_kl(pair: &ModelPair, design: &Design) -> Result<f64> {
    let (k0, k1) = matrices(pair, design)?;
    Ok(KlParts::from_matrices(&k0, &k1)?.phi_kl())
}

/// `½p₀p₁[tr(K₀K₁⁻¹) + tr(K₁K₀⁻¹) − 2n]`.
pub fn phi_upper(pair: &ModelPair, design: &Design) -> Result<f64> {
    let (k0, k1) = matrices(pair, design)?;
    Ok(KlParts::from_matrices(&k0, &k1)?.phi_upper(pair.prior0, pair.prior1))
}

/// Mixture lower bound `−Σᵢ pᵢ log Σⱼ pⱼ exp(−Γᵢⱼ/2)` for zero means.
pub fn phi_gamma(pair: &ModelPair, design: &Design) -> Result<f64> {
    let (k0, k1) = matrices(pair, design)?;
    Ok(KlParts::from_matrices(&k0, &k1)?.phi_gamma(pair.prior0, pair.prior1))
}

/// `K₀`'s half of the Fréchet computation, reusable across many `K₁`.
#[derive(Clone, Debug)]
pub struct FrechetBase {
    /// Any `R` with `R Rᵀ = K₀`: the Cholesky factor, or the symmetric root
    /// when `K₀` is only semidefinite.
    root: DMatrix<f64>,
    trace0: f64,
}

impl FrechetBase {
    pub fn new(k0: &DMatrix<f64>) -> Result<Self> {
        let root = match Cholesky::new(k0) {
            Ok(c) => c.l().clone(),
            Err(Error::NotPositiveDefinite { .. }) => psd_sqrt(k0)?,
            Err(e) => return Err(e),
        };
        Ok(Self {
            root,
            trace0: k0.trace(),
        })
    }

    /// `tr[K₀ + K₁ − 2(K₀K₁)^{1/2}]`. The eigenvalues of `K₀K₁` are those of
    /// the symmetric `RᵀK₁R`.
    pub fn distance(&self, k1: &DMatrix<f64>) -> Result<f64> {
        let inner = self.root.transpose() * k1 * &self.root;
        let cross: f64 = psd_eigenvalues(&inner)?.iter().map(|e| e.sqrt()).sum();
        Ok((self.trace0 + k1.trace() - 2.0 * cross).max(0.0))
    }
}

/// `tr[K₀ + K₁ − 2(K₀K₁)^{1/2}]`.
pub fn phi_frechet(pair: &ModelPair, design: &Design) -> Result<f64> {
    let (k0, k1) = matrices(pair, design)?;
    FrechetBase::new(&k0)?.distance(&k1)
}

pub fn frechet_matrices(k0: &DMatrix<f64>, k1: &DMatrix<f64>) -> Result<f64> {
    FrechetBase::new(k0)?.distance(k1)
}

/// `Σᵢⱼ |{K₁ − K₀}ᵢⱼ|^p`.
pub fn phi_p(pair: &ModelPair, design: &Design, p: f64) -> Result<f64> {
    positive("p", p)?;
    let (k0, k1) = matrices(pair, design)?;
    Ok(phi_p_matrices(&k0, &k1, p))
}

pub fn phi_p_matrices(k0: &DMatrix<f64>, k1: &DMatrix<f64>, p: f64) -> f64 {
    k1.iter().zip(k0.iter()).map(|(a, b)| (a - b).abs().powf(p)).sum()
}

/// `|M|/M₁₁` for the `(θ, ν)` information matrix of a general Matérn
/// kernel, `M_ab = ½ tr(K⁻¹K_a K⁻¹K_b)`, `θ` being the nuisance parameter.
pub fn phi_ds(spec: &KernelSpec, design: &Design) -> Result<f64> {
    if spec.family != KernelFamily::MaternGeneral {
        return Err(Error::UnsupportedFamily(spec.family.name()));
    }
    spec.validate()?;
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let chol = Cholesky::new(&kernel_matrix(spec, design)?)?;
    let dt = kernel_partials(spec, design, KernelParam::Theta)?;
    let dn = kernel_partials(spec, design, KernelParam::Nu)?;
    phi_ds_from_parts(&chol, &dt, &dn)
}

pub(crate) fn phi_ds_from_parts(chol: &Cholesky, dt: &DMatrix<f64>, dn: &DMatrix<f64>) -> Result<f64> {
    let a = chol.solve_mat(dt);
    let b = chol.solve_mat(dn);
    // tr(XY) = Σᵢⱼ Xᵢⱼ Yⱼᵢ
    let tr = |x: &DMatrix<f64>, y: &DMatrix<f64>| x.component_mul(&y.transpose()).sum();
    let m11 = 0.5 * tr(&a, &a);
    let m12 = 0.5 * tr(&a, &b);
    let m22 = 0.5 * tr(&b, &b);
    let scale = m22.abs().max(1.0);
    if !(m11 > 1e-14 * scale) {
        return Err(Error::Unidentifiable);
    }
    Ok(m22 - m12 * m12 / m11)
}

/// Result of a worst-case calibration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub theta1: f64,
    pub value: f64,
    /// The minimum sat on an end of the search interval.
    pub at_boundary: bool,
}

pub const CALIBRATION_GRID: usize = 200;
pub const CALIBRATION_TOL: f64 = 1e-4;

/// Minimises `objective` over `[lo, hi]`: `grid` log-spaced values, then
/// golden section to `1e-4`.
pub fn calibrate<F>(mut objective: F, lo: f64, hi: f64, grid: usize) -> Result<Calibration>
where
    F: FnMut(f64) -> Result<f64>,
{
    positive("lo", lo)?;
    positive("hi", hi)?;
    if lo >= hi || grid < 2 {
        return Err(Error::InvalidParameter {
            name: "hi",
            value: hi,
            reason: "need lo < hi and at least two grid values",
        });
    }
    let mut first_err = None;
    let mut f = |t: f64| match objective(t) {
        Ok(v) if v.is_finite() => v,
        Ok(_) => f64::INFINITY,
        Err(e) => {
            first_err.get_or_insert(e);
            f64::INFINITY
        }
    };
    let r = scan_then_golden_min(&mut f, &log_space(lo, hi, grid), CALIBRATION_TOL);
    if !r.value.is_finite() {
        return Err(first_err.unwrap_or(Error::FitFailed));
    }
    Ok(Calibration {
        theta1: r.x,
        value: r.value,
        at_boundary: r.at_boundary,
    })
}

/// Worst-case inverse length of model 1 for a distance criterion on a fixed
/// design, model 0 held at its nominal parameters.
pub fn calibrate_design(
    pair: &ModelPair,
    criterion: &CriterionId,
    design: &Design,
    lo: f64,
    hi: f64,
    grid: usize,
) -> Result<Calibration> {
    let (k0, _) = matrices(pair, design)?;
    let k1_at = |t: f64| kernel_matrix(&pair.k1.with_inverse_length(t), design);
    match *criterion {
        CriterionId::PhiKl => {
            let c0 = Cholesky::new(&k0)?;
            calibrate(
                |t| Ok(KlParts::from_factors(&c0, &Cholesky::new(&k1_at(t)?)?).phi_kl()),
                lo,
                hi,
                grid,
            )
        }
        CriterionId::PhiF => {
            let base = FrechetBase::new(&k0)?;
            calibrate(|t| base.distance(&k1_at(t)?), lo, hi, grid)
        }
        CriterionId::PhiP(p) => calibrate(|t| Ok(phi_p_matrices(&k0, &k1_at(t)?, p)), lo, hi, grid),
        _ => calibrate(
            |t| {
                let moved = ModelPair {
                    k1: pair.k1.with_inverse_length(t),
                    ..*pair
                };
                crate::criteria::evaluate(criterion, &moved, design)
            },
            lo,
            hi,
            grid,
        ),
    }
}
