//! Isotropic covariance kernels and the kernel-difference profile `ψ`.
//!
//! Every family is a function of the Euclidean distance `r = ‖x − x'‖`.
//! The Matérn families use the inverse correlation length `θ`; the
//! exponential families use `α`.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bessel::{self, ln_bessel_k};
use crate::design::{distance, Design};
use crate::error::{positive, Error, Result};
use crate::optimize::golden_max;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `σ²(1 + √3θr) e^{−√3θr}`
    #[serde(rename = "matern32")]
    Matern32,
    /// `σ²(1 + √5θr + 5θ²r²/3) e^{−√5θr}`
    #[serde(rename = "matern52")]
    Matern52,
    /// `σ² 2^{1−ν}/Γ(ν) z^ν K_ν(z)`, `z = √(2ν) θ r`
    #[serde(rename = "matern")]
    MaternGeneral,
    /// `σ² e^{−αr}`
    #[serde(rename = "exponential")]
    Exponential,
    /// `e^{−αr}/α`; the variance is tied to the range and `σ²` is unused.
    #[serde(rename = "exponential-scaled")]
    ExponentialScaled,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Matern32,
        KernelFamily::Matern52,
        KernelFamily::MaternGeneral,
        KernelFamily::Exponential,
        KernelFamily::ExponentialScaled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
            KernelFamily::MaternGeneral => "matern",
            KernelFamily::Exponential => "exponential",
            KernelFamily::ExponentialScaled => "exponential-scaled",
        }
    }

    fn uses_alpha(self) -> bool {
        matches!(self, KernelFamily::Exponential | KernelFamily::ExponentialScaled)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownId {
                given: s.to_owned(),
                expected: Self::ALL.map(|f| f.name()).join(", "),
            })
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_nu() -> f64 {
    1.5
}

/// A covariance kernel: family plus parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_one")]
    pub sigma2: f64,
    #[serde(default = "default_one")]
    pub theta: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_one")]
    pub alpha: f64,
}

/// Which parameter to differentiate with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelParam {
    Theta,
    Nu,
}

impl KernelSpec {
    fn with_family(family: KernelFamily) -> Self {
        Self {
            family,
            sigma2: 1.0,
            theta: 1.0,
            nu: 1.5,
            alpha: 1.0,
        }
    }

    pub fn matern32(theta: f64) -> Self {
        Self {
            theta,
            ..Self::with_family(KernelFamily::Matern32)
        }
    }

    pub fn matern52(theta: f64) -> Self {
        Self {
            theta,
            nu: 2.5,
            ..Self::with_family(KernelFamily::Matern52)
        }
    }

    pub fn matern(nu: f64, theta: f64) -> Self {
        Self {
            theta,
            nu,
            ..Self::with_family(KernelFamily::MaternGeneral)
        }
    }

    pub fn exponential(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::with_family(KernelFamily::Exponential)
        }
    }

    pub fn exponential_scaled(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::with_family(KernelFamily::ExponentialScaled)
        }
    }

    pub fn with_variance(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    /// `θ` for the Matérn families, `α` for the exponential ones.
    pub fn inverse_length(&self) -> f64 {
        if self.family.uses_alpha() {
            self.alpha
        } else {
            self.theta
        }
    }

    pub fn with_inverse_length(mut self, v: f64) -> Self {
        if self.family.uses_alpha() {
            self.alpha = v;
        } else {
            self.theta = v;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            KernelFamily::Matern32 | KernelFamily::Matern52 => {
                positive("sigma2", self.sigma2)?;
                positive("theta", self.theta)?;
            }
            KernelFamily::MaternGeneral => {
                positive("sigma2", self.sigma2)?;
                positive("theta", self.theta)?;
                positive("nu", self.nu)?;
                if self.nu > bessel::MAX_ORDER {
                    return Err(Error::InvalidParameter {
                        name: "nu",
                        value: self.nu,
                        reason: "smoothness above 50 is not supported",
                    });
                }
            }
            KernelFamily::Exponential => {
                positive("sigma2", self.sigma2)?;
                positive("alpha", self.alpha)?;
            }
            KernelFamily::ExponentialScaled => {
                positive("alpha", self.alpha)?;
            }
        }
        Ok(())
    }

    /// `K(x, x)`.
    pub fn variance(&self) -> f64 {
        match self.family {
            KernelFamily::ExponentialScaled => 1.0 / self.alpha,
            _ => self.sigma2,
        }
    }

    /// Radial profile `Ψ(r)`; assumes `self` has been validated.
    pub fn radial(&self, r: f64) -> f64 {
        match self.family {
            KernelFamily::Matern32 => {
                let z = SQRT3 * self.theta * r;
                self.sigma2 * (1.0 + z) * (-z).exp()
            }
            KernelFamily::Matern52 => {
                let z = SQRT5 * self.theta * r;
                self.sigma2 * (1.0 + z + z * z / 3.0) * (-z).exp()
            }
            KernelFamily::MaternGeneral => {
                if r == 0.0 {
                    return self.sigma2;
                }
                let z = (2.0 * self.nu).sqrt() * self.theta * r;
                self.sigma2 * matern_correlation(self.nu, z)
            }
            KernelFamily::Exponential => self.sigma2 * (-self.alpha * r).exp(),
            KernelFamily::ExponentialScaled => (-self.alpha * r).exp() / self.alpha,
        }
    }

    /// `K(x, x')`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.validate()?;
        Ok(self.radial(distance(x, y)))
    }

    /// `∂Ψ(r)/∂θ` (analytic) or `∂Ψ(r)/∂ν` (central difference).
    pub fn radial_partial(&self, r: f64, wrt: KernelParam) -> Result<f64> {
        match (self.family, wrt) {
            (_, KernelParam::Theta) if r == 0.0 && !self.family.uses_alpha() => Ok(0.0),
            (KernelFamily::Matern32, KernelParam::Theta) => {
                let z = SQRT3 * self.theta * r;
                Ok(-self.sigma2 * z * z * (-z).exp() / self.theta)
            }
            (KernelFamily::Matern52, KernelParam::Theta) => {
                let z = SQRT5 * self.theta * r;
                Ok(-self.sigma2 * z * z * (1.0 + z) * (-z).exp() / (3.0 * self.theta))
            }
            (KernelFamily::MaternGeneral, KernelParam::Theta) => {
                // d/dz [z^ν K_ν(z)] = −z^ν K_{ν−1}(z)
                let nu = self.nu;
                let z = (2.0 * nu).sqrt() * self.theta * r;
                let ln = (1.0 - nu) * LN_2 - ln_gamma(nu) + nu * z.ln() + ln_bessel_k((nu - 1.0).abs(), z)?;
                Ok(-self.sigma2 * (z / self.theta) * ln.exp())
            }
            (KernelFamily::MaternGeneral, KernelParam::Nu) => {
                if r == 0.0 {
                    return Ok(0.0);
                }
                let h = 1e-6 * self.nu.max(1.0);
                let up = Self { nu: self.nu + h, ..*self };
                let dn = Self { nu: self.nu - h, ..*self };
                dn.validate()?;
                up.validate()?;
                Ok((up.radial(r) - dn.radial(r)) / (2.0 * h))
            }
            (family, _) => Err(Error::UnsupportedFamily(family.name())),
        }
    }
}

/// Matérn correlation `2^{1−ν}/Γ(ν) z^ν K_ν(z)` for `z > 0`.
fn matern_correlation(nu: f64, z: f64) -> f64 {
    match ln_bessel_k(nu, z) {
        Ok(lk) => ((1.0 - nu) * LN_2 - ln_gamma(nu) + nu * z.ln() + lk).exp(),
        // only reachable for ν outside the validated range
        Err(_) => f64::NAN,
    }
}

/// `{K}_{ij} = K(x_i, x_j)`, filled from the lower triangle.
pub fn kernel_matrix(spec: &KernelSpec, design: &Design) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = design.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = spec.variance();
        for i in j + 1..n {
            let v = spec.radial(distance(design.point(i), design.point(j)));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `(K(x, x_1), …, K(x, x_n))ᵀ`.
pub fn kernel_vector(spec: &KernelSpec, design: &Design, x: &[f64]) -> Result<DVector<f64>> {
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    if x.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    spec.validate()?;
    Ok(DVector::from_iterator(
        design.len(),
        design.points().map(|p| spec.radial(distance(x, p))),
    ))
}

/// `K(a_i, b_j)` for two designs.
pub fn cross_kernel(spec: &KernelSpec, a: &Design, b: &Design) -> Result<DMatrix<f64>> {
    spec.validate()?;
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        spec.radial(distance(a.point(i), b.point(j)))
    }))
}

/// Entrywise `∂K/∂θ` or `∂K/∂ν` over a design.
pub fn kernel_partials(spec: &KernelSpec, design: &Design, wrt: KernelParam) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if wrt == KernelParam::Nu && spec.family != KernelFamily::MaternGeneral {
        return Err(Error::UnsupportedFamily(spec.family.name()));
    }
    let n = design.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = spec.radial_partial(0.0, wrt)?;
        for i in j + 1..n {
            let v = spec.radial_partial(distance(design.point(i), design.point(j)), wrt)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// The two rival kernels with their prior probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPair {
    pub k0: KernelSpec,
    pub k1: KernelSpec,
    pub prior0: f64,
    pub prior1: f64,
}

impl ModelPair {
    /// Equal prior probabilities.
    pub fn new(k0: KernelSpec, k1: KernelSpec) -> Self {
        Self {
            k0,
            k1,
            prior0: 0.5,
            prior1: 0.5,
        }
    }

    pub fn with_priors(mut self, prior0: f64) -> Self {
        self.prior0 = prior0;
        self.prior1 = 1.0 - prior0;
        self
    }

    pub fn kernel(&self, i: usize) -> &KernelSpec {
        if i == 0 {
            &self.k0
        } else {
            &self.k1
        }
    }

    /// The pair with models 0 and 1 swapped.
    pub fn swapped(&self) -> Self {
        Self {
            k0: self.k1,
            k1: self.k0,
            prior0: self.prior1,
            prior1: self.prior0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.k0.validate()?;
        self.k1.validate()?;
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.prior0) || !ok(self.prior1) || (self.prior0 + self.prior1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "prior0",
                value: self.prior0,
                reason: "priors must be probabilities summing to one",
            });
        }
        Ok(())
    }

    /// `ψ(t) = |Ψ₁(t) − Ψ₀(t)|`.
    pub fn psi(&self, t: f64) -> f64 {
        (self.k1.radial(t) - self.k0.radial(t)).abs()
    }
}

/// Location `Δ` and height `ψ(Δ)` of the global maximum of `ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPeak {
    pub delta: f64,
    pub psi_max: f64,
}

const DELTA_GRID: usize = 10_000;

/// Maximises `ψ` on `(0, T]`: a 10 000-point grid, then golden section to
/// `1e-8` around the best node. `T` defaults to `5 / min(θ₀, θ₁)`.
pub fn find_delta(pair: &ModelPair, t_max: Option<f64>) -> Result<DeltaPeak> {
    pair.validate()?;
    let t_max = match t_max {
        Some(t) => positive("t_max", t)?,
        None => 5.0 / pair.k0.inverse_length().min(pair.k1.inverse_length()),
    };
    let step = t_max / DELTA_GRID as f64;
    let (mut best, mut best_val) = (1, f64::NEG_INFINITY);
    for k in 1..=DELTA_GRID {
        let v = pair.psi(k as f64 * step);
        if v > best_val {
            best_val = v;
            best = k;
        }
    }
    let scale = pair.k0.variance().max(pair.k1.variance());
    if !(best_val > 1e-14 * scale) {
        return Err(Error::NoDiscrimination);
    }
    let lo = (best - 1) as f64 * step;
    let hi = ((best + 1).min(DELTA_GRID)) as f64 * step;
    let (delta, psi_max) = golden_max(|t| pair.psi(t), lo.max(f64::MIN_POSITIVE), hi, 1e-8);
    Ok(if psi_max >= best_val {
        DeltaPeak { delta, psi_max }
    } else {
        DeltaPeak {
            delta: best as f64 * step,
            psi_max: best_val,
        }
    })
}
