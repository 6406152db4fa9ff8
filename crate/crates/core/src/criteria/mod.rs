//! Discrimination criteria.
//!
//! [`pred`] holds the point scores used to grow a design one point at a
//! time; [`dist`] holds criteria defined on a whole design through its two
//! kernel matrices.

pub mod dist;
pub mod pred;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, ModelPair};

/// Default local parameters of the `D_s` criterion.
pub const DS_THETA: f64 = 1.0;
pub const DS_NU: f64 = 1.5;

/// Every criterion the search and the command line can dispatch on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CriterionId {
    PhiA,
    PhiB,
    /// Point score `φ_KL(x)`; its design-level counterpart is [`Self::PhiKl`].
    PhiKlPoint,
    PhiKl,
    PhiF,
    PhiP(f64),
    PhiDs { theta: f64, nu: f64 },
    PhiU,
    PhiGamma,
}

pub const CRITERION_IDS: &str = "phi-a, phi-b, phi-kl, kl, frechet, p<k> (e.g. p1, p2), ds, upper, gamma";

impl CriterionId {
    pub fn ds() -> Self {
        CriterionId::PhiDs {
            theta: DS_THETA,
            nu: DS_NU,
        }
    }

    /// Scores defined only as increments at a candidate point.
    pub fn is_prediction_based(&self) -> bool {
        matches!(self, CriterionId::PhiA | CriterionId::PhiB | CriterionId::PhiKlPoint)
    }

    /// Short label for tables.
    pub fn label(&self) -> String {
        match self {
            CriterionId::PhiA => "phi_A".into(),
            CriterionId::PhiB => "phi_B".into(),
            CriterionId::PhiKlPoint => "phi_KL".into(),
            CriterionId::PhiKl => "Phi_KL".into(),
            CriterionId::PhiF => "Phi_F".into(),
            CriterionId::PhiP(p) => format!("Phi_{p}"),
            CriterionId::PhiDs { .. } => "Phi_Ds".into(),
            CriterionId::PhiU => "Phi_U".into(),
            CriterionId::PhiGamma => "Phi_Gamma".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CriterionId::PhiP(p) if !(p > 0.0 && p.is_finite()) => Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "exponent must be positive",
            }),
            CriterionId::PhiDs { theta, nu } => KernelSpec::matern(nu, theta).validate(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionId::PhiA => f.write_str("phi-a"),
            CriterionId::PhiB => f.write_str("phi-b"),
            CriterionId::PhiKlPoint => f.write_str("phi-kl"),
            CriterionId::PhiKl => f.write_str("kl"),
            CriterionId::PhiF => f.write_str("frechet"),
            CriterionId::PhiP(p) => write!(f, "p{p}"),
            CriterionId::PhiDs { .. } => f.write_str("ds"),
            CriterionId::PhiU => f.write_str("upper"),
            CriterionId::PhiGamma => f.write_str("gamma"),
        }
    }
}

impl FromStr for CriterionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownId {
            given: s.to_owned(),
            expected: CRITERION_IDS.to_owned(),
        };
        let id = match s {
            "phi-a" => CriterionId::PhiA,
            "phi-b" => CriterionId::PhiB,
            "phi-kl" => CriterionId::PhiKlPoint,
            "kl" => CriterionId::PhiKl,
            "frechet" => CriterionId::PhiF,
            "ds" => CriterionId::ds(),
            "upper" => CriterionId::PhiU,
            "gamma" => CriterionId::PhiGamma,
            _ => {
                let p: f64 = s.strip_prefix('p').ok_or_else(unknown)?.parse().map_err(|_| unknown())?;
                CriterionId::PhiP(p)
            }
        };
        id.validate().map_err(|_| unknown())?;
        Ok(id)
    }
}

impl TryFrom<String> for CriterionId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CriterionId> for String {
    fn from(c: CriterionId) -> String {
        c.to_string()
    }
}

/// Design-level value of a distance criterion.
pub fn evaluate(criterion: &CriterionId, pair: &ModelPair, design: &Design) -> Result<f64> {
    criterion.validate()?;
    match *criterion {
        CriterionId::PhiKl => dist::phi_kl(pair, design),
        CriterionId::PhiF => dist::phi_frechet(pair, design),
        CriterionId::PhiP(p) => dist::phi_p(pair, design, p),
        CriterionId::PhiDs { theta, nu } => dist::phi_ds(&KernelSpec::matern(nu, theta), design),
        CriterionId::PhiU => dist::phi_upper(pair, design),
        CriterionId::PhiGamma => dist::phi_gamma(pair, design),
        CriterionId::PhiA | CriterionId::PhiB | CriterionId::PhiKlPoint => {
            Err(Error::NotDesignLevel(criterion.to_string()))
        }
    }
}
