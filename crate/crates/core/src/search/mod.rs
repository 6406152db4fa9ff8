//! Exact designs chosen from a finite candidate set: greedy construction,
//! single-swap exchange, and the observation-driven sequential loop.

mod sequential;

pub use sequential::{sequential_run, SequentialConfig, SequentialRun, StepFit};

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::criteria::dist::{phi_ds_from_parts, FrechetBase, KlParts};
use crate::criteria::pred::PointScores;
use crate::criteria::CriterionId;
use crate::design::{distance, Design, DesignSpace};
use crate::error::{Error, Result};
use crate::gp::{CrossMse, VARIANCE_FLOOR};
use crate::kernels::{kernel_matrix, kernel_partials, KernelParam, KernelSpec, ModelPair};
use crate::linalg::{principal_submatrix, submatrix, Cholesky};

/// Default number of exchange passes.
pub const EXCHANGE_PASSES: usize = 20;

/// Relative improvement an exchange must beat.
const EXCHANGE_TOL: f64 = 1e-12;

/// Default minimum separation: a grid-cell diagonal scaled by `1e-9`.
pub fn default_min_distance(space: &DesignSpace) -> f64 {
    space.cell_diagonal() * 1e-9
}

/// Candidate points with both kernel matrices precomputed over all of them.
#[derive(Debug)]
pub struct CandidatePool {
    pair: ModelPair,
    candidates: Design,
    k0: DMatrix<f64>,
    k1: DMatrix<f64>,
    min_distance: f64,
    ds: OnceLock<DsCache>,
}

#[derive(Debug)]
struct DsCache {
    theta: f64,
    nu: f64,
    k: DMatrix<f64>,
    dt: DMatrix<f64>,
    dn: DMatrix<f64>,
}

impl DsCache {
    fn new(theta: f64, nu: f64, candidates: &Design) -> Result<Self> {
        let spec = KernelSpec::matern(nu, theta);
        Ok(Self {
            theta,
            nu,
            k: kernel_matrix(&spec, candidates)?,
            dt: kernel_partials(&spec, candidates, KernelParam::Theta)?,
            dn: kernel_partials(&spec, candidates, KernelParam::Nu)?,
        })
    }
}

/// A greedy design: chosen candidate indices in order of selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    pub indices: Vec<usize>,
    /// For design-level criteria, the value after each addition; for point
    /// scores, the score the point was chosen with. NaN where undefined.
    pub values: Vec<f64>,
}

/// Result of exchange passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeResult {
    pub indices: Vec<usize>,
    pub value: f64,
    /// Criterion value before the first pass and after each accepted swap.
    pub trace: Vec<f64>,
    /// The pass budget ran out while swaps were still improving.
    pub budget_exhausted: bool,
}

impl CandidatePool {
    pub fn new(pair: &ModelPair, candidates: Design, min_distance: f64) -> Result<Self> {
        pair.validate()?;
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if !(min_distance >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "min_distance",
                value: min_distance,
                reason: "must be nonnegative",
            });
        }
        Ok(Self {
            pair: *pair,
            k0: kernel_matrix(&pair.k0, &candidates)?,
            k1: kernel_matrix(&pair.k1, &candidates)?,
            candidates,
            min_distance,
            ds: OnceLock::new(),
        })
    }

    /// Pool over the grid of `space`, with the default separation.
    pub fn from_space(pair: &ModelPair, space: &DesignSpace) -> Result<Self> {
        Self::new(pair, space.grid_design()?, default_min_distance(space))
    }

    pub fn candidates(&self) -> &Design {
        &self.candidates
    }

    pub fn pair(&self) -> &ModelPair {
        &self.pair
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn design(&self, indices: &[usize]) -> Design {
        self.candidates.subset(indices)
    }

    fn feasible(&self, chosen: &[usize]) -> Vec<bool> {
        (0..self.len())
            .map(|c| {
                let x = self.candidates.point(c);
                chosen
                    .iter()
                    .all(|&j| distance(x, self.candidates.point(j)) > self.min_distance)
            })
            .collect()
    }

    fn ds_cache(&self, theta: f64, nu: f64) -> Result<DsOwned<'_>> {
        if let Some(c) = self.ds.get() {
            if c.theta == theta && c.nu == nu {
                return Ok(DsOwned::Borrowed(c));
            }
            return Ok(DsOwned::Owned(Box::new(DsCache::new(theta, nu, &self.candidates)?)));
        }
        let fresh = DsCache::new(theta, nu, &self.candidates)?;
        Ok(DsOwned::Borrowed(self.ds.get_or_init(|| fresh)))
    }

    /// Cross-model errors at every candidate given the design `rest`, plus
    /// the two Cholesky factors of `rest`.
    fn cross_mse_all(&self, rest: &[usize]) -> Result<(Vec<CrossMse>, Option<(Cholesky, Cholesky)>)> {
        let (v0, v1) = (self.pair.k0.variance(), self.pair.k1.variance());
        let m = self.len();
        if rest.is_empty() {
            let e = CrossMse {
                e00: v0,
                e01: v0,
                e10: v1,
                e11: v1,
                dk0d: 0.0,
                dk1d: 0.0,
            };
            return Ok((vec![e; m], None));
        }
        let all: Vec<usize> = (0..m).collect();
        let kss0 = principal_submatrix(&self.k0, rest);
        let kss1 = principal_submatrix(&self.k1, rest);
        let c0 = Cholesky::new(&kss0)?;
        let c1 = Cholesky::new(&kss1)?;
        let ksm0 = submatrix(&self.k0, rest, &all);
        let ksm1 = submatrix(&self.k1, rest, &all);
        let a0 = c0.solve_mat(&ksm0);
        let a1 = c1.solve_mat(&ksm1);
        let d = &a1 - &a0;
        let kd0 = &kss0 * &d;
        let kd1 = &kss1 * &d;
        let out = (0..m)
            .map(|c| {
                let e00 = (v0 - ksm0.column(c).dot(&a0.column(c))).max(0.0);
                let e11 = (v1 - ksm1.column(c).dot(&a1.column(c))).max(0.0);
                let dk0d = d.column(c).dot(&kd0.column(c)).max(0.0);
                let dk1d = d.column(c).dot(&kd1.column(c)).max(0.0);
                CrossMse {
                    e00,
                    e01: e00 + dk0d,
                    e10: e11 + dk1d,
                    e11,
                    dk0d,
                    dk1d,
                }
            })
            .collect();
        Ok((out, Some((c0, c1))))
    }

    /// Design-level value of a distance criterion on the candidates `idx`.
    pub fn value(&self, criterion: &CriterionId, idx: &[usize]) -> Result<f64> {
        if criterion.is_prediction_based() {
            return Err(Error::NotDesignLevel(criterion.to_string()));
        }
        if idx.is_empty() {
            return Err(Error::EmptyDesign);
        }
        let (p0, p1) = (self.pair.prior0, self.pair.prior1);
        let k0 = principal_submatrix(&self.k0, idx);
        let k1 = principal_submatrix(&self.k1, idx);
        match *criterion {
            CriterionId::PhiKl => Ok(KlParts::from_matrices(&k0, &k1)?.phi_kl()),
            CriterionId::PhiU => Ok(KlParts::from_matrices(&k0, &k1)?.phi_upper(p0, p1)),
            CriterionId::PhiGamma => Ok(KlParts::from_matrices(&k0, &k1)?.phi_gamma(p0, p1)),
            CriterionId::PhiF => FrechetBase::new(&k0)?.distance(&k1),
            CriterionId::PhiP(p) => Ok(crate::criteria::dist::phi_p_matrices(&k0, &k1, p)),
            CriterionId::PhiDs { theta, nu } => {
                let cache = self.ds_cache(theta, nu)?;
                let c = cache.get();
                let chol = Cholesky::new(&principal_submatrix(&c.k, idx))?;
                phi_ds_from_parts(
                    &chol,
                    &principal_submatrix(&c.dt, idx),
                    &principal_submatrix(&c.dn, idx),
                )
            }
            _ => unreachable!(),
        }
    }

    /// For every candidate `c`, the value of `rest ∪ {c}` (design-level
    /// criteria) or the score of `c` given `rest` (point scores);
    /// `-inf` where infeasible or undefined.
    pub fn add_values(&self, criterion: &CriterionId, rest: &[usize]) -> Result<Vec<f64>> {
        criterion.validate()?;
        let feasible = self.feasible(rest);
        let m = self.len();
        let mut out = vec![f64::NEG_INFINITY; m];
        let (v0, v1) = (self.pair.k0.variance(), self.pair.k1.variance());
        let (p0, p1) = (self.pair.prior0, self.pair.prior1);
        match *criterion {
            CriterionId::PhiA | CriterionId::PhiB | CriterionId::PhiKlPoint => {
                let (mse, _) = self.cross_mse_all(rest)?;
                for c in (0..m).filter(|&c| feasible[c]) {
                    if let Ok(s) = PointScores::from_mse(&mse[c], v0, v1) {
                        out[c] = s.get(criterion).unwrap_or(f64::NEG_INFINITY);
                    }
                }
            }
            CriterionId::PhiKl | CriterionId::PhiU | CriterionId::PhiGamma => {
                let (mse, chols) = self.cross_mse_all(rest)?;
                let base = match &chols {
                    Some((c0, c1)) => KlParts::from_factors(c0, c1),
                    None => KlParts {
                        tr01: 0.0,
                        tr10: 0.0,
                        log_det0: 0.0,
                        log_det1: 0.0,
                        n: 0,
                    },
                };
                for c in (0..m).filter(|&c| feasible[c]) {
                    let e = &mse[c];
                    if e.e00 <= VARIANCE_FLOOR * v0 || e.e11 <= VARIANCE_FLOOR * v1 {
                        continue;
                    }
                    let parts = KlParts {
                        tr01: base.tr01 + e.e01 / e.e11,
                        tr10: base.tr10 + e.e10 / e.e00,
                        log_det0: base.log_det0 + e.e00.ln(),
                        log_det1: base.log_det1 + e.e11.ln(),
                        n: base.n + 1,
                    };
                    out[c] = match criterion {
                        CriterionId::PhiKl => parts.phi_kl(),
                        CriterionId::PhiU => parts.phi_upper(p0, p1),
                        _ => parts.phi_gamma(p0, p1),
                    };
                }
            }
            CriterionId::PhiP(p) => {
                let base = if rest.is_empty() { 0.0 } else { self.value(criterion, rest)? };
                for c in (0..m).filter(|&c| feasible[c]) {
                    let pw = |i: usize, j: usize| (self.k1[(i, j)] - self.k0[(i, j)]).abs().powf(p);
                    let cross: f64 = rest.iter().map(|&j| pw(c, j)).sum();
                    out[c] = base + 2.0 * cross + pw(c, c);
                }
            }
            CriterionId::PhiF => {
                let grow = Grower::new(&self.k0, rest)?;
                let mut idx = rest.to_vec();
                idx.push(0);
                for c in (0..m).filter(|&c| feasible[c]) {
                    *idx.last_mut().unwrap() = c;
                    let Some(l) = grow.extend(&self.k0, c) else { continue };
                    let k1 = principal_submatrix(&self.k1, &idx);
                    let inner = l.transpose() * k1 * &l;
                    if let Ok(ev) = crate::linalg::psd_eigenvalues(&inner) {
                        let cross: f64 = ev.iter().map(|e| e.sqrt()).sum();
                        let tr: f64 = idx.iter().map(|&i| self.k0[(i, i)] + self.k1[(i, i)]).sum();
                        out[c] = (tr - 2.0 * cross).max(0.0);
                    }
                }
            }
            CriterionId::PhiDs { theta, nu } => {
                let cache = self.ds_cache(theta, nu)?;
                let ds = cache.get();
                let grow = Grower::new(&ds.k, rest)?;
                let mut idx = rest.to_vec();
                idx.push(0);
                for c in (0..m).filter(|&c| feasible[c]) {
                    *idx.last_mut().unwrap() = c;
                    let Some(l) = grow.extend(&ds.k, c) else { continue };
                    let chol = Cholesky::from_factor(l);
                    let dt = principal_submatrix(&ds.dt, &idx);
                    let dn = principal_submatrix(&ds.dn, &idx);
                    if let Ok(v) = phi_ds_from_parts(&chol, &dt, &dn) {
                        out[c] = v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Greedy design of size `n`. For `n ≥ 2` it starts from the best pair
    /// found by exhaustive search; ties go to the lowest candidate index.
    pub fn greedy(&self, criterion: &CriterionId, n: usize) -> Result<GreedyResult> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "target size must be at least 1",
            });
        }
        let point_score = criterion.is_prediction_based();
        if n == 1 {
            let vals = self.add_values(criterion, &[])?;
            let (c, v) = argmax(&vals).ok_or(Error::NoFeasibleCandidate)?;
            return Ok(GreedyResult {
                indices: vec![c],
                values: vec![v],
            });
        }
        let (a, b, v) = self.best_pair(criterion)?;
        let mut indices = vec![a, b];
        let first = if point_score {
            f64::NAN
        } else {
            self.value(criterion, &[a]).unwrap_or(f64::NAN)
        };
        let mut values = vec![first, v];
        while indices.len() < n {
            let vals = self.add_values(criterion, &indices)?;
            let (c, v) = argmax(&vals).ok_or(Error::NoFeasibleCandidate)?;
            indices.push(c);
            values.push(v);
        }
        Ok(GreedyResult { indices, values })
    }

    /// Best `(a, b, value)` over ordered candidate pairs. For point scores the
    /// value is the score of `b` given `{a}`.
    pub fn best_pair(&self, criterion: &CriterionId) -> Result<(usize, usize, f64)> {
        let symmetric = !criterion.is_prediction_based();
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..self.len() {
            let vals = self.add_values(criterion, &[a])?;
            let start = if symmetric { a + 1 } else { 0 };
            for (b, &v) in vals.iter().enumerate().skip(start) {
                if b != a && v.is_finite() && best.map_or(true, |(_, _, bv)| v > bv) {
                    best = Some((a, b, v));
                }
            }
        }
        best.ok_or(Error::NoFeasibleCandidate)
    }

    /// Best-improvement single-swap passes starting from `start`.
    pub fn exchange(&self, criterion: &CriterionId, start: &[usize], passes: usize) -> Result<ExchangeResult> {
        if criterion.is_prediction_based() {
            return Err(Error::NotDesignLevel(criterion.to_string()));
        }
        let mut idx = start.to_vec();
        let mut value = self.value(criterion, &idx)?;
        let mut trace = vec![value];
        let mut budget_exhausted = true;
        for _ in 0..passes {
            let mut best: Option<(usize, usize, f64)> = None;
            for i in 0..idx.len() {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &c)| c).collect();
                let vals = self.add_values(criterion, &rest)?;
                for (c, &v) in vals.iter().enumerate() {
                    if c != idx[i] && v.is_finite() && best.map_or(true, |(_, _, bv)| v > bv) {
                        best = Some((i, c, v));
                    }
                }
            }
            match best {
                Some((i, c, v)) if v > value + EXCHANGE_TOL * value.abs() => {
                    idx[i] = c;
                    value = v;
                    trace.push(v);
                }
                _ => {
                    budget_exhausted = false;
                    break;
                }
            }
        }
        Ok(ExchangeResult {
            indices: idx,
            value,
            trace,
            budget_exhausted,
        })
    }
}

enum DsOwned<'a> {
    Borrowed(&'a DsCache),
    Owned(Box<DsCache>),
}

impl DsOwned<'_> {
    fn get(&self) -> &DsCache {
        match self {
            DsOwned::Borrowed(c) => c,
            DsOwned::Owned(c) => c,
        }
    }
}

/// Cholesky factor of `K[rest, rest]`, extended by one bordered row per
/// candidate.
struct Grower {
    rest: Vec<usize>,
    chol: Option<Cholesky>,
}

impl Grower {
    fn new(k: &DMatrix<f64>, rest: &[usize]) -> Result<Self> {
        let chol = if rest.is_empty() {
            None
        } else {
            Some(Cholesky::new(&principal_submatrix(k, rest))?)
        };
        Ok(Self {
            rest: rest.to_vec(),
            chol,
        })
    }

    /// Factor of `K[rest ∪ c, rest ∪ c]`, or `None` if it is singular.
    fn extend(&self, k: &DMatrix<f64>, c: usize) -> Option<DMatrix<f64>> {
        let n = self.rest.len();
        let kcc = k[(c, c)];
        let mut l = DMatrix::zeros(n + 1, n + 1);
        let mut s2 = kcc;
        if let Some(ch) = &self.chol {
            let kv = DVector::from_iterator(n, self.rest.iter().map(|&j| k[(j, c)]));
            let row = ch.solve_lower(&kv);
            s2 -= row.norm_squared();
            l.view_mut((0, 0), (n, n)).copy_from(ch.l());
            l.view_mut((n, 0), (1, n)).copy_from(&row.transpose());
        }
        if !(s2 > VARIANCE_FLOOR * kcc) {
            return None;
        }
        l[(n, n)] = s2.sqrt();
        Some(l)
    }
}

/// First index of the largest finite value.
fn argmax(v: &[f64]) -> Option<(usize, f64)> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
            Some((_, bv)) if x <= bv => best,
            _ => Some((i, x)),
        })
}
