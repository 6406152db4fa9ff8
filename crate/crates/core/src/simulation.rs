//! Monte Carlo hit rates: how often the likelihood ratio picks the model that
//! generated the data.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionId, CRITERION_IDS};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::gp::{gaussian_log_density, log_likelihood, sample_with_factor, sampling_factor};
use crate::kernels::{kernel_matrix, ModelPair};
use crate::linalg::Cholesky;
use crate::rng::{replicate_stream, stream_rng};
use crate::search::{sequential_run, CandidatePool, SequentialConfig, EXCHANGE_PASSES};

/// Log-likelihood differences below this count as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitRateReport {
    pub n: usize,
    pub criterion: String,
    /// Replicates per true model.
    pub replicates: usize,
    pub rate_truth0: f64,
    pub rate_truth1: f64,
    pub average: f64,
    pub seed: u64,
    pub fit_failures: usize,
    /// Not serialized so that reruns produce identical files.
    #[serde(skip)]
    pub wall_time: f64,
}

impl HitRateReport {
    fn new(n: usize, criterion: String, replicates: usize, hits: [f64; 2], seed: u64, fit_failures: usize, wall_time: f64) -> Self {
        let r0 = hits[0] / replicates as f64;
        let r1 = hits[1] / replicates as f64;
        Self {
            n,
            criterion,
            replicates,
            rate_truth0: r0,
            rate_truth1: r1,
            average: 0.5 * (r0 + r1),
            seed,
            fit_failures,
            wall_time,
        }
    }
}

/// Credit for deciding on `ℓ₁ − ℓ₀ = diff` when model `truth` is true.
pub fn classification_score(diff: f64, truth: usize) -> f64 {
    if !diff.is_finite() || diff.abs() < TIE_TOL {
        0.5
    } else if (diff > 0.0) == (truth == 1) {
        1.0
    } else {
        0.0
    }
}

/// Hit rate of a fixed design with both kernels at their nominal parameters.
/// Replicate `r` under truth `t` draws from stream `replicate_stream(t, r)`.
pub fn hit_rate_static(design: &Design, pair: &ModelPair, replicates: usize, seed: u64, label: &str) -> Result<HitRateReport> {
    pair.validate()?;
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    if replicates == 0 {
        return Err(Error::InvalidParameter {
            name: "replicates",
            value: 0.0,
            reason: "need at least one replicate",
        });
    }
    let start = Instant::now();
    let design = design.clone().without_observations();
    let c0 = Cholesky::new(&kernel_matrix(&pair.k0, &design)?)?;
    let c1 = Cholesky::new(&kernel_matrix(&pair.k1, &design)?)?;
    let mut hits = [0.0; 2];
    for (truth, hit) in hits.iter_mut().enumerate() {
        let factor = sampling_factor(pair.kernel(truth), &design)?;
        for r in 0..replicates {
            let mut rng = stream_rng(seed, replicate_stream(truth, r));
            let y = sample_with_factor(&factor, &mut rng);
            let diff = gaussian_log_density(&c1, &y) - gaussian_log_density(&c0, &y);
            *hit += classification_score(diff, truth);
        }
    }
    Ok(HitRateReport::new(
        design.len(),
        label.to_string(),
        replicates,
        hits,
        seed,
        0,
        start.elapsed().as_secs_f64(),
    ))
}

/// Hit rates of the sequential procedure at each size in `sizes`. Each
/// replicate is a single run to the largest size, classified at every
/// requested size by comparing the likelihoods at the fitted inverse lengths
/// (nominal ones when `config.estimate` is off).
pub fn hit_rate_sequential(
    pair: &ModelPair,
    candidates: &Design,
    initial: &Design,
    config: &SequentialConfig,
    sizes: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<HitRateReport>> {
    let &n_max = sizes.iter().max().ok_or(Error::InvalidParameter {
        name: "sizes",
        value: 0.0,
        reason: "no design sizes given",
    })?;
    if let Some(&n) = sizes.iter().find(|&&n| n < initial.len()) {
        return Err(Error::InvalidParameter {
            name: "sizes",
            value: n as f64,
            reason: "smaller than the initial design",
        });
    }
    if replicates == 0 {
        return Err(Error::InvalidParameter {
            name: "replicates",
            value: 0.0,
            reason: "need at least one replicate",
        });
    }
    let start = Instant::now();
    let mut hits = vec![[0.0; 2]; sizes.len()];
    let mut failures = 0;
    for truth in 0..2 {
        let cfg = SequentialConfig { truth, n_max, ..*config };
        for r in 0..replicates {
            let mut rng = stream_rng(seed, replicate_stream(truth, r));
            let run = sequential_run(pair, candidates, initial, &cfg, &mut rng)?;
            failures += run.fit_failures;
            for (k, &n) in sizes.iter().enumerate() {
                let diff = if config.estimate {
                    run.fit_at(n).map_or(f64::NAN, |f| f.log_likelihood_ratio())
                } else {
                    let prefix = run.design.subset(&(0..n).collect::<Vec<_>>());
                    log_likelihood(&pair.k1, &prefix)? - log_likelihood(&pair.k0, &prefix)?
                };
                hits[k][truth] += classification_score(diff, truth);
            }
        }
    }
    let wall = start.elapsed().as_secs_f64();
    Ok(sizes
        .iter()
        .zip(hits)
        .map(|(&n, h)| HitRateReport::new(n, "sequential".into(), replicates, h, seed, failures, wall))
        .collect())
}

/// A row of the hit-rate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TableRow {
    Sequential,
    Criterion(CriterionId),
}

impl TableRow {
    pub fn label(&self) -> String {
        match self {
            TableRow::Sequential => "Sequential".into(),
            TableRow::Criterion(c) => c.label(),
        }
    }

    pub fn id(&self) -> String {
        match self {
            TableRow::Sequential => "sequential".into(),
            TableRow::Criterion(c) => c.to_string(),
        }
    }
}

impl FromStr for TableRow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sequential" {
            return Ok(TableRow::Sequential);
        }
        s.parse().map(TableRow::Criterion).map_err(|_| Error::UnknownId {
            given: s.to_owned(),
            expected: format!("sequential, {CRITERION_IDS}"),
        })
    }
}

/// The rows of the published comparison, top to bottom.
pub fn default_rows() -> Vec<TableRow> {
    use CriterionId::*;
    let mut rows = vec![TableRow::Sequential];
    rows.extend(
        [PhiA, PhiB, PhiKlPoint, PhiF, PhiP(1.0), PhiP(2.0), PhiKl, PhiGamma, CriterionId::ds()]
            .into_iter()
            .map(TableRow::Criterion),
    );
    rows
}

pub const DEFAULT_SIZES: [usize; 10] = [5, 6, 7, 8, 9, 10, 20, 30, 40, 50];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Exchange passes per size for design-level criteria; 0 keeps the
    /// greedy designs.
    pub exchange_passes: usize,
    pub sequential: SequentialConfig,
    pub initial: Design,
}

impl TableConfig {
    pub fn new(initial: Design) -> Self {
        Self {
            replicates: 100,
            seed: 0,
            exchange_passes: EXCHANGE_PASSES,
            sequential: SequentialConfig::default(),
            initial,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub n: usize,
    pub report: Option<HitRateReport>,
    pub error: Option<String>,
    /// Exchange stopped on its pass budget rather than at a local optimum.
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRowResult {
    pub row: TableRow,
    pub cells: Vec<TableCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitRateTable {
    pub sizes: Vec<usize>,
    pub rows: Vec<TableRowResult>,
}

impl HitRateTable {
    pub fn average(&self, row: &str, n: usize) -> Option<f64> {
        let r = self.rows.iter().find(|r| r.row.id() == row)?;
        let c = r.cells.iter().find(|c| c.n == n)?;
        c.report.as_ref().map(|r| r.average)
    }
}

fn cell_error(n: usize, e: &Error) -> TableCell {
    TableCell {
        n,
        report: None,
        error: Some(e.to_string()),
        budget_exhausted: false,
    }
}

/// Hit rates for every row and size. Criterion rows grow one greedy design to
/// the largest size and evaluate its prefixes, improving each prefix by
/// exchange for design-level criteria. Failures are recorded per cell.
pub fn hit_rate_table(rows: &[TableRow], sizes: &[usize], pool: &CandidatePool, config: &TableConfig) -> HitRateTable {
    hit_rate_table_with(rows, sizes, pool, config, |_, _| {})
}

/// [`hit_rate_table`] with a callback after each finished row.
pub fn hit_rate_table_with(
    rows: &[TableRow],
    sizes: &[usize],
    pool: &CandidatePool,
    config: &TableConfig,
    mut progress: impl FnMut(&TableRow, &[TableCell]),
) -> HitRateTable {
    let pair = pool.pair();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let cells = match row {
            TableRow::Sequential => match hit_rate_sequential(
                pair,
                pool.candidates(),
                &config.initial,
                &config.sequential,
                sizes,
                config.replicates,
                config.seed,
            ) {
                Ok(reports) => reports
                    .into_iter()
                    .map(|r| TableCell {
                        n: r.n,
                        report: Some(r),
                        error: None,
                        budget_exhausted: false,
                    })
                    .collect(),
                Err(e) => sizes.iter().map(|&n| cell_error(n, &e)).collect(),
            },
            TableRow::Criterion(c) => criterion_cells(c, sizes, pool, config),
        };
        progress(row, &cells);
        out.push(TableRowResult { row: row.clone(), cells });
    }
    HitRateTable {
        sizes: sizes.to_vec(),
        rows: out,
    }
}

fn criterion_cells(c: &CriterionId, sizes: &[usize], pool: &CandidatePool, config: &TableConfig) -> Vec<TableCell> {
    let n_max = sizes.iter().copied().max().unwrap_or(0);
    let greedy = match pool.greedy(c, n_max) {
        Ok(g) => g,
        Err(e) => return sizes.iter().map(|&n| cell_error(n, &e)).collect(),
    };
    let label = c.to_string();
    sizes
        .iter()
        .map(|&n| {
            let mut idx = greedy.indices[..n].to_vec();
            let mut exhausted = false;
            if !c.is_prediction_based() && config.exchange_passes > 0 {
                match pool.exchange(c, &idx, config.exchange_passes) {
                    Ok(x) => {
                        idx = x.indices;
                        exhausted = x.budget_exhausted;
                    }
                    Err(e) => return cell_error(n, &e),
                }
            }
            match hit_rate_static(&pool.design(&idx), pool.pair(), config.replicates, config.seed, &label) {
                Ok(r) => TableCell {
                    n,
                    report: Some(r),
                    error: None,
                    budget_exhausted: exhausted,
                },
                Err(e) => cell_error(n, &e),
            }
        })
        .collect()
}
