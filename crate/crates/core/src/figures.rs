//! Data behind the illustrations: score curves, kernel profiles, criterion
//! sweeps and `δ_ξ` surfaces, each as a [`Table`].

use crate::criteria::dist::{calibrate, Calibration, CALIBRATION_GRID};
use crate::criteria::pred::PointScorer;
use crate::criteria::{evaluate, CriterionId};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::io::Table;
use crate::kernels::{find_delta, DeltaPeak, KernelSpec, ModelPair};
use crate::measures::{delta_xi, phi_p_measure, DesignMeasure, PsiFunction};

/// `(α₀, α₁)` of the two panels of the exponential examples.
pub const EXAMPLE_SETTINGS: [(f64, f64); 2] = [(1.0, 10.0), (20.0, 200.0)];

/// Midpoints of the uniform measure on `[0, 1]` used for calibration.
pub const UNIFORM_POINTS: usize = 400;

/// `m` equispaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect(),
    }
}

/// `x_i = i/(n−1)`, `i = 0..n−1`.
pub fn regular_design(n: usize) -> Result<Design> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "need at least two points",
        });
    }
    Design::from_1d(&linspace(0.0, 1.0, n))
}

/// Columns `x1..xd, phi_a, phi_b, phi_kl` at every point of `eval`.
pub fn score_field(pair: &ModelPair, design: &Design, eval: &Design) -> Result<Table> {
    let scorer = PointScorer::new(pair, design)?;
    let mut cols: Vec<String> = if eval.dim() == 1 {
        vec!["x".into()]
    } else {
        (1..=eval.dim()).map(|i| format!("x{i}")).collect()
    };
    cols.extend(["phi_a", "phi_b", "phi_kl"].map(String::from));
    let mut t = Table::new(cols);
    for x in eval.points() {
        let s = scorer.scores(x)?;
        let mut row = x.to_vec();
        row.extend([s.phi_a, s.phi_b, s.phi_kl]);
        t.push(row);
    }
    Ok(t)
}

/// Scores between the first two points of the 11-point regular design for
/// the exponential pair `(α₀, α₁)`; `scaled` selects `e^{−αr}/α`.
pub fn exponential_example(scaled: bool, a0: f64, a1: f64, points: usize) -> Result<Table> {
    let make = if scaled { KernelSpec::exponential_scaled } else { KernelSpec::exponential };
    let pair = ModelPair::new(make(a0), make(a1));
    let design = regular_design(11)?;
    let xs = linspace(design.point(0)[0], design.point(1)[0], points);
    score_field(&pair, &design, &Design::from_1d(&xs)?)
}

/// `ψ(t)` on `[0, t_max]` and its peak.
pub fn psi_curve(pair: &ModelPair, t_max: f64, points: usize) -> Result<(Table, DeltaPeak)> {
    let peak = find_delta(pair, None)?;
    let mut t = Table::new(["t", "psi"]);
    for s in linspace(0.0, t_max, points) {
        t.push(vec![s, pair.psi(s)]);
    }
    Ok((t, peak))
}

/// Radial profiles `K(r)` of several kernels on `[0, r_max]`.
pub fn kernel_profiles(kernels: &[(&str, KernelSpec)], r_max: f64, points: usize) -> Result<Table> {
    for (_, k) in kernels {
        k.validate()?;
    }
    let mut t = Table::new(std::iter::once("r").chain(kernels.iter().map(|(n, _)| *n)));
    for r in linspace(0.0, r_max, points) {
        let mut row = vec![r];
        row.extend(kernels.iter().map(|(_, k)| k.radial(r)));
        t.push(row);
    }
    Ok(t)
}

/// Design-level criteria as functions of model 1's inverse length, each
/// column divided by its maximum when `rescale` is set.
pub fn criterion_sweep(pair: &ModelPair, design: &Design, criteria: &[CriterionId], thetas: &[f64], rescale: bool) -> Result<Table> {
    let mut t = Table::new(std::iter::once("theta".to_string()).chain(criteria.iter().map(|c| c.to_string())));
    for &theta in thetas {
        let moved = ModelPair {
            k1: pair.k1.with_inverse_length(theta),
            ..*pair
        };
        let mut row = vec![theta];
        for c in criteria {
            row.push(evaluate(c, &moved, design)?);
        }
        t.push(row);
    }
    if rescale {
        for j in 1..t.columns.len() {
            let max = t.rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            if max > 0.0 {
                for r in &mut t.rows {
                    r[j] /= max;
                }
            }
        }
    }
    Ok(t)
}

/// `δ_ξ(x)` on an `m × m` grid over `[lower, upper]` in the plane.
pub fn delta_surface(psi: &PsiFunction, xi: &DesignMeasure, p: f64, lower: [f64; 2], upper: [f64; 2], m: usize) -> Result<Table> {
    if xi.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: xi.dim() });
    }
    let mut t = Table::new(["x1", "x2", "delta_xi"]);
    for x2 in linspace(lower[1], upper[1], m) {
        for x1 in linspace(lower[0], upper[0], m) {
            t.push(vec![x1, x2, delta_xi(psi, xi, &[x1, x2], p)]);
        }
    }
    Ok(t)
}

/// Uniform measure on the `m` cell midpoints of `[0, 1]`.
pub fn uniform_midpoints(m: usize) -> Result<DesignMeasure> {
    let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    DesignMeasure::uniform(Design::from_1d(&xs)?)
}

/// Inverse length of model 1 minimising `φ_p` under the uniform measure on
/// `[0, 1]`, searched over `[lo, hi]`.
pub fn uniform_calibration(pair: &ModelPair, p: f64, lo: f64, hi: f64) -> Result<Calibration> {
    let mu = uniform_midpoints(UNIFORM_POINTS)?;
    calibrate(
        |t| {
            let moved = ModelPair {
                k1: pair.k1.with_inverse_length(t),
                ..*pair
            };
            Ok(phi_p_measure(&PsiFunction::raw(&moved)?, &mu, p))
        },
        lo,
        hi,
        CALIBRATION_GRID,
    )
}
