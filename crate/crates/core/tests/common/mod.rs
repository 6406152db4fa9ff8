#![allow(dead_code)]

use gpdisc::criteria::pred::PointScorer;
use gpdisc::criteria::CriterionId;
use gpdisc::design::{Design, DesignSpace};
use gpdisc::kernels::{KernelSpec, ModelPair};

/// Exponential pair with `α₀`, `α₁`; `scaled` selects `e^{−α r}/α`.
pub fn exp_pair(a0: f64, a1: f64, scaled: bool) -> ModelPair {
    if scaled {
        ModelPair::new(KernelSpec::exponential_scaled(a0), KernelSpec::exponential_scaled(a1))
    } else {
        ModelPair::new(KernelSpec::exponential(a0), KernelSpec::exponential(a1))
    }
}

/// Point score at `x` for the design `0, 2δ, …, 20δ` (`δ` is the
/// half-distance between neighbours).
pub fn score_1d(pair: &ModelPair, delta: f64, criterion: &CriterionId, x: f64) -> f64 {
    let design = Design::from_1d(&(0..=10).map(|i| 2.0 * i as f64 * delta).collect::<Vec<_>>()).unwrap();
    let s = PointScorer::new(pair, &design).unwrap();
    s.scores(&[x]).unwrap().get(criterion).unwrap()
}

/// Second difference of the score around the midpoint of `[0, 2]`, so
/// `δ = 1`, with `α₀ = 1` and `α₁ = a1`.
pub fn midpoint_curvature(a1: f64, scaled: bool, criterion: &CriterionId) -> f64 {
    let pair = exp_pair(1.0, a1, scaled);
    let design = Design::from_1d(&[0.0, 2.0]).unwrap();
    let s = PointScorer::new(&pair, &design).unwrap();
    let f = |x: f64| s.scores(&[x]).unwrap().get(criterion).unwrap();
    let h = 1e-3;
    (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h)
}

/// `α₁δ` at which the midpoint turns from a maximum into a local minimum.
pub fn bifurcation(criterion: &CriterionId, scaled: bool, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    assert!(midpoint_curvature(a, scaled, criterion) < 0.0);
    assert!(midpoint_curvature(b, scaled, criterion) > 0.0);
    while b - a > 1e-7 {
        let m = 0.5 * (a + b);
        if midpoint_curvature(m, scaled, criterion) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The two-dimensional comparison setting: Matérn 3/2 with `θ = 1` against
/// Matérn 5/2 with `θ = 1.07` on `[0, 10]²`.
pub fn grid_pair() -> ModelPair {
    ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.07))
}

pub fn grid_space(levels: usize) -> DesignSpace {
    DesignSpace::cube(2, 0.0, 10.0).unwrap().with_grid(levels).unwrap()
}

pub fn corners() -> Design {
    Design::from_points(&[vec![0.0, 0.0], vec![10.0, 10.0]]).unwrap()
}
