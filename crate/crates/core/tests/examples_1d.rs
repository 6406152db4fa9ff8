mod common;

use common::*;
use gpdisc::criteria::pred::{phi_kl_point, PointScorer};
use gpdisc::criteria::CriterionId;
use gpdisc::design::Design;

fn leading(a0: f64, a1: f64) -> f64 {
    (a1 - a0).powi(2) * (a1 + a0).powi(3) / (a0 * a1)
}

#[test]
fn scaled_exponential_midpoint_asymptotics() {
    let pair = exp_pair(1.0, 10.0, true);
    let c = leading(1.0, 10.0);
    for (criterion, power, coef) in [
        (CriterionId::PhiA, 4, 0.25 * c),
        (CriterionId::PhiB, 3, 0.25 * c),
        (CriterionId::PhiKlPoint, 3, 0.125 * c),
    ] {
        let mut errs = Vec::new();
        for delta in [1e-2, 1e-3] {
            let v = score_1d(&pair, delta, &criterion, 9.0 * delta);
            errs.push((v / delta.powi(power) / coef - 1.0).abs());
        }
        assert!(errs[1] < 0.02, "{criterion}: {errs:?}");
        assert!(errs[1] < errs[0], "{criterion}: error should shrink with δ, {errs:?}");
    }
}

#[test]
fn unit_variance_exponential_phi_a_asymptotics() {
    let pair = exp_pair(1.0, 10.0, false);
    let coef = 0.5 * (100.0f64 - 1.0).powi(2);
    let delta = 1e-3;
    let v = score_1d(&pair, delta, &CriterionId::PhiA, 9.0 * delta);
    assert!((v / delta.powi(4) / coef - 1.0).abs() < 0.02);
}

#[test]
fn phi_b_ignores_the_variance_scaling() {
    let delta = 0.025;
    for x in [0.013, 0.0251, 0.33] {
        let a = score_1d(&exp_pair(1.0, 10.0, true), delta, &CriterionId::PhiB, x);
        let b = score_1d(&exp_pair(1.0, 10.0, false), delta, &CriterionId::PhiB, x);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-12), "{a} vs {b}");
    }
}

#[test]
fn midpoints_are_maxima_for_small_contrast() {
    let pair = exp_pair(1.0, 2.0, true);
    let spacing = 0.1;
    let design = Design::from_1d(&(0..=10).map(|i| i as f64 * spacing).collect::<Vec<_>>()).unwrap();
    let s = PointScorer::new(&pair, &design).unwrap();
    let xs: Vec<f64> = (1..1000).map(|i| i as f64 * 1e-3).collect();
    let best = xs
        .iter()
        .copied()
        .max_by(|a, b| s.scores(&[*a]).unwrap().phi_a.total_cmp(&s.scores(&[*b]).unwrap().phi_a))
        .unwrap();
    let to_mid = ((best / spacing).fract() - 0.5).abs();
    assert!(to_mid < 0.011, "argmax {best}");
}

#[test]
fn bifurcation_thresholds() {
    let cases = [
        (CriterionId::PhiA, true, 2.600455, 1.5, 5.0),
        (CriterionId::PhiB, true, 2.020178, 1.5, 5.0),
        (CriterionId::PhiKlPoint, true, 7.251623, 3.0, 15.0),
        (CriterionId::PhiA, false, 2.558545, 1.5, 5.0),
    ];
    for (c, scaled, expected, lo, hi) in cases {
        let t = bifurcation(&c, scaled, lo, hi);
        assert!((t - expected).abs() < 1e-3, "{c} scaled={scaled}: {t}");
    }
}

#[test]
fn phi_kl_limit_at_design_points() {
    let pair = exp_pair(1.0, 10.0, false);
    let design = Design::from_1d(&[0.0, 0.5, 1.0]).unwrap();
    let limit = 81.0 / 20.0;
    for x in [0.5 + 1e-6, 0.5 - 1e-6, 1e-6] {
        let v = phi_kl_point(&pair, &design, &[x]).unwrap();
        assert!((v / limit - 1.0).abs() < 1e-3, "{x}: {v}");
    }
    assert_eq!(phi_kl_point(&pair, &design, &[0.5]).unwrap(), 0.0);
}
