mod common;

use common::grid_space;
use gpdisc::design::{distance, Design, DesignSpace};
use gpdisc::kernels::{KernelSpec, ModelPair};
use gpdisc::measures::*;
use nalgebra::DMatrix;

fn rotation(angle: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()])
}

fn grid_psi() -> PsiFunction {
    PsiFunction::from_kernels(&ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.07)), true).unwrap()
}

fn matern_unit_psi() -> PsiFunction {
    PsiFunction::from_kernels(&ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.0)), true).unwrap()
}

#[test]
fn simplex_value_with_spike() {
    for d in 1..=3 {
        let psi = PsiFunction::idealised(1.3).unwrap();
        let xi = simplex_measure(d, 1.3, &vec![0.2; d], None).unwrap();
        let v = phi_p_measure(&psi, &xi, 1.0);
        assert!((v - d as f64 / (d + 1) as f64).abs() < 1e-12, "d={d}: {v}");
    }
}

#[test]
fn splitting_a_vertex_gains_psi_of_l() {
    let psi = grid_psi();
    let delta = psi.delta().unwrap();
    for d in 1..=3 {
        for p in [1.0, 2.0, 10.0] {
            let anchor = vec![1.0; d];
            let star = simplex_measure(d, delta, &anchor, None).unwrap();
            let hat = reflected_measure(d, delta, d, &anchor, None).unwrap();
            let l = reflection_distance(d, delta);
            let gain = phi_p_measure(&psi, &hat, p) - phi_p_measure(&psi, &star, p);
            let expect = psi.pow(l, p) / (2.0 * ((d + 1) * (d + 1)) as f64);
            assert!((gain - expect).abs() < 1e-10, "d={d} p={p}: {gain} vs {expect}");
            assert!(gain > 0.0);
        }
    }
}

#[test]
fn reflected_point_violates_the_condition() {
    let psi = grid_psi();
    let delta = psi.delta().unwrap();
    let d = 2;
    let verts = simplex_vertices(d, delta, &[4.0, 4.0], Some(&rotation(0.3))).unwrap();
    let xi = DesignMeasure::uniform(verts.clone()).unwrap();
    for p in [2.0, 10.0] {
        let x_star = reflected_point(&verts, 0);
        let v = delta_xi(&psi, &xi, &x_star, p);
        let expect = psi.pow(reflection_distance(d, delta), p) / (d + 1) as f64;
        assert!((v - expect).abs() < 1e-10, "{v} vs {expect}");
        let mut grid = grid_space(41).grid_design().unwrap();
        grid.push(&x_star, None).unwrap();
        let report = check_necessary_condition(&psi, &xi, &grid, p, CONDITION_TOL).unwrap();
        assert!(!report.pass);
        assert!(report.max_violation >= expect - 1e-12);
    }
}

#[test]
fn simplex_on_trimmed_domain_passes() {
    let psi = matern_unit_psi();
    let delta = psi.delta().unwrap();
    assert!((delta - 0.7).abs() < 1e-2);
    let xi = simplex_measure(2, delta, &[0.0, 0.0], None).unwrap();
    let space = DesignSpace::new(vec![0.0, 0.0], vec![delta, delta * 3f64.sqrt() / 2.0])
        .unwrap()
        .with_grid(41)
        .unwrap();
    let report = check_necessary_condition(&psi, &xi, &space.grid_design().unwrap(), 10.0, CONDITION_TOL).unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.support_residual <= 1e-6);
}

#[test]
fn passing_reports_have_zero_residual_on_the_support() {
    let psi = PsiFunction::idealised(1.0).unwrap();
    for d in 1..=3 {
        let xi = simplex_measure(d, 1.0, &vec![0.0; d], None).unwrap();
        let grid = Design::new(d, xi.support().coords().to_vec()).unwrap();
        let r = check_necessary_condition(&psi, &xi, &grid, 1.0, CONDITION_TOL).unwrap();
        assert!(r.pass);
        assert!(r.support_residual <= 1e-6);
    }
}

fn triangular_lattice(spacing: f64, m: usize) -> Design {
    let h = spacing * 3f64.sqrt() / 2.0;
    let mut pts = Vec::new();
    for j in 0..m {
        for i in 0..m {
            pts.push(vec![i as f64 * spacing + (j % 2) as f64 * spacing / 2.0, j as f64 * h]);
        }
    }
    Design::from_points(&pts).unwrap()
}

#[test]
fn fedorov_wynn_reaches_the_spike_optimum() {
    let psi = PsiFunction::idealised(1.0).unwrap();
    let grid = triangular_lattice(1.0, 12);
    let fw = fedorov_wynn(&psi, &grid, 1.0, 2000, &random_initial(&grid, 0).unwrap()).unwrap();
    let phi = *fw.phi_trace.last().unwrap();
    assert!((phi - 2.0 / 3.0).abs() < 1e-3, "{phi}");
}

#[test]
fn fedorov_wynn_never_decreases() {
    let psi = grid_psi();
    let grid = grid_space(20).grid_design().unwrap();
    for (p, seed) in [(1.0, 1), (2.0, 2), (10.0, 3)] {
        let fw = fedorov_wynn(&psi, &grid, p, 300, &random_initial(&grid, seed).unwrap()).unwrap();
        for w in fw.phi_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs(), "p={p}: {} -> {}", w[0], w[1]);
        }
        let total: f64 = fw.measure.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(fw.measure.weights().iter().all(|&w| w >= FW_PRUNE));
    }
}

#[test]
fn fedorov_wynn_then_refinement_on_the_comparison_grid() {
    let psi = grid_psi();
    let delta = psi.delta().unwrap();
    let space = grid_space(50);
    let grid = space.grid_design().unwrap();
    let init = random_initial(&grid, 0).unwrap();

    let fw = fedorov_wynn(&psi, &grid, 10.0, 1000, &init).unwrap();
    let r = continuous_refine(&psi, &fw.measure, 10.0, &space, &RefineOptions::default()).unwrap();
    assert!(r.phi_after >= r.phi_before);
    let c = clusters(&r.measure, delta);
    assert_eq!(c.len(), 3, "{c:?}");
    for &w in c.weights() {
        assert!((w - 1.0 / 3.0).abs() < 0.02);
    }
    for i in 0..3 {
        for j in 0..i {
            assert!((distance(c.point(i), c.point(j)) - delta).abs() < 0.03);
        }
    }

    let fw = fedorov_wynn(&psi, &grid, 2.0, 1000, &init).unwrap();
    let r = continuous_refine(&psi, &fw.measure, 2.0, &space, &RefineOptions::default()).unwrap();
    assert_eq!(clusters(&r.measure, delta).len(), 9);
}

#[test]
fn refinement_leaves_the_optimum_alone() {
    let psi = matern_unit_psi();
    let delta = psi.delta().unwrap();
    let xi = simplex_measure(2, delta, &[0.0, 0.0], None).unwrap();
    let space = DesignSpace::new(vec![0.0, 0.0], vec![delta, delta * 3f64.sqrt() / 2.0]).unwrap();
    let r = continuous_refine(&psi, &xi, 10.0, &space, &RefineOptions::default()).unwrap();
    for i in 0..3 {
        let moved = (0..r.measure.len())
            .map(|j| distance(xi.point(i), r.measure.point(j)))
            .fold(f64::INFINITY, f64::min);
        assert!(moved < 1e-6, "vertex {i} moved {moved}");
    }
    assert!((r.phi_after - r.phi_before).abs() < 1e-6);
}

#[test]
fn refinement_moves_quantised_vertices_to_exact_edges() {
    let psi = grid_psi();
    let delta = psi.delta().unwrap();
    let verts = simplex_vertices(2, delta, &[4.0, 4.0], Some(&rotation(0.4))).unwrap();
    let step = 0.25;
    let snapped: Vec<Vec<f64>> = verts.points().map(|x| x.iter().map(|v| (v / step).round() * step).collect()).collect();
    let xi = DesignMeasure::uniform(Design::from_points(&snapped).unwrap()).unwrap();
    let space = grid_space(2);
    let r = continuous_refine(&psi, &xi, 10.0, &space, &RefineOptions::default()).unwrap();
    assert!(!r.unchanged);
    assert!(r.phi_after > r.phi_before);
    let m = &r.measure;
    assert_eq!(m.len(), 3);
    for i in 0..3 {
        for j in 0..i {
            assert!((distance(m.point(i), m.point(j)) - delta).abs() < 1e-3);
        }
    }
}

#[test]
fn spike_refinement_is_a_no_op() {
    let psi = PsiFunction::idealised(1.0).unwrap();
    let xi = simplex_measure(2, 1.0, &[0.0, 0.0], None).unwrap();
    let r = continuous_refine(&psi, &xi, 1.0, &grid_space(2), &RefineOptions::default()).unwrap();
    assert!(r.unchanged);
    assert_eq!(r.measure, xi);
}

fn fd_hessian(psi: &PsiFunction, xi: &DesignMeasure, p: f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let f = |y: &[f64]| delta_xi(psi, xi, y, p);
    DMatrix::from_fn(d, d, |i, j| {
        let at = |si: f64, sj: f64| {
            let mut y = x.to_vec();
            y[i] += si * h;
            y[j] += sj * h;
            f(&y)
        };
        (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
    })
}

#[test]
fn vertex_hessian_is_negative_definite_and_matches_fd() {
    let psi = grid_psi();
    let delta = psi.delta().unwrap();
    let xi = simplex_measure(2, delta, &[3.0, 3.0], Some(&rotation(0.2))).unwrap();
    for v in 0..3 {
        let h = vertex_hessian(&psi, &xi, 10.0, v).unwrap();
        assert!(h.concavity_guaranteed);
        assert!(h.eigenvalues.iter().all(|&e| e < 0.0), "{:?}", h.eigenvalues);
        let fd = fd_hessian(&psi, &xi, 10.0, xi.point(v), 1e-4);
        let err = (&fd - &h.matrix).norm() / h.matrix.norm();
        assert!(err < 1e-3, "vertex {v}: relative error {err}");
    }
    assert!(!vertex_hessian(&psi, &xi, 2.0, 0).unwrap().concavity_guaranteed);
}

#[test]
fn small_exponent_rough_pair_has_minima_at_vertices() {
    let pair = ModelPair::new(KernelSpec::exponential(1.0), KernelSpec::matern52(1.0));
    let psi = PsiFunction::from_kernels(&pair, true).unwrap();
    let delta = psi.delta().unwrap();
    assert!((delta - 0.53).abs() < 1e-2);
    let xi = simplex_measure(2, delta, &[1.0, 1.0], None).unwrap();
    let fd = fd_hessian(&psi, &xi, 1.5, xi.point(0), 1e-4);
    let eig = fd.symmetric_eigenvalues();
    assert!(eig.iter().all(|&e| e > 0.0), "{eig:?}");
}

#[test]
fn uniform_measure_calibration() {
    let pair = ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.0));
    let m = 400;
    let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let mu = DesignMeasure::uniform(Design::from_1d(&xs).unwrap()).unwrap();
    let c = calibrate_measure(&pair, &mu, 2.0, 0.5, 3.0, 200).unwrap();
    assert!((c.theta1 - 1.1275).abs() < 1e-3, "{c:?}");
    assert!(!c.at_boundary);
}
