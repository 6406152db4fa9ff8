use gpdisc::criteria::dist::{frechet_matrices, phi_kl, phi_p, phi_upper};
use gpdisc::criteria::pred::phi_kl_point;
use gpdisc::design::{distance, Design};
use gpdisc::gp::{cross_mse, PairPredictor};
use gpdisc::kernels::{KernelSpec, ModelPair};
use gpdisc::measures::{directional_derivative, phi_p_measure, DesignMeasure, PsiFunction};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = KernelSpec> {
    (0usize..4, 0.4f64..2.0, 0.5f64..2.0).prop_map(|(f, t, s)| {
        match f {
            0 => KernelSpec::matern32(t),
            1 => KernelSpec::matern52(t),
            2 => KernelSpec::exponential(t),
            _ => KernelSpec::matern(2.2, t),
        }
        .with_variance(s)
    })
}

fn pair() -> impl Strategy<Value = ModelPair> {
    (kernel(), kernel()).prop_map(|(a, b)| ModelPair::new(a, b))
}

fn separated(n: usize) -> impl Strategy<Value = Design> {
    prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), n)
        .prop_map(|v| Design::from_points(&v.into_iter().map(|(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap())
        .prop_filter("points too close", |d| {
            (0..d.len()).all(|i| (0..i).all(|j| distance(d.point(i), d.point(j)) > 0.3))
        })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kl_increment_is_the_point_score(p in pair(), d in separated(5)) {
        let rest = d.subset(&[0, 1, 2, 3]);
        let x = d.point(4);
        let inc = phi_kl(&p, &d).unwrap() - phi_kl(&p, &rest).unwrap();
        let point = phi_kl_point(&p, &rest, x).unwrap();
        prop_assert!((inc - point).abs() <= 1e-8 * point.abs().max(1.0), "{inc} vs {point}");
    }

    #[test]
    fn design_sum_is_n_squared_measure(p in pair(), d in separated(6), q in 0.5f64..4.0) {
        let xi = DesignMeasure::empirical(&d).unwrap();
        let psi = PsiFunction::raw(&p).unwrap();
        let n = d.len() as f64;
        let lhs = phi_p(&p, &d, q).unwrap();
        let rhs = n * n * phi_p_measure(&psi, &xi, q);
        prop_assert!(close(lhs, rhs, 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn upper_bound_is_quarter_kl_at_equal_priors(p in pair(), d in separated(4)) {
        let u = phi_upper(&p, &d).unwrap();
        let kl = phi_kl(&p, &d).unwrap();
        prop_assert!(close(u, kl / 4.0, 1e-10), "{u} vs {}", kl / 4.0);
    }

    #[test]
    fn stein_ratio(p in pair(), d in separated(5), x in (0.0f64..5.0, 0.0f64..5.0)) {
        let x = [x.0, x.1];
        prop_assume!(d.min_distance_to(&x) > 0.05);
        let e00 = cross_mse(&p, &d, 0, 0, &x).unwrap();
        let e01 = cross_mse(&p, &d, 0, 1, &x).unwrap();
        let m = PairPredictor::new(&p, &d).unwrap().cross_mse(&x).unwrap();
        let lhs = e01 / e00;
        let rhs = 1.0 + m.dk0d / m.e00;
        prop_assert!(close(lhs, rhs, 1e-8), "{lhs} vs {rhs}");
    }

    #[test]
    fn frechet_commuting_closed_form(
        angle in 0.0f64..std::f64::consts::PI,
        a in prop::collection::vec(0.1f64..3.0, 2),
        b in prop::collection::vec(0.1f64..3.0, 2),
    ) {
        let q = DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()]);
        let k0 = &q * DMatrix::from_diagonal(&DVector::from_vec(a.clone())) * q.transpose();
        let k1 = &q * DMatrix::from_diagonal(&DVector::from_vec(b.clone())) * q.transpose();
        let expect: f64 = a.iter().zip(&b).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum();
        let got = frechet_matrices(&k0, &k1).unwrap();
        prop_assert!((got - expect).abs() <= 1e-10 * expect.max(1.0), "{got} vs {expect}");
    }

    #[test]
    fn frechet_matches_general_eigensolver(seed in prop::collection::vec(-1.0f64..1.0, 18)) {
        let a = DMatrix::from_row_slice(3, 3, &seed[..9]);
        let b = DMatrix::from_row_slice(3, 3, &seed[9..]);
        let k0 = &a * a.transpose() + DMatrix::identity(3, 3) * 0.5;
        let k1 = &b * b.transpose() + DMatrix::identity(3, 3) * 0.5;
        let eig = (&k0 * &k1).complex_eigenvalues();
        let cross: f64 = eig.iter().map(|z| z.re.sqrt()).sum();
        let expect = k0.trace() + k1.trace() - 2.0 * cross;
        let got = frechet_matrices(&k0, &k1).unwrap();
        prop_assert!((got - expect).abs() <= 1e-8 * expect.abs().max(1.0), "{got} vs {expect}");
    }

    #[test]
    fn phi_p_measure_is_isotropic(d in separated(5), shift in (-3.0f64..3.0, -3.0f64..3.0), angle in 0.0f64..6.3) {
        let p = ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.07));
        let psi = PsiFunction::from_kernels(&p, true).unwrap();
        let xi = DesignMeasure::empirical(&d).unwrap();
        let moved: Vec<Vec<f64>> = d
            .points()
            .map(|x| {
                let (c, s) = (angle.cos(), angle.sin());
                vec![c * x[0] - s * x[1] + shift.0, s * x[0] + c * x[1] + shift.1]
            })
            .collect();
        let xi2 = DesignMeasure::empirical(&Design::from_points(&moved).unwrap()).unwrap();
        let a = phi_p_measure(&psi, &xi, 3.0);
        let b = phi_p_measure(&psi, &xi2, 3.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn directional_derivative_matches_finite_difference(d in separated(4), x in (0.0f64..5.0, 0.0f64..5.0), q in 1.0f64..6.0) {
        let p = ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.07));
        let psi = PsiFunction::from_kernels(&p, true).unwrap();
        let xi = DesignMeasure::new(d.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let x = [x.0, x.1];
        prop_assume!(d.min_distance_to(&x) > 1e-3);
        let alpha = 1e-6;
        let mut pts = d.clone();
        pts.push(&x, None).unwrap();
        let mut w: Vec<f64> = xi.weights().iter().map(|v| v * (1.0 - alpha)).collect();
        w.push(alpha);
        let mixed = DesignMeasure::new(pts, w).unwrap();
        let fd = (phi_p_measure(&psi, &mixed, q) - phi_p_measure(&psi, &xi, q)) / alpha;
        let exact = directional_derivative(&psi, &xi, &x, q);
        prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1e-2), "{fd} vs {exact}");
    }
}
