use gpdisc::design::{Design, DesignSpace};
use gpdisc::gp::{ml_fit_theta, sample, Predictor};
use gpdisc::kernels::{kernel_matrix, KernelSpec};
use gpdisc::rng::{standard_normals, stream_rng};
use nalgebra::DMatrix;

const SAMPLES: usize = 20_000;

fn empirical_cov(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows[0].len();
    let mut c = DMatrix::zeros(n, n);
    for r in rows {
        for i in 0..n {
            for j in 0..n {
                c[(i, j)] += r[i] * r[j];
            }
        }
    }
    c / rows.len() as f64
}

fn assert_cov_close(got: &DMatrix<f64>, want: &DMatrix<f64>) {
    for (g, w) in got.iter().zip(want.iter()) {
        assert!((g - w).abs() <= 0.05 * w.abs(), "{got} vs {want}");
    }
}

#[test]
fn joint_samples_have_the_kernel_covariance() {
    let k = KernelSpec::matern32(1.0).with_variance(2.0);
    let d = Design::from_1d(&[0.0, 0.5, 1.0]).unwrap();
    let mut rng = stream_rng(11, 0);
    let rows: Vec<Vec<f64>> = (0..SAMPLES).map(|_| sample(&k, &d, &mut rng).unwrap()).collect();
    assert_cov_close(&empirical_cov(&rows), &kernel_matrix(&k, &d).unwrap());
}

#[test]
fn stepwise_conditional_sampling_matches_joint() {
    let k = KernelSpec::matern52(1.3);
    let xs = [0.0, 0.4, 1.1];
    let full = Design::from_1d(&xs).unwrap();
    let mut rng = stream_rng(12, 0);
    let rows: Vec<Vec<f64>> = (0..SAMPLES)
        .map(|_| {
            let mut d = Design::empty(1);
            for &x in &xs {
                let p = Predictor::new(k, d.clone()).unwrap();
                let (m, v) = p.predict(&[x]).unwrap();
                let y = m + v.sqrt() * standard_normals(&mut rng, 1)[0];
                d.push(&[x], Some(y)).unwrap();
            }
            d.observations().unwrap().to_vec()
        })
        .collect();
    assert_cov_close(&empirical_cov(&rows), &kernel_matrix(&k, &full).unwrap());
}

#[test]
fn ml_estimate_is_centred_on_the_truth() {
    let truth = KernelSpec::matern32(1.0);
    let design = DesignSpace::cube(2, 0.0, 10.0)
        .unwrap()
        .with_grid_levels(vec![10, 5])
        .unwrap()
        .grid_design()
        .unwrap();
    assert_eq!(design.len(), 50);
    let mut est: Vec<f64> = (0..100)
        .map(|r| {
            let y = sample(&truth, &design, &mut stream_rng(13, r)).unwrap();
            let d = design.clone().with_observations(y).unwrap();
            ml_fit_theta(&truth, &d, 0.1, 10.0).unwrap().inverse_length
        })
        .collect();
    est.sort_by(f64::total_cmp);
    let median = 0.5 * (est[49] + est[50]);
    assert!((0.8..=1.25).contains(&median), "median {median}");
}
