// Randomized invariants. Most strategies draw a seed and build the instance
// with the shared generators so shrinking stays cheap.

mod common;

use common::*;
use num_complex::Complex64;
use nusml::array_model::{
    sample_covariance, source_covariance, steering_vector, ArrayGeometry, HermitianMatrix,
    SnapshotMatrix,
};
use nusml::doa::{dml_criterion, sml_criterion};
use nusml::enumeration::{argmin, eef_scores, enumerate_from_profile, Approach, LprimeProfile};
use nusml::harness::rmse;
use nusml::likelihood::{
    concentrated_criterion, loglik_from_lprime, projector, ModelFit,
};
use nusml::noise_cov::{imlse_estimate, noniterative_estimate, EstimatorOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn steering_entries_have_unit_modulus(m in 2usize..12, psi in -89.9f64..89.9) {
        let a = steering_vector(&ArrayGeometry::ula(m).unwrap(), psi).unwrap();
        for z in a.iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        prop_assert!((a.norm_squared() - m as f64).abs() < 1e-10 * m as f64);
    }

    #[test]
    fn sample_covariance_is_hermitian_psd(seed: u64, m in 1usize..8, n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = SnapshotMatrix::new(complex_normal(&mut rng, m, n)).unwrap();
        let r = sample_covariance(&x);
        let mat = r.as_matrix();
        prop_assert!((mat - mat.adjoint()).norm() <= 1e-12 * mat.norm());
        let eig = r.eigenvalues();
        prop_assert!(eig.last().unwrap() >= &(-1e-10 * eig[0]));
    }

    #[test]
    fn source_covariance_is_positive_definite(q in 1usize..5, power in 0.01f64..100.0, rho in 0.0f64..0.999) {
        let p = source_covariance(q, power, rho).unwrap();
        let smallest = *p.eigenvalues().last().unwrap();
        prop_assert!(smallest > 0.0);
        if q == 2 {
            prop_assert!((smallest - power * (1.0 - rho)).abs() <= 1e-9 * power);
        }
    }

    #[test]
    fn projector_is_an_orthogonal_projection(seed: u64, q in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = complex_normal(&mut rng, 6, q);
        let p = projector(&a).unwrap().into_matrix();
        let scale = 1e-12 * 6.0;
        prop_assert!((&p - p.adjoint()).norm() < scale);
        prop_assert!((&p * &p - &p).norm() < scale);
        prop_assert!((p.trace().re - q as f64).abs() < scale);
        prop_assert!((&p * &a - &a).norm() < scale * a.norm());
    }

    #[test]
    fn criteria_ignore_angle_order(seed: u64, q in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geometry = ArrayGeometry::ula(6).unwrap();
        let psi = random_angles(&mut rng, q, 70.0, 4.0);
        let noise = random_noise(&mut rng, 6);
        let r_hat = random_sample_covariance(&mut rng, 6, 50);
        let reversed: Vec<f64> = psi.iter().rev().copied().collect();
        let sml = sml_criterion(&geometry, &psi, &noise, &r_hat).unwrap();
        let sml_rev = sml_criterion(&geometry, &reversed, &noise, &r_hat).unwrap();
        prop_assert!((sml - sml_rev).abs() <= 1e-9 * (1.0 + sml.abs()));
        let dml = dml_criterion(&geometry, &psi, &noise, &r_hat).unwrap();
        let dml_rev = dml_criterion(&geometry, &reversed, &noise, &r_hat).unwrap();
        prop_assert!((dml - dml_rev).abs() <= 1e-9 * (1.0 + dml.abs()));
        prop_assert!(dml >= -1e-12);
        prop_assert_eq!(
            sml,
            concentrated_criterion(&geometry, &psi, &noise, &r_hat).unwrap()
        );
    }

    #[test]
    fn loglik_and_lprime_are_consistent(lprime in -50.0f64..50.0, n in 1usize..1000, m in 1usize..10) {
        let want = -(n as f64) * m as f64 * std::f64::consts::PI.ln() - n as f64 * lprime;
        prop_assert_eq!(loglik_from_lprime(lprime, n, m), want);
        let fit = ModelFit {
            psi_hat_deg: vec![],
            p_hat: HermitianMatrix::from_real_diagonal(&[]),
            q_hat: uneven_noise(),
            lprime,
        };
        prop_assert_eq!(fit.loglik(n), loglik_from_lprime(lprime, n, 6));
    }

    #[test]
    fn noise_estimates_respect_floor_and_repeat_exactly(seed: u64, q in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r_hat = random_sample_covariance(&mut rng, 6, 20);
        let opts = EstimatorOptions::default();
        let floor = opts.floor_ratio * r_hat.diagonal_re().iter().sum::<f64>() / 6.0;
        for run in [imlse_estimate, noniterative_estimate] {
            let first = run(&r_hat, q, &opts).unwrap();
            let second = run(&r_hat, q, &opts).unwrap();
            prop_assert_eq!(first.q_hat.powers(), second.q_hat.powers());
            prop_assert!(first.iterations >= 1);
            for s in first.q_hat.powers() {
                prop_assert!(s.is_finite() && *s >= floor);
            }
        }
        prop_assert_eq!(noniterative_estimate(&r_hat, q, &opts).unwrap().iterations, 1);
    }

    #[test]
    fn rmse_ignores_run_order(seed: u64, runs in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_angles(&mut rng, 2, 60.0, 5.0);
        let estimates: Vec<Vec<f64>> = (0..runs)
            .map(|i| {
                let noise = complex_normal(&mut rng, 2, 1);
                let mut e = vec![truth[0] + noise[0].re, truth[1] + noise[1].re];
                if i % 2 == 1 {
                    e.reverse();
                }
                e
            })
            .collect();
        let mut shuffled = estimates.clone();
        shuffled.reverse();
        shuffled.rotate_left(runs / 2);
        let a = rmse(&truth, &estimates).unwrap();
        let b = rmse(&truth, &shuffled).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn eef_values_are_gated_or_well_defined(
        drops in prop::collection::vec(0.0f64..2.0, 5),
        n in 10usize..500,
    ) {
        let mut values = vec![20.0];
        for d in &drops {
            values.push(values.last().unwrap() - d);
        }
        let profile = LprimeProfile {
            values: values.clone(),
            approach: Approach::ImlseFactor,
            per_q_fits: vec![None; 6],
        };
        let eef = eef_scores(&profile, n);
        prop_assert_eq!(eef[0], 0.0);
        for (q, score) in eef.iter().enumerate() {
            prop_assert!(score.is_finite());
            let lg = -2.0 * n as f64 * (values[q] - values[0]);
            let k = (q * q + q + 6) as f64;
            if lg / k < 1.0 {
                prop_assert_eq!(*score, 0.0);
            } else {
                prop_assert!(*score >= 0.0);
            }
        }
        let res = enumerate_from_profile(profile, n);
        for q_hat in [res.q_hat_aic, res.q_hat_mdl, res.q_hat_eef] {
            prop_assert!(q_hat < 6);
        }
        prop_assert_eq!(res.aic[res.q_hat_aic], res.aic.iter().copied().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(res.mdl[res.q_hat_mdl], res.mdl.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn argmin_returns_first_smallest(scores in prop::collection::vec(-5i32..5, 1..10)) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let i = argmin(&scores);
        prop_assert!(i < scores.len());
        prop_assert!(scores.iter().all(|&s| s >= scores[i]));
        prop_assert!(scores[..i].iter().all(|&s| s > scores[i]));
    }
}

#[test]
fn complex_normal_helper_has_unit_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = complex_normal(&mut rng, 1, 200_000);
    let power = x.iter().map(Complex64::norm_sqr).sum::<f64>() / 200_000.0;
    assert!((power - 1.0).abs() < 0.01, "{power}");
}
