use std::f64::consts::{PI, TAU};

use beamspace_core::array::{
    beamspace_transform, capture_lower_bound, energy_capture, locate_on, place_window,
    steering_vector, transform_matrix, window_response, ArrayConfig, ComplexMatrix, ComplexVector,
    SpatialFrequency,
};
use beamspace_core::linalg::HermitianMatrix;
use beamspace_core::receiver::{lmmse_sinr, noise_limited_capture, ReceiverScene};
use beamspace_core::scheduling::{
    circular_distance, max_users, sample_interferer, sample_user_frequencies, GuardPolicy,
};
use beamspace_core::stochastic::{
    desired_at_offset, eigen_report, estimate_mean_interference, jensen_gap, sir_margin,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> ComplexVector {
    ComplexVector::from_fn(dim, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    a.qr().q()
}

fn random_pd(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    HermitianMatrix::symmetrized(a.adjoint() * &a + DMatrix::identity(dim, dim) * Complex64::new(0.05, 0.0))
}

fn array() -> impl Strategy<Value = ArrayConfig> {
    (2usize..=96, 1usize..=2).prop_map(|(n, zp)| ArrayConfig::new(n, zp).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn three_transform_routes_agree(cfg in array(), omega in -PI..PI, w in 1usize..=8) {
        let w = w.min(cfg.n_fft());
        let win = place_window(SpatialFrequency::new(omega), &cfg, w).unwrap();
        let a = steering_vector(omega, cfg.n_antennas());
        let fft = beamspace_transform(&a, &cfg, &win).unwrap();
        let dense = transform_matrix(&cfg, &win) * &a;
        let closed = window_response(omega, &cfg, &win);
        let tol = 1e-9 * (cfg.n_antennas() as f64).sqrt();
        prop_assert!((&fft - &dense).norm() < tol);
        prop_assert!((&fft - &closed).norm() < tol);
    }

    #[test]
    fn full_window_is_an_isometry(cfg in array(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let win = place_window(SpatialFrequency::new(0.0), &cfg, cfg.n_fft()).unwrap();
        let t = transform_matrix(&cfg, &win);
        let gram = t.adjoint() * &t;
        let n = cfg.n_antennas();
        prop_assert!((gram - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-9 * n as f64);
        let x = random_vector(&mut rng, n);
        let y = beamspace_transform(&x, &cfg, &win).unwrap();
        prop_assert!((y.norm() - x.norm()).abs() < 1e-9 * x.norm().max(1.0));
    }

    #[test]
    fn capture_dominates_sinc_bound(n in 2usize..=256, zp in 1usize..=2, w in 1usize..=8, nu in -40.0f64..40.0) {
        let cfg = ArrayConfig::new(n, zp).unwrap();
        prop_assume!(w <= cfg.n_fft());
        let om = SpatialFrequency::from_bins(nu, n);
        let cap = energy_capture(om, &cfg, w).unwrap();
        let bound = capture_lower_bound(w, &locate_on(om, n), zp).unwrap();
        prop_assert!(cap >= bound - 1e-12, "capture {cap} < bound {bound}");
        prop_assert!(cap <= 1.0 + 1e-12);
    }

    #[test]
    fn noise_capture_grows_with_window(n in 8usize..=128, zp in 1usize..=2, delta in 0.0f64..=0.5) {
        let cfg = ArrayConfig::new(n, zp).unwrap();
        let om = SpatialFrequency::from_bins(delta, n);
        let etas: Vec<f64> = (1..=6).map(|w| noise_limited_capture(om, &cfg, w).unwrap()).collect();
        for p in etas.windows(2) {
            prop_assert!(p[1] >= p[0] - 1e-10, "{etas:?}");
        }
        prop_assert!(etas.iter().all(|&e| (0.0..=1.0 + 1e-10).contains(&e)));
    }

    #[test]
    fn adding_an_interferer_never_helps(seed in any::<u64>(), dim in 1usize..=6, k in 0usize..=5, p in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let interferers = (0..k).map(|_| (random_vector(&mut rng, dim), rng.random_range(0.1..10.0))).collect();
        let scene = ReceiverScene::new(random_vector(&mut rng, dim), 1.0, interferers, random_pd(&mut rng, dim)).unwrap();
        let before = lmmse_sinr(&scene).unwrap();
        let after = lmmse_sinr(&scene.with_interferer(random_vector(&mut rng, dim), p).unwrap()).unwrap();
        prop_assert!(after <= before * (1.0 + 1e-9), "{after} > {before}");
    }

    #[test]
    fn sinr_is_unitarily_invariant(seed in any::<u64>(), dim in 1usize..=6, k in 0usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let interferers: Vec<_> = (0..k).map(|_| (random_vector(&mut rng, dim), rng.random_range(0.1..10.0))).collect();
        let desired = random_vector(&mut rng, dim);
        let noise = random_pd(&mut rng, dim);
        let q = random_unitary(&mut rng, dim);
        let rotated_noise = HermitianMatrix::symmetrized(&q * noise.as_matrix() * q.adjoint());
        let rotated = ReceiverScene::new(
            &q * &desired,
            2.0,
            interferers.iter().map(|(u, p)| (&q * u, *p)).collect(),
            rotated_noise,
        ).unwrap();
        let plain = ReceiverScene::new(desired, 2.0, interferers, noise).unwrap();
        let (a, b) = (lmmse_sinr(&plain).unwrap(), lmmse_sinr(&rotated).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn scheduled_users_respect_the_guard(seed in any::<u64>(), n in 8usize..=256, guard in 0.0f64..4.0, frac in 0.0f64..=1.0) {
        let cfg = ArrayConfig::new(n, 1).unwrap();
        let policy = GuardPolicy::narrowband(guard).unwrap();
        let k_max = max_users(n, guard).unwrap_or(n);
        let k = ((k_max as f64 * frac).round() as usize).max(1);
        let oms = sample_user_frequencies(&mut ChaCha8Rng::seed_from_u64(seed), k, &cfg, &policy).unwrap();
        prop_assert_eq!(oms.len(), k);
        let g = policy.guard_radians(n);
        for i in 0..k {
            for j in 0..i {
                let d = circular_distance(oms[i].radians(), oms[j].radians());
                prop_assert!(d >= g - 1e-9, "users {i},{j} at distance {d} < {g}");
            }
        }
    }

    #[test]
    fn interferers_avoid_the_guard(seed in any::<u64>(), n in 4usize..=256, zp in 1usize..=2, guard in 0.0f64..1.9, omega in -PI..PI) {
        let cfg = ArrayConfig::new(n, zp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = guard * cfg.bin_width();
        for _ in 0..64 {
            let om = sample_interferer(&mut rng, SpatialFrequency::new(omega), &cfg, guard).unwrap();
            prop_assert!(circular_distance(om.radians(), omega) >= g - 1e-12);
            prop_assert!((-PI..PI).contains(&om.radians()));
        }
    }

    #[test]
    fn operator_jensen_holds(seed in any::<u64>(), dim in 1usize..=6, size in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ensemble: Vec<_> = (0..size).map(|_| random_pd(&mut rng, dim)).collect();
        let u = random_vector(&mut rng, dim);
        let (lhs, rhs) = jensen_gap(&ensemble, &u).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn margin_equals_eigen_sum(seed in any::<u64>(), zp in 1usize..=2, delta in 0.0f64..=0.5, guard in 0.0f64..3.0) {
        let cfg = ArrayConfig::new(64, zp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = estimate_mean_interference(desired_at_offset(delta, 64), &cfg, 5, guard, &mut rng, 2000).unwrap();
        let u1 = model.desired_signature();
        let direct = sir_margin(&u1, &model).unwrap();
        let rep = eigen_report(&model, &u1).unwrap();
        prop_assert!((rep.margin() - direct).abs() <= 1e-6 * direct, "{} vs {direct}", rep.margin());
        prop_assert!((rep.cumulative_shares.last().unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(rep.cumulative_shares.windows(2).all(|p| p[1] >= p[0]));
        prop_assert!(rep.eigenvalues.iter().sum::<f64>() <= 1.0 + 1e-9);
        prop_assert!(rep.eigenvalues.iter().all(|&l| l > -1e-12));
    }
}

#[test]
fn full_window_unit_mean_interference_circle() {
    // with no guard and the whole grid as window, E[u u^H] = I/N exactly
    let n = 16;
    let cfg = ArrayConfig::new(n, 1).unwrap();
    let win = place_window(SpatialFrequency::new(0.0), &cfg, n).unwrap();
    let t = transform_matrix(&cfg, &win);
    let m = 4096;
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..m {
        let u = &t * steering_vector(TAU * i as f64 / m as f64, n) / Complex64::new((n as f64).sqrt(), 0.0);
        acc += &u * u.adjoint();
    }
    acc /= Complex64::new(m as f64, 0.0);
    let target = DMatrix::<Complex64>::identity(n, n) / Complex64::new(n as f64, 0.0);
    assert!((acc - target).norm() < 1e-12);
}
