//! Projection methods and the schedule driver.

mod common;

use common::{instance, start};
use redita::denoise::DenoiserSpec;
use redita::fourier::{amplitude_loss, project_measurement};
use redita::grid::{ComplexField, ConstraintSet};
use redita::solvers::*;

#[test]
fn error_reduction_never_increases_the_set_distance() {
    let (_, map, meas) = instance("portrait", 16, 3.0);
    for constraint in [
        ConstraintSet::Support(map.support()),
        ConstraintSet::SupportAndNonneg(map.support()),
    ] {
        let mut x = start(&map, 11);
        let mut previous = f64::INFINITY;
        for k in 0..100 {
            // ‖x − Π_M(x)‖ for x ∈ C, the ER merit function.
            let d = x
                .sub(&project_measurement(&x, &meas).unwrap())
                .unwrap()
                .norm();
            assert!(
                d <= previous * (1.0 + 1e-12),
                "iteration {k}: {d} > {previous}"
            );
            previous = d;
            x = er_step(&x, &meas, &constraint).unwrap();
        }
    }
}

#[test]
fn oss_limits() {
    let (_, map, meas) = instance("blobs", 12, 0.0);
    let c = ConstraintSet::Support(map.support());
    let x = start(&map, 12);
    let hio = hio_step(&x, &meas, &c, 0.9).unwrap();
    assert_eq!(oss_step(&x, &meas, &c, 0.9, f64::INFINITY).unwrap(), hio);

    // A very wide Gaussian leaves the spectrum alone.
    let wide = oss_step(&x, &meas, &c, 0.9, 1e9).unwrap();
    assert!(wide.max_abs_diff(&hio).unwrap() <= 1e-9 * hio.norm());

    // A very narrow one keeps only the mean outside the support.
    let narrow = oss_step(&x, &meas, &c, 0.9, 1e-3).unwrap();
    let side = map.padded_side();
    let mean = hio.values().iter().sum::<redita::Complex64>() / (side * side) as f64;
    for r in 0..side {
        for col in 0..side {
            let (v, h) = (narrow.get(r, col), hio.get(r, col));
            if r < map.object_side() && col < map.object_side() {
                assert_eq!(v, h);
            } else {
                assert!((v - mean).norm() <= 1e-9 * mean.norm().max(1.0));
            }
        }
    }
    assert!(oss_step(&x, &meas, &c, 0.9, 0.0).is_err());
}

#[test]
fn oss_filter_widths_decay_over_ten_stages() {
    let widths: Vec<f64> = (0..100).map(|i| oss_filter_sigma(i, 100, 10, 64)).collect();
    assert_eq!(widths[0], 64.0);
    assert!((widths[99] - 6.4).abs() < 1e-12);
    assert!(widths.windows(2).all(|w| w[1] <= w[0]));
    let mut distinct = widths.clone();
    distinct.dedup();
    assert_eq!(distinct.len(), 10);
}

#[test]
fn lowpass_is_linear_and_preserves_the_mean() {
    let a = common::random_field(1, 8, 5.0);
    let b = common::random_field(2, 8, 5.0);
    let lhs = lowpass(&a.add(&b.scale(2.0)).unwrap(), 1.5);
    let rhs = lowpass(&a, 1.5).add(&lowpass(&b, 1.5).scale(2.0)).unwrap();
    assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    let sum = |f: &ComplexField| f.values().iter().sum::<redita::Complex64>();
    assert!((sum(&lowpass(&a, 0.7)) - sum(&a)).norm() <= 1e-10);
}

#[test]
fn schedule_switches_strength_between_stages() {
    let (_, map, meas) = instance("tiles", 12, 4.0);
    let mut cfg = SolverConfig::new(Algorithm::RedItaF, DenoiserSpec::tv(0.5, 5, 0.0), 0);
    cfg.schedule = vec![Stage::new(60.0, 2), Stage::new(40.0, 2)];
    let init = SolverState::from_field(&start(&map, 13), &map).unwrap();
    let mut events = Vec::new();
    let run = run_solver_observed(&init, &cfg, &meas, &map, |e| events.push(*e)).unwrap();
    assert_eq!(run.iterations, 4);
    assert_eq!(run.stage_residuals.len(), 2);
    let sigmas: Vec<f64> = events.iter().map(|e| e.sigma).collect();
    assert_eq!(sigmas, vec![60.0, 60.0, 40.0, 40.0]);
    let stages: Vec<usize> = events.iter().map(|e| e.stage).collect();
    assert_eq!(stages, vec![0, 0, 1, 1]);
    let s2 = meas.sigma_bar().powi(2);
    for e in &events {
        assert!((e.lambda - 0.025 * s2).abs() <= 1e-12 * e.lambda);
        assert_eq!(e.rho, e.lambda / 2.0);
    }
    assert!((run.stage_residuals[1] - residual(&run.image, &meas, &map).unwrap()).abs() <= 1e-9);
}

#[test]
fn default_schedule_splits_evenly() {
    let s = default_schedule(1200);
    let pairs: Vec<(f64, usize)> = s.iter().map(|s| (s.sigma, s.iterations)).collect();
    assert_eq!(
        pairs,
        vec![(60.0, 300), (40.0, 300), (20.0, 300), (10.0, 300)]
    );
    let s = default_schedule(6);
    assert_eq!(
        s.iter().map(|s| s.iterations).collect::<Vec<_>>(),
        vec![2, 2, 1, 1]
    );
    assert!(default_schedule(0).is_empty());
}

#[test]
fn every_solver_runs_from_random_and_zero_starts() {
    let (_, map, meas) = instance("circles", 12, 2.0);
    for algorithm in Algorithm::ALL {
        let cfg = SolverConfig::new(algorithm, DenoiserSpec::tv(0.5, 5, 0.0), 8);
        for init in [start(&map, 14), ComplexField::zeros(map.padded_side())] {
            let state = SolverState::from_field(&init, &map).unwrap();
            let run = run_solver(&state, &cfg, &meas, &map).unwrap();
            assert_eq!(run.iterations, 8, "{algorithm}");
            assert!(run.image.is_finite(), "{algorithm}");
            let f = amplitude_loss(&map.embed(&run.image).unwrap(), &meas).unwrap();
            assert!(f.is_finite());
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let (_, map, meas) = instance("text", 12, 6.0);
    let init = SolverState::from_field(&start(&map, 15), &map).unwrap();
    for algorithm in [Algorithm::RedItaS, Algorithm::Oss, Algorithm::PrRed] {
        let cfg = SolverConfig::new(algorithm, DenoiserSpec::tv(0.5, 5, 0.0), 12);
        let a = run_solver(&init, &cfg, &meas, &map).unwrap();
        let b = run_solver(&init, &cfg, &meas, &map).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.state, b.state);
    }
}
