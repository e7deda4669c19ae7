//! Acceptance suite for the library layer: each test pins one contract-level
//! property at a stated tolerance and asserts its own runtime budget.
//! Criterion 11 (end-to-end CLI determinism across thread caps) lives in the
//! CLI crate's acceptance target, next to the binary it exercises.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use stepleak::bound::{hcr_bound, s_minus, s_tau, s_tau_eigen, scalar_bound, BiasFunction};
use stepleak::eigen::eigen_structure;
use stepleak::estimator::estimate_change;
use stepleak::monte_carlo::{likelihood_ratio_moment, run_trials, snr};
use stepleak::{DiscreteLtiSystem, EstimatorOptions, StepScenario};

fn assert_budget(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    println!("{name}: {elapsed:?} (budget {budget:?})");
    assert!(
        elapsed < budget,
        "{name} exceeded its runtime budget: {elapsed:?} >= {budget:?}"
    );
}

fn scalar(a: f64, sigma2: f64) -> DiscreteLtiSystem {
    DiscreteLtiSystem::scalar(a, 1.0, 1.0, sigma2, 1.0).unwrap()
}

#[test]
fn criterion_01_scalar_closed_form() {
    let started = Instant::now();
    let report = scalar_bound(1.0, 1.0, 1.0, 1.0, 0, 5).unwrap();
    let expected = 1.0 / 5.0_f64.exp_m1();
    let rel = ((report.bound_steps2 - expected) / expected).abs();
    assert!(
        rel <= 1e-12,
        "closed form mismatch: got {}, expected {expected} (rel {rel:e})",
        report.bound_steps2
    );
    assert_eq!(report.tau_star, 1);
    assert_budget(
        "criterion 01 (closed form)",
        started,
        Duration::from_millis(1),
    );
}

#[test]
fn criterion_02_shift_information_matches_naive_oracle() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5EED_0002);
    let mut checked = 0usize;
    for _ in 0..100 {
        let sys = common::random_stable_system(&mut rng, 4, 0.95, 0.1);
        let horizon = rng.random_range(6..=30);
        let k_star = rng.random_range(0..horizon);
        for tau in 1..=(horizon - k_star) {
            let fast = s_tau(&sys, k_star, horizon, tau).unwrap();
            let naive = common::naive_s_tau(&sys, k_star, horizon, tau);
            let rel = ((fast - naive) / naive).abs();
            assert!(
                rel <= 1e-12,
                "s_tau mismatch (n={}, k*={k_star}, N={horizon}, tau={tau}): \
                 fast {fast}, naive {naive}, rel {rel:e}",
                sys.dim()
            );
            checked += 1;
        }
    }
    println!("criterion 02 checked {checked} (system, tau) pairs");
    assert_budget(
        "criterion 02 (naive oracle)",
        started,
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_03_modal_evaluation_matches_state_space() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5EED_0003);
    for draw in 0..50 {
        let with_complex_pair = draw % 2 == 0;
        let sys = common::random_diagonalizable_system(&mut rng, with_complex_pair);
        let es = eigen_structure(&sys).unwrap();
        let horizon = rng.random_range(8..=20);
        let k_star = rng.random_range(0..horizon);
        for tau in 1..=(horizon - k_star) {
            let direct = s_tau(&sys, k_star, horizon, tau).unwrap();
            let modal = s_tau_eigen(&es, sys.sigma2(), k_star, horizon, tau).unwrap();
            let rel = ((modal - direct) / direct).abs();
            assert!(
                rel <= 1e-8,
                "modal mismatch (draw {draw}, k*={k_star}, N={horizon}, tau={tau}): \
                 direct {direct}, modal {modal}, rel {rel:e}"
            );
        }
    }
    assert_budget("criterion 03 (modal form)", started, Duration::from_secs(5));
}

#[test]
fn criterion_04_likelihood_ratio_identity() {
    let started = Instant::now();

    let rotation = {
        let (s, c) = (30.0_f64.to_radians()).sin_cos();
        DiscreteLtiSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.75 * c, -0.75 * s, 0.75 * s, 0.75 * c]),
            DVector::from_column_slice(&[1.0, 0.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
            10.0,
            1.0,
        )
        .unwrap()
    };
    let two_state = DiscreteLtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.0, 0.3]),
        DVector::from_column_slice(&[1.0, 1.0]),
        DVector::from_column_slice(&[0.5, 0.5]),
        20.0,
        1.0,
    )
    .unwrap();
    // C is orthogonal to every A^j B, so the shift carries no information:
    // the moment and expm1(S) are both exactly zero.
    let dark = DiscreteLtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]),
        DVector::from_column_slice(&[1.0, 0.0]),
        DVector::from_column_slice(&[0.0, 1.0]),
        1.0,
        1.0,
    )
    .unwrap();

    // (system, k*, tau, N); every configuration keeps S <= 1.5 so the
    // sampled moment's own standard error is small and trustworthy.
    let configs: Vec<(DiscreteLtiSystem, usize, usize, usize)> = vec![
        (scalar(0.5, 4.0), 1, 1, 5),
        (scalar(1.0, 25.0), 0, 1, 3),
        (scalar(0.5, 1.0), 2, 1, 5),
        (scalar(0.5, 8.0), 2, 2, 5),
        (scalar(0.3, 2.0), 1, 2, 6),
        (scalar(0.8, 10.0), 3, 1, 8),
        (scalar(0.0, 4.0), 4, 3, 9),
        (two_state, 2, 2, 7),
        (rotation, 1, 1, 6),
        (dark, 1, 2, 6),
    ];
    assert_eq!(configs.len(), 10);

    for (i, (sys, k_star, tau, horizon)) in configs.iter().enumerate() {
        let s = s_tau(sys, *k_star, *horizon, *tau).unwrap();
        let expected = s.exp_m1();
        let lr = likelihood_ratio_moment(sys, *k_star, *tau, *horizon, 100_000, 4001 + i as u64)
            .unwrap();
        let diff = (lr.moment - expected).abs();
        assert!(
            diff <= 3.0 * lr.std_error,
            "config {i}: moment {} vs expm1(S) = {expected} with S = {s} \
             (|diff| = {diff:e}, 3 SE = {:e})",
            lr.moment,
            3.0 * lr.std_error
        );
        println!(
            "criterion 04 config {i}: S = {s:.4}, moment {:.5} vs {expected:.5} (3 SE {:.5})",
            lr.moment,
            3.0 * lr.std_error
        );
    }
    assert_budget(
        "criterion 04 (likelihood ratio)",
        started,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_05_backward_shift_dominates_forward() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5EED_0005);
    for draw in 0..200 {
        let sys = common::random_stable_system(&mut rng, 4, 1.05, 0.0);
        let horizon = rng.random_range(6..=20);
        let k_star = rng.random_range(2..=horizon - 2);
        let max_tau = k_star.min(horizon - k_star);
        let tau = rng.random_range(1..=max_tau);
        let forward = s_tau(&sys, k_star, horizon, tau).unwrap();
        let backward = s_minus(&sys, k_star, horizon, tau).unwrap();
        assert!(
            forward <= backward + 1e-12 * backward.abs().max(1.0),
            "dominance violated on draw {draw} (k*={k_star}, N={horizon}, tau={tau}): \
             S = {forward} > S_minus = {backward}"
        );
    }
    assert_budget("criterion 05 (dominance)", started, Duration::from_secs(5));
}

#[test]
fn criterion_06_integrator_bound_decays_in_horizon() {
    let started = Instant::now();
    let mut previous = f64::INFINITY;
    for horizon in 2..=50 {
        let report = scalar_bound(1.0, 1.0, 1.0, 1.0, 0, horizon).unwrap();
        let value = report.bound_steps2;
        assert!(
            value < previous,
            "bound not strictly decreasing at N = {horizon}: {value} >= {previous}"
        );
        if horizon >= 15 {
            assert!(
                value < 1e-6,
                "bound too large at N = {horizon}: {value} >= 1e-6"
            );
        }
        previous = value;
    }
    assert_budget(
        "criterion 06 (horizon decay)",
        started,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_07_scalar_bound_decreasing_in_pole() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5EED_0007);
    for draw in 0..100 {
        let a1: f64 = rng.random_range(0.01..0.97);
        let a2: f64 = rng.random_range((a1 + 1e-3)..0.99);
        let b = rng.random_range(0.3..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let c = rng.random_range(0.3..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let sigma2 = rng.random_range(0.25..4.0);
        let k_star = rng.random_range(0..=10);
        let horizon = k_star + rng.random_range(2..=20);
        let slow = scalar_bound(a1, b, c, sigma2, k_star, horizon).unwrap();
        let fast = scalar_bound(a2, b, c, sigma2, k_star, horizon).unwrap();
        assert!(
            fast.bound_steps2 < slow.bound_steps2,
            "draw {draw}: bound not strictly decreasing in a \
             (a1={a1}, a2={a2}, k*={k_star}, N={horizon}): {} !< {}",
            fast.bound_steps2,
            slow.bound_steps2
        );
    }
    assert_budget(
        "criterion 07 (pole monotonicity)",
        started,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_08_monte_carlo_variance_respects_bound() {
    let started = Instant::now();

    let two_state = DiscreteLtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.0, 0.3]),
        DVector::from_column_slice(&[1.0, 1.0]),
        DVector::from_column_slice(&[0.5, 0.5]),
        2.0,
        1.0,
    )
    .unwrap();
    let rotation = {
        let (s, c) = (30.0_f64.to_radians()).sin_cos();
        DiscreteLtiSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.75 * c, -0.75 * s, 0.75 * s, 0.75 * c]),
            DVector::from_column_slice(&[1.0, 0.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
            0.5,
            1.0,
        )
        .unwrap()
    };
    let upper_triangular = DiscreteLtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.0, 0.5]),
        DVector::from_column_slice(&[0.5, 1.0]),
        DVector::from_column_slice(&[1.0, 0.3]),
        1.0,
        1.0,
    )
    .unwrap();

    let fixtures: Vec<(DiscreteLtiSystem, usize, usize)> = vec![
        (scalar(0.5, 1.0), 10, 60),
        (scalar(0.5, 1.9), 10, 60),
        (scalar(0.8, 4.0), 8, 60),
        (scalar(0.3, 0.5), 12, 50),
        (scalar(0.9, 12.0), 5, 80),
        (scalar(0.0, 0.3), 10, 40),
        (scalar(0.7, 2.25), 15, 60),
        (two_state, 10, 60),
        (rotation, 10, 50),
        (upper_triangular, 10, 50),
    ];
    assert_eq!(fixtures.len(), 10);

    for (i, (sys, k_star, horizon)) in fixtures.iter().enumerate() {
        let scenario = StepScenario::new(*k_star, *horizon).unwrap();
        let ratio = snr(sys, &scenario).unwrap();
        assert!(
            (2.0..=20.0).contains(&ratio),
            "fixture {i}: SNR {ratio} outside the stated 2..20 range"
        );
        let summary = run_trials(
            sys,
            &scenario,
            2000,
            8000 + i as u64,
            &EstimatorOptions::default(),
        )
        .unwrap();
        let bound = hcr_bound(sys, *k_star, *horizon, &BiasFunction::Zero).unwrap();
        let v = summary.empirical_variance;
        let guard = v + 3.0 * summary.variance_std_error();
        assert!(
            guard >= bound.bound_steps2,
            "fixture {i}: empirical variance {v} (+3 SE = {guard}) \
             below the bound {}",
            bound.bound_steps2
        );
        println!(
            "criterion 08 fixture {i}: SNR {ratio:.2}, V = {v:.4}, bound = {:.4}, margin {:.2}x",
            bound.bound_steps2,
            guard / bound.bound_steps2
        );
    }
    assert_budget(
        "criterion 08 (bound validity)",
        started,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_09_noiseless_recovery_is_exact() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5EED_0009);
    for draw in 0..50 {
        let sys = common::random_stable_system(&mut rng, 4, 0.95, 0.05);
        let horizon = rng.random_range(10..=40);
        let k_star = rng.random_range(1..=horizon - 2);
        let amplitude = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let scenario = StepScenario::new(k_star, horizon)
            .unwrap()
            .with_amplitude(amplitude)
            .unwrap();
        let y = sys.simulate_noiseless(&scenario).unwrap();
        let result = estimate_change(&y, &sys, None, &EstimatorOptions::default()).unwrap();
        assert_eq!(
            result.k_hat, k_star,
            "draw {draw}: recovered {} instead of k* = {k_star} (N = {horizon})",
            result.k_hat
        );
        let err = (result.u_hat - amplitude).abs();
        assert!(
            err <= 1e-10 * amplitude.abs().max(1.0),
            "draw {draw}: amplitude {} vs true {amplitude} (err {err:e})",
            result.u_hat
        );
    }
    assert_budget(
        "criterion 09 (noiseless recovery)",
        started,
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_10_noise_raises_bound_and_variance() {
    let started = Instant::now();
    let quiet = scalar(0.6, 0.25);
    let loud = scalar(0.6, 2.25);
    let scenario = StepScenario::new(10, 60).unwrap();

    let bound_quiet = hcr_bound(&quiet, 10, 60, &BiasFunction::Zero).unwrap();
    let bound_loud = hcr_bound(&loud, 10, 60, &BiasFunction::Zero).unwrap();
    assert!(
        bound_loud.bound_steps2 > bound_quiet.bound_steps2,
        "bound did not increase with sigma2: {} !> {}",
        bound_loud.bound_steps2,
        bound_quiet.bound_steps2
    );

    let trials_quiet =
        run_trials(&quiet, &scenario, 2000, 1010, &EstimatorOptions::default()).unwrap();
    let trials_loud =
        run_trials(&loud, &scenario, 2000, 2020, &EstimatorOptions::default()).unwrap();
    let v1 = trials_quiet.empirical_variance;
    let v2 = trials_loud.empirical_variance;
    let spread = 3.0 * (trials_quiet.variance_std_error() + trials_loud.variance_std_error());
    assert!(
        v2 - v1 > spread,
        "empirical variance increase not significant: {v2} - {v1} <= {spread}"
    );
    println!(
        "criterion 10: bound {:.4} -> {:.4}, V {v1:.4} -> {v2:.4} (3 SE spread {spread:.4})",
        bound_quiet.bound_steps2, bound_loud.bound_steps2
    );
    assert_budget(
        "criterion 10 (noise trend)",
        started,
        Duration::from_secs(60),
    );
}
