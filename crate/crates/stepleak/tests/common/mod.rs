//! Shared fixtures for the integration and acceptance suites: a naive
//! reference implementation of the shift-information sums (dense matrix
//! powers, literal loop transcription) and seeded random system generators.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;
use stepleak::DiscreteLtiSystem;

/// Dense powers A^0..A^max_p, computed by repeated full matrix products —
/// deliberately the opposite strategy from the library's iterated matvecs.
pub fn dense_powers(a: &DMatrix<f64>, max_p: usize) -> Vec<DMatrix<f64>> {
    let n = a.nrows();
    let mut powers = Vec::with_capacity(max_p + 1);
    powers.push(DMatrix::identity(n, n));
    for p in 1..=max_p {
        let next = &powers[p - 1] * a;
        powers.push(next);
    }
    powers
}

fn kernel(powers: &[DMatrix<f64>], c: &DVector<f64>, b: &DVector<f64>, p: usize) -> f64 {
    (c.transpose() * &powers[p] * b)[(0, 0)]
}

/// Literal triple-loop transcription of the forward shift information:
/// S(tau) = (1/sigma2) * sum_{k=k*+1}^{N} ( sum_{l=k*}^{min(k*+tau-1, k-1)}
/// C A^{k-1-l} B )^2.
pub fn naive_s_tau(sys: &DiscreteLtiSystem, k_star: usize, horizon: usize, tau: usize) -> f64 {
    let powers = dense_powers(sys.a(), horizon);
    let mut total = 0.0;
    for k in (k_star + 1)..=horizon {
        let hi = (k_star + tau - 1).min(k - 1);
        let mut inner = 0.0;
        for l in k_star..=hi {
            inner += kernel(&powers, sys.c(), sys.b(), k - 1 - l);
        }
        total += inner * inner;
    }
    total / sys.sigma2()
}

/// Literal transcription of the backward shift information:
/// S_minus(tau) = (1/sigma2) * sum_{k=k*-tau+1}^{N} ( sum_{l=k*-tau}^{min(k*-1, k-1)}
/// C A^{k-1-l} B )^2.
pub fn naive_s_minus(sys: &DiscreteLtiSystem, k_star: usize, horizon: usize, tau: usize) -> f64 {
    let powers = dense_powers(sys.a(), horizon);
    let mut total = 0.0;
    for k in (k_star - tau + 1)..=horizon {
        let hi = (k_star - 1).min(k - 1);
        let mut inner = 0.0;
        for l in (k_star - tau)..=hi {
            inner += kernel(&powers, sys.c(), sys.b(), k - 1 - l);
        }
        total += inner * inner;
    }
    total / sys.sigma2()
}

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max)
}

fn random_vector(rng: &mut StdRng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// A random system with sign-indefinite entries, rescaled so its spectral
/// radius is at most `radius`, with B and C bounded away from zero and
/// `|C B| >= min_cb` (a direct-feedthrough floor that keeps the information
/// sums bounded away from zero, so relative comparisons are well posed).
pub fn random_stable_system(
    rng: &mut StdRng,
    max_n: usize,
    radius: f64,
    min_cb: f64,
) -> DiscreteLtiSystem {
    loop {
        let n = rng.random_range(1..=max_n);
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let rho = spectral_radius(&a);
        if rho > 1e-6 {
            a *= radius * rng.random_range(0.3..=1.0) / rho;
        }
        let b = random_vector(rng, n);
        let c = random_vector(rng, n);
        if b.norm() < 0.1 || c.norm() < 0.1 || c.dot(&b).abs() < min_cb {
            continue;
        }
        let sigma2 = rng.random_range(0.25..4.0);
        if let Ok(sys) = DiscreteLtiSystem::new(a, b, c, sigma2, 1.0) {
            return sys;
        }
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let mut s_max = 0.0_f64;
    let mut s_min = f64::INFINITY;
    for &s in svd.singular_values.iter() {
        s_max = s_max.max(s);
        s_min = s_min.min(s);
    }
    if s_min == 0.0 {
        f64::INFINITY
    } else {
        s_max / s_min
    }
}

/// A random diagonalizable system. Odd draws embed a 2x2 rotation block
/// (complex-conjugate eigenvalue pair) in the spectrum; even draws use
/// well-separated real eigenvalues. The modal basis is conjugated by a
/// random similarity with condition number at most 1e3, so the result is
/// comfortably diagonalizable at working precision.
pub fn random_diagonalizable_system(
    rng: &mut StdRng,
    with_complex_pair: bool,
) -> DiscreteLtiSystem {
    loop {
        let n = rng.random_range(2..=4);
        let mut lambda = DMatrix::zeros(n, n);
        let mut slot = 0;
        if with_complex_pair {
            let r: f64 = rng.random_range(0.3..0.95);
            let theta: f64 = rng.random_range(0.2..2.9);
            let (s, c) = theta.sin_cos();
            lambda[(0, 0)] = r * c;
            lambda[(0, 1)] = -r * s;
            lambda[(1, 0)] = r * s;
            lambda[(1, 1)] = r * c;
            slot = 2;
        }
        let mut reals: Vec<f64> = Vec::new();
        let mut ok = true;
        while slot < n {
            let mut lam = rng.random_range(-0.9..0.9);
            let mut attempts = 0;
            while reals.iter().any(|r| (r - lam).abs() < 0.05) {
                lam = rng.random_range(-0.9..0.9);
                attempts += 1;
                if attempts > 50 {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
            lambda[(slot, slot)] = lam;
            reals.push(lam);
            slot += 1;
        }
        if !ok {
            continue;
        }

        let t = DMatrix::from_fn(n, n, |i, j| {
            rng.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 }
        });
        if condition_number(&t) > 50.0 {
            continue;
        }
        let Some(t_inv) = t.clone().try_inverse() else {
            continue;
        };
        let a = &t * lambda * t_inv;

        let b = random_vector(rng, n);
        let c = random_vector(rng, n);
        if b.norm() < 0.1 || c.norm() < 0.1 {
            continue;
        }
        // A direct-feedthrough floor keeps every shift-information value
        // bounded below by (C B)^2 / sigma2, so relative comparisons between
        // the state-space and modal evaluations are well conditioned.
        if c.dot(&b).abs() < 0.2 {
            continue;
        }
        let sigma2 = rng.random_range(0.25..2.0);
        if let Ok(sys) = DiscreteLtiSystem::new(a, b, c, sigma2, 1.0) {
            return sys;
        }
    }
}
