//! Seeded, parallel, bit-reproducible trial ensembles and the
//! likelihood-ratio oracle.
//!
//! [`run_trials`] drives the full loop — simulate noisy data, estimate the
//! change time, aggregate — with one master seed spawning an independent
//! per-trial substream, so results are bit-identical for any degree of
//! parallelism. [`likelihood_ratio_moment`] estimates
//! `E[(P(Y | k* + tau) / P(Y | k*) - 1)^2]` by direct sampling, which is the
//! quantity the variance bound's denominator `e^S - 1` evaluates in closed
//! form; comparing the two validates that identity end to end.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::bound::s_tau;
use crate::error::{Error, Result};
use crate::estimator::{estimate_change, step_signature, EstimatorOptions};
use crate::lti::{DiscreteLtiSystem, StepScenario};

/// Aggregate of a seeded trial ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    /// Number of trials requested (and run).
    pub n_trials: u64,
    /// Empirical variance of the change-time estimates, in `steps^2`,
    /// computed about the empirical mean (not about the true `k*`).
    /// Population convention (divides by the number of kept trials).
    pub empirical_variance: f64,
    /// Empirical bias: mean estimate minus the true `k*`, in steps.
    pub empirical_bias: f64,
    /// Estimate histogram: `k_hat -> count`, kept trials only.
    pub histogram: BTreeMap<usize, u64>,
    /// The master seed the ensemble was derived from.
    pub master_seed: u64,
    /// Trials whose estimation failed (every candidate excluded); these are
    /// counted, not imputed.
    pub excluded_trials: u64,
}

impl TrialSummary {
    /// Number of trials that produced an estimate.
    pub fn kept_trials(&self) -> u64 {
        self.histogram.values().sum()
    }

    /// Empirical mean of the kept estimates, in steps.
    pub fn empirical_mean(&self) -> f64 {
        let kept = self.kept_trials();
        if kept == 0 {
            return 0.0;
        }
        let sum: f64 = self
            .histogram
            .iter()
            .map(|(&k, &c)| k as f64 * c as f64)
            .sum();
        sum / kept as f64
    }

    /// Standard error of the empirical variance via the standard
    /// fourth-moment estimate: `sqrt((m4 - V^2) / n)` with central moments
    /// taken about the empirical mean.
    pub fn variance_std_error(&self) -> f64 {
        let kept = self.kept_trials();
        if kept == 0 {
            return 0.0;
        }
        let mean = self.empirical_mean();
        let m4: f64 = self
            .histogram
            .iter()
            .map(|(&k, &c)| {
                let d = k as f64 - mean;
                c as f64 * d * d * d * d
            })
            .sum::<f64>()
            / kept as f64;
        let var = self.empirical_variance;
        ((m4 - var * var).max(0.0) / kept as f64).sqrt()
    }
}

/// Derives the per-trial RNG seed from the master seed and trial index via
/// a SplitMix64-style finalizer, giving every trial an independent,
/// order-free substream.
pub fn substream_seed(master_seed: u64, trial_index: u64) -> u64 {
    let mut z = master_seed ^ trial_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `n_trials` independent simulate-then-estimate trials and aggregates
/// the estimates.
///
/// Trial `i` simulates noisy data with the substream seed
/// [`substream_seed`]`(master_seed, i)` and feeds it to the estimator with
/// the scenario's initial state as known side information. Trials execute
/// in parallel (bounded by the ambient rayon pool), and the aggregate is a
/// pure function of `(sys, scenario, n_trials, master_seed, options)` — the
/// same inputs give a bit-identical summary at any thread count.
pub fn run_trials(
    sys: &DiscreteLtiSystem,
    scenario: &StepScenario,
    n_trials: u64,
    master_seed: u64,
    options: &EstimatorOptions,
) -> Result<TrialSummary> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be at least 1".into()));
    }
    if sys.sigma2() <= 0.0 {
        return Err(Error::NumericDomain(
            "noise variance must be positive for Monte Carlo trials".into(),
        ));
    }
    // Validate the configuration once, up front, so the only error that can
    // occur inside a trial is the estimator's all-candidates-excluded
    // failure (which is counted, not propagated).
    sys.simulate_noiseless(scenario)?;
    if let Some(set) = &options.candidates {
        if set.is_empty() {
            return Err(Error::InvalidInput("candidate set is empty".into()));
        }
        if let Some(&bad) = set.iter().find(|&&k| k >= scenario.horizon()) {
            return Err(Error::InvalidInput(format!(
                "candidate change time {bad} is out of range (must be < N = {})",
                scenario.horizon()
            )));
        }
    }

    let estimates: Vec<Option<usize>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = substream_seed(master_seed, i);
            let y = sys
                .simulate_noisy(scenario, seed)
                .expect("simulation preconditions validated before the trial loop");
            estimate_change(&y, sys, scenario.x0(), options)
                .ok()
                .map(|r| r.k_hat)
        })
        .collect();

    let mut histogram = BTreeMap::new();
    let mut excluded_trials = 0u64;
    for e in estimates {
        match e {
            Some(k_hat) => *histogram.entry(k_hat).or_insert(0u64) += 1,
            None => excluded_trials += 1,
        }
    }

    let kept: u64 = histogram.values().sum();
    let (empirical_variance, empirical_bias) = if kept == 0 {
        (0.0, 0.0)
    } else {
        let mean = histogram
            .iter()
            .map(|(&k, &c)| k as f64 * c as f64)
            .sum::<f64>()
            / kept as f64;
        let var = histogram
            .iter()
            .map(|(&k, &c)| {
                let d = k as f64 - mean;
                c as f64 * d * d
            })
            .sum::<f64>()
            / kept as f64;
        (var, mean - scenario.k_star() as f64)
    };

    Ok(TrialSummary {
        n_trials,
        empirical_variance,
        empirical_bias,
        histogram,
        master_seed,
        excluded_trials,
    })
}

/// Signal-to-noise ratio of a scenario: the peak noiseless output deviation
/// (step response minus free response), squared, over the noise variance.
pub fn snr(sys: &DiscreteLtiSystem, scenario: &StepScenario) -> Result<f64> {
    if sys.sigma2() <= 0.0 {
        return Err(Error::NumericDomain(
            "noise variance must be positive to define an SNR".into(),
        ));
    }
    let with_step = sys.simulate_noiseless(scenario)?;
    let free = sys.free_response(scenario.x0(), scenario.horizon())?;
    let peak = with_step
        .values()
        .iter()
        .zip(&free)
        .map(|(y, f)| (y - f).abs())
        .fold(0.0_f64, f64::max);
    Ok(peak * peak / sys.sigma2())
}

/// A sampled likelihood-ratio moment with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrMoment {
    /// Sample mean of `(P(Y | k* + tau) / P(Y | k*) - 1)^2` under
    /// `Y ~ P(. | k*)`.
    pub moment: f64,
    /// Standard error of the sample mean.
    pub std_error: f64,
    /// Number of samples drawn.
    pub n_samples: u64,
}

/// Guard: the moment estimator's variance explodes beyond this shift
/// information.
const LR_MAX_S: f64 = 5.0;
/// Guard: horizons above this make each sample needlessly expensive for an
/// oracle meant to validate algebra at small scale.
const LR_MAX_HORIZON: usize = 10;
/// Guard: minimum sample count for a meaningful standard error.
const LR_MIN_SAMPLES: u64 = 100_000;

/// Estimates `E[(P(Y | k* + tau) / P(Y | k*) - 1)^2 | k*]` by direct
/// sampling of unit-amplitude hypotheses with zero initial state.
///
/// The closed form of this moment is `e^{S(tau)} - 1`; the sampled value is
/// used solely as an oracle for that identity. Guards (`S <= 5`, `N <= 10`,
/// `n_samples >= 1e5`) keep the estimator in the regime where its own Monte
/// Carlo error is meaningful.
pub fn likelihood_ratio_moment(
    sys: &DiscreteLtiSystem,
    k_star: usize,
    tau: usize,
    horizon: usize,
    n_samples: u64,
    seed: u64,
) -> Result<LrMoment> {
    if horizon > LR_MAX_HORIZON {
        return Err(Error::NumericDomain(format!(
            "likelihood-ratio oracle guard: horizon N = {horizon} exceeds {LR_MAX_HORIZON}"
        )));
    }
    if n_samples < LR_MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "likelihood-ratio oracle guard: n_samples = {n_samples} is below {LR_MIN_SAMPLES}"
        )));
    }
    let s = s_tau(sys, k_star, horizon, tau)?;
    if s > LR_MAX_S {
        return Err(Error::NumericDomain(format!(
            "likelihood-ratio oracle guard: S(tau) = {s:.3} exceeds {LR_MAX_S} \
             (the moment estimator's variance explodes)"
        )));
    }

    // Unit-amplitude hypothesis means, zero initial state. A change at
    // kappa = N (the tau = N - k* shift) affects nothing in the window.
    let response = |kappa: usize| -> Result<Vec<f64>> {
        if kappa < horizon {
            step_signature(sys, kappa, horizon)
        } else {
            Ok(vec![0.0; horizon + 1])
        }
    };
    let mu0 = response(k_star)?;
    let mu1 = response(k_star + tau)?;

    let sigma2 = sys.sigma2();
    let sigma = sigma2.sqrt();
    let normal = Normal::new(0.0, sigma).expect("sigma validated finite and positive");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut y = vec![0.0; horizon + 1];
    for _ in 0..n_samples {
        for (yk, m0) in y.iter_mut().zip(&mu0) {
            *yk = m0 + normal.sample(&mut rng);
        }
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for ((yk, m0), m1) in y.iter().zip(&mu0).zip(&mu1) {
            let e0 = yk - m0;
            let e1 = yk - m1;
            d0 += e0 * e0;
            d1 += e1 * e1;
        }
        let log_ratio = (d0 - d1) / (2.0 * sigma2);
        // (P1/P0 - 1)^2 computed as expm1(log_ratio)^2 for precision near 1.
        let v = log_ratio.exp_m1();
        let w = v * v;
        sum += w;
        sum_sq += w * w;
    }
    let n = n_samples as f64;
    let moment = sum / n;
    let sample_var = (sum_sq / n - moment * moment).max(0.0);
    Ok(LrMoment {
        moment,
        std_error: (sample_var / n).sqrt(),
        n_samples,
    })
}
