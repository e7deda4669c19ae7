//! The least-squares change-point adversary.
//!
//! Given measurements `y_0 ..= y_N`, a known model, and a known initial
//! state, the estimator scans candidate change times `kappa`, fits the step
//! amplitude for each candidate by least squares (or holds it fixed), and
//! returns the candidate minimizing the squared residual:
//!
//! ```text
//! r_k          = y_k - C A^k x0                       (free response removed)
//! u_hat(kappa) = sum_k r_k s_k(kappa) / sum_k s_k(kappa)^2
//! R(kappa)     = sum_k (r_k - u_hat(kappa) s_k(kappa))^2
//! k_hat        = argmin_kappa R(kappa)
//! ```
//!
//! where `s(kappa)` is the unit step signature of [`step_signature`]. Ties
//! are broken toward the smallest candidate for determinism.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lti::{DiscreteLtiSystem, MeasurementSeries};

/// How the step amplitude is treated during candidate fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeMode {
    /// Fit the amplitude per candidate by least squares.
    LeastSquares,
    /// Hold the amplitude fixed at the given value for every candidate.
    Fixed(f64),
}

/// Configuration for [`estimate_change`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOptions {
    /// Amplitude handling (default: least squares).
    pub mode: AmplitudeMode,
    /// Candidate change times to scan; `None` scans the full `{0, ..., N-1}`.
    pub candidates: Option<Vec<usize>>,
    /// Also evaluate the no-change hypothesis `R(none) = sum_k r_k^2` and
    /// record it in [`EstimationResult::null_residual`]. The returned
    /// `k_hat` always comes from the candidate set; use
    /// [`EstimationResult::no_change_preferred`] to compare.
    pub include_null: bool,
    /// Clamp least-squares amplitudes into `[0, 1]` (the constrained
    /// fit for unit steps). Off by default; ignored in fixed mode.
    pub clamp_unit: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            mode: AmplitudeMode::LeastSquares,
            candidates: None,
            include_null: false,
            clamp_unit: false,
        }
    }
}

/// One fitted candidate: the change time, its amplitude fit, and its
/// residual.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFit {
    /// Candidate change time `kappa`.
    pub kappa: usize,
    /// Amplitude fit `u_hat(kappa)`.
    pub u_hat: f64,
    /// Squared residual `R(kappa)`.
    pub residual: f64,
}

/// The estimator's output: the winning candidate plus the full residual
/// table.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// Estimated change time (always a member of `candidate_set`).
    pub k_hat: usize,
    /// Estimated amplitude at `k_hat`.
    pub u_hat: f64,
    /// Per-candidate fits in ascending `kappa`, excluded candidates omitted.
    pub residuals: Vec<CandidateFit>,
    /// Every candidate that was scanned (ascending).
    pub candidate_set: Vec<usize>,
    /// Candidates excluded because their signature is identically zero and
    /// the amplitude would be unidentifiable (least-squares mode only).
    pub excluded: Vec<usize>,
    /// Residual of the no-change hypothesis, when requested.
    pub null_residual: Option<f64>,
}

impl EstimationResult {
    /// The winning candidate's fit.
    pub fn best_fit(&self) -> &CandidateFit {
        self.residuals
            .iter()
            .find(|f| f.kappa == self.k_hat)
            .expect("k_hat is always a fitted candidate")
    }

    /// True when the no-change hypothesis was evaluated and fits strictly
    /// better than every candidate.
    pub fn no_change_preferred(&self) -> bool {
        match self.null_residual {
            Some(null) => null < self.best_fit().residual,
            None => false,
        }
    }
}

/// The unit-amplitude step signature for a change at `kappa`: the noiseless
/// output deviation
///
/// ```text
/// s_k(kappa) = 0                                   for k <= kappa
/// s_k(kappa) = sum_{l = kappa}^{k-1} C A^{k-1-l} B for k >  kappa
/// ```
///
/// returned with length `N + 1`. Requires `kappa < N`.
pub fn step_signature(sys: &DiscreteLtiSystem, kappa: usize, horizon: usize) -> Result<Vec<f64>> {
    if kappa >= horizon {
        return Err(Error::InvalidInput(format!(
            "candidate change time must satisfy kappa < N, got kappa = {kappa}, N = {horizon}"
        )));
    }
    let markov = sys.markov_sequence(horizon - kappa);
    let mut out = vec![0.0; horizon + 1];
    let mut acc = 0.0;
    for (j, &m) in markov.iter().enumerate() {
        acc += m;
        out[kappa + 1 + j] = acc;
    }
    Ok(out)
}

/// Scans the candidate change times and returns the least-squares (or
/// fixed-amplitude) fit minimizing the squared residual.
///
/// `x0` is the initial state known to the estimator (`None` means zero);
/// its free response is removed from the data before fitting. In
/// least-squares mode, candidates whose signature is identically zero are
/// excluded from the scan and recorded; if every candidate is excluded the
/// estimation fails.
pub fn estimate_change(
    y: &MeasurementSeries,
    sys: &DiscreteLtiSystem,
    x0: Option<&DVector<f64>>,
    options: &EstimatorOptions,
) -> Result<EstimationResult> {
    let horizon = y.horizon();
    if horizon == 0 {
        return Err(Error::InvalidInput(
            "measurement series needs at least two samples (N >= 1) to scan candidates".into(),
        ));
    }

    let candidate_set: Vec<usize> = match &options.candidates {
        None => (0..horizon).collect(),
        Some(set) => {
            let mut set = set.clone();
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::InvalidInput("candidate set is empty".into()));
            }
            if let Some(&bad) = set.iter().find(|&&k| k >= horizon) {
                return Err(Error::InvalidInput(format!(
                    "candidate change time {bad} is out of range (must be < N = {horizon})"
                )));
            }
            set
        }
    };

    // Remove the known free response once.
    let free = sys.free_response(x0, horizon)?;
    let r: Vec<f64> = y
        .values()
        .iter()
        .zip(&free)
        .map(|(yk, fk)| yk - fk)
        .collect();

    // All candidate signatures are windows of the same prefix-sum array:
    // s_k(kappa) = P_{k - 1 - kappa} with P_j = sum_{i=0..=j} C A^i B.
    let markov = sys.markov_sequence(horizon);
    let mut prefix = Vec::with_capacity(horizon);
    let mut acc = 0.0;
    for &m in &markov {
        acc += m;
        prefix.push(acc);
    }

    let fixed_amplitude = match options.mode {
        AmplitudeMode::Fixed(u) => {
            if !u.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "fixed amplitude must be finite, got {u}"
                )));
            }
            Some(u)
        }
        AmplitudeMode::LeastSquares => None,
    };

    let mut residuals = Vec::with_capacity(candidate_set.len());
    let mut excluded = Vec::new();
    for &kappa in &candidate_set {
        let width = horizon - kappa;
        let u_hat = match fixed_amplitude {
            Some(u) => u,
            None => {
                let mut den = 0.0;
                for p in &prefix[..width] {
                    den += p * p;
                }
                if den == 0.0 {
                    excluded.push(kappa);
                    continue;
                }
                let mut num = 0.0;
                for (j, p) in prefix[..width].iter().enumerate() {
                    num += r[kappa + 1 + j] * p;
                }
                let u = num / den;
                if options.clamp_unit {
                    u.clamp(0.0, 1.0)
                } else {
                    u
                }
            }
        };
        let mut residual = 0.0;
        for (k, rk) in r.iter().enumerate() {
            let sk = if k > kappa {
                prefix[k - 1 - kappa]
            } else {
                0.0
            };
            let d = rk - u_hat * sk;
            residual += d * d;
        }
        residuals.push(CandidateFit {
            kappa,
            u_hat,
            residual,
        });
    }

    if residuals.is_empty() {
        return Err(Error::NumericDomain(
            "every candidate has an identically zero step signature; \
             the amplitude is unidentifiable"
                .into(),
        ));
    }

    // Strict comparison keeps the first (smallest-kappa) minimum on ties.
    let mut best = &residuals[0];
    for fit in &residuals[1..] {
        if fit.residual < best.residual {
            best = fit;
        }
    }
    let (k_hat, u_hat) = (best.kappa, best.u_hat);

    let null_residual = options
        .include_null
        .then(|| r.iter().map(|rk| rk * rk).sum());

    Ok(EstimationResult {
        k_hat,
        u_hat,
        residuals,
        candidate_set,
        excluded,
        null_residual,
    })
}
