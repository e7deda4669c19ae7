//! Hammersley–Chapman–Robbins (HCR) lower bounds on the variance of
//! change-time estimators.
//!
//! For a step input switching on at `k*` and observed through `N + 1` noisy
//! outputs, any estimator `psi` of `k*` with bias `g` satisfies
//!
//! ```text
//! Var(psi | k*) >= max_tau (tau + g(k* + tau) - g(k*))^2 / (e^{S(tau)} - 1)
//! ```
//!
//! with the shift information
//!
//! ```text
//! S(tau) = (1/sigma^2) sum_{k = k*+1}^{N} ( sum_{l = k*}^{min(k*+tau-1, k-1)} C A^{k-1-l} B )^2
//! ```
//!
//! over forward shifts `tau in {1, ..., N - k*}`. Backward shifts are
//! dominated (their information `S_-` is at least as large, see [`s_minus`])
//! and are therefore excluded from the maximization.
//!
//! Everything here is reported in `steps^2`; multiplying by `dt^2` converts
//! to physical `minutes^2` (see [`unit_convert`] and
//! [`BoundReport::bound_phys`]).

use crate::eigen::EigenStructure;
use crate::error::{Error, Result};
use crate::lti::DiscreteLtiSystem;

/// Above this value of `S`, `e^S - 1` would overflow or lose all structure
/// in double precision, and quotients are evaluated in the log domain.
pub const LOG_DOMAIN_S_THRESHOLD: f64 = 700.0;

/// Estimator bias `g` as a total mapping on candidate change times
/// `{0, ..., N}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum BiasFunction {
    /// The unbiased case, `g(k) = 0` everywhere (the default).
    #[default]
    Zero,
    /// Tabulated bias: entry `k` is `g(k)`. The table must cover every
    /// `k in 0..=N` for the horizon it is used with; shorter tables are
    /// rejected rather than extrapolated.
    Table(Vec<f64>),
}

impl BiasFunction {
    fn validate(&self, horizon: usize) -> Result<()> {
        match self {
            BiasFunction::Zero => Ok(()),
            BiasFunction::Table(t) => {
                if t.len() != horizon + 1 {
                    return Err(Error::InvalidInput(format!(
                        "bias table has {} entries but must define g(k) for every k in 0..={}",
                        t.len(),
                        horizon
                    )));
                }
                if !t.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidInput("bias table must be finite".into()));
                }
                Ok(())
            }
        }
    }

    fn value(&self, k: usize) -> f64 {
        match self {
            BiasFunction::Zero => 0.0,
            BiasFunction::Table(t) => t[k],
        }
    }
}

/// The result of a bound evaluation: the full shift-information profile and
/// the maximizing quotient, in both step and physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Change time the bound is conditioned on.
    pub k_star: usize,
    /// Horizon `N`.
    pub horizon: usize,
    /// `(tau, S(tau))` for every forward shift `tau = 1..=N - k*`.
    pub s_profile: Vec<(usize, f64)>,
    /// The smallest shift achieving the maximum quotient; `0` is a sentinel
    /// for the degenerate case where every shift was skipped as `0/0`
    /// (possible only with a pathological bias function).
    pub tau_star: usize,
    /// The bound in `steps^2`. `f64::INFINITY` means some shift carries no
    /// information but a nonzero numerator: perfect privacy at this horizon.
    pub bound_steps2: f64,
    /// The bound in `minutes^2`: exactly `bound_steps2 * dt^2`.
    pub bound_phys: f64,
    /// Whether any quotient was evaluated in the log domain because its
    /// `S` exceeded [`LOG_DOMAIN_S_THRESHOLD`].
    pub overflow_mode: bool,
}

fn validate_bound_domain(sigma2: f64, k_star: usize, horizon: usize) -> Result<()> {
    if sigma2 <= 0.0 {
        return Err(Error::NumericDomain(
            "noise variance must be positive (the bound is undefined at sigma2 = 0: \
             noiseless estimation is exact)"
                .into(),
        ));
    }
    if horizon == 0 || k_star >= horizon {
        return Err(Error::NumericDomain(format!(
            "change time k* must satisfy k* < N with N >= 1, got k* = {k_star}, N = {horizon} \
             (the shift range would be empty)"
        )));
    }
    Ok(())
}

/// Shift-information profile `[S(1), S(2), ..., S(tau_max)]` computed
/// incrementally: increasing `tau` by one appends the input step `l = k* +
/// tau - 1` to each outer term's inner sum, in exactly the order the literal
/// double sum accumulates it, so entry `tau - 1` is bit-identical to
/// evaluating the written-out formula at that `tau`.
fn s_profile_upto(
    sys: &DiscreteLtiSystem,
    k_star: usize,
    horizon: usize,
    tau_max: usize,
) -> Vec<f64> {
    debug_assert!(tau_max >= 1 && tau_max <= horizon - k_star);
    let n_outer = horizon - k_star;
    let markov = sys.markov_sequence(n_outer);
    // inner[i] accumulates the inner sum for outer index k = k* + 1 + i.
    let mut inner = vec![0.0_f64; n_outer];
    let mut profile = Vec::with_capacity(tau_max);
    for tau in 1..=tau_max {
        // New input step l = k* + tau - 1 enters every outer term with
        // k - 1 >= l, i.e. i >= tau - 1; it contributes C A^{k-1-l} B.
        for i in (tau - 1)..n_outer {
            inner[i] += markov[i - (tau - 1)];
        }
        let mut total = 0.0;
        for d in &inner {
            total += d * d;
        }
        profile.push(total / sys.sigma2());
    }
    profile
}

/// The shift information `S(tau)` for a forward shift `tau`:
///
/// ```text
/// S(tau) = (1/sigma^2) sum_{k = k*+1}^{N} ( sum_{l = k*}^{min(k*+tau-1, k-1)} C A^{k-1-l} B )^2
/// ```
///
/// Requires `sigma2 > 0`, `0 <= k* < N`, and `1 <= tau <= N - k*`.
pub fn s_tau(sys: &DiscreteLtiSystem, k_star: usize, horizon: usize, tau: usize) -> Result<f64> {
    validate_bound_domain(sys.sigma2(), k_star, horizon)?;
    if tau < 1 || tau > horizon - k_star {
        return Err(Error::NumericDomain(format!(
            "shift tau must satisfy 1 <= tau <= N - k* = {}, got {tau}",
            horizon - k_star
        )));
    }
    Ok(s_profile_upto(sys, k_star, horizon, tau)[tau - 1])
}

/// The backward-shift information `S_-(tau)` for a shift of magnitude
/// `tau >= 1` (hypothesized change at `k* - tau`):
///
/// ```text
/// S_-(tau) = (1/sigma^2) sum_{k = k*-tau+1}^{N} ( sum_{l = k*-tau}^{min(k*-1, k-1)} C A^{k-1-l} B )^2
/// ```
///
/// Backward shifts carry at least as much information as the matched
/// forward shift (`s_tau(tau) <= s_minus(tau)`), which is why the bound's
/// maximization only scans forward shifts. This function exists to make
/// that dominance testable.
///
/// Requires `sigma2 > 0`, `0 <= k* < N`, `1 <= tau <= min(k*, N - k*)`
/// (the hypothesized change may not precede time 0).
pub fn s_minus(sys: &DiscreteLtiSystem, k_star: usize, horizon: usize, tau: usize) -> Result<f64> {
    validate_bound_domain(sys.sigma2(), k_star, horizon)?;
    if tau < 1 || tau > horizon - k_star {
        return Err(Error::NumericDomain(format!(
            "shift tau must satisfy 1 <= tau <= N - k* = {}, got {tau}",
            horizon - k_star
        )));
    }
    if tau > k_star {
        return Err(Error::NumericDomain(format!(
            "backward shift tau = {tau} would place the change before time 0 (k* = {k_star})"
        )));
    }
    let start = k_star - tau;
    // Largest kernel power: k - 1 - l <= N - 1 - start.
    let markov = sys.markov_sequence(horizon - start);
    let mut total = 0.0;
    for k in (start + 1)..=horizon {
        let hi = (k_star - 1).min(k - 1);
        let mut inner = 0.0;
        for l in start..=hi {
            inner += markov[k - 1 - l];
        }
        total += inner * inner;
    }
    Ok(total / sys.sigma2())
}

/// One quotient of the bound's maximization, with the policy used for
/// extreme `S`:
///
/// * `S = 0`, numerator nonzero: `+inf` (the shifted hypothesis is
///   indistinguishable — perfect privacy);
/// * `S = 0`, numerator zero: `NaN` (a `0/0` term, skipped by the caller);
/// * `S > 700`: log-domain evaluation `exp(2 ln|num| - S)`, which may
///   underflow to an honest `0`;
/// * otherwise: `num^2 / expm1(S)`.
///
/// Returns the quotient and whether the log domain was used.
fn quotient_with_mode(numerator_root: f64, s: f64) -> (f64, bool) {
    debug_assert!(s >= 0.0);
    let num = numerator_root.abs();
    if s == 0.0 {
        if num == 0.0 {
            return (f64::NAN, false);
        }
        return (f64::INFINITY, false);
    }
    if s > LOG_DOMAIN_S_THRESHOLD {
        if num == 0.0 {
            return (0.0, true);
        }
        ((2.0 * num.ln() - s).exp(), true)
    } else {
        (num * num / s.exp_m1(), false)
    }
}

/// The quotient `(numerator_root)^2 / (e^S - 1)` under the same
/// extreme-value policy the bound uses (`+inf` for `S = 0` with a nonzero
/// numerator, `NaN` for `0/0`, log-domain evaluation for `S > 700`).
pub fn bound_quotient(numerator_root: f64, s: f64) -> f64 {
    quotient_with_mode(numerator_root, s).0
}

/// The HCR lower bound on the variance of any change-time estimator with
/// bias `g`, conditioned on a change at `k*` observed over horizon `N`:
/// the maximum over forward shifts of
/// `(tau + g(k*+tau) - g(k*))^2 / (e^{S(tau)} - 1)`.
///
/// Ties in the maximum are broken toward the smallest `tau`. If some shift
/// has `S(tau) = 0` with a nonzero numerator, the bound is `+inf` (perfect
/// privacy); `0/0` shifts are skipped as uninformative.
pub fn hcr_bound(
    sys: &DiscreteLtiSystem,
    k_star: usize,
    horizon: usize,
    g: &BiasFunction,
) -> Result<BoundReport> {
    validate_bound_domain(sys.sigma2(), k_star, horizon)?;
    g.validate(horizon)?;
    let tau_max = horizon - k_star;
    let profile = s_profile_upto(sys, k_star, horizon, tau_max);
    let g_at_k_star = g.value(k_star);

    let mut best = f64::NEG_INFINITY;
    let mut tau_star = 0usize;
    let mut overflow_mode = false;
    for (i, &s) in profile.iter().enumerate() {
        let tau = i + 1;
        let numerator_root = tau as f64 + g.value(k_star + tau) - g_at_k_star;
        let (q, used_log) = quotient_with_mode(numerator_root, s);
        if q.is_nan() {
            continue;
        }
        overflow_mode |= used_log;
        if q > best {
            best = q;
            tau_star = tau;
        }
        if best.is_infinite() {
            // Nothing can beat +inf, and the smallest such tau is kept.
            break;
        }
    }
    let bound_steps2 = if best == f64::NEG_INFINITY { 0.0 } else { best };
    let dt = sys.dt();
    Ok(BoundReport {
        k_star,
        horizon,
        s_profile: profile
            .iter()
            .enumerate()
            .map(|(i, &s)| (i + 1, s))
            .collect(),
        tau_star,
        bound_steps2,
        bound_phys: bound_steps2 * (dt * dt),
        overflow_mode,
    })
}

/// The closed-form scalar bound for a one-state system
/// `x_{k+1} = a x_k + b u_k`, `y_k = c x_k + e_k` with `a >= 0`:
///
/// ```text
/// B = 1 / (e^S - 1),    S = (1/sigma^2) sum_{k = k*+1}^{N} (c a^{k-1-k*} b)^2
/// ```
///
/// This is the unbiased, unit-numerator weakening of the general bound: for
/// `a >= 0` every inner sum dominates its first (`tau = 1`) kernel term,
/// so `S <= S(tau)` for all `tau` and the quotient above is a valid lower
/// bound. The report's `tau_star` is always 1 (the kernel is the one-step
/// shift kernel) and, with no physical sample period in the signature,
/// `bound_phys` equals `bound_steps2` (`dt = 1`).
pub fn scalar_bound(
    a: f64,
    b: f64,
    c: f64,
    sigma2: f64,
    k_star: usize,
    horizon: usize,
) -> Result<BoundReport> {
    if !a.is_finite() || a < 0.0 {
        return Err(Error::NumericDomain(format!(
            "the scalar bound requires a finite pole a >= 0, got {a}"
        )));
    }
    let sys = DiscreteLtiSystem::scalar(a, b, c, sigma2, 1.0)?;
    validate_bound_domain(sigma2, k_star, horizon)?;
    // The tau = 1 profile entry *is* the Corollary sum: singleton inner sums
    // over the one-step kernel.
    let s = s_profile_upto(&sys, k_star, horizon, 1)[0];
    let (bound_steps2, overflow_mode) = quotient_with_mode(1.0, s);
    Ok(BoundReport {
        k_star,
        horizon,
        s_profile: vec![(1, s)],
        tau_star: 1,
        bound_steps2,
        bound_phys: bound_steps2,
        overflow_mode,
    })
}

/// Evaluates the shift information `S(tau)` in the eigenbasis:
///
/// ```text
/// S(tau) = (1/sigma^2) sum_{k = k*+1}^{N} ( sum_l sum_i lambda_i^{k-1-l} b_i (C v_i) )^2
/// ```
///
/// computed in complex arithmetic. The result must be real up to a residue
/// of `1e-9` (relative to `max(1, |S|)`); a larger imaginary part is
/// reported as a numeric-domain error. Agrees with [`s_tau`] to `1e-8`
/// relative for diagonalizable systems.
pub fn s_tau_eigen(
    es: &EigenStructure,
    sigma2: f64,
    k_star: usize,
    horizon: usize,
    tau: usize,
) -> Result<f64> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::NumericDomain(
            "noise variance must be positive (the bound is undefined at sigma2 = 0: \
             noiseless estimation is exact)"
                .into(),
        ));
    }
    if horizon == 0 || k_star >= horizon {
        return Err(Error::NumericDomain(format!(
            "change time k* must satisfy k* < N with N >= 1, got k* = {k_star}, N = {horizon}"
        )));
    }
    if tau < 1 || tau > horizon - k_star {
        return Err(Error::NumericDomain(format!(
            "shift tau must satisfy 1 <= tau <= N - k* = {}, got {tau}",
            horizon - k_star
        )));
    }
    let n = es.dim();
    let mut total = nalgebra::Complex::new(0.0, 0.0);
    for k in (k_star + 1)..=horizon {
        let hi = (k_star + tau - 1).min(k - 1);
        let mut inner = nalgebra::Complex::new(0.0, 0.0);
        for l in k_star..=hi {
            let p = (k - 1 - l) as u32;
            for i in 0..n {
                inner += es.lambdas()[i].powu(p) * es.b_coeffs()[i] * es.cv()[i];
            }
        }
        total += inner * inner;
    }
    let s = total / nalgebra::Complex::new(sigma2, 0.0);
    if s.im.abs() > 1e-9 * s.re.abs().max(1.0) {
        return Err(Error::NumericDomain(format!(
            "eigenbasis evaluation left a non-negligible imaginary residue: {} + {}i",
            s.re, s.im
        )));
    }
    Ok(s.re)
}

/// Converts a bound from `steps^2` to physical `minutes^2` for a sample
/// period of `dt` minutes: returns `bound_steps2 * dt^2`.
pub fn unit_convert(bound_steps2: f64, dt: f64) -> Result<f64> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "sample period dt must be finite and > 0, got {dt}"
        )));
    }
    Ok(bound_steps2 * (dt * dt))
}
