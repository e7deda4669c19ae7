//! Discrete-time SISO LTI systems, step scenarios, and simulation.
//!
//! The model class is
//!
//! ```text
//! x_{k+1} = A x_k + B u_k          x_k in R^n
//! y_k     = C x_k (+ e_k)          y_k in R,   e_k ~ N(0, sigma2) i.i.d.
//! ```
//!
//! driven by the step input `u_k = amplitude * 1[k >= k_star]`. Measurements
//! run `k = 0..=N` (length `N + 1`), inputs run `k = 0..N`, so a change at
//! `k_star` first affects the output at `k_star + 1`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// A discrete-time single-input single-output LTI system with i.i.d.
/// Gaussian output noise and a physical sample period.
///
/// Immutable after construction; all constructors validate dimensions and
/// finiteness, so every held value is well-formed.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLtiSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    sigma2: f64,
    dt: f64,
}

impl DiscreteLtiSystem {
    /// Builds a system from an `n x n` state matrix `a`, input vector `b`,
    /// output vector `c` (stored as a length-`n` vector acting as the row
    /// vector `C`), noise variance `sigma2 >= 0`, and sample period
    /// `dt > 0` in minutes.
    ///
    /// `sigma2 = 0` is permitted for noiseless analysis; operations that
    /// need noise (bounds, noisy simulation) reject it at call time.
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        sigma2: f64,
        dt: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidModel(
                "state dimension n must be at least 1".into(),
            ));
        }
        if a.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "state matrix A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n {
            return Err(Error::InvalidModel(format!(
                "input vector B has length {}, expected {n}",
                b.len()
            )));
        }
        if c.len() != n {
            return Err(Error::InvalidModel(format!(
                "output vector C has length {}, expected {n}",
                c.len()
            )));
        }
        if !a.iter().all(|v| v.is_finite())
            || !b.iter().all(|v| v.is_finite())
            || !c.iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidModel(
                "A, B, C entries must all be finite".into(),
            ));
        }
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(Error::InvalidModel(format!(
                "noise variance sigma2 must be finite and >= 0, got {sigma2}"
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "sample period dt must be finite and > 0, got {dt}"
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            sigma2,
            dt,
        })
    }

    /// Builds a one-state system `x_{k+1} = a x_k + b u_k`, `y_k = c x_k`.
    pub fn scalar(a: f64, b: f64, c: f64, sigma2: f64, dt: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, a),
            DVector::from_element(1, b),
            DVector::from_element(1, c),
            sigma2,
            dt,
        )
    }

    /// Builds a system from a row-major flat `A` plus `B` and `C` slices —
    /// the layout used by the on-disk model format.
    pub fn from_row_major(
        n: usize,
        a: &[f64],
        b: &[f64],
        c: &[f64],
        sigma2: f64,
        dt: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel(
                "state dimension n must be at least 1".into(),
            ));
        }
        if a.len() != n * n {
            return Err(Error::InvalidModel(format!(
                "row-major A has {} entries, expected n*n = {}",
                a.len(),
                n * n
            )));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a),
            DVector::from_column_slice(b),
            DVector::from_column_slice(c),
            sigma2,
            dt,
        )
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// State matrix `A`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Input vector `B`.
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Output vector `C` (length-`n` vector acting as a row vector).
    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    /// Output noise variance `sigma^2`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Sample period in minutes.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Whether the system is one-state (`n = 1`).
    pub fn is_scalar(&self) -> bool {
        self.dim() == 1
    }

    /// Returns a copy with a different noise variance.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            sigma2,
            self.dt,
        )
    }

    /// The `j`-th Markov parameter `C A^j B`, computed by iterated
    /// matrix-vector products (never by forming `A^j` densely).
    pub fn markov_parameter(&self, j: usize) -> f64 {
        let mut v = self.b.clone();
        for _ in 0..j {
            v = &self.a * v;
        }
        self.c.dot(&v)
    }

    /// The first `len` Markov parameters `[C B, C A B, ..., C A^{len-1} B]`.
    ///
    /// Entry `j` is bit-identical to `markov_parameter(j)`: both walk the
    /// same matrix-vector product chain.
    pub fn markov_sequence(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut v = self.b.clone();
        out.push(self.c.dot(&v));
        for _ in 1..len {
            v = &self.a * v;
            out.push(self.c.dot(&v));
        }
        out
    }

    fn resolve_x0(&self, x0: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        match x0 {
            None => Ok(DVector::zeros(self.dim())),
            Some(v) => {
                if v.len() != self.dim() {
                    return Err(Error::InvalidInput(format!(
                        "initial state x0 has length {}, expected {}",
                        v.len(),
                        self.dim()
                    )));
                }
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidInput(
                        "initial state x0 must be finite".into(),
                    ));
                }
                Ok(v.clone())
            }
        }
    }

    /// The unforced (free) output response `y_k = C A^k x0` for
    /// `k = 0..=horizon`.
    pub fn free_response(&self, x0: Option<&DVector<f64>>, horizon: usize) -> Result<Vec<f64>> {
        let mut x = self.resolve_x0(x0)?;
        let mut values = Vec::with_capacity(horizon + 1);
        values.push(self.c.dot(&x));
        for _ in 0..horizon {
            x = &self.a * x;
            values.push(self.c.dot(&x));
        }
        Ok(values)
    }

    /// Simulates the noiseless step response of `scenario`.
    ///
    /// Returns `y_k` for `k = 0..=N` computed by the literal state
    /// recursion `x_{k+1} = A x_k + B u_k`, `y_k = C x_k` with
    /// `u_k = amplitude * 1[k >= k_star]`.
    pub fn simulate_noiseless(&self, scenario: &StepScenario) -> Result<MeasurementSeries> {
        let mut x = self.resolve_x0(scenario.x0())?;
        let n_horizon = scenario.horizon();
        let mut values = Vec::with_capacity(n_horizon + 1);
        values.push(self.c.dot(&x));
        for k in 0..n_horizon {
            let u = if k >= scenario.k_star() {
                scenario.amplitude()
            } else {
                0.0
            };
            x = &self.a * x + &self.b * u;
            values.push(self.c.dot(&x));
        }
        Ok(MeasurementSeries {
            values,
            noisy: false,
            seed: None,
        })
    }

    /// Simulates a noisy step response: the noiseless response plus i.i.d.
    /// `N(0, sigma2)` output noise drawn from a deterministic stream seeded
    /// by `seed`. The same `(system, scenario, seed)` triple always yields a
    /// bit-identical series.
    pub fn simulate_noisy(&self, scenario: &StepScenario, seed: u64) -> Result<MeasurementSeries> {
        if self.sigma2 <= 0.0 {
            return Err(Error::NumericDomain(
                "noise variance must be positive for noisy simulation \
                 (use simulate_noiseless when sigma2 = 0)"
                    .into(),
            ));
        }
        let mut series = self.simulate_noiseless(scenario)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let normal =
            Normal::new(0.0, self.sigma2.sqrt()).expect("sigma validated finite and positive");
        for v in &mut series.values {
            *v += normal.sample(&mut rng);
        }
        series.noisy = true;
        series.seed = Some(seed);
        Ok(series)
    }
}

/// A step-input scenario: the input switches from 0 to `amplitude` at
/// `k_star` and a horizon of `N` input steps is observed (`N + 1` outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct StepScenario {
    k_star: usize,
    horizon: usize,
    amplitude: f64,
    x0: Option<DVector<f64>>,
}

impl StepScenario {
    /// Creates a scenario with change time `k_star`, horizon `N`, unit
    /// amplitude, and zero initial state.
    ///
    /// Requires `k_star < N`: the shift range `{1, ..., N - k_star}` behind
    /// the variance bound must be nonempty.
    pub fn new(k_star: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::NumericDomain("horizon N must be at least 1".into()));
        }
        if k_star >= horizon {
            return Err(Error::NumericDomain(format!(
                "change time k* must satisfy k* < N, got k* = {k_star}, N = {horizon}"
            )));
        }
        Ok(Self {
            k_star,
            horizon,
            amplitude: 1.0,
            x0: None,
        })
    }

    /// Replaces the step amplitude (default 1).
    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidInput(format!(
                "step amplitude must be finite, got {amplitude}"
            )));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    /// Replaces the initial state (default: the zero vector). The length is
    /// validated against the system when the scenario is simulated.
    pub fn with_x0(mut self, x0: DVector<f64>) -> Result<Self> {
        if !x0.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput(
                "initial state x0 must be finite".into(),
            ));
        }
        self.x0 = Some(x0);
        Ok(self)
    }

    /// Change time `k*`.
    pub fn k_star(&self) -> usize {
        self.k_star
    }

    /// Horizon `N` (number of input steps; `N + 1` outputs are observed).
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Step amplitude.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Explicit initial state, if one was set.
    pub fn x0(&self) -> Option<&DVector<f64>> {
        self.x0.as_ref()
    }
}

/// A measurement record `y_0 ..= y_N` together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    values: Vec<f64>,
    noisy: bool,
    seed: Option<u64>,
}

impl MeasurementSeries {
    /// Wraps externally supplied measurements (e.g. parsed from a CSV
    /// export). `noisy` documents whether the data is believed to contain
    /// measurement noise; it does not affect estimation.
    pub fn from_values(values: Vec<f64>, noisy: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(
                "measurement series must contain at least one sample".into(),
            ));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "measurement series must be finite".into(),
            ));
        }
        Ok(Self {
            values,
            noisy,
            seed: None,
        })
    }

    /// The samples `y_0 ..= y_N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples (`N + 1`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the series is empty (never, for validated construction).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The horizon `N` implied by the length.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    /// Whether the series contains (simulated or assumed) measurement noise.
    pub fn noisy(&self) -> bool {
        self.noisy
    }

    /// The RNG seed used to produce the series, when simulated with noise.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Consumes the series, returning the raw samples.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Zero-order-hold discretization of the continuous one-state system
/// `x' = -f x + h u`, `y = c x` at sample period `dt` minutes:
///
/// ```text
/// a = e^{-f dt}
/// b = (h/f) (1 - e^{-f dt})    (f != 0)
/// b = h dt                     (f  = 0, the integrator limit)
/// ```
///
/// The returned system has `sigma2 = 0`; set the noise variance afterwards
/// with [`DiscreteLtiSystem::with_sigma2`].
pub fn zoh_discretize(f: f64, h: f64, c: f64, dt: f64) -> Result<DiscreteLtiSystem> {
    if !f.is_finite() || !h.is_finite() || !c.is_finite() {
        return Err(Error::InvalidModel(
            "continuous parameters f, h, c must be finite".into(),
        ));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidModel(format!(
            "sample period dt must be finite and > 0, got {dt}"
        )));
    }
    let a = (-f * dt).exp();
    // 1 - e^{-f dt} = -expm1(-f dt), computed without cancellation.
    let b = if f == 0.0 {
        h * dt
    } else {
        (h / f) * (-(-f * dt).exp_m1())
    };
    DiscreteLtiSystem::scalar(a, b, c, 0.0, dt)
}
