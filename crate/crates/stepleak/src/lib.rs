//! Privacy-leakage analysis for step inputs in noisy discrete-time LTI systems.
//!
//! A single-input single-output linear system is driven by a step input that
//! switches on at an unknown time `k*` (for example, an occupant entering a
//! room whose temperature is being logged). This crate quantifies how much
//! the noisy output measurements reveal about `k*`:
//!
//! * [`lti`] — the system model, step scenarios, and (seeded) simulation;
//! * [`eigen`] — eigenstructure extraction for diagonalizable state matrices;
//! * [`bound`] — Hammersley–Chapman–Robbins (HCR) lower bounds on the
//!   variance of any change-time estimator, including the scalar closed form
//!   and an eigenbasis evaluation;
//! * [`estimator`] — the least-squares change-point adversary that the bound
//!   is tested against;
//! * [`monte_carlo`] — seeded, parallel, bit-reproducible trial ensembles,
//!   SNR computation, and the likelihood-ratio oracle validating the
//!   `e^S - 1` identity behind the bound.
//!
//! Index conventions used throughout: measurements are `y_0 ..= y_N`
//! (length `N + 1`), inputs are `u_0 ..= u_{N-1}`, and a change at `k*`
//! means `u_{k*}` is the first nonzero input, so the first affected output
//! is `y_{k*+1}`.
//!
//! All types are immutable after construction and every operation is a pure
//! function of its arguments (simulation is pure given the seed), so values
//! can be shared freely across threads.

pub mod bound;
pub mod eigen;
pub mod error;
pub mod estimator;
pub mod lti;
pub mod monte_carlo;

pub use bound::{BiasFunction, BoundReport};
pub use eigen::EigenStructure;
pub use error::{Error, Result};
pub use estimator::{AmplitudeMode, EstimationResult, EstimatorOptions};
pub use lti::{DiscreteLtiSystem, MeasurementSeries, StepScenario};
pub use monte_carlo::{LrMoment, TrialSummary};
