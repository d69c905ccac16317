//! Numerical laboratory for a 1-D transmission system coupling a degenerate
//! wave equation with drift on (0,1) to a heat equation with thermal memory
//! on (1,2).
//!
//! The crate is organized along the pipeline:
//!
//! * [`coefficients`] — wave coefficients a, b, the drift weight pair (η, σ),
//!   degeneracy and drift functionals, hypothesis checks, Hardy-Poincaré
//!   constants.
//! * [`kernel`] — exponential memory kernel μ(s) = μ₀e^{−ks} normalized to
//!   unit first moment, its resolvent gap N(λ), and truncated history grids.
//! * [`discretization`] — meshes, the energy Gram matrix M, the semigroup
//!   generator A_h on the constrained space, and initial-data presets.
//! * [`evolution`] — Crank-Nicolson stepping (a contraction in the M-norm),
//!   energy/dissipation functionals, and trace recording.
//! * [`analysis`] — spectral abscissa, resolvent norms along the imaginary
//!   axis in the energy metric, growth-exponent and decay-rate fits.
//! * [`cli`] — TOML-config driven command-line front end with deterministic
//!   CSV/JSON artifacts.

pub mod analysis;
pub mod cli;
pub mod coefficients;
pub mod discretization;
pub mod evolution;
pub mod kernel;
pub(crate) mod solver;

use thiserror::Error;

/// Crate-wide error type. The CLI maps configuration errors to exit code 1
/// and numerical failures to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The drift ratio b/a fails to be integrable near the degenerate endpoint.
    #[error("non-integrable drift: {0}")]
    NonIntegrableDrift(String),
    /// A sampled coefficient model is too coarse to differentiate reliably.
    #[error("non-differentiable model: {0}")]
    NonDifferentiable(String),
    /// A structural hypothesis required for assembly or stability fails.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
    /// Initial-data preset name not recognized.
    #[error("unknown preset: {0}")]
    UnknownPreset(String),
    /// A linear system required by the evolution was singular.
    #[error("singular system: {0}")]
    SingularSystem(String),
    /// Problem dimension exceeds the dense-solve cap.
    #[error("system too large: {0}")]
    TooLarge(String),
    /// Shifted system too ill-conditioned to trust.
    #[error("near-singular shifted system: {0}")]
    NearSingular(String),
    /// Decay-fit window selects no samples.
    #[error("empty fit window: {0}")]
    EmptyWindow(String),
    /// Decay fit requires strictly positive energies.
    #[error("non-positive energy: {0}")]
    NonPositiveEnergy(String),
    /// Configuration parse or validation failure.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
