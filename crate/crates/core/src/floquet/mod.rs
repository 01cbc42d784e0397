//! Floquet analysis of qubit polarization precession in a classical
//! monochromatic field.
//!
//! The polarization obeys `ds/dt = 2 h(t) ∧ s` with
//! `h(t) = (μ cos ωt, 0, ν/2)` (ħ = 1, field phase φ = 0). Its three
//! quasi-periodic fundamental solutions `e^{iΩ_k t} r_k(t)`, `k = -1, 0, 1`,
//! are obtained from a truncated Fourier-space eigenproblem
//! ([`build_generator`], [`solve_floquet`]) and cross-checked against direct
//! time integration ([`monodromy_oracle`]).
//!
//! Frequencies are in units of the mode frequency ω, which is 1 unless a
//! caller explicitly rescales it.

mod generator;
mod monodromy;
mod solution;

pub use generator::{build_generator, TruncatedGenerator};
pub use monodromy::{monodromy_oracle, rotation_angle};
pub use solution::{solve_floquet, FloquetSolution, Mode};

use thiserror::Error;

/// Truncation order used when none is given.
pub const DEFAULT_N_MAX: usize = 12;

/// Largest accepted `|Re λ|` of a selected mode, in units of ω.
pub const REALNESS_TOL: f64 = 1e-8;
/// Largest accepted `|Ω(n_max) - Ω(n_max - 2)|`.
pub const CONVERGENCE_TOL: f64 = 1e-8;
/// Largest accepted condition number of `r(0)`.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Quasi-frequencies above this fraction of ω are too close to the zone boundary.
pub const ZONE_LIMIT: f64 = 0.499;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FloquetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Rabi frequency {rabi_frequency} lies within 1e-3 omega of the zone boundary")]
    NearZoneBoundary { rabi_frequency: f64 },
    #[error("r(0) has condition number {condition:e} (limit 1e8)")]
    IllConditioned { condition: f64 },
    #[error("truncation gap |Omega(n_max) - Omega(n_max-2)| = {gap:e} exceeds 1e-8; raise n_max")]
    NotConverged { gap: f64 },
    #[error("selected mode has |Re lambda| = {real_part:e}")]
    NonImaginarySpectrum { real_part: f64 },
    #[error("could not identify the physical modes: {0}")]
    ModeIdentification(String),
    #[error("integrator failure: {0}")]
    Integrator(String),
}

impl FloquetError {
    /// Stable machine-readable name of the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            FloquetError::InvalidParameter(_) => "InvalidParameter",
            FloquetError::NearZoneBoundary { .. } => "NearZoneBoundary",
            FloquetError::IllConditioned { .. } => "IllConditioned",
            FloquetError::NotConverged { .. } => "NotConverged",
            FloquetError::NonImaginarySpectrum { .. } => "NonImaginarySpectrum",
            FloquetError::ModeIdentification(_) => "ModeIdentification",
            FloquetError::Integrator(_) => "IntegratorFailure",
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, FloquetError::InvalidParameter(_))
    }
}

/// The classical driven-qubit problem plus truncation order.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FloquetParams {
    /// Mode angular frequency. Fixed to 1 by convention.
    pub omega: f64,
    /// Detuning ν - ω.
    pub delta: f64,
    /// Interaction frequency scale; the transverse field is `μ cos ωt`.
    pub mu: f64,
    /// Fourier blocks `n ∈ [-n_max, n_max]` are kept.
    pub n_max: usize,
}

impl FloquetParams {
    pub fn new(delta: f64, mu: f64) -> Self {
        FloquetParams {
            omega: 1.0,
            delta,
            mu,
            n_max: DEFAULT_N_MAX,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    /// Rescales the unit of frequency. Only the scaling-invariance checks need this.
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    /// Qubit frequency ν = ω + δ.
    pub fn nu(&self) -> f64 {
        self.omega + self.delta
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub fn validate(&self) -> Result<(), FloquetError> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(FloquetError::InvalidParameter(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !self.delta.is_finite() || !(self.nu() > 0.0) {
            return Err(FloquetError::InvalidParameter(format!(
                "nu = omega + delta must be positive, got delta = {}",
                self.delta
            )));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(FloquetError::InvalidParameter(format!(
                "mu must be non-negative, got {}",
                self.mu
            )));
        }
        if self.n_max < 1 {
            return Err(FloquetError::InvalidParameter(
                "n_max must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
