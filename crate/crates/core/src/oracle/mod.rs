//! Exact evolution of the Rabi Hamiltonian in a truncated Fock basis: the
//! ground truth for collapse, purity and packet splitting.
//!
//! The basis is `|n⟩ ⊗ |q⟩` with flat index `2n + q`, `q = 0` the excited
//! qubit level. The initial state is `|α⟩ ⊗ |p⟩` with `α = √n̄` real.

mod fock;
mod husimi;

pub use fock::{
    basis_index, build_hamiltonian, coherent_amplitudes, evolve, evolve_with, initial_state, observables,
    propagate, qubit_state, states_at, FockConfig, Method, Observables, QuantumTrace, SparseHamiltonian,
    EIGEN_LIMIT, NORM_TOL, TOP_TOL,
};
pub use husimi::{
    analyze_state, fragment_analysis, fragment_analysis_on, husimi, FragmentAnalysis, Fragments, HusimiGrid,
    PACKET_WIDTH, PEAK_FLOOR, RESOLUTION,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cutoff {cutoff} is below n_bar + 12 sqrt(n_bar) = {required}")]
    CutoffTooSmall { cutoff: usize, required: usize },
    #[error("cutoff reflection at t = {time}: top occupation {top_occupation:e}, norm drift {norm_drift:e}")]
    CutoffReflection {
        time: f64,
        top_occupation: f64,
        norm_drift: f64,
    },
    #[error("Husimi peaks unresolved at t = {time} (separation {separation})")]
    PeaksUnresolved { time: f64, separation: f64 },
}

impl OracleError {
    pub fn name(&self) -> &'static str {
        match self {
            OracleError::InvalidParameter(_) => "InvalidParameter",
            OracleError::CutoffTooSmall { .. } => "CutoffTooSmall",
            OracleError::CutoffReflection { .. } => "CutoffReflection",
            OracleError::PeaksUnresolved { .. } => "PeaksUnresolved",
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, OracleError::InvalidParameter(_) | OracleError::CutoffTooSmall { .. })
    }
}
