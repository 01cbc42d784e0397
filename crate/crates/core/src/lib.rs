//! Semiclassical matrix-flow laboratory for a qubit coupled to a highly
//! excited field mode.
//!
//! [`floquet`] solves the classical driven-qubit problem, [`resonances`]
//! locates the seven resonant detunings, [`semiclassics`] turns Floquet data
//! into wave-packet predictions, and [`oracle`] evolves the full quantum
//! model for comparison. [`io`] holds the run configuration and CSV/JSON export
//! used by the `rabi-lab` binary.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod floquet;
pub mod io;
pub mod optimize;
pub mod oracle;
pub mod resonances;
pub mod semiclassics;
