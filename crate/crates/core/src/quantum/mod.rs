//! Truncated-basis quantization: a position grid for the electron times the
//! Fock space of the retained field modes, gauge Hamiltonians, gauge-fixing
//! unitaries and spectral equivalence sweeps.

pub mod eigen;
pub mod equivalence;
pub mod fock;
pub mod matter;
pub mod model;
pub mod operator;

pub use eigen::{spectrum, spectrum_with, EigenOptions, Spectrum};
pub use equivalence::{verify_equivalence, EquivalenceConfig, EquivalenceReport};
pub use fock::FockMode;
pub use matter::MatterGrid;
pub use model::QuantumModel;
pub use operator::OperatorMatrix;

#[cfg(test)]
mod tests;
