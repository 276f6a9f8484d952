//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by lattice, gauge, bracket, dynamics and quantum routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("fields live on different lattices (n={left_n}, L={left_l}) vs (n={right_n}, L={right_l})")]
    LatticeMismatch {
        left_n: usize,
        left_l: f64,
        right_n: usize,
        right_l: f64,
    },

    #[error("charge smearing width {sigma} is below the resolvable minimum {minimum} (2 lattice spacings)")]
    UnderResolvedCharge { sigma: f64, minimum: f64 },

    #[error("field is not transverse: relative divergence {residual:e} exceeds {tolerance:e}")]
    NotTransverse { residual: f64, tolerance: f64 },

    #[error("field has spectral content at the Nyquist planes (relative weight {weight:e})")]
    NyquistContent { weight: f64 },

    #[error("truncation error: quadrature refinement changed the result by {residual:e}")]
    Truncation { residual: f64 },

    #[error("invalid gauge kernel: {0}")]
    InvalidKernel(String),

    #[error("degenerate gauge: constraint matrix condition number {condition:e} exceeds 1e12")]
    DegenerateGauge { condition: f64 },

    #[error("state is off the constraint surface (max violation {violation:e})")]
    OffShell { violation: f64 },

    #[error("time step {dt:e} exceeds the stability limit {limit:e} (0.1 / max mode frequency)")]
    StepSize { dt: f64, limit: f64 },

    #[error("iteration failed to converge: {0}")]
    Convergence(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
