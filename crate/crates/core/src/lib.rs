//! Gauge-fixing toolkit for nonrelativistic QED of a single electron bound to
//! a fixed nucleus, discretized on a periodic cubic lattice.

pub mod charge;
pub mod constrained;
pub mod dynamics;
pub mod dump;
pub mod error;
pub mod field;
pub mod lattice;
pub mod modal;
pub mod modes;
pub mod quadrature;
pub mod quantum;

pub use charge::{smeared_point_charge, ChargeConfig};
pub use error::{Error, Result};
pub use field::{ScalarField, SymTensorField, VectorField};
pub use lattice::Lattice;
pub mod gauge;
pub mod synth;
