//! Multi-rate viscous regularizations of rate-independent systems:
//! simulation, vanishing-viscosity limit functionals and regime
//! classification of parameterized solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod exec;
pub mod interp;
pub mod mfunctional;
pub mod potentials;
pub mod regimes;
pub mod reparam;
pub mod sampling;
pub mod solver;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Exec;
pub use state::{Dims, State};
