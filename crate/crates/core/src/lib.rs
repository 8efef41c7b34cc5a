//! Classical emulation of continuous-variable (coherent-state) evolution for
//! nonlinear PDE stencils, with the matching truncated-Fock Kraus machinery.

pub mod error;
pub mod evolution;
pub mod fock;
pub mod grid;
pub mod harness;
pub mod noise;
pub mod readout;
pub mod rhs;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
