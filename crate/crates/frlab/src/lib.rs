//! Fourier-restricted Euler and hypodissipative Navier-Stokes on the
//! constraint lattice: exact lattice arithmetic, the restricted bilinear
//! form, the reduced shell system, integration and diagnostics.

pub mod bilinear;
pub mod diagnostics;
pub mod dyadic;
pub mod error;
pub mod evolve;
pub mod field;
pub mod lattice;
pub mod physical;
