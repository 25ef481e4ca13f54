//! Pseudo-spectral simulation of the one-dimensional Landau-Lifshitz equation
//! for biaxial ferromagnets in its hydrodynamic form, its long-wave rescaling,
//! and the Sine-Gordon and free-wave limits, together with a harness that
//! measures convergence rates between them.

pub mod cli;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod io;
pub mod quadrature;
pub mod regimes;
pub mod solitons;
pub mod spectral;
pub mod states;

pub use error::{Error, Result};
