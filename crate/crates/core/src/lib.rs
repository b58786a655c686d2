//! Protective measurement of a single quantum system, density-matrix
//! reconstruction from protectively measured expectation values, von Neumann
//! entropy, and finite-ensemble (mixture) statistics.
//!
//! Units: ħ = 1. Tensor products put the first factor on the major index.

pub mod defaults;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod mixtures;
pub mod protective;
pub mod tomography;

pub use error::{Error, Result};
pub use hilbert::{DensityMatrix, Operator, PureState, C64};
