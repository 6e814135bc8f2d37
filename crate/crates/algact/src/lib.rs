//! Computable harmonic analysis for algebraic actions of discrete groups:
//! sparse group-ring convolution, spectral approximate inverses, the
//! measurable convolution extension with its Fourier product formula,
//! annihilator and ideal diagnostics, witness-measure families, and the
//! exact finite-group Haar lattice machinery, all cross-checked against
//! brute-force oracles at desk scale.

pub mod annihilator;
pub mod cli;
pub mod error;
pub mod expr;
pub mod groupring;
pub mod groups;
pub mod haarlattice;
pub mod linalg;
pub mod measures;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod theta;

pub use error::{Error, Result};
