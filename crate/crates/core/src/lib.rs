//! Noncommutative Chern and Z₂ indices for disordered two-dimensional
//! tight-binding insulators, computed from the pair of projections
//! (P_F, U_a P_F U_a*) on a finite box.

pub mod cli;
pub mod config;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod kspace;
pub mod lattice;
pub mod model;
pub mod ncindex;
pub mod spectral;

pub use error::{Error, Result};
