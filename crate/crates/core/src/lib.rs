//! Multi-resolution ensembles of the 2-D compressible Euler equations with
//! Kelvin-Helmholtz initial data, and the statistics built on them.

pub mod analysis;
pub mod config;
pub mod cweno;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod gas;
pub mod mesh;
pub mod numeric;
pub mod pod;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
