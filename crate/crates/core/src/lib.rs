//! Hybrid SIAC / data-driven post-processing of 1D discontinuous Galerkin
//! approximations.

mod binio;
pub mod datagen;
pub mod detect;
pub mod dg;
pub mod error;
pub mod harness;
pub mod hybrid;
pub mod nn;
pub mod siac;
pub mod solvers;

pub use error::{Error, Result};
