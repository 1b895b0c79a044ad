//! Random Hamiltonian diffeomorphisms of the flat 2-torus.

pub mod basis;
pub mod config;
pub mod error;
pub mod experiments;
pub mod field;
pub mod flow;
pub mod hamiltonian;
pub mod output;
pub mod rkhs;
pub mod rng;
pub mod stats;
pub mod temporal;
pub mod torus;
pub mod walk;

pub use error::{Error, Result};
