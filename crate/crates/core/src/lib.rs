//! Color Hecke R-matrices over finitely generated abelian gradings: builders,
//! braid/Hecke/reduction verifiers and the induced quantum-plane calculus.

pub mod braiding;
pub mod calculus;
pub mod cli;
pub mod error;
pub mod grading;
pub mod linop;
pub mod superize;

pub use error::{Error, Result};
