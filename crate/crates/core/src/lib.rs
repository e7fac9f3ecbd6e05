//! Two interacting bosons in a one-dimensional double well.
//!
//! The two-particle Hamiltonian `H = -d1^2 - d2^2 + V(x1) + V(x2) + U V_int(x1 - x2)`
//! is discretized with linear triangles on the configuration square, restricted
//! to exchange-symmetric functions, and diagonalized for a range of `U`. A
//! quench from the isolated left-well ground state is then evolved exactly in
//! the truncated eigenbasis.

pub mod assembly;
pub mod config;
pub mod domain;
pub mod eigensolve;
pub mod error;
pub mod frequency;
pub mod interaction;
pub mod mesh;
pub mod oracle;
pub mod output;
pub mod quadrature;
pub mod quench;
pub mod scan;
pub mod sparse;

pub use error::{Error, Result};
