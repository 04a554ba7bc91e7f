//! Formal and numerical tools for analytic twist maps of the annulus near an
//! invariant circle. Maps are stored through generating functions on
//! truncated Fourier–Taylor series. The crate computes their Birkhoff normal
//! forms and runs quantified KAM steps, then probes resonances and the
//! measure of the region left without invariant circles.
//!
//! [`selftest`] bundles the acceptance checks used by the command-line tool.

pub mod bnf;
pub mod divisors;
pub mod error;
pub mod kam;
pub mod maps;
pub mod measure;
pub mod potential;
pub mod resonance;
pub mod selftest;
pub mod series;

pub use error::{Error, Result};
