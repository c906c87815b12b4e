//! Recognition of handwritten mathematics with relational context-free
//! grammars.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod extract;
pub mod forest;
pub mod glyphs;
pub mod grammar;
pub mod ink;
pub mod inkio;
pub mod model;
pub mod recognize;
pub mod relations;
pub mod scoring;
pub mod session;
pub mod symbols;
pub mod synth;
#[cfg(test)]
pub(crate) mod testkit;
pub mod train;
pub mod truth;

pub use error::{Error, Result};
