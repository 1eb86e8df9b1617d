//! Test-only support: deterministic random inputs, independent oracle
//! implementations, and a synthetic Spider-format dataset generator. Nothing
//! here is part of the shipped toolkit; production crates pull this in as a
//! dev-dependency only.

pub mod dataset;
pub mod transport;
pub mod trees;
