//! Digital-Kronecker hybrid sequences: generation, exact star discrepancy and
//! the trigonometric-product estimates that control their growth.

pub mod discrepancy;
pub mod error;
pub mod expsum;
pub mod metric;
pub mod numtheory;
pub mod sequences;
pub mod trigprod;

pub use error::{Error, Result};
