//! Interval / no-interval classification for the algebraic difference of two
//! independent random M-adic Cantor sets.

pub mod classify;
pub mod correlation;
pub mod error;
pub mod matrix;
pub mod report;
pub mod simulate;
pub mod spectral;
pub mod survival;

pub use error::{Error, Result};
