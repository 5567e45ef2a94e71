//! Reduced-order modelling of 2-D fields in Radon-CDT space.
//!
//! Fields are Radon-transformed, each projection is replaced by its 1-D
//! transport map to a fixed reference, and POD + regression are done on the
//! resulting coefficients.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod io;
pub mod bench;
pub mod cdt;
mod interp;
pub mod pod;
pub mod radon;
pub mod rcdt;
pub mod rom;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{Extent, Field2D, NormKind, SnapshotSet};
