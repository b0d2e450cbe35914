//! Modal parameter estimation with least-squares complex-frequency fitting,
//! plus a sparse (orthogonal matching pursuit) variant that suppresses
//! spurious stable poles in stability diagrams.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod frf;
pub mod io;
pub mod lscf;
pub mod modal;
pub mod roots;
pub mod sparse;
pub mod stabilization;
pub mod svg;

pub use error::{Error, Result};
