//! Time-limited region-of-attraction estimation by reverse-time boundary
//! mapping, with a grid-following converter PLL model and clearing-time
//! window extraction.

#![no_std]
// NaN must fail validity checks, hence `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynsys;
pub mod error;
pub mod exec;
pub mod fault;
pub mod linstab;
pub mod math;
pub mod models;
pub mod roa;
pub mod state;

pub use error::{Error, Result};
pub use state::StateVector;
