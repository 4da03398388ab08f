#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod device;
pub mod error;
pub mod full;
pub mod hilbert;
pub mod moments;
pub mod ode;
pub mod params;
pub mod protocols;
pub mod readout;
pub mod trajectory;

pub use error::{Error, Result};
