//! Numerics for special flows over irrational rotations with singular roofs:
//! continued fractions, Birkhoff sums, shear partitions, mixing diagnostics.
//!
//! `no_std` with `alloc`. Enable the `std` feature to use the platform libm.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::should_implement_trait, clippy::type_complexity)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod arithmetic;
pub mod birkhoff;
pub mod dd;
pub mod error;
pub mod exec;
pub mod flow;
pub mod gus;
pub mod math;
pub mod mixing;
pub mod rng;
pub mod roof;
pub mod shear;
pub mod wide;

pub use error::{Error, Result};
