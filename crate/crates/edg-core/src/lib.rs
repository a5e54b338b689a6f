//! Numerical core for exchange-driven growth with product kernels
//! `K(k, l) = a_λ(k) a_λ(l)`.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO.

#![no_std]

extern crate alloc;

mod debye;

pub mod bessel;
pub mod edg;
pub mod error;
pub mod heat;
pub mod kernel;
pub mod lattice;
pub mod math;
pub mod profiles;
pub mod quad;
pub mod scaling;

pub use error::{Error, Result};
pub use profiles::{Regime, ScalingConstants};
