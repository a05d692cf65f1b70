//! Multi-component Navier-Stokes/Cahn-Hilliard stepping on a 2-D staggered
//! grid.
//!
//! The crate is `no_std` with `alloc`; the default `std` feature swaps the
//! dense cosine transform for an FFT-backed one.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod fields;
pub mod ch;
pub mod linalg;
pub mod ns;
pub mod sim;
pub mod thermo;

pub use error::{Error, Result};
