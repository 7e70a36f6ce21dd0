#![no_std]

extern crate alloc;

pub mod bloch;
pub mod error;
pub mod geometry;
pub mod holo;
pub mod optim;
pub mod quadrature;
pub mod spectra;
pub mod symbols;
pub mod zeropack;

pub use error::{Error, Result};
pub use num_complex::Complex64;
