//! Spectral solver and verification toolkit for the fractional kinetic Kolmogorov
//! equation `(d_t + v.grad_x) f + (-Lap_v)^beta f = S` on a periodic phase-space box.

pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod par;
pub mod quad;

pub use error::{Error, Result};
pub use field::{PhysicalField, Rep, SpectralField, C64};
pub use grid::GridSpec;
pub mod gauge;
pub mod lp;
pub mod shift;
pub mod testfield;
pub mod solver;
pub mod norms;
pub mod levy;
pub mod kernel;
pub mod local;
pub mod exponents;
pub mod verify;
pub mod config;
pub mod suite;
pub mod report;
