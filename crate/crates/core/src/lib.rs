//! Multiscale dimension estimates for finite samples of fractal sets,
//! closed-form oracles for polynomial spirals, Cantor sets and sequence sets,
//! planar quasiconformal maps with dilatation bookkeeping, and evaluators for
//! dimension distortion bounds under quasiconformal maps.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod families;
pub mod geometry;
pub mod io;
pub mod qcmaps;
pub mod verify;

pub use error::{Error, Result};
