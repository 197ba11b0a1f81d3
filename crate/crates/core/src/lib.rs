#![allow(clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod fibonacci;
pub mod io;
pub mod lattice;
pub mod numeric;
pub mod profile;
pub mod spectral;
pub mod svg;
pub mod walk;
pub use rug;
