//! FDTD simulation and analysis toolkit for triangular-cross-section
//! nanobeam photonic-crystal cavities in diamond.

pub mod analysis;
pub mod cli;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod solver;
pub mod spectra;
