//! Resonance extraction and cavity figures of merit.

mod fields;
mod figures;
mod harminv;
mod modes;

pub use fields::{
    classify_parity, energy_density, mode_volume, EnergyDensity, ModeVolume, ParityScore,
};
pub use figures::{
    coupling_assessment, photon_budget, purcell_factor, readout_visibility, CouplingAssessment,
    PhotonBudget, PhotonBudgetParams, STRONG_COUPLING_Q_GATE,
};
pub use harminv::{
    harmonic_inversion, harmonic_inversion_with, HarmonicMode, Inversion, InversionOptions,
};
pub use modes::{
    band_hz, extract_modes, flux_ratio, label_modes, write_mode_table, FluxRatio, ResonantMode,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
