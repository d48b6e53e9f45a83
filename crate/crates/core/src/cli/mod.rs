//! Scenario-driven orchestration behind the `nanobeam` binary.

mod cavity;
mod commands;
mod scenario;

pub use cavity::{
    analyze_record, cavity_grid, default_probes, default_sources, flux_monitors, run_sectors,
    select_modes, ModeProfile, SectorResult,
};
pub use commands::{
    analyze, bands, compare, fit, rasterize_cmd, run, scenario_hash, sweep, ModeReport, Outcome,
};
pub use scenario::{
    AnalysisSection, BandsSection, GridSection, OutputSection, RunSection, Scenario,
    SpectraSection, SweepParameter, SweepSection, SyntheticSection,
};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::geometry::GeometryError;
use crate::solver::SolverError;
use crate::spectra::SpectraError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for schema errors, 3 for memory-budget refusals, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Geometry(GeometryError::Invalid { .. }) => 2,
            CliError::Geometry(GeometryError::MemoryBudget { .. }) => 3,
            _ => 1,
        }
    }
}
