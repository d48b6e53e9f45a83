//! Photoluminescence spectra: ingestion, background removal, multi-Lorentzian
//! peak fitting and matching of measured peaks to simulated modes.

mod background;
mod data;
mod lorentz;
mod matching;

pub use background::{subtract_background, BackgroundReport, Baseline};
pub use data::{read_spectra, synthesize, write_spectrum, PeakShape, Spectrum};
pub use lorentz::{
    evaluate_fit, fit_lorentzians, fit_lorentzians_with, write_peaks, FitOptions, LorentzianPeak,
    DEFAULT_ROI_NM,
};
pub use matching::{match_modes, write_comparison, Matching, ModePair};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("invalid spectrum input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `Q = lambda0 / FWHM`.
pub fn q_from_peak(center_nm: f64, fwhm_nm: f64) -> Result<f64, SpectraError> {
    if !(fwhm_nm > 0.0) || !fwhm_nm.is_finite() {
        return Err(SpectraError::Invalid(format!(
            "FWHM must be positive, got {fwhm_nm}"
        )));
    }
    Ok(center_nm / fwhm_nm)
}
