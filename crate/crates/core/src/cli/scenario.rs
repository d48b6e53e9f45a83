//! Scenario files: TOML with geometry, grid, run, analysis, spectra, bands,
//! sweep and output sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::geometry::{GeometryConfig, Symmetry};
use crate::solver::{DipoleSource, Parity, Probe};
use crate::spectra::DEFAULT_ROI_NM;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub spectra: SpectraSection,
    #[serde(default)]
    pub bands: BandsSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Cells per lattice constant.
    pub resolution: f64,
    /// Vacuum on every open side, absorbing layer included (nm).
    pub padding_nm: f64,
    pub memory_budget_mb: usize,
    pub symmetry: Symmetry,
    pub courant: f64,
    pub pml_cells: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            resolution: 20.0,
            padding_nm: 400.0,
            memory_budget_mb: 4096,
            symmetry: Symmetry::Quadrant,
            courant: 0.5,
            pml_cells: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Parity sectors for quadrant runs, one simulation each.
    pub parities: Vec<Parity>,
    /// Total steps; defaults to source shut-off plus `ringdown_steps`.
    pub steps: Option<usize>,
    pub ringdown_steps: usize,
    /// Empty means the built-in low-symmetry dipole set.
    pub sources: Vec<DipoleSource>,
    pub probes: Vec<Probe>,
    pub flux_monitors: bool,
    pub threads: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            parities: vec![Parity::OE, Parity::EO, Parity::EE],
            steps: None,
            ringdown_steps: 15_000,
            sources: Vec::new(),
            probes: Vec::new(),
            flux_monitors: true,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub band_nm: [f64; 2],
    /// Modes below this Q are treated as transients.
    pub min_q: f64,
    /// Keep at most this many modes per sector, strongest first.
    pub max_modes: Option<usize>,
    /// Re-run with frequency-domain monitors to get mode volumes and
    /// energy-density planes.
    pub mode_profiles: bool,
    pub collection_gain: f64,
    /// Dipole dephasing rate for the coupling assessment, 1/s.
    pub gamma_perp: Option<f64>,
    pub coupling_margin: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            band_nm: [560.0, 700.0],
            min_q: 30.0,
            max_modes: None,
            mode_profiles: false,
            collection_gain: 10.0,
            gamma_perp: None,
            coupling_margin: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectraSection {
    pub input: Option<PathBuf>,
    /// Reference spectrum to subtract (e.g. unprocessed material).
    pub reference: Option<PathBuf>,
    /// Polynomial baseline degree, used when no reference is given.
    pub baseline_degree: Option<usize>,
    pub windows: Vec<[f64; 2]>,
    pub peaks: Vec<usize>,
    pub synthetic: Option<SyntheticSection>,
}

impl Default for SpectraSection {
    fn default() -> Self {
        SpectraSection {
            input: None,
            reference: None,
            baseline_degree: None,
            windows: vec![DEFAULT_ROI_NM],
            peaks: vec![5],
            synthetic: None,
        }
    }
}

/// Synthetic spectrum, generated when no input file is given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    /// `[center_nm, q, amplitude]` per peak.
    pub peaks: Vec<[f64; 3]>,
    pub background: f64,
    /// Noise standard deviation as a fraction of the tallest peak.
    pub noise_fraction: f64,
    pub range_nm: [f64; 2],
    pub points: usize,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        SyntheticSection {
            peaks: vec![
                [605.4, 87.0, 1000.0],
                [616.9, 213.0, 1000.0],
                [627.4, 221.0, 1000.0],
                [638.6, 170.0, 1000.0],
                [649.6, 87.0, 1000.0],
            ],
            background: 200.0,
            noise_fraction: 0.01,
            range_nm: [595.0, 660.0],
            points: 1301,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandsSection {
    /// Bloch wavevectors in units of pi / a.
    pub k: Vec<f64>,
    pub bands: usize,
    /// Frequency window in c / a.
    pub frequency_range: [f64; 2],
    /// Also compute the grooveless beam for comparison.
    pub grooveless: bool,
    /// Cells per lattice constant (must divide a exactly).
    pub resolution: f64,
    pub padding_nm: f64,
    pub ringdown_steps: usize,
    pub min_q: f64,
}

impl Default for BandsSection {
    fn default() -> Self {
        BandsSection {
            k: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            bands: 4,
            frequency_range: [0.1, 0.5],
            grooveless: true,
            resolution: 10.0,
            padding_nm: 600.0,
            ringdown_steps: 6000,
            min_q: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `D / a`.
    DefectRatio,
    /// `H / a`.
    HeightRatio,
    /// `h / H`.
    GrooveDepthRatio,
    /// Number of central gaps at the defect spacing.
    TaperCount,
    /// Named presets, listed in `presets`.
    Preset,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub presets: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: String| Err(CliError::Config(format!("`{key}`: {why}")));
        let g = &self.grid;
        if !(g.resolution > 0.0 && g.resolution.is_finite()) {
            return bad(
                "grid.resolution",
                format!("must be > 0, got {}", g.resolution),
            );
        }
        if !(g.padding_nm >= 0.0) {
            return bad(
                "grid.padding_nm",
                format!("must be >= 0, got {}", g.padding_nm),
            );
        }
        let [lo, hi] = self.analysis.band_nm;
        if !(lo > 0.0 && hi > lo) {
            return bad("analysis.band_nm", format!("invalid band {lo}..{hi}"));
        }
        if g.symmetry == Symmetry::Quadrant && self.run.parities.is_empty() {
            return bad(
                "run.parities",
                "quadrant runs need at least one parity sector".into(),
            );
        }
        if self.spectra.windows.len() != self.spectra.peaks.len() {
            return bad(
                "spectra.peaks",
                format!(
                    "{} windows but {} peak counts",
                    self.spectra.windows.len(),
                    self.spectra.peaks.len()
                ),
            );
        }
        if let Some(s) = &self.sweep {
            let n = if s.parameter == SweepParameter::Preset {
                s.presets.len()
            } else {
                s.values.len()
            };
            if n == 0 {
                return bad("sweep.values", "sweep axis is empty".into());
            }
        }
        Ok(())
    }
}
