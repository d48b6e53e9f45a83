//! Staggered-grid leapfrog Maxwell solver.
//!
//! Internally every quantity is normalized: `c = eps0 = mu0 = 1`, lengths in
//! cells and time in units of `cell / c`. Physical units (nm, s) appear only
//! in [`SimulationConfig`], [`RingdownRecord`] and the snapshot types.

mod bands;
mod cpml;
mod engine;
mod grid;
mod record;
mod snapshot;

pub use bands::{band_structure, BandOptions, BandPoint};
pub use engine::{run_ringdown, Simulation, VolumeDft};
pub use record::{RecordHeader, RingdownRecord, SeriesInfo, SeriesKind};
pub use snapshot::{FieldVolume, PlaneSnapshot};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("field blow-up detected at step {step} ({what})")]
    Unstable { step: usize, what: String },
    #[error("record format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Ex,
        Component::Ey,
        Component::Ez,
        Component::Hx,
        Component::Hy,
        Component::Hz,
    ];

    pub fn electric(axis: Axis) -> Self {
        Component::ALL[axis.index()]
    }

    pub fn magnetic(axis: Axis) -> Self {
        Component::ALL[3 + axis.index()]
    }

    pub fn is_electric(self) -> bool {
        (self as usize) < 3
    }

    pub fn axis(self) -> Axis {
        Axis::from_index(self as usize % 3)
    }

    /// Offset of the Yee sample from its node, in cells.
    pub fn stagger(self) -> [f64; 3] {
        let a = self.axis().index();
        let mut s = if self.is_electric() {
            [0.0; 3]
        } else {
            [0.5; 3]
        };
        s[a] = if self.is_electric() { 0.5 } else { 0.0 };
        s
    }

    pub fn name(self) -> &'static str {
        ["Ex", "Ey", "Ez", "Hx", "Hy", "Hz"][self as usize]
    }

    pub fn parse(s: &str) -> Option<Self> {
        Component::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

/// Boundary treatment of one axis.
///
/// Mirror planes sit on the first node of the axis; their parity names the
/// behaviour of the tangential magnetic field (so for the x and z planes the
/// parity of `Hy`). `MirrorEven` is a perfect-electric-conductor plane,
/// `MirrorOdd` a perfect-magnetic-conductor plane. The far side of a mirror
/// axis is absorbing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Boundary {
    Absorbing,
    MirrorEven,
    MirrorOdd,
    /// Closed perfect-conductor walls on both ends, no absorber.
    Pec,
    Periodic,
    /// Periodic with phase `exp(i * phase)` across one axis length (`k·a`).
    Bloch {
        phase: f64,
    },
}

impl Boundary {
    pub(crate) fn absorbs_low(self) -> bool {
        matches!(self, Boundary::Absorbing)
    }

    pub(crate) fn absorbs_high(self) -> bool {
        matches!(
            self,
            Boundary::Absorbing | Boundary::MirrorEven | Boundary::MirrorOdd
        )
    }

    pub(crate) fn wraps(self) -> bool {
        matches!(self, Boundary::Periodic | Boundary::Bloch { .. })
    }
}

/// Parity of `Hy` under the x = 0 and z = 0 mirrors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    EE,
    EO,
    OE,
    OO,
}

impl Parity {
    pub const ALL: [Parity; 4] = [Parity::EE, Parity::EO, Parity::OE, Parity::OO];

    pub fn from_flags(even_x: bool, even_z: bool) -> Self {
        match (even_x, even_z) {
            (true, true) => Parity::EE,
            (true, false) => Parity::EO,
            (false, true) => Parity::OE,
            (false, false) => Parity::OO,
        }
    }

    pub fn even_x(self) -> bool {
        matches!(self, Parity::EE | Parity::EO)
    }

    pub fn even_z(self) -> bool {
        matches!(self, Parity::EE | Parity::OE)
    }

    fn mirror(even: bool) -> Boundary {
        if even {
            Boundary::MirrorEven
        } else {
            Boundary::MirrorOdd
        }
    }

    /// Boundaries for a quadrant run in this sector (y stays absorbing).
    pub fn boundaries(self) -> [Boundary; 3] {
        [
            Parity::mirror(self.even_x()),
            Boundary::Absorbing,
            Parity::mirror(self.even_z()),
        ]
    }

    /// Sign picked up by E component `axis` under reflection through the
    /// `mirror` plane (X or Z) in this sector.
    pub fn e_sign(self, axis: Axis, mirror: Axis) -> f64 {
        let even = match mirror {
            Axis::X => self.even_x(),
            Axis::Z => self.even_z(),
            Axis::Y => panic!("no y mirror"),
        };
        // Even Hy <=> conducting plane: tangential E odd, normal E even.
        let normal = axis == mirror;
        if even == normal {
            1.0
        } else {
            -1.0
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::EE => "EE",
            Parity::EO => "EO",
            Parity::OE => "OE",
            Parity::OO => "OO",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Parity::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlParams {
    pub cells: usize,
    /// Polynomial grading order of the conductivity profile.
    pub order: f64,
    /// Peak conductivity relative to `0.8 (order + 1) / cell`.
    pub sigma_scale: f64,
    /// Peak complex-frequency-shift parameter (normalized units).
    pub alpha_max: f64,
}

impl Default for PmlParams {
    fn default() -> Self {
        PmlParams {
            cells: 10,
            order: 3.0,
            sigma_scale: 1.0,
            alpha_max: 0.05,
        }
    }
}

/// Current dipole with a Gaussian-modulated sinusoid envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleSource {
    pub position_nm: [f64; 3],
    pub polarization: Axis,
    pub center_wavelength_nm: f64,
    /// Spectral width `2 sigma_f / f_c` of the amplitude spectrum.
    pub fractional_bandwidth: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl DipoleSource {
    /// Waveform parameters in normalized units: (f_c, sigma_t, t_peak).
    pub(crate) fn waveform(&self, cell_nm: f64) -> (f64, f64, f64) {
        let fc = cell_nm / self.center_wavelength_nm;
        let sigma_f = 0.5 * self.fractional_bandwidth * fc;
        let sigma_t = 1.0 / (2.0 * std::f64::consts::PI * sigma_f);
        (fc, sigma_t, 4.0 * sigma_t)
    }

    /// Current at normalized time `t`; zero after the shut-off time.
    pub fn current(&self, cell_nm: f64, t: f64) -> f64 {
        let (fc, sigma_t, t0) = self.waveform(cell_nm);
        if t > t0 + 4.0 * sigma_t {
            return 0.0;
        }
        let u = t - t0;
        self.amplitude
            * (-0.5 * u * u / (sigma_t * sigma_t)).exp()
            * (2.0 * std::f64::consts::PI * fc * u).sin()
    }

    /// Normalized time at which the envelope is switched off.
    pub fn shutoff_time(&self, cell_nm: f64) -> f64 {
        let (_, sigma_t, t0) = self.waveform(cell_nm);
        t0 + 4.0 * sigma_t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub name: String,
    pub component: Component,
    pub position_nm: [f64; 3],
}

/// Plane perpendicular to `axis` at `position_nm`, integrating the Poynting
/// component along `+axis`. The extent covers the other two axes in
/// ascending axis order; `None` spans everything inside the absorbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxPlane {
    pub name: String,
    pub axis: Axis,
    pub position_nm: f64,
    #[serde(default)]
    pub extent_nm: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub courant: f64,
    pub pml: PmlParams,
    pub boundaries: [Boundary; 3],
    pub steps: usize,
    #[serde(default)]
    pub sources: Vec<DipoleSource>,
    #[serde(default)]
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub flux_planes: Vec<FluxPlane>,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            courant: 0.5,
            pml: PmlParams::default(),
            boundaries: [Boundary::Absorbing; 3],
            steps: 0,
            sources: Vec::new(),
            probes: Vec::new(),
            flux_planes: Vec::new(),
            threads: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let limit = 1.0 / 3f64.sqrt();
        if !(self.courant > 0.0 && self.courant <= limit) {
            return Err(SolverError::Config(format!(
                "courant factor {} outside (0, 1/sqrt(3)]",
                self.courant
            )));
        }
        let absorbing = self.boundaries.iter().any(|b| b.absorbs_high());
        if absorbing && self.pml.cells < 8 {
            return Err(SolverError::Config(format!(
                "absorbing layer of {} cells is thinner than 8",
                self.pml.cells
            )));
        }
        let bloch = self
            .boundaries
            .iter()
            .filter(|b| matches!(b, Boundary::Bloch { .. }))
            .count();
        if bloch > 1 {
            return Err(SolverError::Config(
                "at most one Bloch axis is allowed".into(),
            ));
        }
        if let Some(0) = self.threads {
            return Err(SolverError::Config("thread count must be positive".into()));
        }
        for s in &self.sources {
            if !(s.center_wavelength_nm > 0.0 && s.fractional_bandwidth > 0.0) {
                return Err(SolverError::Config(
                    "source wavelength and bandwidth must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Time step in seconds for a grid of `cell_nm`.
    pub fn dt_seconds(&self, cell_nm: f64) -> f64 {
        self.courant * cell_nm * 1e-9 / SPEED_OF_LIGHT
    }

    /// Last step at which any source is active.
    pub fn shutoff_step(&self, cell_nm: f64) -> usize {
        self.sources
            .iter()
            .map(|s| (s.shutoff_time(cell_nm) / self.courant).ceil() as usize)
            .max()
            .unwrap_or(0)
    }
}
