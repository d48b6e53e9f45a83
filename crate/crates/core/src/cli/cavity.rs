//! Cavity simulations as used by the `run` and `sweep` commands.

use serde::{Deserialize, Serialize};

use super::scenario::{AnalysisSection, GridSection, RunSection};
use super::CliError;
use crate::analysis::{
    energy_density, extract_modes, flux_ratio, mode_volume, FluxRatio, InversionOptions,
    ResonantMode,
};
use crate::geometry::{
    rasterize, DielectricGrid, GeometrySpec, GridLayout, NanobeamCavity, RasterOptions, Symmetry,
};
use crate::solver::{
    Axis, Boundary, Component, DipoleSource, FluxPlane, Parity, Probe, RingdownRecord, Simulation,
    SimulationConfig, SPEED_OF_LIGHT,
};

pub fn cavity_grid(spec: &GeometrySpec, grid: &GridSection) -> Result<DielectricGrid, CliError> {
    let cell = spec.lattice_constant / grid.resolution;
    let layout = GridLayout::for_cavity(spec, cell, grid.padding_nm, grid.symmetry);
    let opts = RasterOptions {
        absorbing_cells: grid.pml_cells,
        memory_budget_bytes: grid.memory_budget_mb << 20,
    };
    Ok(rasterize(&NanobeamCavity::new(spec), layout, &opts)?)
}

/// Fractional positions (of W, H, a) used for the built-in sources and
/// probes. All lie off the mirror planes, inside the beam.
const SOURCE_SITES: [([f64; 3], Axis); 3] = [
    ([0.11, 0.22, 0.27], Axis::X),
    ([0.05, 0.30, 0.61], Axis::Z),
    ([0.08, 0.15, 0.43], Axis::Y),
];
const PROBE_SITES: [[f64; 3]; 4] = [
    [0.07, 0.2, 0.3],
    [0.15, 0.3, 0.8],
    [0.03, 0.25, 1.6],
    [0.2, 0.15, 0.1],
];

fn site(spec: &GeometrySpec, f: [f64; 3]) -> [f64; 3] {
    [
        f[0] * spec.beam_width,
        f[1] * spec.beam_height,
        f[2] * spec.lattice_constant,
    ]
}

/// Low-symmetry dipoles covering `band_nm`.
pub fn default_sources(spec: &GeometrySpec, band_nm: [f64; 2]) -> Vec<DipoleSource> {
    let (f_lo, f_hi) = (1.0 / band_nm[1], 1.0 / band_nm[0]);
    let f_c = 0.5 * (f_lo + f_hi);
    SOURCE_SITES
        .iter()
        .map(|&(f, axis)| DipoleSource {
            position_nm: site(spec, f),
            polarization: axis,
            center_wavelength_nm: 1.0 / f_c,
            fractional_bandwidth: (f_hi - f_lo) / f_c,
            amplitude: 1.0,
        })
        .collect()
}

pub fn default_probes(spec: &GeometrySpec) -> Vec<Probe> {
    let mut out = Vec::new();
    for (i, &f) in PROBE_SITES.iter().enumerate() {
        for c in [Component::Ex, Component::Ez, Component::Hy] {
            out.push(Probe {
                name: format!("p{i}_{}", c.name()),
                component: c,
                position_nm: site(spec, f),
            });
        }
    }
    out
}

/// Planes halfway between the beam and the absorbers, above the top face
/// ("up") and below the apex ("down").
pub fn flux_monitors(spec: &GeometrySpec, padding_nm: f64) -> Vec<FluxPlane> {
    vec![
        FluxPlane {
            name: "up".into(),
            axis: Axis::Y,
            position_nm: -0.5 * padding_nm,
            extent_nm: None,
        },
        FluxPlane {
            name: "down".into(),
            axis: Axis::Y,
            position_nm: spec.beam_height + 0.5 * padding_nm,
            extent_nm: None,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProfile {
    pub mode: usize,
    /// Electric energy density on the z = 0 and y = 0 node planes.
    pub u_e_z0: Vec<f64>,
    pub u_e_y0: Vec<f64>,
    /// In-plane sizes: `[nx, ny]` for z = 0 and `[nx, nz]` for y = 0.
    pub shape_z0: [usize; 2],
    pub shape_y0: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct SectorResult {
    pub parity: Option<Parity>,
    pub record: RingdownRecord,
    pub modes: Vec<ResonantMode>,
    pub flux: Option<FluxRatio>,
    pub profiles: Vec<ModeProfile>,
}

fn config_for(
    spec: &GeometrySpec,
    grid: &GridSection,
    run: &RunSection,
    analysis: &AnalysisSection,
    parity: Option<Parity>,
) -> SimulationConfig {
    let boundaries = match (grid.symmetry, parity) {
        (Symmetry::Quadrant, Some(p)) => p.boundaries(),
        _ => [Boundary::Absorbing; 3],
    };
    let sources = if run.sources.is_empty() {
        default_sources(spec, analysis.band_nm)
    } else {
        run.sources.clone()
    };
    let probes = if run.probes.is_empty() {
        default_probes(spec)
    } else {
        run.probes.clone()
    };
    let mut config = SimulationConfig {
        courant: grid.courant,
        boundaries,
        sources,
        probes,
        flux_planes: if run.flux_monitors {
            flux_monitors(spec, grid.padding_nm)
        } else {
            Vec::new()
        },
        threads: run.threads,
        ..SimulationConfig::default()
    };
    config.pml.cells = grid.pml_cells;
    let cell = spec.lattice_constant / grid.resolution;
    config.steps = run
        .steps
        .unwrap_or(config.shutoff_step(cell) + run.ringdown_steps);
    config
}

/// Keep modes at or above `min_q`, the strongest `max_modes` of them.
pub fn select_modes(mut modes: Vec<ResonantMode>, analysis: &AnalysisSection) -> Vec<ResonantMode> {
    modes.retain(|m| m.q >= analysis.min_q);
    if let Some(n) = analysis.max_modes {
        modes.sort_by(|a, b| {
            b.complex_amplitude()
                .norm()
                .total_cmp(&a.complex_amplitude().norm())
        });
        modes.truncate(n);
        modes.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
    }
    modes
}

pub fn analyze_record(
    record: &RingdownRecord,
    parity: Option<Parity>,
    analysis: &AnalysisSection,
) -> Result<(Vec<ResonantMode>, Option<FluxRatio>), CliError> {
    let modes = extract_modes(
        record,
        analysis.band_nm,
        parity,
        &InversionOptions::default(),
    )?;
    let modes = select_modes(modes, analysis);
    let has_flux = record.series_index("up").is_some() && record.series_index("down").is_some();
    let flux = if has_flux {
        flux_ratio(record, "up", "down").ok()
    } else {
        None
    };
    Ok((modes, flux))
}

fn plane(
    vol: &crate::solver::FieldVolume,
    u_e: &[f64],
    axis: usize,
    index: usize,
) -> (Vec<f64>, [usize; 2]) {
    let l = &vol.layout;
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let (nu, nv) = (l.dims[others[0]], l.dims[others[1]]);
    let mut out = Vec::with_capacity(nu * nv);
    for iu in 0..nu {
        for iv in 0..nv {
            let mut p = [0usize; 3];
            p[axis] = index;
            p[others[0]] = iu;
            p[others[1]] = iv;
            out.push(u_e[l.index(p[0], p[1], p[2])]);
        }
    }
    (out, [nu, nv])
}

/// One simulation per parity sector (or a single full-domain run).
pub fn run_sectors(
    spec: &GeometrySpec,
    grid_section: &GridSection,
    run: &RunSection,
    analysis: &AnalysisSection,
) -> Result<Vec<SectorResult>, CliError> {
    let grid = cavity_grid(spec, grid_section)?;
    let sectors: Vec<Option<Parity>> = match grid_section.symmetry {
        Symmetry::Quadrant => run.parities.iter().copied().map(Some).collect(),
        Symmetry::Full => vec![None],
    };
    let mirrored = [
        grid_section.symmetry == Symmetry::Quadrant,
        false,
        grid_section.symmetry == Symmetry::Quadrant,
    ];
    let mut out = Vec::new();
    for parity in sectors {
        let config = config_for(spec, grid_section, run, analysis, parity);
        log::info!(
            "running {} for {} steps",
            parity.map_or("full domain", |p| p.name()),
            config.steps
        );
        let mut sim = Simulation::new(&grid, config.clone())?;
        sim.run()?;
        let record = sim.into_record();
        let (mut modes, flux) = analyze_record(&record, parity, analysis)?;
        let mut profiles = Vec::new();
        if analysis.mode_profiles && !modes.is_empty() {
            // Second pass with one frequency-domain monitor per mode over the ring-down.
            let mut sim = Simulation::new(&grid, config)?;
            let cell_m = grid.layout.cell_size * 1e-9;
            let start = record.header.shutoff_step;
            let handles: Vec<usize> = modes
                .iter()
                .map(|m| sim.add_volume_dft(m.frequency_hz * cell_m / SPEED_OF_LIGHT, start, 4))
                .collect();
            sim.run()?;
            for (i, (m, h)) in modes.iter_mut().zip(handles).enumerate() {
                let vol = sim.volume_dft(h);
                let mv = mode_volume(&vol, mirrored)?;
                m.set_mode_volume(mv.nm3, spec.refractive_index);
                let mut e: [Vec<f32>; 3] = Default::default();
                for c in 0..3 {
                    e[c] = (0..vol.layout.len())
                        .map(|k| vol.intensity(c, k).sqrt() as f32)
                        .collect();
                }
                let ed = energy_density(
                    [&e[0], &e[1], &e[2]],
                    None,
                    [&vol.eps[0], &vol.eps[1], &vol.eps[2]],
                    1.0,
                )?;
                let zi = ((0.0 - vol.layout.origin[2]) / vol.layout.cell_size)
                    .round()
                    .max(0.0) as usize;
                let yi = ((0.0 - vol.layout.origin[1]) / vol.layout.cell_size)
                    .round()
                    .max(0.0) as usize;
                let (u_e_z0, shape_z0) = plane(&vol, &ed.u_e, 2, zi.min(vol.layout.dims[2] - 1));
                let (u_e_y0, shape_y0) = plane(&vol, &ed.u_e, 1, yi.min(vol.layout.dims[1] - 1));
                profiles.push(ModeProfile {
                    mode: i,
                    u_e_z0,
                    u_e_y0,
                    shape_z0,
                    shape_y0,
                });
            }
        }
        out.push(SectorResult {
            parity,
            record,
            modes,
            flux,
            profiles,
        });
    }
    Ok(out)
}
