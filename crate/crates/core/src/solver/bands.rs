//! Band structure of one lattice period with a Bloch boundary along z.

use serde::{Deserialize, Serialize};

use super::{
    run_ringdown, Axis, Boundary, Component, DipoleSource, Probe, SimulationConfig, SolverError,
    SPEED_OF_LIGHT,
};
use crate::analysis::{harmonic_inversion, HarmonicMode};
use crate::geometry::DielectricGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    /// Bloch wavevector in units of `pi / a`.
    pub k: f64,
    /// Mode frequencies in units of `c / a`, ascending.
    pub frequencies: Vec<f64>,
    /// Requested bands that were not found.
    pub shortfall: usize,
}

#[derive(Debug, Clone)]
pub struct BandOptions {
    pub bands: usize,
    /// Frequency window in `c / a`.
    pub frequency_range: [f64; 2],
    /// Boundaries across the beam; z is always Bloch.
    pub x_boundary: Boundary,
    pub y_boundary: Boundary,
    /// Steps recorded after the source turns off.
    pub ringdown_steps: usize,
    /// Modes below this Q are radiation, not bands.
    pub min_q: f64,
    pub courant: f64,
    pub pml_cells: usize,
    pub threads: Option<usize>,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions {
            bands: 4,
            frequency_range: [0.1, 0.5],
            x_boundary: Boundary::Absorbing,
            y_boundary: Boundary::Absorbing,
            ringdown_steps: 6000,
            min_q: 50.0,
            courant: 0.5,
            pml_cells: 10,
            threads: None,
        }
    }
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Scattered interior points, preferring the densest material so that the
/// sources couple to guided bands.
fn sample_points(grid: &DielectricGrid, margin: [usize; 3], count: usize) -> Vec<[f64; 3]> {
    let l = &grid.layout;
    let threshold = 0.5 * (1.0 + grid.eps_max);
    let mut dense = Vec::new();
    let mut any = Vec::new();
    for i in 1..4000 {
        let idx: [usize; 3] = std::array::from_fn(|a| {
            // Stay one node off the faces so staggered components remain inside.
            let lo = margin[a].max(1);
            let span = l.dims[a].saturating_sub(2 * lo).max(1);
            lo + ((halton(i, [2, 3, 5][a]) * span as f64) as usize).min(span - 1)
        });
        let p = l.position(idx, [0.0; 3]);
        let e = grid.eps_at(0, idx[0], idx[1], idx[2]) as f64;
        if e >= threshold && grid.eps_max > 1.0 {
            dense.push(p);
        } else if any.len() < count {
            any.push(p);
        }
        if dense.len() >= count {
            break;
        }
    }
    dense.extend(any);
    dense.truncate(count);
    dense
}

/// Band frequencies at each `k` (units `pi / a`) for a unit cell whose z
/// extent is one period. Every run is seeded with three dipoles of
/// different polarization at scattered positions; the ringdown at several
/// probes is harmonically inverted and long-lived modes are kept.
pub fn band_structure(
    grid: &DielectricGrid,
    ks: &[f64],
    opts: &BandOptions,
) -> Result<Vec<BandPoint>, SolverError> {
    let l = grid.layout;
    let cell = l.cell_size;
    let a_nm = l.dims[2] as f64 * cell;
    let [f_lo, f_hi] = opts.frequency_range;
    if !(f_lo > 0.0 && f_hi > f_lo) {
        return Err(SolverError::Config(format!(
            "invalid frequency range {:?}",
            opts.frequency_range
        )));
    }
    if opts.bands == 0 {
        return Err(SolverError::Config(
            "at least one band must be requested".into(),
        ));
    }
    let f_c = 0.5 * (f_lo + f_hi);
    let margin: [usize; 3] = std::array::from_fn(|a| {
        let b = [opts.x_boundary, opts.y_boundary, Boundary::Periodic][a];
        if b.absorbs_high() {
            opts.pml_cells + 2
        } else {
            0
        }
    });
    let points = sample_points(grid, margin, 7);
    if points.len() < 4 {
        return Err(SolverError::Config(
            "unit cell too small to place sources and probes".into(),
        ));
    }
    let sources: Vec<DipoleSource> = points[..3]
        .iter()
        .zip(Axis::ALL)
        .map(|(&p, axis)| DipoleSource {
            position_nm: p,
            polarization: axis,
            center_wavelength_nm: a_nm / f_c,
            fractional_bandwidth: (f_hi - f_lo) / f_c,
            amplitude: 1.0,
        })
        .collect();
    let comps = [
        Component::Ex,
        Component::Ey,
        Component::Ez,
        Component::Hx,
        Component::Hy,
        Component::Hz,
    ];
    let probes: Vec<Probe> = points
        .iter()
        .enumerate()
        .flat_map(|(n, &p)| {
            [comps[n % 6], comps[(n + 2) % 6]]
                .into_iter()
                .map(move |c| Probe {
                    name: format!("p{n}_{}", c.name()),
                    component: c,
                    position_nm: p,
                })
        })
        .collect();

    let to_hz = SPEED_OF_LIGHT / (a_nm * 1e-9);
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let phase = k * std::f64::consts::PI;
        let mut config = SimulationConfig {
            courant: opts.courant,
            boundaries: [opts.x_boundary, opts.y_boundary, Boundary::Bloch { phase }],
            sources: sources.clone(),
            probes: probes.clone(),
            threads: opts.threads,
            ..SimulationConfig::default()
        };
        config.pml.cells = opts.pml_cells;
        config.steps = config.shutoff_step(cell) + opts.ringdown_steps;
        let record = run_ringdown(grid, config)?;
        let dt = record.header.dt_s;
        let mut found: Vec<HarmonicMode> = Vec::new();
        for i in 0..record.series.len() {
            let signal: Vec<f64> = record.ringdown(i).iter().map(|&v| v as f64).collect();
            let modes = harmonic_inversion(&signal, dt, [f_lo * to_hz, f_hi * to_hz])
                .map_err(|e| SolverError::Config(format!("band inversion failed: {e}")))?;
            found.extend(modes.into_iter().filter(|m| m.q >= opts.min_q));
        }
        // Probes that sit on a node of every band only see numerical noise.
        let amax = found.iter().fold(0.0f64, |m, x| m.max(x.amplitude.norm()));
        found.retain(|m| m.amplitude.norm() >= 1e-4 * amax);
        found.sort_by(|a, b| b.amplitude.norm().total_cmp(&a.amplitude.norm()));
        let mut freqs: Vec<f64> = Vec::new();
        for m in found {
            let f = m.frequency_hz / to_hz;
            if !freqs.iter().any(|&g| (g - f).abs() < 1e-3 * f) {
                freqs.push(f);
            }
        }
        freqs.sort_by(f64::total_cmp);
        freqs.truncate(opts.bands);
        out.push(BandPoint {
            k,
            shortfall: opts.bands - freqs.len(),
            frequencies: freqs,
        });
    }
    Ok(out)
}
