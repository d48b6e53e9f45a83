use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::cpml::Cpml;
use super::grid::{FieldSet, Padded, Range3};
use super::record::{RecordHeader, RingdownRecord, SeriesInfo, SeriesKind};
use super::snapshot::{FieldVolume, PlaneSnapshot};
use super::{Axis, Boundary, Component, DipoleSource, FluxPlane, SimulationConfig, SolverError};
use crate::geometry::{DielectricGrid, GridLayout};

/// Full scan for NaN/Inf every this many steps (probes are checked every step).
const FINITE_SCAN_INTERVAL: usize = 256;

struct PlacedSource {
    component: usize,
    idx: usize,
    coef: f32,
    active: bool,
    source: DipoleSource,
}

struct PlacedProbe {
    component: Component,
    idx: usize,
}

struct FluxMonitor {
    axis: usize,
    node: usize,
    span: [[usize; 2]; 2],
    prev: [Vec<f32>; 2],
}

/// Running DFT of the E field over the whole grid at one frequency.
pub struct VolumeDft {
    /// Normalized frequency (cycles per unit time).
    pub frequency: f64,
    pub start_step: usize,
    pub stride: usize,
    re: [Vec<f32>; 3],
    im: [Vec<f32>; 3],
    samples: usize,
}

impl VolumeDft {
    pub fn samples(&self) -> usize {
        self.samples
    }
}

pub struct Simulation {
    config: SimulationConfig,
    layout: GridLayout,
    pad: Padded,
    dt: f32,
    coef: [Vec<f32>; 3],
    fields: Vec<FieldSet>,
    ranges: [Range3; 6],
    cpml: Cpml,
    /// (cos, sin) of the Bloch phase per axis when the axis wraps.
    wrap_phase: [Option<(f32, f32)>; 3],
    sources: Vec<PlacedSource>,
    probes: Vec<PlacedProbe>,
    monitors: Vec<FluxMonitor>,
    dfts: Vec<VolumeDft>,
    series: Vec<Vec<f32>>,
    series_infos: Vec<SeriesInfo>,
    step: usize,
    pool: Option<rayon::ThreadPool>,
    config_hash: String,
}

/// Update range of field `f` (0..3 E, 3..6 H) given the boundaries.
fn update_range(f: usize, bounds: &[Boundary; 3], n: [usize; 3]) -> Range3 {
    let electric = f < 3;
    let c = f % 3;
    let mut r = [[0, 0]; 3];
    for a in 0..3 {
        let wraps = bounds[a].wraps();
        let hi_open = if wraps { n[a] } else { n[a] - 1 };
        r[a] = if electric && a != c {
            let lo = match bounds[a] {
                Boundary::MirrorOdd | Boundary::Periodic | Boundary::Bloch { .. } => 0,
                _ => 1,
            };
            [lo, hi_open.max(lo)]
        } else if !electric && a == c {
            [0, n[a]]
        } else {
            [0, hi_open]
        };
    }
    r
}

fn in_range(r: &Range3, p: [usize; 3]) -> bool {
    (0..3).all(|a| p[a] >= r[a][0] && p[a] < r[a][1])
}

pub(crate) fn config_hash(config: &SimulationConfig, grid: &DielectricGrid) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(serde_json::to_vec(&grid.layout).expect("layout serializes"));
    for comp in &grid.eps {
        for v in comp {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl Simulation {
    pub fn new(grid: &DielectricGrid, config: SimulationConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let layout = grid.layout;
        let n = layout.dims;
        let cell_nm = layout.cell_size;
        for a in 0..3 {
            let b = config.boundaries[a];
            let need = match (b.absorbs_low(), b.absorbs_high()) {
                (true, true) => 2 * config.pml.cells + 2,
                (false, true) => config.pml.cells + 2,
                _ => 1,
            };
            if n[a] < need {
                return Err(SolverError::Config(format!(
                    "axis {a} has {} nodes, boundary needs at least {need}",
                    n[a]
                )));
            }
        }
        let index_max = grid.eps_max.sqrt();
        for s in &config.sources {
            let cells_per_wavelength = s.center_wavelength_nm / (index_max * cell_nm);
            if cells_per_wavelength < 10.0 {
                return Err(SolverError::Config(format!(
                    "source wavelength {} nm is only {cells_per_wavelength:.1} cells per wavelength in the densest material",
                    s.center_wavelength_nm
                )));
            }
        }
        let pad = Padded::new(n);
        let dt = config.courant;
        let coef = [0, 1, 2].map(|c| {
            let inv: Vec<f32> = grid.eps[c]
                .iter()
                .map(|&e| (dt / e as f64) as f32)
                .collect();
            pad.embed(&inv, 0.0)
        });
        let ranges = [0, 1, 2, 3, 4, 5].map(|f| update_range(f, &config.boundaries, n));
        let mut wrap_phase = [None; 3];
        let mut complex = false;
        for a in 0..3 {
            match config.boundaries[a] {
                Boundary::Periodic => wrap_phase[a] = Some((1.0, 0.0)),
                Boundary::Bloch { phase } => {
                    let (s, c) = phase.sin_cos();
                    // Phases 0 and pi keep the fields real.
                    let s = if s.abs() < 1e-12 { 0.0 } else { s };
                    complex |= s != 0.0;
                    wrap_phase[a] = Some((c as f32, s as f32));
                }
                _ => {}
            }
        }
        let sets = if complex { 2 } else { 1 };
        let fields = vec![FieldSet::zeros(pad.total()); sets];
        let cpml = Cpml::new(&config.pml, &config.boundaries, n, &ranges, dt, sets);

        let locate = |component: Component, p: [f64; 3]| -> Option<[usize; 3]> {
            let st = component.stagger();
            let mut idx = [0usize; 3];
            for a in 0..3 {
                let f = (p[a] - layout.origin[a]) / cell_nm - st[a];
                let r = f.round();
                if r < 0.0 || r >= n[a] as f64 {
                    return None;
                }
                idx[a] = r as usize;
            }
            Some(idx)
        };

        let mut sources = Vec::new();
        for s in &config.sources {
            let comp = Component::electric(s.polarization);
            let c = s.polarization.index();
            let p = locate(comp, s.position_nm).ok_or_else(|| {
                SolverError::Config(format!(
                    "source at {:?} nm lies outside the grid",
                    s.position_nm
                ))
            })?;
            let idx = pad.at(p[0], p[1], p[2]);
            sources.push(PlacedSource {
                component: c,
                idx,
                coef: coef[c][idx],
                active: in_range(&ranges[c], p),
                source: *s,
            });
        }
        let mut probes = Vec::new();
        let mut infos = Vec::new();
        for pr in &config.probes {
            let p = locate(pr.component, pr.position_nm).ok_or_else(|| {
                SolverError::Config(format!(
                    "probe {:?} at {:?} nm lies outside the grid",
                    pr.name, pr.position_nm
                ))
            })?;
            probes.push(PlacedProbe {
                component: pr.component,
                idx: pad.at(p[0], p[1], p[2]),
            });
            let snapped = layout.position(p, pr.component.stagger());
            infos.push(SeriesInfo {
                name: pr.name.clone(),
                kind: SeriesKind::Probe {
                    component: pr.component,
                    position_nm: snapped,
                },
            });
        }
        let mut monitors = Vec::new();
        for fp in &config.flux_planes {
            let m = Self::place_monitor(fp, &layout, &config)?;
            infos.push(SeriesInfo {
                name: fp.name.clone(),
                kind: SeriesKind::Flux {
                    axis: fp.axis,
                    position_nm: layout.origin[m.axis] + m.node as f64 * cell_nm,
                },
            });
            monitors.push(m);
        }
        let pool = match config.threads {
            Some(t) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| SolverError::Config(format!("thread pool: {e}")))?,
            ),
            None => None,
        };
        let series = vec![Vec::with_capacity(config.steps); infos.len()];
        let hash = config_hash(&config, grid);
        Ok(Simulation {
            config,
            layout,
            pad,
            dt: dt as f32,
            coef,
            fields,
            ranges,
            cpml,
            wrap_phase,
            sources,
            probes,
            monitors,
            dfts: Vec::new(),
            series,
            series_infos: infos,
            step: 0,
            pool,
            config_hash: hash,
        })
    }

    fn place_monitor(
        fp: &FluxPlane,
        layout: &GridLayout,
        config: &SimulationConfig,
    ) -> Result<FluxMonitor, SolverError> {
        let a = fp.axis.index();
        let n = layout.dims;
        let d = layout.cell_size;
        let node = ((fp.position_nm - layout.origin[a]) / d).round();
        if node < 1.0 || node >= (n[a] - 1) as f64 {
            return Err(SolverError::Config(format!(
                "flux plane {:?} lies outside the grid interior",
                fp.name
            )));
        }
        let others = [(a + 1) % 3, (a + 2) % 3];
        let mut sorted = others;
        sorted.sort();
        let mut span = [[0usize; 2]; 2];
        for (slot, &b) in sorted.iter().enumerate() {
            let bc = config.boundaries[b];
            let m = config.pml.cells;
            let default_lo = if bc.absorbs_low() { m + 1 } else { 0 };
            let default_hi = if bc.absorbs_high() {
                n[b] - 1 - m
            } else {
                n[b]
            };
            span[slot] = match fp.extent_nm {
                None => [default_lo, default_hi],
                Some(ext) => {
                    let lo = ((ext[slot][0] - layout.origin[b]) / d).round().max(0.0) as usize;
                    let hi =
                        (((ext[slot][1] - layout.origin[b]) / d).round() as usize + 1).min(n[b]);
                    [lo, hi]
                }
            };
            if span[slot][0] >= span[slot][1] {
                return Err(SolverError::Config(format!(
                    "flux plane {:?} has empty extent",
                    fp.name
                )));
            }
        }
        // Store spans in (a+1, a+2) order.
        if sorted != others {
            span.swap(0, 1);
        }
        let len = (span[0][1] - span[0][0]) * (span[1][1] - span[1][0]);
        Ok(FluxMonitor {
            axis: a,
            node: node as usize,
            span,
            prev: [vec![0.0; len], vec![0.0; len]],
        })
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    /// Number of completed steps.
    pub fn current_step(&self) -> usize {
        self.step
    }

    /// Normalized time step.
    pub fn dt(&self) -> f64 {
        self.config.courant
    }

    pub fn is_complex(&self) -> bool {
        self.fields.len() == 2
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Bytes held by field, coefficient and absorber arrays.
    pub fn memory_bytes(&self) -> usize {
        let per_set = 6 * self.pad.total() * 4;
        per_set * self.fields.len() + 3 * self.pad.total() * 4 + self.cpml.memory_bytes()
    }

    fn run_in_pool<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
        match pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    /// Advance one full leapfrog step (E to n+1, then H to n+3/2).
    pub fn step(&mut self) -> Result<(), SolverError> {
        let n = self.step;
        self.fill_h_ghosts();
        {
            let (pad, coef, ranges) = (&self.pad, &self.coef, &self.ranges);
            let fields = &mut self.fields;
            Self::run_in_pool(&self.pool, || {
                for set in fields.iter_mut() {
                    update_e(pad, set, coef, ranges);
                }
            });
        }
        self.cpml.correct_e(&self.pad, &mut self.fields, &self.coef);
        let t = (n as f64 + 0.5) * self.config.courant;
        for s in &self.sources {
            if s.active {
                let j = s.source.current(self.layout.cell_size, t);
                self.fields[0].e[s.component][s.idx] -= s.coef * j as f32;
            }
        }
        self.fill_e_ghosts();
        {
            let (pad, dt, ranges) = (&self.pad, self.dt, &self.ranges);
            let fields = &mut self.fields;
            Self::run_in_pool(&self.pool, || {
                for set in fields.iter_mut() {
                    update_h(pad, set, dt, ranges);
                }
            });
        }
        self.cpml.correct_h(&self.pad, &mut self.fields, self.dt);
        self.step += 1;
        self.sample()?;
        if self.step.is_multiple_of(FINITE_SCAN_INTERVAL) && !self.fields.iter().all(|f| f.all_finite()) {
            return Err(SolverError::Unstable {
                step: self.step,
                what: "non-finite field value".into(),
            });
        }
        Ok(())
    }

    /// Run until `config.steps` steps have completed.
    pub fn run(&mut self) -> Result<(), SolverError> {
        let total = self.config.steps;
        let report = (total / 10).max(1);
        while self.step < total {
            self.step()?;
            if self.step.is_multiple_of(report) {
                log::info!("step {}/{}", self.step, total);
            }
        }
        Ok(())
    }

    fn sample(&mut self) -> Result<(), SolverError> {
        let f = &self.fields[0];
        let mut s = 0;
        for p in &self.probes {
            let c = p.component.axis().index();
            let v = if p.component.is_electric() {
                f.e[c][p.idx]
            } else {
                f.h[c][p.idx]
            };
            if !v.is_finite() {
                return Err(SolverError::Unstable {
                    step: self.step,
                    what: format!("probe {}", self.series_infos[s].name),
                });
            }
            self.series[s].push(v);
            s += 1;
        }
        for m in self.monitors.iter_mut() {
            let v = flux_sample(&self.pad, f, m);
            self.series[s].push(v as f32);
            s += 1;
        }
        let t = self.step as f64 * self.config.courant;
        for d in self.dfts.iter_mut() {
            if self.step >= d.start_step && (self.step - d.start_step).is_multiple_of(d.stride) {
                let w = 2.0 * std::f64::consts::PI * d.frequency * t;
                let (sn, cs) = (w.sin() as f32, w.cos() as f32);
                for c in 0..3 {
                    let e = &f.e[c];
                    for ((re, im), &v) in d.re[c].iter_mut().zip(d.im[c].iter_mut()).zip(e.iter()) {
                        *re += v * cs;
                        *im -= v * sn;
                    }
                }
                d.samples += 1;
            }
        }
        Ok(())
    }

    fn fill_h_ghosts(&mut self) {
        for a in 0..3 {
            let n = self.pad.n[a] as isize;
            match self.config.boundaries[a] {
                Boundary::MirrorOdd => {
                    fill_ghosts(&self.pad, &mut self.fields, false, a, -1, 0, (-1.0, 0.0))
                }
                Boundary::Periodic | Boundary::Bloch { .. } => {
                    let (c, s) = self.wrap_phase[a].unwrap();
                    fill_ghosts(&self.pad, &mut self.fields, false, a, -1, n - 1, (c, -s));
                }
                _ => {}
            }
        }
    }

    fn fill_e_ghosts(&mut self) {
        for a in 0..3 {
            if let Some((c, s)) = self.wrap_phase[a] {
                let n = self.pad.n[a] as isize;
                fill_ghosts(&self.pad, &mut self.fields, true, a, n, 0, (c, s));
            }
        }
    }

    /// Start accumulating a DFT of E at normalized `frequency`, sampling
    /// every `stride` steps from `start_step` on. Returns its handle.
    pub fn add_volume_dft(&mut self, frequency: f64, start_step: usize, stride: usize) -> usize {
        let len = self.pad.total();
        let z = || [vec![0.0f32; len], vec![0.0f32; len], vec![0.0f32; len]];
        self.dfts.push(VolumeDft {
            frequency,
            start_step,
            stride: stride.max(1),
            re: z(),
            im: z(),
            samples: 0,
        });
        self.dfts.len() - 1
    }

    /// Accumulated DFT as a complex field volume.
    pub fn volume_dft(&self, handle: usize) -> FieldVolume {
        let d = &self.dfts[handle];
        FieldVolume {
            layout: self.layout,
            eps: self.eps_unpadded(),
            e: [0, 1, 2].map(|c| self.pad.extract(&d.re[c])),
            e_im: Some([0, 1, 2].map(|c| self.pad.extract(&d.im[c]))),
        }
    }

    fn eps_unpadded(&self) -> [Vec<f32>; 3] {
        [0, 1, 2].map(|c| {
            let cf = self.pad.extract(&self.coef[c]);
            cf.into_iter()
                .map(|v| if v > 0.0 { self.dt / v } else { 1.0 })
                .collect()
        })
    }

    /// Instantaneous E field (real part for complex runs).
    pub fn field_volume(&self) -> FieldVolume {
        FieldVolume {
            layout: self.layout,
            eps: self.eps_unpadded(),
            e: [0, 1, 2].map(|c| self.pad.extract(&self.fields[0].e[c])),
            e_im: if self.is_complex() {
                Some([0, 1, 2].map(|c| self.pad.extract(&self.fields[1].e[c])))
            } else {
                None
            },
        }
    }

    /// Copy all six field components and the permittivity on the node plane
    /// nearest to `position_nm` along `axis`.
    pub fn plane_snapshot(
        &self,
        axis: Axis,
        position_nm: f64,
    ) -> Result<PlaneSnapshot, SolverError> {
        let a = axis.index();
        let n = self.layout.dims;
        let d = self.layout.cell_size;
        let f = ((position_nm - self.layout.origin[a]) / d).round();
        if f < 0.0 || f >= n[a] as f64 {
            return Err(SolverError::Config(format!(
                "snapshot plane at {position_nm} nm lies outside the grid"
            )));
        }
        let idx = f as usize;
        let others: Vec<usize> = (0..3).filter(|&b| b != a).collect();
        let (u, v) = (others[0], others[1]);
        let coords = [u, v].map(|b| {
            (0..n[b])
                .map(|i| self.layout.origin[b] + i as f64 * d)
                .collect::<Vec<_>>()
        });
        let mut fields: [Vec<f32>; 6] = Default::default();
        let mut eps: [Vec<f32>; 3] = Default::default();
        let set = &self.fields[0];
        for iu in 0..n[u] {
            for iv in 0..n[v] {
                let mut p = [0usize; 3];
                p[a] = idx;
                p[u] = iu;
                p[v] = iv;
                let g = self.pad.at(p[0], p[1], p[2]);
                for c in 0..3 {
                    fields[c].push(set.e[c][g]);
                    fields[3 + c].push(set.h[c][g]);
                    let cf = self.coef[c][g];
                    eps[c].push(if cf > 0.0 { self.dt / cf } else { 1.0 });
                }
            }
        }
        Ok(PlaneSnapshot {
            axis,
            index: idx,
            position_nm: self.layout.origin[a] + idx as f64 * d,
            step: self.step,
            cell_size_nm: d,
            coords,
            fields,
            eps,
        })
    }

    /// Electric energy `1/2 sum eps E^2` over all field sets (normalized units).
    pub fn electric_energy(&self) -> f64 {
        let mut total = 0.0;
        for set in &self.fields {
            for c in 0..3 {
                total += self.sum_over(c, |g| {
                    let cf = self.coef[c][g];
                    let e = set.e[c][g] as f64;
                    if cf > 0.0 {
                        self.dt as f64 / cf as f64 * e * e
                    } else {
                        0.0
                    }
                });
            }
        }
        0.5 * total
    }

    /// Copy of the magnetic field arrays of every field set.
    pub fn magnetic_state(&self) -> Vec<[Vec<f32>; 3]> {
        self.fields.iter().map(|f| f.h.clone()).collect()
    }

    /// `1/2 sum H_prev . H_now`; with `prev` taken one step earlier this
    /// completes the energy invariant of the leapfrog scheme.
    pub fn magnetic_energy_with(&self, prev: &[[Vec<f32>; 3]]) -> f64 {
        let mut total = 0.0;
        for (set, p) in self.fields.iter().zip(prev) {
            for c in 0..3 {
                total += self.sum_over(3 + c, |g| set.h[c][g] as f64 * p[c][g] as f64);
            }
        }
        0.5 * total
    }

    fn sum_over(&self, f: usize, term: impl Fn(usize) -> f64) -> f64 {
        let r = self.ranges[f];
        let mut total = 0.0;
        for i in r[0][0]..r[0][1] {
            for j in r[1][0]..r[1][1] {
                for k in r[2][0]..r[2][1] {
                    total += term(self.pad.at(i, j, k));
                }
            }
        }
        total
    }

    /// Read one field value at grid node `p` of `component` (real part).
    pub fn value(&self, component: Component, p: [usize; 3]) -> f32 {
        let g = self.pad.at(p[0], p[1], p[2]);
        let c = component.axis().index();
        if component.is_electric() {
            self.fields[0].e[c][g]
        } else {
            self.fields[0].h[c][g]
        }
    }

    /// Finish the run and package the recorded series.
    pub fn into_record(self) -> RingdownRecord {
        let d = self.layout.cell_size;
        RingdownRecord {
            header: RecordHeader {
                config_hash: self.config_hash,
                dt_s: self.config.dt_seconds(d),
                courant: self.config.courant,
                cell_size_nm: d,
                dims: self.layout.dims,
                steps: self.step,
                shutoff_step: self.config.shutoff_step(d),
                series: self.series_infos,
            },
            series: self.series,
        }
    }
}

/// Run a full ring-down and return the recorded time series.
pub fn run_ringdown(
    grid: &DielectricGrid,
    config: SimulationConfig,
) -> Result<RingdownRecord, SolverError> {
    let mut sim = Simulation::new(grid, config)?;
    sim.run()?;
    Ok(sim.into_record())
}

/// Poynting flux through a monitor plane at the current step, with H
/// averaged across the plane and over the two half steps around E.
fn flux_sample(pad: &Padded, f: &FieldSet, m: &mut FluxMonitor) -> f64 {
    let a = m.axis;
    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
    let sa = pad.stride[a];
    let mut total = 0.0f64;
    let mut q = 0;
    for ib in m.span[0][0]..m.span[0][1] {
        for ic in m.span[1][0]..m.span[1][1] {
            let mut p = [0usize; 3];
            p[a] = m.node;
            p[b] = ib;
            p[c] = ic;
            let g = pad.at(p[0], p[1], p[2]);
            let hc = 0.5 * (f.h[c][g] + f.h[c][g - sa]);
            let hb = 0.5 * (f.h[b][g] + f.h[b][g - sa]);
            let hc_avg = 0.5 * (hc + m.prev[0][q]) as f64;
            let hb_avg = 0.5 * (hb + m.prev[1][q]) as f64;
            total += f.e[b][g] as f64 * hc_avg - f.e[c][g] as f64 * hb_avg;
            m.prev[0][q] = hc;
            m.prev[1][q] = hb;
            q += 1;
        }
    }
    total
}

/// Copy tangential components into the ghost layer `ghost` of axis `a` from
/// layer `src`, multiplied by the complex `factor` (cos, sin).
fn fill_ghosts(
    pad: &Padded,
    sets: &mut [FieldSet],
    electric: bool,
    a: usize,
    ghost: isize,
    src: isize,
    factor: (f32, f32),
) {
    let n = pad.n;
    let (u, v) = ((a + 1) % 3, (a + 2) % 3);
    for comp in 0..3 {
        if comp == a {
            continue;
        }
        for iu in 0..n[u] as isize {
            for iv in 0..n[v] as isize {
                let mut pg = [0isize; 3];
                pg[a] = ghost;
                pg[u] = iu;
                pg[v] = iv;
                let mut ps = pg;
                ps[a] = src;
                let (dg, ds) = (pad.at_signed(pg), pad.at_signed(ps));
                if sets.len() == 1 {
                    let arr = if electric {
                        &mut sets[0].e[comp]
                    } else {
                        &mut sets[0].h[comp]
                    };
                    arr[dg] = factor.0 * arr[ds];
                } else {
                    let (s0, s1) = sets.split_at_mut(1);
                    let (re, im) = if electric {
                        (&mut s0[0].e[comp], &mut s1[0].e[comp])
                    } else {
                        (&mut s0[0].h[comp], &mut s1[0].h[comp])
                    };
                    let (r, i) = (re[ds], im[ds]);
                    re[dg] = factor.0 * r - factor.1 * i;
                    im[dg] = factor.1 * r + factor.0 * i;
                }
            }
        }
    }
}

fn update_e(pad: &Padded, set: &mut FieldSet, coef: &[Vec<f32>; 3], ranges: &[Range3; 6]) {
    let [sx, sy, sz] = pad.stride;
    let FieldSet { e, h } = set;
    let [ex, ey, ez] = e;
    // curl_c H = d_{c+1} H_{c+2} - d_{c+2} H_{c+1}
    curl_e(pad, ex, &coef[0], &h[2], sy, &h[1], sz, &ranges[0]);
    curl_e(pad, ey, &coef[1], &h[0], sz, &h[2], sx, &ranges[1]);
    curl_e(pad, ez, &coef[2], &h[1], sx, &h[0], sy, &ranges[2]);
}

fn update_h(pad: &Padded, set: &mut FieldSet, dt: f32, ranges: &[Range3; 6]) {
    let [sx, sy, sz] = pad.stride;
    let FieldSet { e, h } = set;
    let [hx, hy, hz] = h;
    curl_h(pad, hx, dt, &e[2], sy, &e[1], sz, &ranges[3]);
    curl_h(pad, hy, dt, &e[0], sz, &e[2], sx, &ranges[4]);
    curl_h(pad, hz, dt, &e[1], sx, &e[0], sy, &ranges[5]);
}

/// `dst += coef * ((A - A[-sa]) - (B - B[-sb]))` over the update range.
#[allow(clippy::too_many_arguments)]
fn curl_e(
    pad: &Padded,
    dst: &mut [f32],
    coef: &[f32],
    a: &[f32],
    sa: usize,
    b: &[f32],
    sb: usize,
    r: &Range3,
) {
    let [sx, sy, _] = pad.stride;
    let len = r[2][1] - r[2][0];
    if len == 0 || r[1][0] >= r[1][1] {
        return;
    }
    dst.par_chunks_mut(sx).enumerate().for_each(|(pi, slab)| {
        if pi < r[0][0] + 1 || pi > r[0][1] {
            return;
        }
        let base = pi * sx;
        for j in r[1][0]..r[1][1] {
            let off = (j + 1) * sy + r[2][0] + 1;
            let g = base + off;
            let d = &mut slab[off..off + len];
            let cf = &coef[g..g + len];
            let a0 = &a[g..g + len];
            let a1 = &a[g - sa..g - sa + len];
            let b0 = &b[g..g + len];
            let b1 = &b[g - sb..g - sb + len];
            for (((((d, &cf), &a0), &a1), &b0), &b1) in
                d.iter_mut().zip(cf).zip(a0).zip(a1).zip(b0).zip(b1)
            {
                *d += cf * ((a0 - a1) - (b0 - b1));
            }
        }
    });
}

/// `dst -= dt * ((A[+sa] - A) - (B[+sb] - B))` over the update range.
#[allow(clippy::too_many_arguments)]
fn curl_h(
    pad: &Padded,
    dst: &mut [f32],
    dt: f32,
    a: &[f32],
    sa: usize,
    b: &[f32],
    sb: usize,
    r: &Range3,
) {
    let [sx, sy, _] = pad.stride;
    let len = r[2][1] - r[2][0];
    if len == 0 || r[1][0] >= r[1][1] {
        return;
    }
    dst.par_chunks_mut(sx).enumerate().for_each(|(pi, slab)| {
        if pi < r[0][0] + 1 || pi > r[0][1] {
            return;
        }
        let base = pi * sx;
        for j in r[1][0]..r[1][1] {
            let off = (j + 1) * sy + r[2][0] + 1;
            let g = base + off;
            let d = &mut slab[off..off + len];
            let a0 = &a[g..g + len];
            let a1 = &a[g + sa..g + sa + len];
            let b0 = &b[g..g + len];
            let b1 = &b[g + sb..g + sb + len];
            for ((((d, &a0), &a1), &b0), &b1) in d.iter_mut().zip(a0).zip(a1).zip(b0).zip(b1) {
                *d -= dt * ((a1 - a0) - (b1 - b0));
            }
        }
    });
}
