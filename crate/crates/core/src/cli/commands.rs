//! The seven subcommands. Each reads a [`Scenario`], writes its artifacts
//! atomically under the output directory and reports what it flagged.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cavity::{analyze_record, cavity_grid, run_sectors, ModeProfile};
use super::scenario::{Scenario, SweepParameter};
use super::CliError;
use crate::analysis::{
    coupling_assessment, label_modes, readout_visibility, write_mode_table, CouplingAssessment,
    FluxRatio, ResonantMode,
};
use crate::geometry::{
    rasterize, DielectricGrid, GeometryConfig, GeometrySpec, GridLayout, PeriodicBeam,
    RasterOptions,
};
use crate::io::write_atomic;
use crate::solver::{band_structure, BandOptions, BandPoint, Parity, RingdownRecord};
use crate::spectra::{
    fit_lorentzians, match_modes, read_spectra, subtract_background, synthesize, write_comparison,
    write_peaks, write_spectrum, Baseline, LorentzianPeak, PeakShape, Spectrum,
};

/// Files written and the reasons, if any, the results are not clean.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub flagged: Vec<String>,
    /// SHA-256 of the scenario (output directory and thread count excluded),
    /// embedded in every artifact.
    pub config_hash: String,
}

/// JSON artifacts carry the scenario hash next to their payload.
#[derive(Serialize, Deserialize)]
struct Stamped<T> {
    config_sha256: String,
    data: T,
}

pub fn scenario_hash(s: &Scenario) -> String {
    let mut s = s.clone();
    s.output.dir = PathBuf::new();
    s.run.threads = None;
    let bytes = serde_json::to_vec(&s).expect("scenario serializes");
    hex::encode(Sha256::digest(bytes))
}

impl Outcome {
    fn new(s: &Scenario) -> Self {
        Outcome {
            config_hash: scenario_hash(s),
            ..Outcome::default()
        }
    }

    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    /// CSV with a leading `# config_sha256=` comment line.
    fn csv(&mut self, path: PathBuf, body: &[u8]) -> Result<(), CliError> {
        let mut bytes = format!("# config_sha256={}\n", self.config_hash).into_bytes();
        bytes.extend_from_slice(body);
        self.write(path, &bytes)
    }

    fn json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<(), CliError> {
        let stamped = Stamped {
            config_sha256: self.config_hash.clone(),
            data: value,
        };
        let mut text =
            serde_json::to_string_pretty(&stamped).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub label: String,
    #[serde(flatten)]
    pub mode: ResonantMode,
    pub purcell: Option<f64>,
    pub readout_improvement: Option<f64>,
    pub coupling: Option<CouplingAssessment>,
}

fn spec_of(s: &Scenario) -> Result<GeometrySpec, CliError> {
    let mut g = s.geometry.clone();
    if g.preset.is_none() && g.lattice_constant.is_none() {
        g.preset = Some("table1-base".into());
    }
    Ok(g.resolve()?)
}

fn out_dir(s: &Scenario) -> &Path {
    &s.output.dir
}

fn grid_bytes(grid: &DielectricGrid, hash: &str) -> Result<Vec<u8>, CliError> {
    #[derive(Serialize)]
    struct Header<'a> {
        config_sha256: &'a str,
        layout: &'a GridLayout,
        eps_max: f64,
        arrays: [&'a str; 3],
    }
    let header = Header {
        config_sha256: hash,
        layout: &grid.layout,
        eps_max: grid.eps_max,
        arrays: ["eps_x", "eps_y", "eps_z"],
    };
    let mut out = b"nanobeam-grid 1\n".to_vec();
    out.extend(
        serde_json::to_string(&header)
            .map_err(|e| CliError::Config(e.to_string()))?
            .as_bytes(),
    );
    out.extend(b"\nend_header\n");
    for arr in &grid.eps {
        for v in arr {
            out.extend(v.to_le_bytes());
        }
    }
    Ok(out)
}

/// `x_nm,z_nm,eps` on the node plane nearest to `y_nm` (x-polarized samples).
fn eps_plane_csv(grid: &DielectricGrid, y_nm: f64) -> Result<Vec<u8>, CliError> {
    let l = &grid.layout;
    let j = (((y_nm - l.origin[1]) / l.cell_size).round().max(0.0) as usize).min(l.dims[1] - 1);
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(["x_nm", "z_nm", "eps"]).map_err(err)?;
    for i in 0..l.dims[0] {
        for k in 0..l.dims[2] {
            let p = l.position([i, j, k], [0.0; 3]);
            w.write_record([
                format!("{:.3}", p[0]),
                format!("{:.3}", p[2]),
                format!("{}", grid.eps_at(0, i, j, k)),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

pub fn rasterize_cmd(s: &Scenario) -> Result<Outcome, CliError> {
    let spec = spec_of(s)?;
    let grid = cavity_grid(&spec, &s.grid)?;
    let mut out = Outcome::new(s);
    out.write(
        out_dir(s).join("grid.bin"),
        &grid_bytes(&grid, &out.config_hash)?,
    )?;
    out.csv(
        out_dir(s).join("eps_groove_plane.csv"),
        &eps_plane_csv(&grid, 0.5 * spec.groove_depth)?,
    )?;
    Ok(out)
}

fn reports(modes: &[ResonantMode], s: &Scenario, n: f64) -> Vec<ModeReport> {
    let labels = label_modes(modes);
    modes
        .iter()
        .zip(labels)
        .map(|(m, label)| {
            let purcell = m.purcell(n);
            let coupling = match (s.analysis.gamma_perp, m.mode_volume_nm3) {
                (Some(g), Some(v)) => {
                    coupling_assessment(m.q, v, m.wavelength_nm, g, s.analysis.coupling_margin).ok()
                }
                _ => None,
            };
            ModeReport {
                label,
                mode: m.clone(),
                purcell,
                readout_improvement: purcell
                    .and_then(|f| readout_visibility(f, s.analysis.collection_gain).ok()),
                coupling,
            }
        })
        .collect()
}

fn write_modes(
    out: &mut Outcome,
    dir: &Path,
    modes: &[ResonantMode],
    flux: &[(String, FluxRatio)],
    s: &Scenario,
    n: f64,
) -> Result<(), CliError> {
    let mut csv = Vec::new();
    write_mode_table(modes, n, &mut csv)?;
    out.csv(dir.join("modes.csv"), &csv)?;
    out.json(dir.join("modes.json"), &reports(modes, s, n))?;
    if !flux.is_empty() {
        out.json(
            dir.join("flux.json"),
            &flux
                .iter()
                .cloned()
                .collect::<std::collections::BTreeMap<_, _>>(),
        )?;
    }
    if modes.is_empty() {
        out.flagged
            .push("no resonant modes found in the analysis band".into());
    }
    for (m, label) in modes.iter().zip(label_modes(modes)) {
        if m.flagged() {
            out.flagged.push(format!(
                "{label} at {:.1} nm:{}{}",
                m.wavelength_nm,
                if m.q_capped {
                    " Q at resolution cap"
                } else {
                    ""
                },
                if m.low_confidence {
                    " inversion and spectral fit disagree"
                } else {
                    ""
                }
            ));
        }
    }
    Ok(())
}

fn record_name(parity: Option<Parity>) -> String {
    match parity {
        Some(p) => format!("ringdown_{}.bin", p.name()),
        None => "ringdown.bin".into(),
    }
}

fn profile_csv(values: &[f64], shape: [usize; 2], axes: [&str; 2]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record([axes[0], axes[1], "u_e"]).map_err(err)?;
    for a in 0..shape[0] {
        for b in 0..shape[1] {
            w.write_record([
                a.to_string(),
                b.to_string(),
                format!("{:.6e}", values[a * shape[1] + b]),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

pub fn run(s: &Scenario) -> Result<Outcome, CliError> {
    let spec = spec_of(s)?;
    let sectors = run_sectors(&spec, &s.grid, &s.run, &s.analysis)?;
    let dir = out_dir(s);
    let mut out = Outcome::new(s);
    let mut modes = Vec::new();
    let mut flux = Vec::new();
    for sec in &sectors {
        let mut bytes = Vec::new();
        sec.record.write_to(&mut bytes)?;
        out.write(dir.join(record_name(sec.parity)), &bytes)?;
        if let Some(f) = sec.flux {
            flux.push((
                sec.parity.map_or("full".into(), |p| p.name().to_string()),
                f,
            ));
        }
        let labels = label_modes(&sec.modes);
        for ModeProfile {
            mode,
            u_e_z0,
            u_e_y0,
            shape_z0,
            shape_y0,
        } in &sec.profiles
        {
            let l = &labels[*mode];
            out.csv(
                dir.join(format!("ue_z0_{l}.csv")),
                &profile_csv(u_e_z0, *shape_z0, ["i", "j"])?,
            )?;
            out.csv(
                dir.join(format!("ue_y0_{l}.csv")),
                &profile_csv(u_e_y0, *shape_y0, ["i", "k"])?,
            )?;
        }
        modes.extend(sec.modes.iter().cloned());
    }
    modes.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
    write_modes(&mut out, dir, &modes, &flux, s, spec.refractive_index)?;
    Ok(out)
}

pub fn analyze(s: &Scenario) -> Result<Outcome, CliError> {
    let spec = spec_of(s)?;
    let dir = out_dir(s);
    let mut names: Vec<(Option<Parity>, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if name == "ringdown.bin" {
            names.push((None, path.clone()));
        } else if let Some(p) = name
            .strip_prefix("ringdown_")
            .and_then(|r| r.strip_suffix(".bin"))
        {
            names.push((Parity::parse(p), path.clone()));
        }
    }
    if names.is_empty() {
        return Err(CliError::Config(format!(
            "no ring-down records in {}",
            dir.display()
        )));
    }
    names.sort_by(|a, b| a.1.cmp(&b.1));
    let mut out = Outcome::new(s);
    let mut modes = Vec::new();
    let mut flux = Vec::new();
    for (parity, path) in names {
        let record = RingdownRecord::read(&path)?;
        let (m, f) = analyze_record(&record, parity, &s.analysis)?;
        if let Some(f) = f {
            flux.push((parity.map_or("full".into(), |p| p.name().to_string()), f));
        }
        modes.extend(m);
    }
    modes.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
    write_modes(&mut out, dir, &modes, &flux, s, spec.refractive_index)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct BandsReport {
    grooved: Vec<BandPoint>,
    grooveless: Option<Vec<BandPoint>>,
}

pub fn bands(s: &Scenario) -> Result<Outcome, CliError> {
    let spec = spec_of(s)?;
    let b = &s.bands;
    let cell = spec.lattice_constant / b.resolution;
    let layout = GridLayout::unit_cell(&spec, cell, b.padding_nm, false)?;
    let opts = BandOptions {
        bands: b.bands,
        frequency_range: b.frequency_range,
        ringdown_steps: b.ringdown_steps,
        min_q: b.min_q,
        courant: s.grid.courant,
        pml_cells: s.grid.pml_cells,
        threads: s.run.threads,
        ..BandOptions::default()
    };
    let raster = RasterOptions {
        absorbing_cells: s.grid.pml_cells,
        memory_budget_bytes: s.grid.memory_budget_mb << 20,
    };
    let solve = |grooved: bool| -> Result<Vec<BandPoint>, CliError> {
        let grid = rasterize(
            &PeriodicBeam {
                spec: &spec,
                grooved,
            },
            layout,
            &raster,
        )?;
        Ok(band_structure(&grid, &b.k, &opts)?)
    };
    let grooved = solve(true)?;
    let grooveless = if b.grooveless {
        Some(solve(false)?)
    } else {
        None
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(["structure", "k_pi_over_a", "band", "frequency_c_over_a"])
        .map_err(err)?;
    let mut out = Outcome::new(s);
    for (name, pts) in [
        ("grooved", Some(&grooved)),
        ("grooveless", grooveless.as_ref()),
    ] {
        let Some(pts) = pts else { continue };
        for p in pts {
            for (i, f) in p.frequencies.iter().enumerate() {
                w.write_record([
                    name.to_string(),
                    format!("{}", p.k),
                    (i + 1).to_string(),
                    format!("{f:.6}"),
                ])
                .map_err(err)?;
            }
            if p.shortfall > 0 {
                out.flagged.push(format!(
                    "{name} k = {}: {} of {} bands found",
                    p.k,
                    p.frequencies.len(),
                    b.bands
                ));
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    out.csv(out_dir(s).join("bands.csv"), &bytes)?;
    out.json(
        out_dir(s).join("bands.json"),
        &BandsReport {
            grooved,
            grooveless,
        },
    )?;
    Ok(out)
}

fn load_spectrum(path: &Path) -> Result<Spectrum, CliError> {
    let f = std::fs::File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut all = read_spectra(std::io::BufReader::new(f))?;
    if all.len() > 1 {
        log::warn!(
            "{} holds {} positions; fitting the first",
            path.display(),
            all.len()
        );
    }
    Ok(all.swap_remove(0))
}

pub fn fit(s: &Scenario, seed: u64) -> Result<Outcome, CliError> {
    let sp = &s.spectra;
    let dir = out_dir(s);
    let mut out = Outcome::new(s);
    let spectrum = match (&sp.input, &sp.synthetic) {
        (Some(path), _) => load_spectrum(path)?,
        (None, Some(syn)) => {
            let peaks: Vec<PeakShape> = syn
                .peaks
                .iter()
                .map(|&[c, q, a]| PeakShape {
                    center_nm: c,
                    fwhm_nm: c / q,
                    amplitude: a,
                })
                .collect();
            let tallest = peaks.iter().map(|p| p.amplitude).fold(0.0, f64::max);
            let bg = syn.background;
            let spec = synthesize(
                &peaks,
                |_| bg,
                syn.range_nm,
                syn.points,
                syn.noise_fraction * tallest,
                seed,
            );
            let mut bytes = Vec::new();
            write_spectrum(&spec, &mut bytes)?;
            out.csv(dir.join("spectrum.csv"), &bytes)?;
            spec
        }
        (None, None) => {
            return Err(CliError::Config(
                "`spectra.input` or `spectra.synthetic` is required".into(),
            ))
        }
    };
    let reference = match &sp.reference {
        Some(p) => Some(load_spectrum(p)?),
        None => None,
    };
    let baseline = match (&reference, sp.baseline_degree) {
        (Some(r), _) => Some(Baseline::Reference(r)),
        (None, Some(d)) => Some(Baseline::Polynomial(d)),
        (None, None) => None,
    };
    let clean = match baseline {
        Some(b) => {
            let (clean, report) = subtract_background(&spectrum, b)?;
            if report.clamped_fraction > 0.0 {
                log::info!(
                    "background subtraction clamped {:.2}% of samples",
                    100.0 * report.clamped_fraction
                );
            }
            let mut bytes = Vec::new();
            write_spectrum(&clean, &mut bytes)?;
            out.csv(dir.join("spectrum_clean.csv"), &bytes)?;
            clean
        }
        None => spectrum,
    };
    let peaks = fit_lorentzians(&clean, &sp.windows, &sp.peaks)?;
    for p in peaks.iter().filter(|p| p.flagged) {
        out.flagged.push(format!(
            "peak near {:.1} nm in window {:?}: {}",
            p.center_nm,
            p.window_nm,
            if p.converged {
                "not significant"
            } else {
                "fit did not converge"
            }
        ));
    }
    let mut bytes = Vec::new();
    write_peaks(&peaks, &mut bytes)?;
    out.csv(dir.join("peaks.csv"), &bytes)?;
    out.json(dir.join("peaks.json"), &peaks)?;
    Ok(out)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!(
            "cannot read {}: {e}; run the producing command first",
            path.display()
        ))
    })?;
    let stamped: Stamped<T> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(stamped.data)
}

pub fn compare(s: &Scenario) -> Result<Outcome, CliError> {
    let dir = out_dir(s);
    let reports: Vec<ModeReport> = read_json(&dir.join("modes.json"))?;
    let mut peaks: Vec<LorentzianPeak> = read_json(&dir.join("peaks.json"))?;
    peaks.sort_by(|a, b| a.center_nm.total_cmp(&b.center_nm));
    let mut modes: Vec<ResonantMode> = reports.into_iter().map(|r| r.mode).collect();
    modes.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
    let matching = match_modes(&peaks, &modes)?;
    let mut out = Outcome::new(s);
    let mut bytes = Vec::new();
    write_comparison(&matching, &peaks, &modes, &mut bytes)?;
    out.csv(dir.join("comparison.csv"), &bytes)?;
    out.json(dir.join("comparison.json"), &matching)?;
    if matching.pairs.len() < peaks.len().min(modes.len()) {
        out.flagged.push("not every peak could be paired".into());
    }
    Ok(out)
}

fn sweep_spec(
    base: &GeometrySpec,
    parameter: SweepParameter,
    value: f64,
) -> Result<GeometrySpec, CliError> {
    let mut spec = base.clone();
    let a = spec.lattice_constant;
    match parameter {
        SweepParameter::DefectRatio => {
            spec.defect_spacing = value * a;
            if !spec.taper.is_empty() {
                let n = spec.taper.len();
                spec.taper = vec![value * a; n];
            }
        }
        SweepParameter::HeightRatio => {
            let depth_ratio = spec.groove_depth / spec.beam_height;
            spec.beam_height = value * a;
            spec.groove_depth = depth_ratio * spec.beam_height;
        }
        SweepParameter::GrooveDepthRatio => spec.groove_depth = value * spec.beam_height,
        SweepParameter::TaperCount => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(CliError::Config(format!(
                    "taper count {value} is not a whole number"
                )));
            }
            spec.taper = vec![spec.defect_spacing; value as usize];
        }
        SweepParameter::Preset => unreachable!("presets are resolved by name"),
    }
    spec.validate()?;
    Ok(spec)
}

pub fn sweep(s: &Scenario) -> Result<Outcome, CliError> {
    let sw = s
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("`sweep` section is required".into()))?;
    let points: Vec<(String, Result<GeometrySpec, CliError>)> =
        if sw.parameter == SweepParameter::Preset {
            sw.presets
                .iter()
                .map(|name| {
                    let cfg = GeometryConfig {
                        preset: Some(name.clone()),
                        ..GeometryConfig::default()
                    };
                    (name.clone(), cfg.resolve().map_err(CliError::from))
                })
                .collect()
        } else {
            if sw.values.is_empty() {
                return Err(CliError::Config(
                    "`sweep.values`: sweep axis is empty".into(),
                ));
            }
            let base = spec_of(s)?;
            sw.values
                .iter()
                .map(|&v| (format!("{v}"), sweep_spec(&base, sw.parameter, v)))
                .collect()
        };
    let param = serde_json::to_value(sw.parameter)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record([
        "point",
        "parameter",
        "value",
        "label",
        "parity",
        "lambda0_nm",
        "q",
        "v_m_norm",
        "f_cav",
        "status",
        "reason",
    ])
    .map_err(err)?;
    let mut out = Outcome::new(s);
    for (i, (value, spec)) in points.into_iter().enumerate() {
        let result = spec.and_then(|spec| {
            let sectors = run_sectors(&spec, &s.grid, &s.run, &s.analysis)?;
            let mut modes: Vec<ResonantMode> = sectors.into_iter().flat_map(|r| r.modes).collect();
            modes.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
            Ok((spec.refractive_index, modes))
        });
        let head = [i.to_string(), param.clone(), value.clone()];
        match result {
            Ok((n, modes)) if !modes.is_empty() => {
                for (m, label) in modes.iter().zip(label_modes(&modes)) {
                    let mut row = head.to_vec();
                    row.extend([
                        label,
                        m.parity.map_or(String::new(), |p| p.name().into()),
                        format!("{:.4}", m.wavelength_nm),
                        format!("{:.3}", m.q),
                        m.mode_volume_norm
                            .map_or(String::new(), |v| format!("{v:.4}")),
                        m.purcell(n).map_or(String::new(), |f| format!("{f:.3}")),
                        if m.flagged() { "flagged" } else { "ok" }.into(),
                        String::new(),
                    ]);
                    w.write_record(&row).map_err(err)?;
                }
            }
            Ok(_) => {
                let mut row = head.to_vec();
                row.extend(["", "", "", "", "", ""].map(String::from));
                row.extend(["failed".into(), "no modes in band".into()]);
                w.write_record(&row).map_err(err)?;
                out.flagged.push(format!("point {i} ({value}): no modes"));
            }
            Err(e) => {
                log::warn!("sweep point {i} ({value}) failed: {e}");
                let mut row = head.to_vec();
                row.extend(["", "", "", "", "", ""].map(String::from));
                row.extend(["failed".into(), e.to_string()]);
                w.write_record(&row).map_err(err)?;
                out.flagged.push(format!("point {i} ({value}): {e}"));
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    out.csv(out_dir(s).join("sweep.csv"), &bytes)?;
    Ok(out)
}
