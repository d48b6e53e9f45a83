//! Spectrum container, CSV ingestion and synthetic spectrum generation.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SpectraError;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Stage coordinate (µm) for spectra taken from a spatial scan.
    pub position_um: Option<f64>,
}

impl Spectrum {
    pub fn new(wavelength_nm: Vec<f64>, intensity: Vec<f64>) -> Result<Self, SpectraError> {
        let s = Spectrum {
            wavelength_nm,
            intensity,
            position_um: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SpectraError> {
        if self.wavelength_nm.len() != self.intensity.len() {
            return Err(SpectraError::Invalid(
                "wavelength and intensity lengths differ".into(),
            ));
        }
        if self.wavelength_nm.is_empty() {
            return Err(SpectraError::Invalid("spectrum is empty".into()));
        }
        if let Some(w) = self.wavelength_nm.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(SpectraError::Invalid(format!(
                "wavelengths not strictly increasing at {} nm",
                w[1]
            )));
        }
        if let Some(v) = self.intensity.iter().find(|v| !(**v >= 0.0)) {
            return Err(SpectraError::Invalid(format!(
                "negative or non-finite intensity {v}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.wavelength_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelength_nm.is_empty()
    }

    pub fn range(&self) -> [f64; 2] {
        [self.wavelength_nm[0], *self.wavelength_nm.last().unwrap()]
    }

    /// Indices of samples inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.wavelength_nm.partition_point(|&w| w < lo);
        let b = self.wavelength_nm.partition_point(|&w| w <= hi);
        a..b
    }

    /// Linear interpolation at `w`, which must lie inside the range.
    pub fn interpolate(&self, w: f64) -> f64 {
        let xs = &self.wavelength_nm;
        let i = xs.partition_point(|&x| x < w);
        if i == 0 {
            return self.intensity[0];
        }
        if i >= xs.len() {
            return *self.intensity.last().unwrap();
        }
        let t = (w - xs[i - 1]) / (xs[i] - xs[i - 1]);
        self.intensity[i - 1] + t * (self.intensity[i] - self.intensity[i - 1])
    }
}

/// Read a two- or three-column CSV (`wavelength_nm, intensity[, position_um]`).
/// Lines starting with `#` are comments and a non-numeric first row is taken
/// as a header. With a position column one spectrum is returned per distinct
/// position, in order of first appearance.
pub fn read_spectra<R: Read>(r: R) -> Result<Vec<Spectrum>, SpectraError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let mut groups: Vec<(Option<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SpectraError::Invalid(format!("CSV: {e}")))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() < 2 || rec.len() > 3 {
            return Err(SpectraError::Invalid(format!(
                "row {}: expected 2 or 3 columns, got {}",
                line + 1,
                rec.len()
            )));
        }
        let nums: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        let nums = match nums {
            Ok(v) => v,
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(SpectraError::Invalid(format!(
                    "row {}: non-numeric field",
                    line + 1
                )))
            }
        };
        let pos = nums.get(2).copied();
        let idx = match groups.iter().position(|g| g.0 == pos) {
            Some(i) => i,
            None => {
                groups.push((pos, Vec::new(), Vec::new()));
                groups.len() - 1
            }
        };
        groups[idx].1.push(nums[0]);
        groups[idx].2.push(nums[1]);
    }
    if groups.is_empty() {
        return Err(SpectraError::Invalid("no data rows".into()));
    }
    groups
        .into_iter()
        .map(|(pos, w, i)| {
            let mut s = Spectrum::new(w, i)?;
            s.position_um = pos;
            Ok(s)
        })
        .collect()
}

pub fn write_spectrum<W: Write>(s: &Spectrum, w: W) -> Result<(), SpectraError> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| SpectraError::Invalid(e.to_string());
    match s.position_um {
        Some(_) => out
            .write_record(["wavelength_nm", "intensity", "position_um"])
            .map_err(err)?,
        None => out
            .write_record(["wavelength_nm", "intensity"])
            .map_err(err)?,
    }
    for (x, y) in s.wavelength_nm.iter().zip(&s.intensity) {
        match s.position_um {
            Some(p) => out
                .write_record([x.to_string(), y.to_string(), p.to_string()])
                .map_err(err)?,
            None => out
                .write_record([x.to_string(), y.to_string()])
                .map_err(err)?,
        }
    }
    out.flush()
        .map_err(|e| SpectraError::Invalid(e.to_string()))?;
    Ok(())
}

/// Peak description for synthesis: center, FWHM and height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakShape {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub amplitude: f64,
}

impl PeakShape {
    pub fn eval(&self, w: f64) -> f64 {
        let u = 2.0 * (w - self.center_nm) / self.fwhm_nm;
        self.amplitude / (1.0 + u * u)
    }
}

/// Sum of Lorentzians plus `background`, sampled at `n` points across
/// `range`, with Gaussian noise of standard deviation `noise` (absolute)
/// drawn from a ChaCha stream seeded with `seed`. Negative values are clamped to 0.
pub fn synthesize(
    peaks: &[PeakShape],
    background: impl Fn(f64) -> f64,
    range: [f64; 2],
    n: usize,
    noise: f64,
    seed: u64,
) -> Spectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let w: Vec<f64> = (0..n)
        .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64)
        .collect();
    let y = w
        .iter()
        .map(|&x| {
            let clean = background(x) + peaks.iter().map(|p| p.eval(x)).sum::<f64>();
            let e = if noise > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            };
            (clean + e).max(0.0)
        })
        .collect();
    Spectrum {
        wavelength_nm: w,
        intensity: y,
        position_um: None,
    }
}
