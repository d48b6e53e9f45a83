//! Resonant modes from ring-down records, flux ratios and mode tables.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::figures::purcell_factor;
use super::harminv::{harmonic_inversion_with, HarmonicMode, InversionOptions};
use super::AnalysisError;
use crate::solver::{Parity, RingdownRecord, SeriesKind, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantMode {
    pub wavelength_nm: f64,
    pub frequency_hz: f64,
    pub q: f64,
    /// Mode volume in nm³ and in `(lambda / n)^3`.
    pub mode_volume_nm3: Option<f64>,
    pub mode_volume_norm: Option<f64>,
    pub parity: Option<Parity>,
    /// `[re, im]` of the complex amplitude at the strongest probe.
    pub amplitude: [f64; 2],
    /// Name of the probe the parameters were taken from.
    pub probe: String,
    pub q_capped: bool,
    pub low_confidence: bool,
}

impl ResonantMode {
    pub fn from_harmonic(m: &HarmonicMode, probe: &str, parity: Option<Parity>) -> Self {
        ResonantMode {
            wavelength_nm: m.wavelength_nm(),
            frequency_hz: m.frequency_hz,
            q: m.q,
            mode_volume_nm3: None,
            mode_volume_norm: None,
            parity,
            amplitude: [m.amplitude.re, m.amplitude.im],
            probe: probe.to_string(),
            q_capped: m.q_capped,
            low_confidence: m.low_confidence,
        }
    }

    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::new(self.amplitude[0], self.amplitude[1])
    }

    pub fn set_mode_volume(&mut self, nm3: f64, n: f64) {
        self.mode_volume_nm3 = Some(nm3);
        self.mode_volume_norm = Some(nm3 / (self.wavelength_nm / n).powi(3));
    }

    pub fn purcell(&self, n: f64) -> Option<f64> {
        self.mode_volume_nm3
            .and_then(|v| purcell_factor(self.wavelength_nm, n, self.q, v).ok())
    }

    pub fn flagged(&self) -> bool {
        self.q_capped || self.low_confidence
    }
}

pub fn band_hz(band_nm: [f64; 2]) -> [f64; 2] {
    [
        SPEED_OF_LIGHT / (band_nm[1] * 1e-9),
        SPEED_OF_LIGHT / (band_nm[0] * 1e-9),
    ]
}

/// Run harmonic inversion on the post-shutoff part of every probe series and
/// keep the resonances that a third of the probes agree on. Frequency and Q
/// are medians over the agreeing detections; amplitude and probe name come
/// from the strongest one. Sorted by wavelength.
pub fn extract_modes(
    record: &RingdownRecord,
    band_nm: [f64; 2],
    parity: Option<Parity>,
    opts: &InversionOptions,
) -> Result<Vec<ResonantMode>, AnalysisError> {
    let band = band_hz(band_nm);
    // (mode, probe name, probe ordinal, amplitude relative to the probe's strongest)
    let mut found: Vec<(HarmonicMode, String, usize, f64)> = Vec::new();
    let mut probes = 0;
    for (i, info) in record.header.series.iter().enumerate() {
        if !matches!(info.kind, SeriesKind::Probe { .. }) {
            continue;
        }
        let signal: Vec<f64> = record.ringdown(i).iter().map(|&v| v as f64).collect();
        if signal.len() < 200 {
            return Err(AnalysisError::Input(format!(
                "only {} post-shutoff samples in {:?}; run more steps",
                signal.len(),
                info.name
            )));
        }
        let inv = harmonic_inversion_with(&signal, record.header.dt_s, band, opts)?;
        let top = inv
            .modes
            .iter()
            .map(|m| m.amplitude.norm())
            .fold(0.0, f64::max);
        for m in inv.modes {
            let rel = m.amplitude.norm() / top;
            found.push((m, info.name.clone(), probes, rel));
        }
        probes += 1;
    }
    if probes == 0 {
        return Err(AnalysisError::Input("record has no probe series".into()));
    }
    let support = probes.div_ceil(3);
    found.sort_by(|a, b| b.3.total_cmp(&a.3));
    let mut taken = vec![false; found.len()];
    let mut modes = Vec::new();
    for seed in 0..found.len() {
        if taken[seed] {
            continue;
        }
        let k = &found[seed].0;
        let tol = (0.25 * k.frequency_hz / k.q).max(1e-4 * k.frequency_hz);
        let members: Vec<usize> = (seed..found.len())
            .filter(|&j| !taken[j] && (found[j].0.frequency_hz - k.frequency_hz).abs() < tol)
            .collect();
        for &j in &members {
            taken[j] = true;
        }
        let mut seen: Vec<usize> = members.iter().map(|&j| found[j].2).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() < support {
            continue;
        }
        let median = |f: &dyn Fn(&HarmonicMode) -> f64| {
            let mut v: Vec<f64> = members.iter().map(|&j| f(&found[j].0)).collect();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            }
        };
        let best = members.iter().copied().max_by(|&a, &b| {
            found[a]
                .0
                .amplitude
                .norm()
                .total_cmp(&found[b].0.amplitude.norm())
        });
        let (m, name, _, _) = &found[best.unwrap_or(seed)];
        let mut mode = ResonantMode::from_harmonic(m, name, parity);
        mode.frequency_hz = median(&|h| h.frequency_hz);
        mode.wavelength_nm = SPEED_OF_LIGHT / mode.frequency_hz * 1e9;
        mode.q = median(&|h| h.q);
        let majority = |f: &dyn Fn(&HarmonicMode) -> bool| {
            2 * members.iter().filter(|&&j| f(&found[j].0)).count() > members.len()
        };
        mode.q_capped = majority(&|h| h.q_capped);
        mode.low_confidence = majority(&|h| h.low_confidence);
        modes.push(mode);
    }
    modes.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
    Ok(modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxRatio {
    /// `|integral up| / |integral down|`; infinite if the downward integral is zero.
    pub ratio: f64,
    pub upward: f64,
    pub downward: f64,
    pub infinite: bool,
}

/// Ratio of the time-integrated power through the `up` and `down` monitor
/// planes over the post-shutoff window.
pub fn flux_ratio(
    record: &RingdownRecord,
    up: &str,
    down: &str,
) -> Result<FluxRatio, AnalysisError> {
    let integral = |name: &str| -> Result<f64, AnalysisError> {
        let i = record
            .series_index(name)
            .filter(|&i| matches!(record.header.series[i].kind, SeriesKind::Flux { .. }))
            .ok_or_else(|| AnalysisError::Input(format!("record has no flux monitor {name:?}")))?;
        Ok(record
            .ringdown(i)
            .iter()
            .map(|&v| v as f64)
            .sum::<f64>()
            .abs())
    };
    let upward = integral(up)?;
    let downward = integral(down)?;
    if upward == 0.0 && downward == 0.0 {
        return Err(AnalysisError::Input("both flux integrals are zero".into()));
    }
    let infinite = downward == 0.0;
    Ok(FluxRatio {
        ratio: if infinite {
            f64::INFINITY
        } else {
            upward / downward
        },
        upward,
        downward,
        infinite,
    })
}

/// Label modes per parity class in order of increasing wavelength (OE1, OE2, ...).
pub fn label_modes(modes: &[ResonantMode]) -> Vec<String> {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| modes[a].wavelength_nm.total_cmp(&modes[b].wavelength_nm));
    let mut labels = vec![String::new(); modes.len()];
    let mut counts = std::collections::HashMap::new();
    for i in order {
        let key = modes[i].parity.map_or("??", |p| p.name());
        let c = counts.entry(key).or_insert(0);
        *c += 1;
        labels[i] = format!("{key}{c}");
    }
    labels
}

/// CSV with columns `lambda0_nm,q,v_m_norm,parity,f_cav` (plus flags).
pub fn write_mode_table<W: Write>(
    modes: &[ResonantMode],
    n: f64,
    w: W,
) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    let labels = label_modes(modes);
    let io = |e: csv::Error| AnalysisError::Io(std::io::Error::other(e));
    out.write_record([
        "label",
        "lambda0_nm",
        "q",
        "v_m_norm",
        "parity",
        "f_cav",
        "q_capped",
        "low_confidence",
    ])
    .map_err(io)?;
    for (m, label) in modes.iter().zip(labels) {
        out.write_record([
            label,
            format!("{:.4}", m.wavelength_nm),
            format!("{:.3}", m.q),
            m.mode_volume_norm
                .map_or(String::new(), |v| format!("{v:.4}")),
            m.parity.map_or(String::new(), |p| p.name().to_string()),
            m.purcell(n).map_or(String::new(), |f| format!("{f:.3}")),
            m.q_capped.to_string(),
            m.low_confidence.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}
