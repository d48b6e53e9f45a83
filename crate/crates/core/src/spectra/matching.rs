//! Order-preserving pairing of measured peaks with simulated modes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{LorentzianPeak, SpectraError};
use crate::analysis::{label_modes, ResonantMode};
use crate::solver::Parity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePair {
    pub measured: usize,
    pub calculated: usize,
    /// Label of the calculated mode (OE1, EO2, ...).
    pub label: String,
    pub parity: Option<Parity>,
    pub measured_nm: f64,
    pub calculated_nm: f64,
    /// `measured - calculated`.
    pub delta_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<ModePair>,
    pub max_deviation_nm: f64,
    pub mean_deviation_nm: f64,
}

fn sorted(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Pair as many modes as possible without crossing, and among those
/// pairings pick the one with the smallest total `|delta|`. Both lists must
/// be sorted by wavelength.
pub fn match_modes(
    measured: &[LorentzianPeak],
    calculated: &[ResonantMode],
) -> Result<Matching, SpectraError> {
    if !sorted(measured.iter().map(|p| p.center_nm))
        || !sorted(calculated.iter().map(|m| m.wavelength_nm))
    {
        return Err(SpectraError::Invalid(
            "peaks and modes must be sorted by wavelength".into(),
        ));
    }
    let (n, m) = (measured.len(), calculated.len());
    // best[i][j]: (pairs, cost) for the first i measured and j calculated.
    let mut best = vec![vec![(0usize, 0.0f64); m + 1]; n + 1];
    let better = |a: (usize, f64), b: (usize, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    for i in 1..=n {
        for j in 1..=m {
            let mut b = best[i - 1][j];
            if better(best[i][j - 1], b) {
                b = best[i][j - 1];
            }
            let d = (measured[i - 1].center_nm - calculated[j - 1].wavelength_nm).abs();
            let pair = (best[i - 1][j - 1].0 + 1, best[i - 1][j - 1].1 + d);
            if better(pair, b) {
                b = pair;
            }
            best[i][j] = b;
        }
    }
    let labels = label_modes(calculated);
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        let here = best[i][j];
        if here == best[i - 1][j] {
            i -= 1;
        } else if here == best[i][j - 1] {
            j -= 1;
        } else {
            let (p, c) = (&measured[i - 1], &calculated[j - 1]);
            pairs.push(ModePair {
                measured: i - 1,
                calculated: j - 1,
                label: labels[j - 1].clone(),
                parity: c.parity,
                measured_nm: p.center_nm,
                calculated_nm: c.wavelength_nm,
                delta_nm: p.center_nm - c.wavelength_nm,
            });
            i -= 1;
            j -= 1;
        }
    }
    pairs.reverse();
    let devs: Vec<f64> = pairs.iter().map(|p| p.delta_nm.abs()).collect();
    let max_deviation_nm = devs.iter().copied().fold(0.0, f64::max);
    let mean_deviation_nm = if devs.is_empty() {
        0.0
    } else {
        devs.iter().sum::<f64>() / devs.len() as f64
    };
    Ok(Matching {
        pairs,
        max_deviation_nm,
        mean_deviation_nm,
    })
}

/// Side-by-side table of calculated and measured wavelength and Q, one row
/// per calculated mode; unmatched measured peaks follow with blank
/// calculated columns.
pub fn write_comparison<W: Write>(
    matching: &Matching,
    measured: &[LorentzianPeak],
    calculated: &[ResonantMode],
    w: W,
) -> Result<(), SpectraError> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| SpectraError::Invalid(e.to_string());
    out.write_record([
        "label",
        "parity",
        "lambda_calc_nm",
        "q_calc",
        "lambda_meas_nm",
        "q_meas",
        "delta_nm",
    ])
    .map_err(err)?;
    let labels = label_modes(calculated);
    for (j, c) in calculated.iter().enumerate() {
        let pair = matching.pairs.iter().find(|p| p.calculated == j);
        let meas = pair.map(|p| &measured[p.measured]);
        out.write_record([
            labels[j].clone(),
            c.parity.map_or(String::new(), |p| p.name().to_string()),
            format!("{:.1}", c.wavelength_nm),
            format!("{:.0}", c.q),
            meas.map_or(String::new(), |m| format!("{:.1}", m.center_nm)),
            meas.map_or(String::new(), |m| format!("{:.0}", m.q)),
            pair.map_or(String::new(), |p| format!("{:.1}", p.delta_nm)),
        ])
        .map_err(err)?;
    }
    for (i, m) in measured.iter().enumerate() {
        if matching.pairs.iter().any(|p| p.measured == i) {
            continue;
        }
        out.write_record([
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            format!("{:.1}", m.center_nm),
            format!("{:.0}", m.q),
            String::new(),
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn peak(center: f64, q: f64) -> LorentzianPeak {
        LorentzianPeak {
            center_nm: center,
            fwhm_nm: center / q,
            amplitude: 1.0,
            background: 0.0,
            q,
            center_err: 0.0,
            fwhm_err: 0.0,
            amplitude_err: 0.0,
            q_err: 0.0,
            window_nm: [600.0, 660.0],
            converged: true,
            residual_norm: 0.0,
            flagged: false,
        }
    }

    pub(crate) fn mode(l: f64, q: f64, parity: Parity) -> ResonantMode {
        ResonantMode {
            wavelength_nm: l,
            frequency_hz: 0.0,
            q,
            mode_volume_nm3: None,
            mode_volume_norm: None,
            parity: Some(parity),
            amplitude: [1.0, 0.0],
            probe: String::new(),
            q_capped: false,
            low_confidence: false,
        }
    }

    #[test]
    fn skips_outliers() {
        let meas = [peak(600.0, 100.0), peak(620.0, 100.0), peak(700.0, 100.0)];
        let calc = [mode(619.0, 100.0, Parity::EE)];
        let m = match_modes(&meas, &calc).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].measured, 1);
        assert!((m.max_deviation_nm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_identical() {
        let meas = [peak(610.0, 100.0), peak(630.0, 100.0)];
        assert!(match_modes(&meas, &[]).unwrap().pairs.is_empty());
        let calc = [mode(610.0, 1.0, Parity::OE), mode(630.0, 1.0, Parity::EO)];
        let m = match_modes(&meas, &calc).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.max_deviation_nm, 0.0);
        assert!(match_modes(&[peak(630.0, 1.0), peak(610.0, 1.0)], &calc).is_err());
    }

    #[test]
    fn comparison_rows() {
        let meas = [peak(605.4, 87.0), peak(700.0, 50.0)];
        let calc = [mode(585.0, 80.0, Parity::OE)];
        let m = match_modes(&meas, &calc).unwrap();
        let mut buf = Vec::new();
        write_comparison(&m, &meas, &calc, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "OE1,OE,585.0,80,605.4,87,20.4");
        assert_eq!(lines[2], ",,,,700.0,50,");
    }
}
