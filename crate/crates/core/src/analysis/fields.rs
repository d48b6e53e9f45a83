//! Field-derived quantities: mode volume, energy densities and mirror-parity
//! classification of full-domain fields.

use super::AnalysisError;
use crate::solver::{Axis, FieldVolume, Parity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVolume {
    pub nm3: f64,
    /// Peak of `eps |E|^2` (arbitrary units).
    pub peak_density: f64,
}

impl ModeVolume {
    /// Volume in units of `(lambda / n)^3`.
    pub fn normalized(&self, wavelength_nm: f64, n: f64) -> f64 {
        self.nm3 / (wavelength_nm / n).powi(3)
    }
}

/// `V = sum eps |E|^2 dV / max(eps |E|^2)`, every component counted on its
/// own staggered site. `mirrored[a]` marks axes whose first node is a mirror
/// plane of a reduced (quadrant) domain: the sum is doubled and samples
/// lying on that plane count half.
pub fn mode_volume(field: &FieldVolume, mirrored: [bool; 3]) -> Result<ModeVolume, AnalysisError> {
    let layout = &field.layout;
    let [nx, ny, nz] = layout.dims;
    for c in 0..3 {
        if field.e[c].len() != layout.len() || field.eps[c].len() != layout.len() {
            return Err(AnalysisError::Input(
                "field and permittivity grids are not congruent".into(),
            ));
        }
    }
    let mut total = 0.0;
    let mut peak = 0.0f64;
    for c in 0..3 {
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let idx = layout.index(i, j, k);
                    let u = field.eps[c][idx] as f64 * field.intensity(c, idx);
                    if u == 0.0 {
                        continue;
                    }
                    let mut w = 1.0;
                    for (a, &on) in [i, j, k].iter().enumerate() {
                        // Integer-located along every axis except its own.
                        if mirrored[a] && on == 0 && a != c {
                            w *= 0.5;
                        }
                    }
                    total += w * u;
                    peak = peak.max(u);
                }
            }
        }
    }
    if peak == 0.0 {
        return Err(AnalysisError::Input("field is zero everywhere".into()));
    }
    let copies = mirrored.iter().filter(|&&m| m).count() as i32;
    Ok(ModeVolume {
        nm3: total * 2f64.powi(copies) * layout.cell_size.powi(3) / peak,
        peak_density: peak,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDensity {
    pub u_e: Vec<f64>,
    pub u_m: Vec<f64>,
    pub u: Vec<f64>,
}

/// Pointwise `U_E = 1/2 eps |E|^2`, `U_M = 1/2 mu |H|^2` and their sum, with
/// the components taken at a common index. `h = None` means H = 0.
pub fn energy_density(
    e: [&[f32]; 3],
    h: Option<[&[f32]; 3]>,
    eps: [&[f32]; 3],
    mu: f64,
) -> Result<EnergyDensity, AnalysisError> {
    let n = e[0].len();
    let congruent = e.iter().chain(eps.iter()).all(|a| a.len() == n)
        && h.is_none_or(|h| h.iter().all(|a| a.len() == n));
    if !congruent {
        return Err(AnalysisError::Input(
            "field and permittivity arrays differ in length".into(),
        ));
    }
    let u_e: Vec<f64> = (0..n)
        .map(|i| {
            (0..3)
                .map(|c| 0.5 * eps[c][i] as f64 * (e[c][i] as f64).powi(2))
                .sum()
        })
        .collect();
    let u_m: Vec<f64> = match h {
        Some(h) => (0..n)
            .map(|i| (0..3).map(|c| 0.5 * mu * (h[c][i] as f64).powi(2)).sum())
            .collect(),
        None => vec![0.0; n],
    };
    let u = u_e.iter().zip(&u_m).map(|(a, b)| a + b).collect();
    Ok(EnergyDensity { u_e, u_m, u })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityScore {
    pub parity: Parity,
    /// Relative mirror residual for the even and odd hypotheses, per mirror (x, z).
    pub residuals: [[f64; 2]; 2],
}

/// Relative residual `|E - M E| / |E|` of the field under the mirror through
/// the grid center along `mirror`, assuming Hy is even (`even = true`) or odd.
fn mirror_residual(field: &FieldVolume, mirror: usize, even: bool) -> f64 {
    let layout = &field.layout;
    let n = layout.dims;
    let mut diff = 0.0;
    let mut norm = 0.0;
    for c in 0..3 {
        let p = Parity::from_flags(even, even);
        let sign = p.e_sign(Axis::from_index(c), Axis::from_index(mirror)) as f32;
        // Half-located along its own axis: i <-> n - 2 - i, last sample unused.
        let half = c == mirror;
        let arrays: Vec<&Vec<f32>> = std::iter::once(&field.e[c])
            .chain(field.e_im.as_ref().map(|v| &v[c]))
            .collect();
        for arr in arrays {
            for i in 0..n[0] {
                for j in 0..n[1] {
                    for k in 0..n[2] {
                        let mut q = [i, j, k];
                        if half {
                            if q[mirror] + 1 >= n[mirror] {
                                continue;
                            }
                            q[mirror] = n[mirror] - 2 - q[mirror];
                        } else {
                            q[mirror] = n[mirror] - 1 - q[mirror];
                        }
                        let a = arr[layout.index(i, j, k)];
                        let b = arr[layout.index(q[0], q[1], q[2])];
                        diff += ((a - sign * b) as f64).powi(2);
                        norm += (a as f64).powi(2);
                    }
                }
            }
        }
    }
    if norm == 0.0 {
        return f64::INFINITY;
    }
    (diff / norm).sqrt()
}

/// Classify the Hy parity of a full-domain field symmetric about the grid
/// center in x and z. Returns `None` when neither hypothesis fits within
/// `tolerance` on either mirror.
pub fn classify_parity(field: &FieldVolume, tolerance: f64) -> Option<ParityScore> {
    let mut residuals = [[0.0; 2]; 2];
    let mut even = [false; 2];
    for (slot, mirror) in [0usize, 2].into_iter().enumerate() {
        let r_even = mirror_residual(field, mirror, true);
        let r_odd = mirror_residual(field, mirror, false);
        residuals[slot] = [r_even, r_odd];
        let best = r_even.min(r_odd);
        if !(best <= tolerance) {
            return None;
        }
        even[slot] = r_even <= r_odd;
    }
    Some(ParityScore {
        parity: Parity::from_flags(even[0], even[1]),
        residuals,
    })
}
