//! Background removal: reference-spectrum subtraction or a polynomial
//! baseline fitted to the lower envelope.

use nalgebra::{DMatrix, DVector};

use super::{SpectraError, Spectrum};

#[derive(Debug, Clone, Copy)]
pub enum Baseline<'a> {
    /// Subtract another spectrum, linearly interpolated onto this grid.
    Reference(&'a Spectrum),
    /// Least-squares polynomial of this degree through the baseline.
    Polynomial(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundReport {
    /// Fraction of samples that went negative and were clamped to zero.
    pub clamped_fraction: f64,
    /// Polynomial coefficients in the scaled variable `t = (2w - lo - hi) / (hi - lo)`.
    pub coefficients: Option<Vec<f64>>,
}

pub fn subtract_background(
    s: &Spectrum,
    baseline: Baseline,
) -> Result<(Spectrum, BackgroundReport), SpectraError> {
    s.validate()?;
    let (base, coefficients): (Vec<f64>, _) = match baseline {
        Baseline::Reference(r) => {
            r.validate()?;
            let [lo, hi] = s.range();
            let [rlo, rhi] = r.range();
            if rlo > lo || rhi < hi {
                return Err(SpectraError::Invalid(format!(
                    "reference covers {rlo}-{rhi} nm but the spectrum spans {lo}-{hi} nm"
                )));
            }
            (
                s.wavelength_nm.iter().map(|&w| r.interpolate(w)).collect(),
                None,
            )
        }
        Baseline::Polynomial(degree) => {
            let c = lower_envelope_fit(&s.wavelength_nm, &s.intensity, degree)?;
            let [lo, hi] = s.range();
            (
                s.wavelength_nm
                    .iter()
                    .map(|&w| poly(&c, scaled(w, lo, hi)))
                    .collect(),
                Some(c),
            )
        }
    };
    let mut clamped = 0usize;
    let intensity = s
        .intensity
        .iter()
        .zip(&base)
        .map(|(y, b)| {
            let v = y - b;
            if v < 0.0 {
                // Round-off below zero is not worth reporting.
                if v < -1e-12 * y.abs().max(1.0) {
                    clamped += 1;
                }
                0.0
            } else {
                v
            }
        })
        .collect();
    let out = Spectrum {
        wavelength_nm: s.wavelength_nm.clone(),
        intensity,
        position_um: s.position_um,
    };
    Ok((
        out,
        BackgroundReport {
            clamped_fraction: clamped as f64 / s.len() as f64,
            coefficients,
        },
    ))
}

fn scaled(w: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (2.0 * w - lo - hi) / (hi - lo)
    } else {
        0.0
    }
}

fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

fn least_squares(t: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>, SpectraError> {
    let a = DMatrix::from_fn(t.len(), degree + 1, |i, j| t[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-12)
        .map_err(|e| SpectraError::Invalid(format!("baseline fit: {e}")))?;
    Ok(x.as_slice().to_vec())
}

/// Repeatedly fit and clip the data to the fit from above, so peaks stop
/// pulling the baseline up. Converges to the lower envelope of the data.
fn lower_envelope_fit(w: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>, SpectraError> {
    if w.len() <= degree {
        return Err(SpectraError::Invalid(format!(
            "{} samples cannot fix a degree-{degree} baseline",
            w.len()
        )));
    }
    let (lo, hi) = (w[0], w[w.len() - 1]);
    let t: Vec<f64> = w.iter().map(|&x| scaled(x, lo, hi)).collect();
    let mut work = y.to_vec();
    let mut c = least_squares(&t, &work, degree)?;
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for _ in 0..500 {
        let mut changed = 0.0f64;
        for (v, &ti) in work.iter_mut().zip(&t) {
            let f = poly(&c, ti);
            if *v > f {
                changed = changed.max(*v - f);
                *v = f;
            }
        }
        if changed <= 1e-13 * scale {
            break;
        }
        c = least_squares(&t, &work, degree)?;
    }
    Ok(c)
}
