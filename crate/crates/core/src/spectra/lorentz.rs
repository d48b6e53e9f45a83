//! Multi-Lorentzian peak fitting on wavelength windows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{q_from_peak, SpectraError, Spectrum};
use crate::fit::{levenberg_marquardt, LmOptions};

/// Default analysis window, nm.
pub const DEFAULT_ROI_NM: [f64; 2] = [602.0, 652.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianPeak {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub amplitude: f64,
    /// Constant offset shared by all peaks of the window.
    pub background: f64,
    pub q: f64,
    /// One-sigma uncertainties from the fit covariance; `NaN` if unavailable.
    pub center_err: f64,
    pub fwhm_err: f64,
    pub amplitude_err: f64,
    pub q_err: f64,
    pub window_nm: [f64; 2],
    pub converged: bool,
    /// Root of the summed squared residuals over the window.
    pub residual_norm: f64,
    /// Not converged, or the peak is not distinguishable from noise.
    pub flagged: bool,
}

impl LorentzianPeak {
    pub fn eval(&self, w: f64) -> f64 {
        let u = 2.0 * (w - self.center_nm) / self.fwhm_nm;
        self.amplitude / (1.0 + u * u)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Moving-average half width (samples) used to find initial maxima.
    pub smoothing: usize,
    /// A peak whose amplitude is below this many standard errors is flagged.
    pub significance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lm: LmOptions {
                max_iterations: 500,
                ..LmOptions::default()
            },
            smoothing: 2,
            significance: 3.0,
        }
    }
}

pub fn fit_lorentzians(
    s: &Spectrum,
    windows: &[[f64; 2]],
    peaks_per_window: &[usize],
) -> Result<Vec<LorentzianPeak>, SpectraError> {
    fit_lorentzians_with(s, windows, peaks_per_window, &FitOptions::default())
}

/// Fit `peaks_per_window[i]` Lorentzians plus a constant in `windows[i]`.
/// Peaks are returned window by window, each window sorted by center.
pub fn fit_lorentzians_with(
    s: &Spectrum,
    windows: &[[f64; 2]],
    peaks_per_window: &[usize],
    opts: &FitOptions,
) -> Result<Vec<LorentzianPeak>, SpectraError> {
    s.validate()?;
    if windows.len() != peaks_per_window.len() {
        return Err(SpectraError::Invalid(format!(
            "{} windows but {} peak counts",
            windows.len(),
            peaks_per_window.len()
        )));
    }
    let mut out = Vec::new();
    for (&win, &k) in windows.iter().zip(peaks_per_window) {
        out.extend(fit_window(s, win, k, opts)?);
    }
    Ok(out)
}

fn smooth(y: &[f64], half: usize) -> Vec<f64> {
    (0..y.len())
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(y.len());
            y[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

/// Interior local maxima of `y` with their topographic prominence.
fn local_maxima(y: &[f64]) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            // Walk across a plateau.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let m = (i + j) / 2;
                let h = y[m];
                let mut left_min = h;
                for v in y[..m].iter().rev() {
                    if *v > h {
                        break;
                    }
                    left_min = left_min.min(*v);
                }
                let mut right_min = h;
                for v in &y[m + 1..] {
                    if *v > h {
                        break;
                    }
                    right_min = right_min.min(*v);
                }
                out.push((m, h - left_min.max(right_min)));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn fit_window(
    s: &Spectrum,
    win: [f64; 2],
    k: usize,
    opts: &FitOptions,
) -> Result<Vec<LorentzianPeak>, SpectraError> {
    if !(win[1] > win[0]) {
        return Err(SpectraError::Invalid(format!("window {win:?} is empty")));
    }
    let r = s.window(win[0], win[1]);
    if r.len() < 10 {
        return Err(SpectraError::Invalid(format!(
            "window {win:?} holds {} samples, need at least 10",
            r.len()
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let x = &s.wavelength_nm[r.clone()];
    let y = &s.intensity[r];
    let m = x.len();
    let ys = smooth(y, opts.smoothing);
    let mut maxima = local_maxima(&ys);
    if maxima.len() < k {
        return Err(SpectraError::Invalid(format!(
            "{k} peaks requested in {win:?} but only {} local maxima found",
            maxima.len()
        )));
    }
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut picks: Vec<usize> = maxima[..k].iter().map(|p| p.0).collect();
    picks.sort_unstable();

    let base = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let span = x[m - 1] - x[0];
    let mut p0 = Vec::with_capacity(3 * k + 1);
    for (n, &i) in picks.iter().enumerate() {
        let h = ys[i] - base;
        let half = base + 0.5 * h;
        let lo_lim = if n > 0 { (picks[n - 1] + i) / 2 } else { 0 };
        let hi_lim = if n + 1 < k {
            (picks[n + 1] + i) / 2
        } else {
            m - 1
        };
        let left = (lo_lim..i)
            .rev()
            .find(|&j| ys[j] <= half)
            .map(|j| x[i] - x[j]);
        let right = (i + 1..=hi_lim)
            .find(|&j| ys[j] <= half)
            .map(|j| x[j] - x[i]);
        let step = span / (m - 1) as f64;
        let fwhm = match (left, right) {
            (Some(l), Some(r)) => l + r,
            (Some(l), None) => 2.0 * l,
            (None, Some(r)) => 2.0 * r,
            (None, None) => (x[hi_lim] - x[lo_lim]).max(2.0 * step),
        };
        p0.extend([x[i], fwhm.max(step), h.max(f64::MIN_POSITIVE)]);
    }
    p0.push(base);

    let rep = levenberg_marquardt(
        |p, res, jac| {
            for i in 0..m {
                let mut f = p[3 * k];
                for n in 0..k {
                    let (c, w, a) = (p[3 * n], p[3 * n + 1], p[3 * n + 2]);
                    let u = 2.0 * (x[i] - c) / w;
                    let d = 1.0 / (1.0 + u * u);
                    f += a * d;
                    // d(a d)/du = -2 a u d^2, du/dc = -2/w, du/dw = -u/w
                    let g = -2.0 * a * u * d * d;
                    jac[(i, 3 * n)] = g * (-2.0 / w);
                    jac[(i, 3 * n + 1)] = g * (-u / w);
                    jac[(i, 3 * n + 2)] = d;
                }
                jac[(i, 3 * k)] = 1.0;
                res[i] = f - y[i];
            }
        },
        &p0,
        m,
        &opts.lm,
    );

    let p = &rep.params;
    let errs = rep.std_errors();
    let cov = rep.covariance.as_ref();
    let residual_norm = rep.cost.sqrt();
    let mut peaks = Vec::with_capacity(k);
    for n in 0..k {
        let (c, w, a) = (p[3 * n], p[3 * n + 1].abs(), p[3 * n + 2]);
        let q = if w > 0.0 {
            q_from_peak(c, w)?
        } else {
            f64::INFINITY
        };
        let e = |i: usize| errs.as_ref().map_or(f64::NAN, |v| v[i]);
        let q_err = match cov {
            Some(cov) if w > 0.0 => {
                let (i, j) = (3 * n, 3 * n + 1);
                let var = (cov[(i, i)] / (c * c) + cov[(j, j)] / (w * w)
                    - 2.0 * cov[(i, j)] / (c * w))
                    .max(0.0);
                q * var.sqrt()
            }
            _ => f64::NAN,
        };
        let inside = c >= win[0] && c <= win[1];
        let significant = a > 0.0 && a > opts.significance * e(3 * n + 2) && w < span && w > 0.0;
        peaks.push(LorentzianPeak {
            center_nm: c,
            fwhm_nm: w,
            amplitude: a,
            background: p[3 * k],
            q,
            center_err: e(3 * n),
            fwhm_err: e(3 * n + 1),
            amplitude_err: e(3 * n + 2),
            q_err,
            window_nm: win,
            converged: rep.converged,
            residual_norm,
            flagged: !rep.converged || !inside || !significant,
        });
    }
    peaks.sort_by(|a, b| a.center_nm.total_cmp(&b.center_nm));
    Ok(peaks)
}

/// Sum of the fitted peaks and the background of the window containing `w`
/// (first matching window wins; zero outside every window).
pub fn evaluate_fit(peaks: &[LorentzianPeak], w: f64) -> f64 {
    let Some(win) = peaks
        .iter()
        .map(|p| p.window_nm)
        .find(|r| w >= r[0] && w <= r[1])
    else {
        return 0.0;
    };
    let mine = peaks.iter().filter(|p| p.window_nm == win);
    let mut total = 0.0;
    let mut bg = 0.0;
    for p in mine {
        total += p.eval(w);
        bg = p.background;
    }
    total + bg
}

pub fn write_peaks<W: Write>(peaks: &[LorentzianPeak], w: W) -> Result<(), SpectraError> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| SpectraError::Invalid(e.to_string());
    out.write_record([
        "center_nm",
        "center_err_nm",
        "fwhm_nm",
        "fwhm_err_nm",
        "amplitude",
        "amplitude_err",
        "background",
        "q",
        "q_err",
        "window_lo_nm",
        "window_hi_nm",
        "converged",
        "residual_norm",
        "flagged",
    ])
    .map_err(err)?;
    for p in peaks {
        out.write_record([
            format!("{:.4}", p.center_nm),
            format!("{:.4}", p.center_err),
            format!("{:.4}", p.fwhm_nm),
            format!("{:.4}", p.fwhm_err),
            format!("{:.6e}", p.amplitude),
            format!("{:.3e}", p.amplitude_err),
            format!("{:.6e}", p.background),
            format!("{:.2}", p.q),
            format!("{:.2}", p.q_err),
            format!("{}", p.window_nm[0]),
            format!("{}", p.window_nm[1]),
            p.converged.to_string(),
            format!("{:.6e}", p.residual_norm),
            p.flagged.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}
