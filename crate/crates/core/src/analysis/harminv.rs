//! Harmonic inversion by filter diagonalization: the signal is projected onto
//! a small Fourier basis covering the band, and the decaying exponentials are
//! the eigenvalues of the resulting generalized eigenproblem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::AnalysisError;
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::solver::SPEED_OF_LIGHT;

type C = Complex64;

#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    /// Upper bound on the number of basis functions.
    pub max_basis: usize,
    /// Basis density relative to the Fourier resolution of the signal.
    pub basis_density: f64,
    /// Singular values of the overlap matrix below this fraction of the
    /// largest are discarded.
    pub svd_tolerance: f64,
    /// Modes whose eigenvalue consistency error exceeds this are dropped.
    pub max_error: f64,
    /// Modes with |amplitude| below this fraction of the largest are dropped.
    pub min_relative_amplitude: f64,
    /// Allowed relative disagreement between the inversion Q and the
    /// Lorentzian fit of the Fourier spectrum.
    pub cross_check_tolerance: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            max_basis: 150,
            basis_density: 1.5,
            svd_tolerance: 1e-10,
            max_error: 1e-3,
            min_relative_amplitude: 1e-4,
            cross_check_tolerance: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicMode {
    pub frequency_hz: f64,
    /// Amplitude 1/e decay rate of the field, 1/s.
    pub decay_rate: f64,
    /// `omega / (2 * decay_rate)`, clipped to the resolvable cap.
    pub q: f64,
    /// Complex amplitude `d` of `d exp(-i omega t)`; a real cosine of
    /// amplitude A contributes `|d| = A / 2`.
    pub amplitude: Complex64,
    /// Eigenvalue consistency error (dimensionless, smaller is better).
    pub error: f64,
    /// Q reached `pi * N * f * dt` (no decay resolvable within the record).
    pub q_capped: bool,
    /// Q of a Lorentzian fitted to the Fourier power spectrum.
    pub lorentzian_q: Option<f64>,
    /// Inversion and Lorentzian Q disagree beyond tolerance.
    pub low_confidence: bool,
}

impl HarmonicMode {
    pub fn wavelength_nm(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz * 1e9
    }
}

#[derive(Debug, Clone, Default)]
pub struct Inversion {
    pub modes: Vec<HarmonicMode>,
    /// (kept, basis size) when the overlap matrix was rank deficient.
    pub reduced_rank: Option<(usize, usize)>,
}

/// Decaying sinusoids in `signal` with frequency inside `band_hz`.
pub fn harmonic_inversion(
    signal: &[f64],
    dt: f64,
    band_hz: [f64; 2],
) -> Result<Vec<HarmonicMode>, AnalysisError> {
    Ok(harmonic_inversion_with(signal, dt, band_hz, &InversionOptions::default())?.modes)
}

pub fn harmonic_inversion_with(
    signal: &[f64],
    dt: f64,
    band_hz: [f64; 2],
    opts: &InversionOptions,
) -> Result<Inversion, AnalysisError> {
    let n = signal.len();
    if n < 200 {
        return Err(AnalysisError::Input(format!(
            "harmonic inversion needs at least 200 samples, got {n}"
        )));
    }
    if !(dt > 0.0 && band_hz[0] > 0.0 && band_hz[1] > band_hz[0]) {
        return Err(AnalysisError::Input("invalid time step or band".into()));
    }
    if band_hz[1] * dt >= 0.5 {
        return Err(AnalysisError::Input(
            "band extends beyond the Nyquist frequency".into(),
        ));
    }
    let scale = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Ok(Inversion::default());
    }
    let c: Vec<f64> = signal.iter().map(|v| v / scale).collect();
    let m = (n - 3) / 2;

    // Basis phases, padded by a margin beyond the band on each side.
    let two_pi = 2.0 * std::f64::consts::PI;
    let (p_lo, p_hi) = (two_pi * band_hz[0] * dt, two_pi * band_hz[1] * dt);
    let width = p_hi - p_lo;
    let lo = (p_lo - 0.2 * width).max(1e-6);
    let hi = (p_hi + 0.2 * width).min(std::f64::consts::PI - 1e-6);
    let k = ((opts.basis_density * (hi - lo) * m as f64 / two_pi).ceil() as usize + 4)
        .clamp(4, opts.max_basis);
    let phases: Vec<f64> = (0..k)
        .map(|j| lo + (hi - lo) * (j as f64 + 0.5) / k as f64)
        .collect();
    let a: Vec<C> = phases.iter().map(|&p| C::from_polar(1.0, p)).collect();

    let u: Vec<DMatrix<C>> = (0..3).map(|p| overlap_matrix(&c, m, p, &a)).collect();
    let cvec: Vec<C> = a.iter().map(|&aj| horner(&c[..=m], aj)).collect();

    // Reduce to the numerically non-singular subspace of U0.
    let svd = u[0].clone().svd(true, true);
    let (pu, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let smax = svd.singular_values[order[0]];
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > opts.svd_tolerance * smax)
        .collect();
    let r = keep.len();
    if r == 0 {
        return Ok(Inversion::default());
    }
    let reduced_rank = (r < k).then_some((r, k));
    if let Some((kept, total)) = reduced_rank {
        log::debug!("overlap matrix rank reduced to {kept} of {total}");
    }
    let p_r = DMatrix::from_fn(k, r, |i, j| pu[(i, keep[j])]);
    let q_r = DMatrix::from_fn(k, r, |i, j| vt[(keep[j], i)].conj());
    let sinv = DMatrix::from_fn(r, r, |i, j| {
        if i == j {
            C::new(1.0 / svd.singular_values[keep[i]], 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    });
    let reduced = &sinv * p_r.adjoint() * &u[1] * &q_r;

    let Some(eigs) = reduced.clone().schur().eigenvalues() else {
        return Err(AnalysisError::Numerical(
            "eigenvalue iteration did not converge".into(),
        ));
    };

    let cap_factor = std::f64::consts::PI * n as f64 * dt;
    let mut modes = Vec::new();
    for &lambda in eigs.iter() {
        let y = inverse_iteration(&reduced, lambda);
        let b = &q_r * y;
        let norm = bilinear(&b, &u[0], &b);
        if norm.norm() == 0.0 {
            continue;
        }
        let proj: C = b.iter().zip(&cvec).map(|(x, y)| x * y).sum();
        let d = proj * proj / norm;
        let err = (bilinear(&b, &u[2], &b) / norm - lambda * lambda).norm()
            / (lambda * lambda).norm().max(1e-300);
        // u = exp(-i omega dt), omega = omega_r - i gamma.
        let omega_r = -lambda.arg() / dt;
        let gamma = -lambda.norm().ln() / dt;
        let f = omega_r / two_pi;
        if !(f >= band_hz[0] && f <= band_hz[1]) {
            continue;
        }
        if gamma < 0.0 && -gamma * n as f64 * dt > 0.1 {
            // Growing component: not a physical ring-down.
            continue;
        }
        let cap = cap_factor * f;
        let (q, capped) = if gamma <= 0.0 || omega_r / (2.0 * gamma) >= cap {
            (cap, true)
        } else {
            (omega_r / (2.0 * gamma), false)
        };
        modes.push(HarmonicMode {
            frequency_hz: f,
            decay_rate: gamma.max(0.0),
            q,
            amplitude: d * scale,
            error: err,
            q_capped: capped,
            lorentzian_q: None,
            low_confidence: false,
        });
    }
    let amax = modes.iter().fold(0.0f64, |m, x| m.max(x.amplitude.norm()));
    modes.retain(|x| {
        x.error <= opts.max_error && x.amplitude.norm() >= opts.min_relative_amplitude * amax
    });
    modes.sort_by(|x, y| x.frequency_hz.total_cmp(&y.frequency_hz));

    if !modes.is_empty() {
        let spectrum = PowerSpectrum::new(&c, dt);
        for mode in modes.iter_mut() {
            mode.lorentzian_q =
                spectrum.lorentzian_q(mode.frequency_hz, mode.frequency_hz / mode.q);
            mode.low_confidence = match mode.lorentzian_q {
                Some(lq) => (lq / mode.q - 1.0).abs() > opts.cross_check_tolerance,
                None => true,
            };
        }
    }
    Ok(Inversion {
        modes,
        reduced_rank,
    })
}

/// `sum_{s} coef[s] x^s`.
fn horner(coef: &[f64], x: C) -> C {
    coef.iter()
        .rev()
        .fold(C::new(0.0, 0.0), |acc, &v| acc * x + v)
}

/// `U^p_{jj'} = sum_{n,m=0}^{M} a_j^n a_{j'}^m c_{n+m+p}` in closed form.
fn overlap_matrix(c: &[f64], m: usize, p: usize, a: &[C]) -> DMatrix<C> {
    let k = a.len();
    let lower = &c[p..=p + m];
    // G(x) = sum_{s=M+1}^{2M} c_{s+p} x^{s-M}
    let upper = &c[p + m + 1..=p + 2 * m];
    let f: Vec<C> = a.iter().map(|&x| horner(lower, x)).collect();
    let g: Vec<C> = a.iter().map(|&x| horner(upper, x) * x).collect();
    let am1: Vec<C> = a.iter().map(|&x| x.powu(m as u32 + 1)).collect();
    let diag: Vec<C> = a
        .iter()
        .map(|&x| {
            let mut acc = C::new(0.0, 0.0);
            let mut pw = C::new(1.0, 0.0);
            for s in 0..=2 * m {
                let count = (m + 1 - m.abs_diff(s)) as f64;
                acc += pw * (c[s + p] * count);
                pw *= x;
            }
            acc
        })
        .collect();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            diag[i]
        } else {
            let (ai, aj) = (a[i], a[j]);
            (aj * f[j] - ai * f[i] + am1[j] * g[i] - am1[i] * g[j]) / (aj - ai)
        }
    })
}

fn bilinear(x: &DVector<C>, m: &DMatrix<C>, y: &DVector<C>) -> C {
    (x.transpose() * m * y)[(0, 0)]
}

fn inverse_iteration(a: &DMatrix<C>, lambda: C) -> DVector<C> {
    let n = a.nrows();
    let shift = lambda + C::new(1e-10 * (1.0 + lambda.norm()), 1e-10 * (1.0 + lambda.norm()));
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut v = DVector::from_fn(n, |i, _| C::new(1.0, 0.1 * i as f64));
    for _ in 0..3 {
        if let Some(w) = lu.solve(&v) {
            let nrm = w.norm();
            if nrm == 0.0 || !nrm.is_finite() {
                break;
            }
            v = w / C::new(nrm, 0.0);
        }
    }
    v
}

/// Zero-padded power spectrum used for the Lorentzian cross-check.
struct PowerSpectrum {
    df: f64,
    power: Vec<f64>,
}

impl PowerSpectrum {
    fn new(c: &[f64], dt: f64) -> Self {
        let len = (4 * c.len()).next_power_of_two();
        let mut buf: Vec<C> = c.iter().map(|&v| C::new(v, 0.0)).collect();
        buf.resize(len, C::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let power = buf[..len / 2].iter().map(|v| v.norm_sqr()).collect();
        PowerSpectrum {
            df: 1.0 / (len as f64 * dt),
            power,
        }
    }

    /// Fit `A / (1 + (2 (f - f0) / w)^2) + B` around `f0` and return `f0 / w`.
    fn lorentzian_q(&self, f0: f64, width_guess: f64) -> Option<f64> {
        let w0 = width_guess.max(4.0 * self.df);
        let lo = ((f0 - 2.0 * w0) / self.df).floor().max(1.0) as usize;
        let hi = (((f0 + 2.0 * w0) / self.df).ceil() as usize).min(self.power.len() - 1);
        if hi <= lo + 5 {
            return None;
        }
        let xs: Vec<f64> = (lo..=hi).map(|i| i as f64 * self.df).collect();
        let ys = &self.power[lo..=hi];
        let peak = ys.iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 {
            return None;
        }
        let scale = 1.0 / peak;
        // Parameters in scaled units: amplitude, (f0 offset)/w0, width/w0, offset.
        let rep = levenberg_marquardt(
            |p, r, j| {
                for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
                    let u = 2.0 * ((x - f0) / w0 - p[1]) / p[2];
                    let den = 1.0 + u * u;
                    let l = 1.0 / den;
                    r[i] = p[0] * l + p[3] - y * scale;
                    let dl_du = -2.0 * u / (den * den);
                    j[(i, 0)] = l;
                    j[(i, 1)] = p[0] * dl_du * (-2.0 / p[2]);
                    j[(i, 2)] = p[0] * dl_du * (-u / p[2]);
                    j[(i, 3)] = 1.0;
                }
            },
            &[1.0, 0.0, width_guess.max(1e-300) / w0, 0.0],
            xs.len(),
            &LmOptions {
                max_iterations: 100,
                ..Default::default()
            },
        );
        let w = rep.params[2].abs() * w0;
        let center = f0 + rep.params[1] * w0;
        (w > 0.0 && w.is_finite()).then(|| center / w)
    }
}
