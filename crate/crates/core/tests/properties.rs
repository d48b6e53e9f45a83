use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use nanobeam::analysis::{
    coupling_assessment, harmonic_inversion, mode_volume, purcell_factor, ResonantMode,
};
use nanobeam::fit::{levenberg_marquardt, LmOptions};
use nanobeam::geometry::GridLayout;
use nanobeam::solver::{FieldVolume, Parity};
use nanobeam::spectra::{match_modes, q_from_peak, LorentzianPeak};
use proptest::prelude::*;

fn peak(center: f64, q: f64) -> LorentzianPeak {
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
        window_nm: [500.0, 800.0],
        converged: true,
        residual_norm: 0.0,
        flagged: false,
    }
}

fn mode(l: f64, q: f64) -> ResonantMode {
    ResonantMode {
        wavelength_nm: l,
        frequency_hz: 0.0,
        q,
        mode_volume_nm3: None,
        mode_volume_norm: None,
        parity: Some(Parity::EE),
        amplitude: [1.0, 0.0],
        probe: String::new(),
        q_capped: false,
        low_confidence: false,
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn purcell_is_scale_free(lam in 400.0..900.0f64, n in 1.2..3.5f64, q in 10.0..1e5f64, v in 0.2..20.0f64, s in 0.1..10.0f64) {
        let v_nm3 = v * (lam / n).powi(3);
        let a = purcell_factor(lam, n, q, v_nm3).unwrap();
        let b = purcell_factor(lam * s, n, q, v_nm3 * s.powi(3)).unwrap();
        prop_assert!((a / b - 1.0).abs() < 1e-12);
        let c = purcell_factor(lam, n, 2.0 * q, v_nm3).unwrap();
        prop_assert!((c / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn q_from_peak_is_homogeneous(c in 400.0..900.0f64, w in 0.01..20.0f64, s in 0.1..10.0f64) {
        let a = q_from_peak(c, w).unwrap();
        let b = q_from_peak(c * s, w * s).unwrap();
        prop_assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_times_4pi_q_is_omega(q in 1.0..1e6f64, lam in 400.0..900.0f64, v in 1e6..1e9f64, g in 1e6..1e10f64) {
        let c = coupling_assessment(q, v, lam, g, 1.0).unwrap();
        prop_assert!((c.kappa * 4.0 * PI * q / c.omega - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matching_is_shift_invariant(
        meas in prop::collection::vec(560.0..700.0f64, 1..7),
        calc in prop::collection::vec(560.0..700.0f64, 1..7),
        shift in -30.0..30.0f64,
    ) {
        let meas = sorted(meas);
        let calc = sorted(calc);
        let p: Vec<_> = meas.iter().map(|&c| peak(c, 100.0)).collect();
        let m: Vec<_> = calc.iter().map(|&c| mode(c, 100.0)).collect();
        let ps: Vec<_> = meas.iter().map(|&c| peak(c + shift, 100.0)).collect();
        let ms: Vec<_> = calc.iter().map(|&c| mode(c + shift, 100.0)).collect();
        let a = match_modes(&p, &m).unwrap();
        let b = match_modes(&ps, &ms).unwrap();
        prop_assert_eq!(a.pairs.len(), meas.len().min(calc.len()));
        prop_assert_eq!(a.pairs.len(), b.pairs.len());
        let ia: Vec<_> = a.pairs.iter().map(|x| (x.measured, x.calculated)).collect();
        let ib: Vec<_> = b.pairs.iter().map(|x| (x.measured, x.calculated)).collect();
        let total = |m: &nanobeam::spectra::Matching| m.pairs.iter().map(|x| x.delta_nm.abs()).sum::<f64>();
        prop_assert!(ia == ib || (total(&a) - total(&b)).abs() < 1e-9);
    }

    #[test]
    fn lm_cost_never_increases(a in 0.5..5.0f64, k in 0.1..2.0f64, a0 in 0.1..10.0f64, k0 in 0.01..3.0f64) {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|&t| a * (-k * t).exp()).collect();
        let model = |p: &[f64], r: &mut DVector<f64>, j: &mut DMatrix<f64>| {
            for (i, (&t, &y)) in t.iter().zip(&y).enumerate() {
                let e = (-p[1] * t).exp();
                r[i] = p[0] * e - y;
                j[(i, 0)] = e;
                j[(i, 1)] = -p[0] * t * e;
            }
        };
        let rep = levenberg_marquardt(model, &[a0, k0], t.len(), &LmOptions::default());
        prop_assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*rep.history.last().unwrap(), rep.cost);
    }

    #[test]
    fn mode_volume_ignores_field_scale(sigma in 1.5..4.0f64, s in 1e-3..1e3f64, cell in 1.0..20.0f64) {
        let layout = GridLayout { cell_size: cell, dims: [16, 16, 16], origin: [0.0; 3] };
        let make = |scale: f64| {
            let e: Vec<f32> = (0..layout.len())
                .map(|idx| {
                    let (i, j, k) = (idx / 256, (idx / 16) % 16, idx % 16);
                    let r2 = [i, j, k].iter().map(|&x| (x as f64 - 7.5).powi(2)).sum::<f64>();
                    (scale * (-r2 / (2.0 * sigma * sigma)).exp()) as f32
                })
                .collect();
            FieldVolume {
                layout,
                eps: [vec![1.0; layout.len()], vec![1.0; layout.len()], vec![1.0; layout.len()]],
                e: [e.clone(), vec![0.0; layout.len()], vec![0.0; layout.len()]],
                e_im: None,
            }
        };
        let a = mode_volume(&make(1.0), [false; 3]).unwrap().nm3;
        let b = mode_volume(&make(s), [false; 3]).unwrap().nm3;
        prop_assert!((a / b - 1.0).abs() < 1e-5);
        prop_assert!(a > 0.0 && a <= (16.0 * cell).powi(3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn harminv_recovers_one_decaying_mode(f in 0.05..0.2f64, q in 20.0..400.0f64, amp in 0.1..10.0f64, phase in 0.0..std::f64::consts::TAU) {
        let dt = 1.0;
        let n = 3000;
        let gamma = 2.0 * PI * f / (2.0 * q);
        let s: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                amp * (-gamma * t).exp() * (2.0 * PI * f * t + phase).cos()
            })
            .collect();
        let modes = harmonic_inversion(&s, dt, [0.03, 0.25]).unwrap();
        let best = modes.iter().max_by(|a, b| a.amplitude.norm().total_cmp(&b.amplitude.norm())).unwrap();
        prop_assert!((best.frequency_hz / f - 1.0).abs() < 1e-6);
        prop_assert!((best.q / q - 1.0).abs() < 1e-4, "q {} vs {}", best.q, q);
        prop_assert!((best.amplitude.norm() / (0.5 * amp) - 1.0).abs() < 1e-3);
    }
}
