//! Closed-form cavity figures of merit: Purcell factor, coupling regime,
//! readout improvement and photon budget.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::solver::SPEED_OF_LIGHT;

/// Q above which the strong-coupling assessment is considered meaningful.
pub const STRONG_COUPLING_Q_GATE: f64 = 3e3;

fn positive(name: &str, v: f64) -> Result<f64, AnalysisError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(AnalysisError::Input(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `F = 3 / (4 pi^2) (lambda / n)^3 Q / V_m`; `V_m` in nm³. Equals `Γ/Γ₀`.
pub fn purcell_factor(
    wavelength_nm: f64,
    n: f64,
    q: f64,
    v_m_nm3: f64,
) -> Result<f64, AnalysisError> {
    let l = positive("wavelength", wavelength_nm)? / positive("refractive index", n)?;
    let q = positive("Q", q)?;
    let v = positive("mode volume", v_m_nm3)?;
    Ok(3.0 / (4.0 * std::f64::consts::PI.powi(2)) * l.powi(3) * q / v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingAssessment {
    /// Rabi frequency, 1/s.
    pub g: f64,
    /// Cavity decay rate `omega / (4 pi Q)`, 1/s.
    pub kappa: f64,
    pub gamma_perp: f64,
    /// `c lambda^2 / (8 pi gamma_perp)`, nm³.
    pub v0_nm3: f64,
    pub omega: f64,
    pub margin: f64,
    /// `g > margin * max(kappa, gamma_perp)`.
    pub strong: bool,
    /// Q exceeds [`STRONG_COUPLING_Q_GATE`].
    pub q_gate: bool,
}

pub fn coupling_assessment(
    q: f64,
    v_m_nm3: f64,
    wavelength_nm: f64,
    gamma_perp: f64,
    margin: f64,
) -> Result<CouplingAssessment, AnalysisError> {
    let q = positive("Q", q)?;
    let v_m = positive("mode volume", v_m_nm3)?;
    let lam = positive("wavelength", wavelength_nm)? * 1e-9;
    let gamma_perp = positive("dipole decay rate", gamma_perp)?;
    let margin = positive("margin", margin)?;
    let omega = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lam;
    let kappa = omega / (4.0 * std::f64::consts::PI * q);
    let v0_nm3 = SPEED_OF_LIGHT * lam * lam / (8.0 * std::f64::consts::PI * gamma_perp) * 1e27;
    let g = gamma_perp * (v0_nm3 / v_m).sqrt();
    Ok(CouplingAssessment {
        g,
        kappa,
        gamma_perp,
        v0_nm3,
        omega,
        margin,
        strong: g > margin * kappa.max(gamma_perp),
        q_gate: q > STRONG_COUPLING_Q_GATE,
    })
}

/// Readout improvement: Purcell enhancement times collection gain.
pub fn readout_visibility(f_cav: f64, collection_gain: f64) -> Result<f64, AnalysisError> {
    Ok(positive("Purcell factor", f_cav)? * positive("collection gain", collection_gain)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonBudgetParams {
    /// Bulk spontaneous emission time, ns.
    pub tau0_ns: f64,
    /// Mean dwell in the non-radiative shelving state, ns.
    pub shelving_ns: f64,
    /// Detected fraction of emitted photons without the cavity.
    pub base_collection: f64,
    pub collection_gain: f64,
    pub f_cav: f64,
    /// Readout window, ns.
    pub window_ns: f64,
}

impl Default for PhotonBudgetParams {
    fn default() -> Self {
        PhotonBudgetParams {
            tau0_ns: 13.0,
            shelving_ns: 250.0,
            base_collection: 0.01,
            collection_gain: 10.0,
            f_cav: 7.6,
            window_ns: 300.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonBudget {
    /// Emission time with Purcell enhancement, ns.
    pub tau_ns: f64,
    /// Detected photons per ns while cycling.
    pub bright_rate: f64,
    /// Mean detected photons in the window, bright state.
    pub bright_mean: f64,
    /// Mean detected photons in the window, dim (shelved) state.
    pub dim_mean: f64,
    /// `(bright - dim) / bright`.
    pub contrast: f64,
}

/// Poisson means of a readout window. The bright state cycles at
/// `1 / tau` from the start; the dim state first dwells an exponentially
/// distributed time in the dark shelving state, then cycles like the bright one.
pub fn photon_budget(p: &PhotonBudgetParams) -> Result<PhotonBudget, AnalysisError> {
    let tau = positive("tau0", p.tau0_ns)? / positive("Purcell factor", p.f_cav)?;
    let ts = positive("shelving time", p.shelving_ns)?;
    let eta = positive("base collection", p.base_collection)?
        * positive("collection gain", p.collection_gain)?;
    if eta > 1.0 {
        return Err(AnalysisError::Input(format!(
            "detected fraction {eta} exceeds 1"
        )));
    }
    let t = positive("window", p.window_ns)?;
    let rate = eta / tau;
    let bright_mean = rate * t;
    let dim_mean = rate * (t - ts * (-(-t / ts).exp_m1()));
    Ok(PhotonBudget {
        tau_ns: tau,
        bright_rate: rate,
        bright_mean,
        dim_mean,
        contrast: (bright_mean - dim_mean) / bright_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = 637.0;
    const N: f64 = 2.4;

    fn vol(units: f64) -> f64 {
        units * (LAMBDA / N).powi(3)
    }

    #[test]
    fn purcell_values() {
        let f = purcell_factor(LAMBDA, N, 200.0, vol(2.0)).unwrap();
        assert_relative_eq!(
            f,
            600.0 / (8.0 * std::f64::consts::PI.powi(2)),
            max_relative = 1e-12
        );
        assert!((f - 7.60).abs() < 0.01);
        let f = purcell_factor(LAMBDA, N, 22_400.0, vol(1.8)).unwrap();
        assert!((f - 946.0).abs() < 1.0, "{f}");
        let q = 4.0 * std::f64::consts::PI.powi(2) / 3.0;
        assert_relative_eq!(
            purcell_factor(LAMBDA, N, q, vol(1.0)).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert!(purcell_factor(LAMBDA, N, 0.0, 1.0).is_err());
        assert!(purcell_factor(-1.0, N, 1.0, 1.0).is_err());
    }

    #[test]
    fn kappa_values() {
        let c = coupling_assessment(200.0, vol(2.0), LAMBDA, 1e9, 1.0).unwrap();
        // 2 pi c / lambda / (4 pi Q) = c / (2 lambda Q)
        let expect = SPEED_OF_LIGHT / (2.0 * 637e-9 * 200.0);
        assert_relative_eq!(c.kappa, expect, max_relative = 1e-12);
        assert!((c.kappa / 1.177e12 - 1.0).abs() < 1e-3);
        let c = coupling_assessment(22_400.0, vol(1.8), LAMBDA, 1e9, 1.0).unwrap();
        assert!((c.kappa / 1.051e10 - 1.0).abs() < 1e-3);
        assert!(c.q_gate);
    }

    #[test]
    fn rabi_fixed_point() {
        let gamma = 8.3e7;
        let v0 = coupling_assessment(200.0, 1.0, LAMBDA, gamma, 1.0)
            .unwrap()
            .v0_nm3;
        let c = coupling_assessment(200.0, v0, LAMBDA, gamma, 1.0).unwrap();
        assert_relative_eq!(c.g, gamma, max_relative = 1e-12);
        assert!(!c.strong);
    }

    #[test]
    fn readout_improvement() {
        assert_eq!(readout_visibility(7.6, 10.0).unwrap(), 76.0);
        assert_eq!(readout_visibility(1.0, 1.0).unwrap(), 1.0);
        assert!(readout_visibility(0.0, 1.0).is_err());
    }

    #[test]
    fn photon_budget_limits() {
        let b = photon_budget(&PhotonBudgetParams::default()).unwrap();
        assert!(b.dim_mean < b.bright_mean && b.dim_mean > 0.0);
        assert_relative_eq!(b.tau_ns, 13.0 / 7.6, max_relative = 1e-12);
        // A very long window washes out the shelving contrast.
        let long = photon_budget(&PhotonBudgetParams {
            window_ns: 1e7,
            ..Default::default()
        })
        .unwrap();
        assert!(long.contrast < 1e-4);
    }
}
