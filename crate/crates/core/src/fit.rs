//! Levenberg-Marquardt least squares with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub ftol: f64,
    /// Stop when the step is smaller than this fraction of the parameters.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            ftol: 1e-14,
            xtol: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after every accepted step, starting with the initial cost.
    pub history: Vec<f64>,
    /// `s² (JᵀJ)⁻¹` with `s² = cost / (m - n)`; `None` if singular.
    pub covariance: Option<DMatrix<f64>>,
}

impl LmReport {
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.covariance
            .as_ref()
            .map(|c| (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect())
    }
}

/// Minimize `sum r_i(p)^2`. `model(p, r, j)` fills the `m` residuals and the
/// `m x n` Jacobian.
pub fn levenberg_marquardt<F>(mut model: F, p0: &[f64], m: usize, opts: &LmOptions) -> LmReport
where
    F: FnMut(&[f64], &mut DVector<f64>, &mut DMatrix<f64>),
{
    let n = p0.len();
    let mut p = DVector::from_column_slice(p0);
    let mut r = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, n);
    model(p.as_slice(), &mut r, &mut jac);
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    let mut r_try = DVector::zeros(m);
    let mut j_try = DMatrix::zeros(m, n);

    while iterations < opts.max_iterations && !converged {
        iterations += 1;
        if !cost.is_finite() {
            break;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if g.amax() == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n {
                let d = jtj[(i, i)].max(1e-300);
                a[(i, i)] += lambda * d;
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let p_try = &p + &step;
            model(p_try.as_slice(), &mut r_try, &mut j_try);
            let c_try = r_try.norm_squared();
            if c_try.is_finite() && c_try < cost {
                let small_step = step.norm() <= opts.xtol * (p.norm() + opts.xtol);
                let small_gain = cost - c_try <= opts.ftol * cost;
                p = p_try;
                std::mem::swap(&mut r, &mut r_try);
                std::mem::swap(&mut jac, &mut j_try);
                cost = c_try;
                history.push(cost);
                lambda = (lambda / 3.0).max(1e-15);
                converged = small_step || small_gain;
                accepted = true;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted {
            // No downhill step at any damping: a (local) minimum to working precision.
            converged = lambda > 1e16 || cost == 0.0;
            break;
        }
    }

    let covariance = if m > n {
        let s2 = cost / (m - n) as f64;
        (jac.transpose() * &jac).try_inverse().map(|inv| inv * s2)
    } else {
        None
    };
    LmReport {
        params: p.as_slice().to_vec(),
        cost,
        iterations,
        converged,
        history,
        covariance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-1.7 * x).exp() + 0.2).collect();
        let rep = levenberg_marquardt(
            |p, r, j| {
                for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                    let e = (-p[1] * x).exp();
                    r[i] = p[0] * e + p[2] - y;
                    j[(i, 0)] = e;
                    j[(i, 1)] = -p[0] * x * e;
                    j[(i, 2)] = 1.0;
                }
            },
            &[1.0, 1.0, 0.0],
            xs.len(),
            &LmOptions::default(),
        );
        assert!(rep.converged);
        assert!((rep.params[0] - 3.0).abs() < 1e-8);
        assert!((rep.params[1] - 1.7).abs() < 1e-8);
        assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
