//! Single-peak Lorentzian fitting by Levenberg-Marquardt.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{OdmrError, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-10;

/// `A gamma^2 / ((x - x0)^2 + gamma^2)`; `gamma` is the half width.
pub fn lorentzian_eval(x: f64, a: f64, x0: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    a * g2 / ((x - x0).powi(2) + g2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub amplitude: f64,
    pub center: f64,
    /// Half width at half maximum (Hz), always positive.
    pub gamma: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LorentzianFit {
    pub fn fwhm(&self) -> f64 {
        2.0 * self.gamma
    }

    pub fn eval(&self, x: f64) -> f64 {
        lorentzian_eval(x, self.amplitude, self.center, self.gamma)
    }
}

/// Fit `(A, x0, gamma)` to the samples, starting from `init`.
///
/// Abscissae are centered and scaled internally and the amplitude is scaled
/// by the largest |y|, so the damped normal equations stay well conditioned
/// for GHz-scale frequencies. `gamma` enters squared, so its sign is free
/// during the iteration and the magnitude is reported.
pub fn lorentzian_fit(x: &[f64], y: &[f64], init: (f64, f64, f64)) -> Result<LorentzianFit> {
    if x.len() != y.len() {
        return Err(OdmrError::Fit("x and y differ in length".into()));
    }
    if x.len() < 5 {
        return Err(OdmrError::Fit(format!("need at least 5 samples, got {}", x.len())));
    }
    if !(init.2 > 0.0) || !init.0.is_finite() || !init.1.is_finite() {
        return Err(OdmrError::Fit("initial gamma must be > 0".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(OdmrError::Fit("non-finite samples".into()));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let xm = 0.5 * (lo + hi);
    let xs = 0.5 * (hi - lo);
    if !(xs > 0.0) {
        return Err(OdmrError::Fit("samples do not span an interval".into()));
    }
    let ys = match y.iter().fold(0.0f64, |m, v| m.max(v.abs())) {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let u: Vec<f64> = x.iter().map(|v| (v - xm) / xs).collect();
    let v: Vec<f64> = y.iter().map(|t| t / ys).collect();

    let cost = |p: &Vector3<f64>| -> f64 {
        u.iter().zip(&v).map(|(ui, vi)| (vi - lorentzian_eval(*ui, p[0], p[1], p[2])).powi(2)).sum()
    };

    let mut p = Vector3::new(init.0 / ys, (init.1 - xm) / xs, init.2 / xs);
    let mut c = cost(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (ui, vi) in u.iter().zip(&v) {
            let d = ui - p[1];
            let g2 = p[2] * p[2];
            let den = d * d + g2;
            let model = p[0] * g2 / den;
            let j = Vector3::new(g2 / den, 2.0 * p[0] * g2 * d / (den * den), 2.0 * p[0] * p[2] * d * d / (den * den));
            jtj += j * j.transpose();
            jtr += j * (vi - model);
        }

        // retry with more damping until the cost drops
        let mut accepted = false;
        let mut step_small = false;
        for _ in 0..60 {
            let mut a = jtj;
            for k in 0..3 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            step_small = delta.norm() <= STEP_TOLERANCE * (p.norm() + STEP_TOLERANCE);
            let trial = p + delta;
            let ct = cost(&trial);
            if ct.is_finite() && ct <= c {
                p = trial;
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            if step_small {
                break;
            }
            lambda *= 10.0;
        }
        if step_small || !accepted {
            converged = step_small;
            break;
        }
    }

    let center = xm + p[1] * xs;
    let gamma = p[2].abs() * xs;
    let within = center >= lo && center <= hi;
    Ok(LorentzianFit {
        amplitude: p[0] * ys,
        center,
        gamma,
        residual_norm: c.sqrt() * ys,
        converged: converged && within && gamma > 0.0,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(a: f64, x0: f64, g: f64, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|v| lorentzian_eval(*v, a, x0, g)).collect();
        (x, y)
    }

    #[test]
    fn eval_shape() {
        assert_eq!(lorentzian_eval(3.0, 2.0, 3.0, 0.5), 2.0);
        assert!((lorentzian_eval(3.5, 2.0, 3.0, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recovers_exact_parameters_from_perturbed_start() {
        let (a, x0, g) = (0.02, 2.87e9, 1.5e6);
        let (x, y) = samples(a, x0, g, 2.86e9, 2.88e9, 201);
        for (fa, sx, fg) in [(1.2, 0.2, 0.8), (0.8, -0.2, 1.2), (1.2, -0.2, 1.2), (0.8, 0.2, 0.8)] {
            let fit = lorentzian_fit(&x, &y, (a * fa, x0 + sx * g, g * fg)).unwrap();
            assert!(fit.converged);
            assert!(((fit.amplitude - a) / a).abs() < 1e-8);
            assert!(((fit.center - x0) / x0).abs() < 1e-8);
            assert!(((fit.gamma - g) / g).abs() < 1e-8);
            assert!(fit.iterations <= MAX_ITERATIONS);
        }
    }

    #[test]
    fn negative_gamma_start_region_reports_magnitude() {
        let (x, y) = samples(1.0, 0.0, 2.0, -20.0, 20.0, 101);
        let fit = lorentzian_fit(&x, &y, (0.7, 1.0, 0.1)).unwrap();
        assert!(fit.gamma > 0.0);
        assert!((fit.gamma - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = samples(1.0, 0.0, 1.0, -5.0, 5.0, 4);
        assert!(lorentzian_fit(&x, &y, (1.0, 0.0, 1.0)).is_err());
        let (x, y) = samples(1.0, 0.0, 1.0, -5.0, 5.0, 11);
        assert!(lorentzian_fit(&x, &y, (1.0, 0.0, 0.0)).is_err());
        assert!(lorentzian_fit(&x[..10], &y, (1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn flat_data_fits_to_zero_residual() {
        let x: Vec<f64> = (0..21).map(|i| i as f64).collect();
        let y = vec![0.0; 21];
        let fit = lorentzian_fit(&x, &y, (1.0, 10.0, 2.0)).unwrap();
        assert!(fit.residual_norm < 1e-6);
        assert!(x.iter().all(|v| fit.eval(*v).abs() < 1e-6));
    }
}
