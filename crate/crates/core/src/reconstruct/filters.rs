//! 1D smoothing filters for spectra.
//!
//! Both filters pad by half-sample symmetric reflection (`d c b a | a b c d
//! | d c b a`) and keep the input length.

use crate::error::{OdmrError, Result};

/// A length-preserving 1D filter.
pub trait Filter1d {
    fn apply(&self, y: &[f64]) -> Vec<f64>;
    fn name(&self) -> &'static str;
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

/// Kernel half-width for a Gaussian of `sigma` samples truncated at 4 sigma.
pub fn gaussian_radius(sigma: f64) -> usize {
    (4.0 * sigma + 0.5) as usize
}

fn gaussian_weights(sigma: f64, radius: usize) -> Vec<f64> {
    let w: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Gaussian smoothing with a kernel truncated at 4 sigma.
pub fn gaussian_filter_1d(y: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 || y.is_empty() {
        return y.to_vec();
    }
    let r = gaussian_radius(sigma);
    let w = gaussian_weights(sigma, r);
    let n = y.len();
    (0..n)
        .map(|i| {
            w.iter()
                .enumerate()
                .map(|(k, wk)| wk * y[reflect(i as isize + k as isize - r as isize, n)])
                .sum()
        })
        .collect()
}

/// Bilateral smoothing. The spatial kernel is the truncated Gaussian of
/// [`gaussian_filter_1d`] further limited to `+-window` samples; each
/// output is renormalized by its own weights.
pub fn bilateral_filter_1d(y: &[f64], sigma_s: f64, sigma_r: f64, window: usize) -> Result<Vec<f64>> {
    if !(sigma_s > 0.0 && sigma_r > 0.0) || window == 0 {
        return Err(OdmrError::InvalidInput("bilateral filter needs sigma_s, sigma_r > 0 and window >= 1".into()));
    }
    let n = y.len();
    let r = gaussian_radius(sigma_s).min(window) as isize;
    let inv_s = 0.5 / (sigma_s * sigma_s);
    let inv_r = 0.5 / (sigma_r * sigma_r);
    Ok((0..n)
        .map(|i| {
            let yi = y[i];
            let (mut acc, mut norm) = (0.0, 0.0);
            for k in -r..=r {
                let yj = y[reflect(i as isize + k, n)];
                let w = (-(k * k) as f64 * inv_s - (yj - yi).powi(2) * inv_r).exp();
                acc += w * yj;
                norm += w;
            }
            acc / norm
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub sigma: f64,
}

impl Filter1d for Gaussian {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        gaussian_filter_1d(y, self.sigma)
    }

    fn name(&self) -> &'static str {
        "gaussian"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bilateral {
    pub sigma_s: f64,
    pub sigma_r: f64,
    pub window: usize,
}

impl Filter1d for Bilateral {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        bilateral_filter_1d(y, self.sigma_s, self.sigma_r, self.window).unwrap_or_else(|_| y.to_vec())
    }

    fn name(&self) -> &'static str {
        "bilateral"
    }
}

/// Root-mean-square difference of two equal-length signals.
pub fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()).max(1) as f64;
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n).sqrt()
}
