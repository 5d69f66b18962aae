//! Peak detection by topographic prominence and per-peak Lorentzian fits.
//!
//! Resonances are maxima of the contrast, so no inversion is needed for
//! spectra produced by the engine. Normalized-PL input (dips as minima) can
//! be handled with [`DetectOptions::invert`].

use serde::{Deserialize, Serialize};

use super::lorentzian::{lorentzian_fit, LorentzianFit};
use crate::engine::Spectrum;
use crate::error::{OdmrError, Result};

/// Number of resonances of a generic field on a four-axis ensemble.
pub const EXPECTED_PEAKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
    pub left_base: usize,
    pub right_base: usize,
    /// Full width at half prominence in abscissa units; zero when the
    /// interpolation failed.
    pub width: f64,
}

/// Local maxima with prominence at least `min_prominence`, left to right.
/// Flat tops report their middle sample.
pub fn find_peaks(x: &[f64], y: &[f64], min_prominence: f64) -> Vec<Peak> {
    let n = y.len();
    let mut out = Vec::new();
    if n < 3 || x.len() != n {
        return out;
    }
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let peak = (i + j) / 2;
                let p = measure(x, y, peak);
                if p.prominence >= min_prominence {
                    out.push(p);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn measure(x: &[f64], y: &[f64], peak: usize) -> Peak {
    let n = y.len();
    let h = y[peak];
    let (mut left_min, mut left_base) = (h, peak);
    let mut k = peak;
    while k > 0 {
        k -= 1;
        if y[k] > h {
            break;
        }
        if y[k] < left_min {
            left_min = y[k];
            left_base = k;
        }
    }
    let (mut right_min, mut right_base) = (h, peak);
    let mut k = peak;
    while k + 1 < n {
        k += 1;
        if y[k] > h {
            break;
        }
        if y[k] < right_min {
            right_min = y[k];
            right_base = k;
        }
    }
    let prominence = h - left_min.max(right_min);
    let level = h - 0.5 * prominence;

    let mut width = 0.0;
    let mut l = peak;
    while l > left_base && y[l] > level {
        l -= 1;
    }
    let mut r = peak;
    while r < right_base && y[r] > level {
        r += 1;
    }
    if l < peak && r > peak {
        let interp = |a: usize, b: usize| x[a] + (level - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
        let xl = if y[l + 1] != y[l] { interp(l, l + 1) } else { x[l] };
        let xr = if y[r - 1] != y[r] { interp(r - 1, r) } else { x[r] };
        width = (xr - xl).max(0.0);
    }
    Peak { index: peak, height: h, prominence, left_base, right_base, width }
}

/// Peak search and fit settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectOptions {
    /// Minimum prominence in contrast units.
    pub prominence: f64,
    /// Fit window half-size in estimated half widths.
    pub window_halfwidths: f64,
    /// Treat the input as normalized PL and use `1 - y`.
    pub invert: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self { prominence: 1e-3, window_halfwidths: 3.0, invert: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedPeak {
    pub peak: Peak,
    pub fit: LorentzianFit,
    /// Inclusive sample range used for the fit.
    pub window: (usize, usize),
    /// The window reaches past a neighbouring peak's center.
    pub overlaps_neighbour: bool,
}

/// Detect peaks and fit each with a Lorentzian on a window of
/// `window_halfwidths` estimated half widths around it.
pub fn detect_and_fit(x: &[f64], y: &[f64], opts: &DetectOptions) -> Result<Vec<FittedPeak>> {
    if x.len() != y.len() {
        return Err(OdmrError::InvalidInput("x and y differ in length".into()));
    }
    let data: Vec<f64> = if opts.invert { y.iter().map(|v| 1.0 - v).collect() } else { y.to_vec() };
    let peaks = find_peaks(x, &data, opts.prominence);
    let n = x.len();
    let range = x.last().copied().unwrap_or(0.0) - x.first().copied().unwrap_or(0.0);
    let step = if n > 1 { range / (n - 1) as f64 } else { 0.0 };

    let mut out = Vec::with_capacity(peaks.len());
    for (k, p) in peaks.iter().enumerate() {
        let hw = if p.width > 0.0 { 0.5 * p.width } else { range / 200.0 };
        let reach = (opts.window_halfwidths * hw / step).ceil().max(2.0) as usize;
        let lo = p.index.saturating_sub(reach);
        let hi = (p.index + reach).min(n - 1);
        let (lo, hi) = if hi - lo + 1 < 5 {
            (lo.min(n.saturating_sub(5)), (lo + 4).min(n - 1).max(hi))
        } else {
            (lo, hi)
        };
        let overlaps = (k > 0 && peaks[k - 1].index >= lo) || (k + 1 < peaks.len() && peaks[k + 1].index <= hi);
        let fit = lorentzian_fit(&x[lo..=hi], &data[lo..=hi], (p.height, x[p.index], hw))?;
        out.push(FittedPeak { peak: *p, fit, window: (lo, hi), overlaps_neighbour: overlaps });
    }
    Ok(out)
}

/// The eight fitted resonance centers of a spectrum, ascending.
pub fn find_and_fit_peaks(spectrum: &Spectrum, opts: &DetectOptions) -> Result<[f64; EXPECTED_PEAKS]> {
    spectrum.validate()?;
    let fits = detect_and_fit(&spectrum.freqs, &spectrum.contrast, opts)?;
    if fits.len() != EXPECTED_PEAKS {
        return Err(OdmrError::PeakCount { expected: EXPECTED_PEAKS, found: fits.len() });
    }
    if let Some(bad) = fits.iter().find(|f| !f.fit.converged) {
        return Err(OdmrError::Fit(format!("peak at {:.6e} Hz did not converge", bad.fit.center)));
    }
    let mut centers = [0.0; EXPECTED_PEAKS];
    for (c, f) in centers.iter_mut().zip(&fits) {
        *c = f.fit.center;
    }
    centers.sort_by(f64::total_cmp);
    Ok(centers)
}
