//! Inverse pipeline: denoising, peak detection, Lorentzian fits and the
//! vector field solve.

pub mod field;
pub mod filters;
pub mod lorentzian;
pub mod peaks;

pub use field::{
    bias_pairing, first_order_centers, reconstruct_field, refine_exact, reconstruct_field_with, AxisMatrix, PairAssignment,
    ReconstructionResult,
};
pub use filters::{bilateral_filter_1d, gaussian_filter_1d, Filter1d};
pub use lorentzian::{lorentzian_eval, lorentzian_fit, LorentzianFit};
pub use peaks::{detect_and_fit, find_and_fit_peaks, find_peaks, DetectOptions, FittedPeak, Peak};

use crate::engine::{ApparatusConfig, Spectrum};
use crate::error::Result;
use crate::physics::{gamma_nv, FieldVector};

/// Fit the eight resonances of `spectrum` and solve for the field.
pub fn reconstruct_spectrum(
    spectrum: &Spectrum,
    assignment: &PairAssignment,
    bias: &FieldVector,
    g: f64,
    detect: &DetectOptions,
) -> Result<ReconstructionResult> {
    let centers = find_and_fit_peaks(spectrum, detect)?;
    reconstruct_field_with(&centers, assignment, bias, gamma_nv(g))
}

/// Rough resonance FWHM for an apparatus, used to size smoothing windows.
pub fn nominal_linewidth(app: &ApparatusConfig) -> f64 {
    app.linewidth(app.p_laser, app.p_mw, crate::physics::G_NV, app.t2_star)
}
