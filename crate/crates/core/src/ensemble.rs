//! Four-axis NV geometry: lab-to-NV frame rotations, the VN partner flip and
//! weighted ensemble contrast.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{OdmrError, Result};
use crate::physics::FieldVector;

const A: f64 = 0.816_496_580_927_726; // sqrt(2/3)
const B: f64 = 0.577_350_269_189_625_8; // sqrt(1/3)

/// NV axis unit vectors in the lab frame, NV1..NV4.
pub fn nv_axes() -> [FieldVector; 4] {
    [
        FieldVector::new(A, 0.0, B),
        FieldVector::new(0.0, -A, -B),
        FieldVector::new(0.0, A, -B),
        FieldVector::new(-A, 0.0, B),
    ]
}

/// Lab-to-NV-frame rotations; row 3 of each is the NV axis.
pub fn nv_rotations() -> [Matrix3<f64>; 4] {
    [
        Matrix3::new(0.0, 1.0, 0.0, -B, 0.0, A, A, 0.0, B),
        Matrix3::new(1.0, 0.0, 0.0, 0.0, B, -A, 0.0, -A, -B),
        Matrix3::new(1.0, 0.0, 0.0, 0.0, -B, -A, 0.0, A, -B),
        Matrix3::new(0.0, 1.0, 0.0, B, 0.0, A, -A, 0.0, B),
    ]
}

/// Number of orientation branches: 4 NV axes and their 4 VN partners.
pub const N_BRANCHES: usize = 8;

/// Branch `b` is axis `b / 2`, with `b % 2 == 1` the VN partner.
pub fn branch_axis(branch: usize) -> (usize, bool) {
    (branch / 2, branch % 2 == 1)
}

/// The four frames plus the population weight of each of the 8 branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvFrameSet {
    pub axes: [FieldVector; 4],
    pub rotations: [Matrix3<f64>; 4],
    /// Branch weights, indexed as in [`branch_axis`].
    pub weights: [f64; N_BRANCHES],
}

impl Default for NvFrameSet {
    fn default() -> Self {
        Self {
            axes: nv_axes(),
            rotations: nv_rotations(),
            weights: [1.0 / N_BRANCHES as f64; N_BRANCHES],
        }
    }
}

impl NvFrameSet {
    pub fn with_weights(weights: [f64; N_BRANCHES]) -> Result<Self> {
        let w = normalize_weights(weights)?;
        Ok(Self { weights: w, ..Self::default() })
    }

    /// Static field seen by branch `b` in its own frame.
    pub fn branch_field(&self, b_lab: &FieldVector, branch: usize) -> FieldVector {
        let (axis, vn) = branch_axis(branch);
        let v = self.rotations[axis] * b_lab;
        if vn {
            vn_flip(&v)
        } else {
            v
        }
    }
}

/// Normalize branch weights to sum 1. All must be non-negative and finite.
pub fn normalize_weights(weights: [f64; N_BRANCHES]) -> Result<[f64; N_BRANCHES]> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(OdmrError::config("weights", "orientation weights must be finite and >= 0"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(OdmrError::config("weights", "orientation weights sum to zero"));
    }
    Ok(weights.map(|w| w / total))
}

/// Weights for a sample where `fraction` of the NVs sit on two preferred
/// axes (split evenly, NV and VN alike) and the rest on the other two.
pub fn preferential_weights(preferred: [usize; 2], fraction: f64) -> [f64; N_BRANCHES] {
    let mut w = [0.0; N_BRANCHES];
    for (b, wb) in w.iter_mut().enumerate() {
        let (axis, _) = branch_axis(b);
        *wb = if preferred.contains(&axis) { fraction / 4.0 } else { (1.0 - fraction) / 4.0 };
    }
    w
}

pub fn transform_all_frames(b_lab: &FieldVector) -> [FieldVector; 4] {
    nv_rotations().map(|r| r * b_lab)
}

pub fn vn_flip(b: &FieldVector) -> FieldVector {
    FieldVector::new(b.x, b.y, -b.z)
}

/// `C(nu) = (sum w PL0 - sum w PL(nu)) / sum w PL0`.
pub fn ensemble_contrast(pl0: &[f64], pl_nu: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if pl0.len() != pl_nu.len() || pl0.len() != weights.len() {
        return Err(OdmrError::InvalidInput("orientation count mismatch".into()));
    }
    let n_freq = pl_nu.first().map(|v| v.len()).unwrap_or(0);
    if pl_nu.iter().any(|v| v.len() != n_freq) {
        return Err(OdmrError::InvalidInput("ragged PL array".into()));
    }
    let base: f64 = pl0.iter().zip(weights).map(|(p, w)| p * w).sum();
    if !(base > 0.0) {
        return Err(OdmrError::ZeroBaseline);
    }
    Ok((0..n_freq)
        .map(|k| {
            let tot: f64 = pl_nu.iter().zip(weights).map(|(v, w)| v[k] * w).sum();
            (base - tot) / base
        })
        .collect())
}
