//! Field vector from eight resonance centers: outermost-first pairing,
//! signed axis projections and the least-squares solve over four axes.

use nalgebra::{Matrix3, Matrix4x3, SMatrix, SVector, Vector4};
use serde::{Deserialize, Serialize};

use super::peaks::{find_and_fit_peaks, DetectOptions};
use crate::engine::{simulate_spectrum, ApparatusConfig, SweepGrid};
use crate::ensemble::{nv_axes, nv_rotations};
use crate::error::{OdmrError, Result};
use crate::noise::{NoiseConfig, RandomSource};
use crate::physics::{eigensystem, gamma_nv, ground_hamiltonian, FieldVector};

/// Which axis each resonance pair belongs to and the sign of its
/// projection. Pair `k` is `(f_{k+1}, f_{8-k})` after sorting, so pair 0 has
/// the largest splitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAssignment {
    /// Axis index (0-based) of pair `k`.
    pub axes: [usize; 4],
    pub signs: [f64; 4],
}

impl PairAssignment {
    /// Pairs in the interleaved axis order 1, 2, 4, 3.
    pub fn printed(signs: [f64; 4]) -> Self {
        Self { axes: [0, 1, 3, 2], signs }
    }

    /// Pairs in axis order 1, 2, 3, 4.
    pub fn natural(signs: [f64; 4]) -> Self {
        Self { axes: [0, 1, 2, 3], signs }
    }

    /// Axes ranked by the bias field's |projection|, signs from the bias.
    pub fn from_bias(bias: &FieldVector) -> Result<Self> {
        let proj = nv_axes().map(|n| n.dot(bias));
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| proj[b].abs().total_cmp(&proj[a].abs()));
        for w in order.windows(2) {
            let (a, b) = (proj[w[0]].abs(), proj[w[1]].abs());
            if a - b <= 1e-9 * a.max(f64::MIN_POSITIVE) {
                return Err(OdmrError::Pairing(format!(
                    "bias projections on axes {} and {} are equal ({a:.3e} T)",
                    w[0] + 1,
                    w[1] + 1
                )));
            }
        }
        if proj[order[3]] == 0.0 {
            return Err(OdmrError::Pairing(format!("bias has no projection on axis {}", order[3] + 1)));
        }
        Ok(Self { axes: order, signs: order.map(|a| proj[a].signum()) })
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 4];
        for &a in &self.axes {
            if a > 3 || seen[a] {
                return Err(OdmrError::Pairing(format!("axes {:?} is not a permutation of 0..4", self.axes)));
            }
            seen[a] = true;
        }
        if self.signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(OdmrError::Pairing("signs must be +1 or -1".into()));
        }
        Ok(())
    }
}

/// Axis unit vectors as rows, in the order the projections are stacked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMatrix {
    pub n: Matrix4x3<f64>,
    pub order: [usize; 4],
}

impl AxisMatrix {
    pub fn new(order: [usize; 4]) -> Self {
        let axes = nv_axes();
        let mut n = Matrix4x3::zeros();
        for (r, &a) in order.iter().enumerate() {
            n.set_row(r, &axes[a].transpose());
        }
        Self { n, order }
    }

    pub fn printed() -> Self {
        Self::new([0, 1, 3, 2])
    }

    pub fn rank(&self) -> usize {
        self.n.rank(1e-12)
    }

    /// `(N^T N)^{-1} N^T b` and the residual `N B - b`.
    pub fn solve(&self, b: &Vector4<f64>) -> Result<(FieldVector, Vector4<f64>)> {
        let nt = self.n.transpose();
        let normal: Matrix3<f64> = nt * self.n;
        let sv = normal.singular_values();
        if sv.min() <= 1e-12 * sv.max() {
            return Err(OdmrError::RankDeficient);
        }
        let inv = normal.try_inverse().ok_or(OdmrError::RankDeficient)?;
        let field = inv * (nt * b);
        Ok((field, self.n * field - b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// Recovered field with the bias removed (T).
    pub b_actual: FieldVector,
    /// Least-squares field including the bias (T).
    pub b_measured: FieldVector,
    /// Signed projections on axes 1..4 (T).
    pub projections: [f64; 4],
    pub dip_centers: [f64; 8],
    /// `N B - b` per row, in the solve order (T).
    pub residuals: [f64; 4],
    pub assignment: PairAssignment,
    /// Zero-field splitting from the exact refinement (Hz); absent for the
    /// linear solve.
    #[serde(default)]
    pub zfs: Option<f64>,
}

/// Reconstruct with the printed pairing and axis order.
pub fn reconstruct_field(
    centers: &[f64; 8],
    signs: [f64; 4],
    bias: &FieldVector,
    gamma_nv: f64,
) -> Result<ReconstructionResult> {
    reconstruct_field_with(centers, &PairAssignment::printed(signs), bias, gamma_nv)
}

pub fn reconstruct_field_with(
    centers: &[f64; 8],
    assignment: &PairAssignment,
    bias: &FieldVector,
    gamma_nv: f64,
) -> Result<ReconstructionResult> {
    assignment.validate()?;
    if !(gamma_nv > 0.0) {
        return Err(OdmrError::InvalidInput("gyromagnetic ratio must be > 0".into()));
    }
    if centers.iter().any(|c| !c.is_finite()) || centers.windows(2).any(|w| w[1] < w[0]) {
        return Err(OdmrError::InvalidInput("centers must be finite and sorted ascending".into()));
    }
    let mut b = Vector4::zeros();
    let mut projections = [0.0; 4];
    for k in 0..4 {
        let split = centers[7 - k] - centers[k];
        if !(split > 0.0) {
            return Err(OdmrError::Pairing(format!("pair {} has zero splitting", k + 1)));
        }
        let p = assignment.signs[k] * split / (2.0 * gamma_nv);
        b[k] = p;
        projections[assignment.axes[k]] = p;
    }
    let (b_measured, resid) = AxisMatrix::new(assignment.axes).solve(&b)?;
    Ok(ReconstructionResult {
        b_actual: b_measured - bias,
        b_measured,
        projections,
        dip_centers: *centers,
        residuals: [resid[0], resid[1], resid[2], resid[3]],
        assignment: *assignment,
        zfs: None,
    })
}

/// Exact resonances of the four axes for a total field, as (lower, upper)
/// per pair in the assignment order.
fn exact_centers(b: &FieldVector, d: f64, g: f64, axes: &[usize; 4]) -> SVector<f64, 8> {
    let rot = nv_rotations();
    let mut out = SVector::<f64, 8>::zeros();
    for (k, &a) in axes.iter().enumerate() {
        let eig = eigensystem(&ground_hamiltonian(&(rot[a] * b), d, g));
        let (lo, hi) = (eig.nu12().min(eig.nu13()), eig.nu12().max(eig.nu13()));
        out[2 * k] = lo;
        out[2 * k + 1] = hi;
    }
    out
}

pub const REFINE_MAX_ITERATIONS: usize = 20;

/// Refine a linear reconstruction against the full spin Hamiltonian.
///
/// Fits the total field and D to all eight centers by Gauss-Newton,
/// starting from the linear solution and the mean center. Removes the
/// second-order shifts that transverse bias components put on the
/// splittings; the pairing of `linear` is kept.
pub fn refine_exact(linear: &ReconstructionResult, bias: &FieldVector, g: f64) -> Result<ReconstructionResult> {
    let c = &linear.dip_centers;
    let axes = linear.assignment.axes;
    let mut target = SVector::<f64, 8>::zeros();
    for k in 0..4 {
        target[2 * k] = c[k];
        target[2 * k + 1] = c[7 - k];
    }
    // unknowns scaled to O(1): field in units of 1 uT, D in units of 1 kHz
    let (bs, ds) = (1e-6, 1e3);
    let unpack = |p: &SVector<f64, 4>| (FieldVector::new(p[0], p[1], p[2]) * bs, p[3] * ds);
    let mut p = SVector::<f64, 4>::new(
        linear.b_measured.x / bs,
        linear.b_measured.y / bs,
        linear.b_measured.z / bs,
        c.iter().sum::<f64>() / 8.0 / ds,
    );
    let resid = |p: &SVector<f64, 4>| {
        let (b, d) = unpack(p);
        exact_centers(&b, d, g, &axes) - target
    };
    let scale = gamma_nv(g) * bs;
    let mut r = resid(&p);
    for _ in 0..REFINE_MAX_ITERATIONS {
        let mut jac = SMatrix::<f64, 8, 4>::zeros();
        for j in 0..4 {
            let h = 1e-3;
            let (mut hi, mut lo) = (p, p);
            hi[j] += h;
            lo[j] -= h;
            jac.set_column(j, &((resid(&hi) - resid(&lo)) / (2.0 * h)));
        }
        let step = jac
            .svd(true, true)
            .solve(&(-r), 1e-12)
            .map_err(|e| OdmrError::Fit(format!("exact refinement: {e}")))?;
        let next = p + step;
        let rn = resid(&next);
        if !(rn.norm() <= r.norm()) {
            break;
        }
        p = next;
        r = rn;
        if step.norm() < 1e-9 {
            break;
        }
    }
    if !(r.amax() < 1e3 * scale) {
        return Err(OdmrError::Fit(format!("exact refinement left a {:.3e} Hz residual", r.amax())));
    }
    let (b, d) = unpack(&p);
    let n = nv_axes();
    let mut out = linear.clone();
    out.b_measured = b;
    out.b_actual = b - bias;
    out.projections = [0, 1, 2, 3].map(|a| n[a].dot(&b));
    for k in 0..4 {
        out.residuals[k] = 0.5 * (r[2 * k + 1] - r[2 * k]) / gamma_nv(g);
    }
    out.zfs = Some(d);
    Ok(out)
}

/// Pair assignment checked against a noiseless bias-only spectrum: the
/// measured pair splittings must follow the ranking of the known bias
/// projections, each within `rel_tol` of `2 gamma |p|`.
pub fn bias_pairing(
    bias: &FieldVector,
    apparatus: &ApparatusConfig,
    sweep: &SweepGrid,
    detect: &DetectOptions,
    gamma_nv: f64,
    rel_tol: f64,
) -> Result<PairAssignment> {
    let assignment = PairAssignment::from_bias(bias)?;
    let s = simulate_spectrum(bias, apparatus, &NoiseConfig::disabled(), sweep, RandomSource::new(0))?;
    let centers = find_and_fit_peaks(&s, detect)?;
    let axes = nv_axes();
    for k in 0..4 {
        let measured = centers[7 - k] - centers[k];
        let expected = 2.0 * gamma_nv * axes[assignment.axes[k]].dot(bias).abs();
        if (measured - expected).abs() > rel_tol * expected {
            return Err(OdmrError::Pairing(format!(
                "pair {} splitting {measured:.6e} Hz does not match axis {} ({expected:.6e} Hz)",
                k + 1,
                assignment.axes[k] + 1
            )));
        }
    }
    Ok(assignment)
}

/// First-order resonance centers of a field: `D +- gamma |n_i . B|`,
/// sorted. Exact inverse of [`reconstruct_field_with`] for a matching
/// assignment.
pub fn first_order_centers(b: &FieldVector, d: f64, gamma_nv: f64) -> [f64; 8] {
    let mut c = [0.0; 8];
    for (i, n) in nv_axes().iter().enumerate() {
        let p = gamma_nv * n.dot(b).abs();
        c[2 * i] = d - p;
        c[2 * i + 1] = d + p;
    }
    c.sort_by(f64::total_cmp);
    c
}
