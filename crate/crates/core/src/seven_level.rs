//! Seven-level rate model of the NV center.
//!
//! Levels (0-based here, 1-based in the usual notation):
//! 0..=2 ground triplet (m_s = 0, -1, +1), 3..=5 excited triplet
//! (m_s = 0, -1, +1), 6 the metastable singlet. `k[i][j]` is the rate from
//! level `i` to level `j` in Hz.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{OdmrError, Result};
use crate::physics::{BOHR_MAGNETON, D_ES, D_GS0, PLANCK, SPEED_OF_LIGHT, LASER_WAVELENGTH};

pub type Matrix7 = SMatrix<f64, 7, 7>;
pub type Vector7 = SVector<f64, 7>;

pub const N_LEVELS: usize = 7;
pub const GROUND: [usize; 3] = [0, 1, 2];
pub const EXCITED: [usize; 3] = [3, 4, 5];
pub const METASTABLE: usize = 6;

/// Largest allowed `g mu_B B_perp / (h D_gs)` for the first-order mixing.
pub const MAX_PERTURBATION_RATIO: f64 = 0.1;

/// Zero-field transition rates (Hz). Unlisted transitions are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroFieldRates {
    /// Spin-conserving radiative decay k41 = k52 = k63.
    pub k_r: f64,
    /// Excited m_s = 0 into the singlet.
    pub k47: f64,
    /// Excited m_s = +-1 into the singlet (k57 = k67).
    pub k57: f64,
    /// Singlet into ground m_s = 0.
    pub k71: f64,
    /// Singlet into ground m_s = +-1 (k72 = k73).
    pub k72: f64,
}

impl Default for ZeroFieldRates {
    fn default() -> Self {
        Self {
            k_r: 63.2e6,
            k47: 10.8e6,
            k57: 60.7e6,
            k71: 0.8e6,
            k72: 0.4e6,
        }
    }
}

impl ZeroFieldRates {
    /// Rate matrix including optical pumping `k_ji = beta k_ij` for every
    /// excited -> ground radiative pair.
    pub fn matrix(&self, beta: f64) -> Matrix7 {
        let mut k = Matrix7::zeros();
        for (g, e) in GROUND.iter().zip(EXCITED.iter()) {
            k[(*e, *g)] = self.k_r;
            k[(*g, *e)] = beta * self.k_r;
        }
        k[(3, METASTABLE)] = self.k47;
        k[(4, METASTABLE)] = self.k57;
        k[(5, METASTABLE)] = self.k57;
        k[(METASTABLE, 0)] = self.k71;
        k[(METASTABLE, 1)] = self.k72;
        k[(METASTABLE, 2)] = self.k72;
        k
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_r", self.k_r),
            ("k47", self.k47),
            ("k57", self.k57),
            ("k71", self.k71),
            ("k72", self.k72),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(OdmrError::config(name, "rate must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// First-order mixing coefficients of the field-perturbed states onto the
/// zero-field basis; `alpha[(i, j)] = <j|i'>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMatrix(pub Matrix7);

/// Mixing coefficients with the nominal splittings.
pub fn alpha_matrix(b_par: f64, b_perp: f64, g: f64) -> Result<AlphaMatrix> {
    alpha_matrix_with(b_par, b_perp, g, D_GS0, D_ES)
}

/// Mixing coefficients with explicit ground/excited splittings (Hz), so a
/// temperature-shifted or dephased D can be used.
pub fn alpha_matrix_with(b_par: f64, b_perp: f64, g: f64, d_gs: f64, d_es: f64) -> Result<AlphaMatrix> {
    let mg = BOHR_MAGNETON * g;
    let ratio = (mg * b_perp).abs() / (PLANCK * d_gs);
    if ratio >= MAX_PERTURBATION_RATIO || !ratio.is_finite() {
        return Err(OdmrError::PerturbationInvalid { ratio });
    }
    let mut a = Matrix7::identity();
    if b_perp == 0.0 {
        return Ok(AlphaMatrix(a));
    }
    let coeff = |d: f64, sign: f64| -> Result<f64> {
        let denom = PLANCK * d + sign * mg * b_par;
        if denom.abs() < 1e-6 * PLANCK * d {
            return Err(OdmrError::ResonantDenominator { d_hz: d, gap: denom.abs() });
        }
        Ok(mg * b_perp / (std::f64::consts::SQRT_2 * denom))
    };
    let (g_minus, g_plus) = (coeff(d_gs, -1.0)?, coeff(d_gs, 1.0)?);
    let (e_minus, e_plus) = (coeff(d_es, -1.0)?, coeff(d_es, 1.0)?);
    a[(0, 1)] = g_minus;
    a[(0, 2)] = g_plus;
    a[(1, 0)] = -g_minus;
    a[(2, 0)] = -g_plus;
    a[(3, 4)] = e_minus;
    a[(3, 5)] = e_plus;
    a[(4, 3)] = -e_minus;
    a[(5, 3)] = -e_plus;
    Ok(AlphaMatrix(a))
}

/// Optical pumping factor `beta = sigma I / (geometry k_r h nu)` for a
/// Gaussian beam of power `p_laser` and waist `w0` (peak intensity).
pub fn beta_factor(p_laser: f64, sigma_abs: f64, w0: f64) -> f64 {
    beta_factor_with(p_laser, sigma_abs, w0, ZeroFieldRates::default().k_r, 4.0)
}

pub fn beta_factor_with(p_laser: f64, sigma_abs: f64, w0: f64, k_r: f64, geometry: f64) -> f64 {
    let intensity = 2.0 * p_laser / (std::f64::consts::PI * w0 * w0);
    let photon = PLANCK * SPEED_OF_LIGHT / LASER_WAVELENGTH;
    sigma_abs * intensity / (geometry * k_r * photon)
}

/// Field-mixed rates `k'_ij = sum_pq |a_ip|^2 |a_jq|^2 k_pq`, with pumping
/// folded into the base matrix before mixing.
pub fn mixed_rates(alpha: &AlphaMatrix, k0: &ZeroFieldRates, beta: f64) -> Matrix7 {
    let w = alpha.0.map(|a| a * a);
    w * k0.matrix(beta) * w.transpose()
}

/// Steady-state occupation fractions of the seven levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations(pub Vector7);

impl Populations {
    pub fn sum(&self) -> f64 {
        self.0.sum()
    }
}

/// Rates with microwave transitions 1<->2 and 1<->3 injected symmetrically.
pub fn with_mw_rates(kprime: &Matrix7, t12: f64, t13: f64) -> Matrix7 {
    let mut k = *kprime;
    k[(0, 1)] += t12;
    k[(1, 0)] += t12;
    k[(0, 2)] += t13;
    k[(2, 0)] += t13;
    k
}

/// Solve the balance equations with the last one replaced by normalization.
pub fn steady_state(kprime: &Matrix7, t12: f64, t13: f64) -> Result<Populations> {
    if !(t12 >= 0.0 && t13 >= 0.0 && t12.is_finite() && t13.is_finite()) {
        return Err(OdmrError::InvalidInput(format!("MW rates must be finite and >= 0 (t12 = {t12}, t13 = {t13})")));
    }
    if kprime.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(OdmrError::InvalidInput("rate matrix entries must be finite and >= 0".into()));
    }
    let k = with_mw_rates(kprime, t12, t13);
    let max_rate = k.iter().cloned().fold(0.0, f64::max);
    if max_rate == 0.0 {
        return Err(OdmrError::SingularRates("all rates are zero".into()));
    }

    // work in units of the largest rate to keep the system well scaled
    let mut m = Matrix7::zeros();
    for i in 0..N_LEVELS {
        for j in 0..N_LEVELS {
            if i != j {
                m[(i, j)] = k[(j, i)] / max_rate;
                m[(i, i)] -= k[(i, j)] / max_rate;
            }
        }
    }
    for j in 0..N_LEVELS {
        m[(N_LEVELS - 1, j)] = 1.0;
    }
    let mut b = Vector7::zeros();
    b[N_LEVELS - 1] = 1.0;

    let x = match m.lu().solve(&b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => x,
        _ => {
            // disconnected rate graph: take the minimum-norm consistent solution
            let x = m
                .svd(true, true)
                .solve(&b, 1e-12)
                .map_err(|e| OdmrError::SingularRates(e.to_string()))?;
            if (m * x - b).amax() > 1e-9 {
                return Err(OdmrError::SingularRates("inconsistent balance equations".into()));
            }
            x
        }
    };

    let mut n = x;
    for (i, v) in n.iter_mut().enumerate() {
        if *v < -1e-12 {
            return Err(OdmrError::NegativePopulation { level: i + 1, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total = n.sum();
    n /= total;
    Ok(Populations(n))
}

/// Mean photoluminescence rate `eta sum_{excited i} sum_{ground j} n_i k'_ij`.
pub fn pl_rate(n: &Populations, kprime: &Matrix7, eta: f64) -> f64 {
    let mut r = 0.0;
    for &i in &EXCITED {
        for &j in &GROUND {
            r += n.0[i] * kprime[(i, j)];
        }
    }
    (eta * r).max(0.0)
}
