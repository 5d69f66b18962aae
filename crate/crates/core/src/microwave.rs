//! Microwave drive: interaction Hamiltonian, golden-rule transition rates
//! with a Lorentzian density of states, and the power-broadened linewidth.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::physics::{
    gamma_nv, zeeman_term, EigenSystem, FieldVector, SpinMatrix, G_NV, HBAR, LASER_WAVELENGTH, PLANCK,
    SPEED_OF_LIGHT,
};

/// Polarization rate at optical saturation (Hz).
pub const GAMMA_P_INF: f64 = 5e6;
/// Spin relaxation rate at optical saturation, identified with k_r (Hz).
pub const GAMMA_C_INF: f64 = 63.2e6;
/// Saturation excitation rate beta_sat * k_r (Hz).
pub const W_P_SAT: f64 = 1.9e7;

/// Calibration of the golden-rule rate: on resonance the rate becomes
/// `Omega^2 / (2 Gamma_2)` with `Omega = |V_fi| / hbar` and
/// `Gamma_2 = pi * FWHM`, the incoherent limit of a driven two-level system.
pub const DEFAULT_RATE_CALIBRATION: f64 = 1.0 / (4.0 * PI);

/// Antenna constant giving a 1 MHz Rabi frequency at 1 W.
pub fn default_antenna_constant() -> f64 {
    1e6 / gamma_nv(G_NV)
}

/// Microwave source: power, antenna conversion and propagation direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MwDrive {
    /// Delivered power (W).
    pub p_mw: f64,
    /// Field amplitude per square-root watt (T / sqrt(W)).
    pub k_ant: f64,
    /// Polar and azimuthal angle of the MW field vector in the lab frame.
    pub theta: f64,
    pub phi: f64,
}

impl MwDrive {
    pub fn b_mw(&self) -> f64 {
        mw_field_amplitude(self.p_mw, self.k_ant)
    }

    /// MW field amplitude vector in the lab frame (T).
    pub fn field_lab(&self) -> FieldVector {
        mw_field_vector(self.b_mw(), self.theta, self.phi)
    }
}

/// `B_mw = k_ant sqrt(P)`; negative powers give zero field.
pub fn mw_field_amplitude(p_mw: f64, k_ant: f64) -> f64 {
    k_ant * p_mw.max(0.0).sqrt()
}

pub fn mw_field_vector(b_mw: f64, theta: f64, phi: f64) -> FieldVector {
    FieldVector::new(
        b_mw * theta.sin() * phi.cos(),
        b_mw * theta.sin() * phi.sin(),
        b_mw * theta.cos(),
    )
}

/// Widths entering the linewidth model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthInputs {
    /// Laser saturation parameter P / P_sat.
    pub s: f64,
    /// Rabi frequency (Hz).
    pub omega_r: f64,
    pub gamma_p_inf: f64,
    pub gamma_c_inf: f64,
    pub w_p_sat: f64,
}

/// `mu_B g B_mw . S`, in joules.
pub fn interaction_hamiltonian(b_mw: &FieldVector, g: f64) -> SpinMatrix {
    zeeman_term(b_mw, g)
}

/// Squared matrix elements `|<2|H|1>|^2` and `|<3|H|1>|^2` (J^2).
pub fn transition_strengths(eig: &EigenSystem, h_int: &SpinMatrix) -> (f64, f64) {
    let hv1 = h_int * eig.vectors[0];
    let t12 = eig.vectors[1].dotc(&hv1).norm_sqr();
    let t13 = eig.vectors[2].dotc(&hv1).norm_sqr();
    (t12, t13)
}

/// Lorentzian density of states per Hz, peak `2 / delta_nu` at `nu_f`.
pub fn lorentzian_dos(nu: f64, nu_f: f64, delta_nu: f64) -> f64 {
    let hw = 0.5 * delta_nu;
    hw / ((nu - nu_f).powi(2) + hw * hw)
}

/// Golden-rule rate `cal * (2 pi / hbar) |V|^2 rho(nu) / h` in Hz, where
/// `rho` is the per-Hz density from [`lorentzian_dos`].
pub fn mw_transition_rate(t_raw: f64, rho: f64, cal: f64) -> f64 {
    cal * (2.0 * PI / HBAR) * t_raw * rho / PLANCK
}

/// Laser saturation parameter and saturation power `(s, P_sat)`.
pub fn saturation(p_laser: f64, sigma_abs: f64, w0: f64) -> (f64, f64) {
    saturation_with(p_laser, sigma_abs, w0, W_P_SAT)
}

pub fn saturation_with(p_laser: f64, sigma_abs: f64, w0: f64, w_p_sat: f64) -> (f64, f64) {
    let i_sat = saturation_intensity(sigma_abs, w_p_sat);
    let p_sat = PI * w0 * w0 / 2.0 * i_sat;
    (p_laser / p_sat, p_sat)
}

/// `I_sat = W_p_sat c h / (sigma lambda)` in W/m^2.
pub fn saturation_intensity(sigma_abs: f64, w_p_sat: f64) -> f64 {
    w_p_sat * SPEED_OF_LIGHT * PLANCK / (sigma_abs * LASER_WAVELENGTH)
}

/// Rabi frequency `mu_B g B_mw / h` in Hz.
pub fn rabi_frequency(b_mw: f64, g: f64) -> f64 {
    gamma_nv(g) * b_mw
}

/// Power-broadened FWHM (Hz). Zero for zero drive; see
/// [`linewidth_with_floor`] for the floored variant the simulator uses.
pub fn linewidth(s: f64, omega_r: f64, gamma_c_inf: f64, gamma_p_inf: f64) -> f64 {
    let opt = s / (1.0 + s);
    gamma_c_inf / (2.0 * PI) * (opt * opt + omega_r * omega_r / (gamma_p_inf * gamma_c_inf)).sqrt()
}

/// Like [`linewidth`] but returns `floor` when there is no drive at all.
pub fn linewidth_with_floor(s: f64, omega_r: f64, gamma_c_inf: f64, gamma_p_inf: f64, floor: f64) -> f64 {
    if s <= 0.0 && omega_r <= 0.0 {
        return floor;
    }
    linewidth(s, omega_r, gamma_c_inf, gamma_p_inf)
}

/// Dephasing-limited width `1 / (pi T2*)`.
pub fn dephasing_floor(t2_star: f64) -> f64 {
    1.0 / (PI * t2_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{eigensystem, ground_hamiltonian, BOHR_MAGNETON, D_GS0};

    #[test]
    fn interaction_matrix_elements() {
        let zero = interaction_hamiltonian(&FieldVector::zeros(), G_NV);
        assert_eq!(zero, SpinMatrix::zeros());

        let es = eigensystem(&ground_hamiltonian(&FieldVector::zeros(), D_GS0, G_NV));
        let hz = interaction_hamiltonian(&FieldVector::new(0.0, 0.0, 1e-4), G_NV);
        assert_eq!(transition_strengths(&es, &hz), (0.0, 0.0));

        let b = 1e-4;
        let hx = interaction_hamiltonian(&FieldVector::new(b, 0.0, 0.0), G_NV);
        let (t12, t13) = transition_strengths(&es, &hx);
        let expect = (BOHR_MAGNETON * G_NV * b).powi(2) / 2.0;
        assert!((t12 - expect).abs() < 1e-12 * expect);
        assert!((t13 - t12).abs() < 1e-12 * expect);
    }

    #[test]
    fn axial_static_field_strengths_match_dense_elements() {
        let es = eigensystem(&ground_hamiltonian(&FieldVector::new(0.0, 0.0, 2e-3), D_GS0, G_NV));
        let h = interaction_hamiltonian(&FieldVector::new(1e-5, 0.0, 0.0), G_NV);
        let (t12, t13) = transition_strengths(&es, &h);
        // dense: eigenvectors are basis states; element is h[(minus, zero)]
        use crate::physics::{IDX_MINUS, IDX_PLUS, IDX_ZERO};
        assert!((t12 - h[(IDX_MINUS, IDX_ZERO)].norm_sqr()).abs() < 1e-12 * t12);
        assert!((t13 - h[(IDX_PLUS, IDX_ZERO)].norm_sqr()).abs() < 1e-12 * t13);
    }

    #[test]
    fn lorentzian_shape() {
        let dnu = 3e6;
        assert!((lorentzian_dos(2.87e9, 2.87e9, dnu) - 2.0 / dnu).abs() < 1e-20);
        let half = lorentzian_dos(2.87e9 + dnu / 2.0, 2.87e9, dnu);
        assert!((half - 1.0 / dnu).abs() < 1e-18);
        // oracle: trapezoid quadrature of the substituted integrand over (-pi/2, pi/2)
        let n = 200_000;
        let mut sum = 0.0;
        for i in 0..=n {
            let t = -PI / 2.0 + PI * i as f64 / n as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let c = t.cos();
            if c.abs() < 1e-300 {
                continue;
            }
            let x = (dnu / 2.0) * t.tan();
            sum += w * lorentzian_dos(x, 0.0, dnu) * (dnu / 2.0) / (c * c);
        }
        let integral = sum * PI / n as f64;
        assert!((integral - PI).abs() < 1e-6);
    }

    #[test]
    fn transition_rate_properties() {
        assert_eq!(mw_transition_rate(0.0, 1.0, DEFAULT_RATE_CALIBRATION), 0.0);
        let dnu = 1e6;
        let t = 1e-50;
        let on = mw_transition_rate(t, lorentzian_dos(0.0, 0.0, dnu), DEFAULT_RATE_CALIBRATION);
        let off = mw_transition_rate(t, lorentzian_dos(dnu / 2.0, 0.0, dnu), DEFAULT_RATE_CALIBRATION);
        assert!((on / off - 2.0).abs() < 1e-12);

        // doubling power doubles the squared element and the rate
        let es = eigensystem(&ground_hamiltonian(&FieldVector::zeros(), D_GS0, G_NV));
        let k = default_antenna_constant();
        let rate = |p: f64| {
            let h = interaction_hamiltonian(&mw_field_vector(mw_field_amplitude(p, k), PI / 2.0, 0.0), G_NV);
            let (t12, _) = transition_strengths(&es, &h);
            mw_transition_rate(t12, 2.0 / dnu, DEFAULT_RATE_CALIBRATION)
        };
        assert!((rate(2.0) / rate(1.0) - 2.0).abs() < 1e-12);

        // calibration: on resonance the rate is Omega^2/(2 Gamma_2)
        let b = mw_field_amplitude(1.0, k);
        let v = BOHR_MAGNETON * G_NV * b / std::f64::consts::SQRT_2;
        let omega = v / HBAR;
        let gamma2 = PI * dnu;
        assert!((rate(1.0) - omega * omega / (2.0 * gamma2)).abs() < 1e-9 * rate(1.0));
    }

    #[test]
    fn saturation_values() {
        let i_sat = saturation_intensity(9e-21, W_P_SAT);
        // oracle: direct arithmetic
        let expect = 1.9e7 * 299_792_458.0 * 6.626_070_15e-34 / (9e-21 * 532e-9);
        assert!((i_sat - expect).abs() < 1e-6 * expect);
        assert!((i_sat - 7.88e8).abs() < 0.01e8);
        let (s, p_sat) = saturation(1.0, 9e-21, 1e-5);
        assert!((p_sat - 0.124).abs() < 0.001);
        assert!((s - 1.0 / p_sat).abs() < 1e-12);
        let (s1, _) = saturation(p_sat, 9e-21, 1e-5);
        assert!((s1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rabi_values() {
        assert_eq!(rabi_frequency(0.0, G_NV), 0.0);
        let r = rabi_frequency(1e-4, G_NV);
        assert!((r - gamma_nv(2.0028) * 1e-4).abs() < 1e-6);
        assert!((r - 2.80e6).abs() < 0.01e6);
        assert!((rabi_frequency(2e-4, G_NV) - 2.0 * r).abs() < 1e-6);
        let k = default_antenna_constant();
        assert!((rabi_frequency(mw_field_amplitude(1.0, k), G_NV) - 1e6).abs() < 1e-6);
    }

    #[test]
    fn linewidth_values() {
        let lim = linewidth(1e12, 0.0, GAMMA_C_INF, GAMMA_P_INF);
        assert!((lim - 63.2e6 / (2.0 * PI)).abs() < 1.0);
        assert!((lim - 10.06e6).abs() < 0.01e6);
        let v = linewidth(1.0, 1e6, GAMMA_C_INF, GAMMA_P_INF);
        let expect = 63.2e6 / (2.0 * PI) * (0.25f64 + 1e12 / (5e6 * 63.2e6)).sqrt();
        assert!((v - expect).abs() < 1e-6);
        assert!((v - 5.06e6).abs() < 0.01e6);
        assert!(linewidth(1.1, 1e6, GAMMA_C_INF, GAMMA_P_INF) > v);
        assert!(linewidth(1.0, 1.1e6, GAMMA_C_INF, GAMMA_P_INF) > v);
        assert_eq!(linewidth_with_floor(0.0, 0.0, GAMMA_C_INF, GAMMA_P_INF, 1.0 / (PI * 0.5e-6)), dephasing_floor(0.5e-6));
    }
}
