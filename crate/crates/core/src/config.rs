//! TOML run configuration.
//!
//! Every section is optional and falls back to the simulation defaults.
//! Unknown keys are rejected. Units are SI unless the key says otherwise
//! (`p_mw_dbm`, `mw_dbm`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{ApparatusConfig, SweepGrid, WidefieldGrid};
use crate::ensemble::N_BRANCHES;
use crate::error::{OdmrError, Result};
use crate::noise::NoiseConfig;
use crate::optimize::{dbm_to_watts, FomSettings};
use crate::physics::{FieldVector, PhononModel};
use crate::reconstruct::{DetectOptions, PairAssignment};
use crate::seven_level::ZeroFieldRates;

/// Allowed microwave power range (dBm).
pub const MW_DBM_RANGE: (f64, f64) = (5.0, 50.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    /// Uniform lab-frame field (T).
    pub b: [f64; 3],
    /// Field gradient along x and y (T/m), used by wide-field runs.
    pub gradient_x: [f64; 3],
    pub gradient_y: [f64; 3],
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { b: [0.0; 3], gradient_x: [0.0; 3], gradient_y: [0.0; 3] }
    }
}

impl FieldSection {
    pub fn uniform(&self) -> FieldVector {
        FieldVector::from(self.b)
    }

    /// Field at sample position `(x, y)` (m).
    pub fn at(&self, x: f64, y: f64) -> FieldVector {
        self.uniform() + FieldVector::from(self.gradient_x) * x + FieldVector::from(self.gradient_y) * y
    }
}

/// Apparatus inputs as written in a config file; MW power is in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApparatusSection {
    /// Photon collection efficiency.
    pub eta: f64,
    /// Laser power (W).
    pub p_laser: f64,
    /// Absorption cross-section (m^2).
    pub sigma_abs: f64,
    /// Beam waist (m).
    pub beam_waist: f64,
    /// Microwave power (dBm), 5 to 50.
    pub p_mw_dbm: f64,
    /// MW field polar and azimuthal angles in the lab frame (rad).
    pub mw_theta: f64,
    pub mw_phi: f64,
    /// Antenna constant (T / sqrt(W)).
    pub k_ant: f64,
    /// Sample temperature (K).
    pub temperature: f64,
    /// Inhomogeneous dephasing time (s).
    pub t2_star: f64,
    /// Dwell time per frequency point (s).
    pub integration_time: f64,
    /// Number of NV centers in the detection volume.
    pub n_nv: f64,
    pub rate_calibration: f64,
    pub gamma_c_inf: f64,
    pub gamma_p_inf: f64,
    pub w_p_sat: f64,
    pub beta_geometry: f64,
    /// Zero-field splittings (Hz).
    pub d_gs0: f64,
    pub d_es: f64,
    pub rates: ZeroFieldRates,
    pub phonon: PhononModel,
    /// Orientation weights, normalized on use.
    pub weights: [f64; N_BRANCHES],
}

impl Default for ApparatusSection {
    fn default() -> Self {
        let a = ApparatusConfig::default();
        Self {
            eta: a.eta,
            p_laser: a.p_laser,
            sigma_abs: a.sigma_abs,
            beam_waist: a.beam_waist,
            p_mw_dbm: 30.0,
            mw_theta: a.mw_theta,
            mw_phi: a.mw_phi,
            k_ant: a.k_ant,
            temperature: a.temperature,
            t2_star: a.t2_star,
            integration_time: a.integration_time,
            n_nv: a.n_nv,
            rate_calibration: a.rate_calibration,
            gamma_c_inf: a.gamma_c_inf,
            gamma_p_inf: a.gamma_p_inf,
            w_p_sat: a.w_p_sat,
            beta_geometry: a.beta_geometry,
            d_gs0: a.d_gs0,
            d_es: a.d_es,
            rates: a.rates,
            phonon: a.phonon,
            weights: a.weights,
        }
    }
}

impl ApparatusSection {
    pub fn resolve(&self) -> Result<ApparatusConfig> {
        check_dbm("apparatus.p_mw_dbm", self.p_mw_dbm)?;
        let a = ApparatusConfig {
            eta: self.eta,
            p_laser: self.p_laser,
            sigma_abs: self.sigma_abs,
            beam_waist: self.beam_waist,
            p_mw: dbm_to_watts(self.p_mw_dbm),
            mw_theta: self.mw_theta,
            mw_phi: self.mw_phi,
            k_ant: self.k_ant,
            temperature: self.temperature,
            t2_star: self.t2_star,
            integration_time: self.integration_time,
            n_nv: self.n_nv,
            rate_calibration: self.rate_calibration,
            gamma_c_inf: self.gamma_c_inf,
            gamma_p_inf: self.gamma_p_inf,
            w_p_sat: self.w_p_sat,
            beta_geometry: self.beta_geometry,
            d_gs0: self.d_gs0,
            d_es: self.d_es,
            rates: self.rates,
            phonon: self.phonon,
            weights: self.weights,
        };
        a.validate()?;
        Ok(a)
    }
}

fn check_dbm(field: &str, dbm: f64) -> Result<()> {
    if !(dbm >= MW_DBM_RANGE.0 && dbm <= MW_DBM_RANGE.1) {
        return Err(OdmrError::config(
            field,
            format!("{dbm} dBm outside [{}, {}] dBm", MW_DBM_RANGE.0, MW_DBM_RANGE.1),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PairOrder {
    /// Axes (1, 2, 4, 3) as in the published b vector.
    #[default]
    Printed,
    /// Axes (1, 2, 3, 4).
    Natural,
    /// Pairs ranked by the bias projection magnitudes.
    Bias,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructSection {
    /// Known bias field (T), subtracted from the solution.
    pub bias: [f64; 3],
    pub order: PairOrder,
    pub detect: DetectOptions,
    /// Follow the linear solve with a fit against the full spin Hamiltonian.
    pub refine: bool,
    /// Spectrum file to reconstruct; the CLI simulates one when absent.
    pub input: Option<PathBuf>,
}

impl Default for ReconstructSection {
    fn default() -> Self {
        Self {
            bias: [0.8e-3, 0.3e-3, 0.6e-3],
            order: PairOrder::Printed,
            detect: DetectOptions { prominence: 0.03, ..Default::default() },
            refine: false,
            input: None,
        }
    }
}

impl ReconstructSection {
    pub fn bias_field(&self) -> FieldVector {
        FieldVector::from(self.bias)
    }

    /// Pairing with signs taken from the bias projections.
    pub fn assignment(&self) -> Result<PairAssignment> {
        let bias = self.bias_field();
        let from_bias = PairAssignment::from_bias(&bias)
            .map_err(|e| OdmrError::config("reconstruct.bias", e.to_string()))?;
        let axes = crate::ensemble::nv_axes();
        let signs_for = |order: [usize; 4]| {
            let mut s = [1.0; 4];
            for (k, a) in order.iter().enumerate() {
                s[k] = axes[*a].dot(&bias).signum();
            }
            s
        };
        Ok(match self.order {
            PairOrder::Bias => from_bias,
            PairOrder::Printed => PairAssignment::printed(signs_for(PairAssignment::printed([1.0; 4]).axes)),
            PairOrder::Natural => PairAssignment::natural(signs_for(PairAssignment::natural([1.0; 4]).axes)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    #[default]
    Gaussian,
    Bilateral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseSection {
    pub filter: FilterKind,
    /// Spatial width (samples).
    pub sigma: f64,
    /// Range width (contrast units), bilateral only.
    pub sigma_r: f64,
    /// Half window (samples), bilateral only.
    pub window: usize,
    /// Widths scanned for the SNR report (samples).
    pub scan: Vec<f64>,
    /// Spectrum file to filter; the CLI simulates one when absent.
    pub input: Option<PathBuf>,
}

impl Default for DenoiseSection {
    fn default() -> Self {
        Self {
            filter: FilterKind::Gaussian,
            sigma: 2.0,
            sigma_r: 1.0,
            window: 30,
            scan: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            input: None,
        }
    }
}

impl DenoiseSection {
    pub fn filter(&self) -> Box<dyn crate::reconstruct::Filter1d> {
        use crate::reconstruct::filters::{Bilateral, Gaussian};
        match self.filter {
            FilterKind::Gaussian => Box::new(Gaussian { sigma: self.sigma }),
            FilterKind::Bilateral => Box::new(Bilateral { sigma_s: self.sigma, sigma_r: self.sigma_r, window: self.window }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepFomSection {
    /// Laser powers (W).
    pub laser_w: Vec<f64>,
    /// MW powers (dBm).
    pub mw_dbm: Vec<f64>,
    /// Dip index, ascending in frequency.
    pub target_dip: usize,
    /// Use the run's noise model and average this many spectra per cell.
    pub noisy: bool,
    pub repeats: usize,
    pub detect: DetectOptions,
}

impl Default for SweepFomSection {
    fn default() -> Self {
        Self {
            laser_w: vec![0.01, 0.03, 0.1, 0.3, 1.0],
            mw_dbm: vec![10.0, 20.0, 30.0, 40.0],
            target_dip: 0,
            noisy: false,
            repeats: 1,
            detect: FomSettings::default().detect,
        }
    }
}

impl SweepFomSection {
    pub fn mw_watts(&self) -> Vec<f64> {
        self.mw_dbm.iter().map(|d| dbm_to_watts(*d)).collect()
    }

    pub fn settings(&self, noise: &NoiseConfig) -> FomSettings {
        FomSettings {
            target_dip: self.target_dip,
            detect: self.detect,
            noise: if self.noisy { noise.clone() } else { NoiseConfig::disabled() },
            repeats: self.repeats.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// File name stem for single-spectrum outputs.
    pub stem: String,
    /// Also write the flat binary cube for wide-field runs.
    pub binary_cube: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), stem: "spectrum".into(), binary_cube: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed; generated when absent.
    pub seed: Option<u64>,
    pub field: FieldSection,
    pub apparatus: ApparatusSection,
    pub sweep: SweepGrid,
    pub noise: NoiseConfig,
    pub widefield: WidefieldGrid,
    pub reconstruct: ReconstructSection,
    pub denoise: DenoiseSection,
    pub sweep_fom: SweepFomSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let reason = e.message().to_string();
            let field = e
                .span()
                .map(|s| text[s].lines().next().unwrap_or("").trim().to_string())
                .filter(|s| !s.is_empty())
                .unwrap_or_else(|| "<document>".into());
            OdmrError::Config { field, reason }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| OdmrError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| OdmrError::Io(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: &[f64]| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(OdmrError::config(name, "must be finite"))
            }
        };
        finite("field.b", &self.field.b)?;
        finite("field.gradient_x", &self.field.gradient_x)?;
        finite("field.gradient_y", &self.field.gradient_y)?;
        finite("reconstruct.bias", &self.reconstruct.bias)?;
        self.apparatus.resolve()?;
        self.sweep.validate()?;
        self.noise.validate()?;
        self.widefield.validate()?;
        if self.sweep_fom.laser_w.is_empty() {
            return Err(OdmrError::config("sweep_fom.laser_w", "must not be empty"));
        }
        if self.sweep_fom.mw_dbm.is_empty() {
            return Err(OdmrError::config("sweep_fom.mw_dbm", "must not be empty"));
        }
        if self.sweep_fom.laser_w.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(OdmrError::config("sweep_fom.laser_w", "powers must be finite and >= 0"));
        }
        for d in &self.sweep_fom.mw_dbm {
            check_dbm("sweep_fom.mw_dbm", *d)?;
        }
        let dn = &self.denoise;
        if !(dn.sigma.is_finite() && dn.sigma >= 0.0) || dn.scan.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(OdmrError::config("denoise.sigma", "must be finite and >= 0"));
        }
        if dn.filter == FilterKind::Bilateral && !(dn.sigma > 0.0 && dn.sigma_r > 0.0 && dn.window >= 1) {
            return Err(OdmrError::config("denoise", "bilateral filter needs sigma, sigma_r > 0 and window >= 1"));
        }
        Ok(())
    }

    pub fn apparatus(&self) -> Result<ApparatusConfig> {
        self.apparatus.resolve()
    }
}
