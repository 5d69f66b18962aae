//! CW-ODMR simulation loop: single spectra and wide-field cubes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{NvFrameSet, N_BRANCHES};
use crate::error::{OdmrError, Result};
use crate::microwave::{
    dephasing_floor, interaction_hamiltonian, linewidth_with_floor, lorentzian_dos, mw_field_amplitude,
    mw_field_vector, mw_transition_rate, rabi_frequency, saturation_with, transition_strengths,
    default_antenna_constant, DEFAULT_RATE_CALIBRATION, GAMMA_C_INF, GAMMA_P_INF, W_P_SAT,
};
use crate::noise::{
    dephasing_shift, drifting_temperature, mw_freq_jitter, mw_phase_as_field, sample_g, sample_gaussian_power,
    sample_t2_star, shot_noise, surface_field, NoiseConfig, RandomSource,
};
use crate::physics::{eigensystem, ground_hamiltonian, FieldVector, PhononModel, D_ES, D_GS0};
use crate::seven_level::{alpha_matrix_with, beta_factor_with, mixed_rates, pl_rate, steady_state, ZeroFieldRates};

/// Microwave sweep grid (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub f_start: f64,
    pub f_end: f64,
    pub n_freq: usize,
}

impl SweepGrid {
    pub fn new(f_start: f64, f_end: f64, n_freq: usize) -> Result<Self> {
        let g = Self { f_start, f_end, n_freq };
        g.validate()?;
        Ok(g)
    }

    /// Grid centered on `center` with `n_freq` points spaced `step` apart.
    pub fn centered(center: f64, step: f64, n_freq: usize) -> Result<Self> {
        let half = 0.5 * step * (n_freq as f64 - 1.0);
        Self::new(center - half, center + half, n_freq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_freq < 2 {
            return Err(OdmrError::config("sweep.n_freq", "need at least 2 frequency points"));
        }
        if !(self.f_start.is_finite() && self.f_end.is_finite() && self.f_start < self.f_end) {
            return Err(OdmrError::config("sweep", "f_start must be below f_end"));
        }
        if self.f_start <= 0.0 {
            return Err(OdmrError::config("sweep.f_start", "frequencies must be positive"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.f_end - self.f_start) / (self.n_freq - 1) as f64
    }

    pub fn freqs(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.n_freq)
            .map(|k| if k + 1 == self.n_freq { self.f_end } else { self.f_start + step * k as f64 })
            .collect()
    }
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { f_start: 2.77e9, f_end: 2.97e9, n_freq: 501 }
    }
}

/// Laser, microwave and sample parameters of one measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApparatusConfig {
    /// Photon collection efficiency.
    pub eta: f64,
    /// Laser power at the beam center (W).
    pub p_laser: f64,
    /// Absorption cross section (m^2).
    pub sigma_abs: f64,
    /// Beam waist (m).
    pub beam_waist: f64,
    /// Microwave power (W).
    pub p_mw: f64,
    /// MW field direction in the lab frame (rad).
    pub mw_theta: f64,
    pub mw_phi: f64,
    /// MW field per square-root watt (T / sqrt(W)).
    pub k_ant: f64,
    /// Sample temperature (K).
    pub temperature: f64,
    /// Mean spin dephasing time (s).
    pub t2_star: f64,
    /// Photon integration time per frequency point (s).
    pub integration_time: f64,
    /// Number of NV centers contributing photons, split over the branches
    /// by weight.
    pub n_nv: f64,
    pub rate_calibration: f64,
    pub gamma_c_inf: f64,
    pub gamma_p_inf: f64,
    pub w_p_sat: f64,
    /// Denominator factor in the optical pumping parameter.
    pub beta_geometry: f64,
    pub d_gs0: f64,
    pub d_es: f64,
    pub rates: ZeroFieldRates,
    pub phonon: PhononModel,
    /// Orientation weights: NV1, VN1, NV2, VN2, ... (normalized on use).
    pub weights: [f64; N_BRANCHES],
}

impl Default for ApparatusConfig {
    fn default() -> Self {
        Self {
            eta: 1.0,
            p_laser: 0.1,
            sigma_abs: 9e-21,
            beam_waist: 1e-5,
            p_mw: 1.0,
            mw_theta: PI / 2.0,
            mw_phi: PI / 4.0,
            k_ant: default_antenna_constant(),
            temperature: 300.0,
            t2_star: 0.5e-6,
            integration_time: 1e-3,
            n_nv: 8.0,
            rate_calibration: DEFAULT_RATE_CALIBRATION,
            gamma_c_inf: GAMMA_C_INF,
            gamma_p_inf: GAMMA_P_INF,
            w_p_sat: W_P_SAT,
            beta_geometry: 4.0,
            d_gs0: D_GS0,
            d_es: D_ES,
            rates: ZeroFieldRates::default(),
            phonon: PhononModel::default(),
            weights: [1.0 / N_BRANCHES as f64; N_BRANCHES],
        }
    }
}

impl ApparatusConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("apparatus.sigma_abs", self.sigma_abs),
            ("apparatus.beam_waist", self.beam_waist),
            ("apparatus.t2_star", self.t2_star),
            ("apparatus.integration_time", self.integration_time),
            ("apparatus.n_nv", self.n_nv),
            ("apparatus.gamma_c_inf", self.gamma_c_inf),
            ("apparatus.gamma_p_inf", self.gamma_p_inf),
            ("apparatus.w_p_sat", self.w_p_sat),
            ("apparatus.beta_geometry", self.beta_geometry),
            ("apparatus.d_gs0", self.d_gs0),
            ("apparatus.d_es", self.d_es),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(OdmrError::config(name, "must be finite and > 0"));
            }
        }
        let non_negative = [
            ("apparatus.eta", self.eta),
            ("apparatus.p_laser", self.p_laser),
            ("apparatus.p_mw", self.p_mw),
            ("apparatus.k_ant", self.k_ant),
            ("apparatus.temperature", self.temperature),
            ("apparatus.rate_calibration", self.rate_calibration),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(OdmrError::config(name, "must be finite and >= 0"));
            }
        }
        if !(self.mw_theta.is_finite() && self.mw_phi.is_finite()) {
            return Err(OdmrError::config("apparatus.mw_theta", "angles must be finite"));
        }
        self.rates.validate()?;
        crate::ensemble::normalize_weights(self.weights)?;
        Ok(())
    }

    /// Laser saturation parameter at power `p`.
    pub fn saturation(&self, p: f64) -> f64 {
        saturation_with(p, self.sigma_abs, self.beam_waist, self.w_p_sat).0
    }

    pub fn beta(&self, p: f64) -> f64 {
        beta_factor_with(p, self.sigma_abs, self.beam_waist, self.rates.k_r, self.beta_geometry)
    }

    pub fn rabi(&self, p_mw: f64, g: f64) -> f64 {
        rabi_frequency(mw_field_amplitude(p_mw, self.k_ant), g)
    }

    /// Lorentzian FWHM used for the density of states at the given powers.
    pub fn linewidth(&self, p_laser: f64, p_mw: f64, g: f64, t2_star: f64) -> f64 {
        linewidth_with_floor(
            self.saturation(p_laser),
            self.rabi(p_mw, g),
            self.gamma_c_inf,
            self.gamma_p_inf,
            dephasing_floor(t2_star),
        )
    }
}

/// Swept spectrum with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub contrast: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_counts: Option<Vec<u64>>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl Spectrum {
    pub fn new(freqs: Vec<f64>, contrast: Vec<f64>) -> Result<Self> {
        let s = Self { freqs, contrast, photon_counts: None, metadata: serde_json::Value::Null };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs.len() != self.contrast.len() {
            return Err(OdmrError::InvalidInput("freqs and contrast differ in length".into()));
        }
        if let Some(c) = &self.photon_counts {
            if c.len() != self.freqs.len() {
                return Err(OdmrError::InvalidInput("photon_counts length mismatch".into()));
            }
        }
        if self.contrast.iter().any(|c| !c.is_finite()) {
            return Err(OdmrError::InvalidInput("non-finite contrast".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Copy with the contrast replaced, keeping grid and metadata.
    pub fn with_contrast(&self, contrast: Vec<f64>) -> Self {
        Self { contrast, photon_counts: None, ..self.clone() }
    }
}

/// Everything needed to reproduce one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationInput {
    pub field: FieldVector,
    pub apparatus: ApparatusConfig,
    pub noise: NoiseConfig,
    pub sweep: SweepGrid,
    pub seed: u64,
}

const TAG_SPECTRUM: u64 = 0x5350_4543;
const TAG_BRANCH: u64 = 0x4252_4e43;
const TAG_POINT: u64 = 0x504f_4e54;
const TAG_BASE: u64 = 0x4241_5345;
const TAG_PIXEL: u64 = 0x5049_5845;

/// Noise stream of pixel `index` in [`simulate_widefield`].
pub fn pixel_source(src: RandomSource, index: usize) -> RandomSource {
    src.child(TAG_PIXEL).child(index as u64)
}

/// Simulate one ensemble spectrum for a lab-frame field.
pub fn simulate_spectrum(
    b_lab: &FieldVector,
    apparatus: &ApparatusConfig,
    noise: &NoiseConfig,
    sweep: &SweepGrid,
    src: RandomSource,
) -> Result<Spectrum> {
    simulate_with_laser(b_lab, apparatus, noise, sweep, src, apparatus.p_laser)
}

struct BranchResult {
    pl0: f64,
    pl: Vec<f64>,
    counts: Option<Vec<u64>>,
}

fn simulate_with_laser(
    b_lab: &FieldVector,
    app: &ApparatusConfig,
    noise: &NoiseConfig,
    sweep: &SweepGrid,
    src: RandomSource,
    p_laser: f64,
) -> Result<Spectrum> {
    app.validate()?;
    noise.validate()?;
    sweep.validate()?;
    if !b_lab.iter().all(|v| v.is_finite()) {
        return Err(OdmrError::InvalidInput("field must be finite".into()));
    }
    let frames = NvFrameSet::with_weights(app.weights)?;
    let freqs = sweep.freqs();

    let mut spec_rng = src.child(TAG_SPECTRUM).rng();
    let g = sample_g(noise.g_std, noise.g_distribution, &mut spec_rng);
    let t2 = if noise.t2_star_std > 0.0 {
        sample_t2_star(app.t2_star, noise.t2_star_std, &mut spec_rng)
    } else {
        app.t2_star
    };

    let branches: Vec<BranchResult> = (0..N_BRANCHES)
        .into_par_iter()
        .map(|b| simulate_branch(b, b_lab, app, noise, &frames, &freqs, src.child(TAG_BRANCH).child(b as u64), p_laser, g, t2))
        .collect::<Result<_>>()?;

    let weights = frames.weights;
    let base: f64 = branches.iter().zip(weights).map(|(r, w)| r.pl0 * w).sum();
    if !(base > 0.0) {
        return Err(OdmrError::ZeroBaseline);
    }
    let contrast: Vec<f64> = (0..freqs.len())
        .map(|k| {
            let tot: f64 = branches.iter().zip(weights).map(|(r, w)| r.pl[k] * w).sum();
            (base - tot) / base
        })
        .collect();
    let photon_counts = if noise.shot_noise {
        Some((0..freqs.len()).map(|k| branches.iter().map(|r| r.counts.as_ref().map_or(0, |c| c[k])).sum()).collect())
    } else {
        None
    };
    let metadata = serde_json::to_value(SimulationInput {
        field: *b_lab,
        apparatus: ApparatusConfig { p_laser, ..app.clone() },
        noise: noise.clone(),
        sweep: *sweep,
        seed: src.seed,
    })
    .unwrap_or(serde_json::Value::Null);
    Ok(Spectrum { freqs, contrast, photon_counts, metadata })
}

#[allow(clippy::too_many_arguments)]
fn simulate_branch(
    branch: usize,
    b_lab: &FieldVector,
    app: &ApparatusConfig,
    noise: &NoiseConfig,
    frames: &NvFrameSet,
    freqs: &[f64],
    src: RandomSource,
    p_laser: f64,
    g: f64,
    t2: f64,
) -> Result<BranchResult> {
    let weight = frames.weights[branch];
    let mut rng = src.rng();
    let sigma_d = if noise.dephasing { dephasing_shift(t2, &mut rng) } else { 0.0 };
    let t_base = noise.temperature_drift.map_or(app.temperature, |d| d.0);

    // expected photons per unit PL rate for this branch
    let exposure = weight * app.n_nv * app.integration_time;

    let pl_at = |b_nv: &FieldVector, t: f64, beta: f64, w: Option<(f64, f64)>| -> Result<f64> {
        let d = app.phonon.zfs(app.d_gs0, t) + sigma_d;
        let b_perp = b_nv.x.hypot(b_nv.y);
        let alpha = alpha_matrix_with(b_nv.z, b_perp, g, d, app.d_es)?;
        let kp = mixed_rates(&alpha, &app.rates, beta);
        let (w12, w13) = w.unwrap_or((0.0, 0.0));
        let n = steady_state(&kp, w12, w13)?;
        Ok(pl_rate(&n, &kp, app.eta))
    };

    let b_nv0 = frames.branch_field(b_lab, branch);
    let mut pl0 = pl_at(&b_nv0, t_base, app.beta(p_laser), None).map_err(|e| e.at(branch, usize::MAX))?;
    if noise.baseline_shot_noise && exposure > 0.0 {
        let mut brng = src.child(TAG_BASE).rng();
        pl0 = shot_noise(pl0 * exposure, &mut brng) as f64 / exposure;
    }

    let n = freqs.len();
    let mut pl = Vec::with_capacity(n);
    let mut counts = noise.shot_noise.then(|| Vec::with_capacity(n));
    let mw_dir = (app.mw_theta, app.mw_phi);
    for (k, &f_nominal) in freqs.iter().enumerate() {
        let mut rng = src.child(TAG_POINT).child(k as u64).rng();
        let p_l = sample_gaussian_power(p_laser, noise.laser_power_rel_std * p_laser, &mut rng);
        let p_m = sample_gaussian_power(app.p_mw, noise.mw_power_rel_std * app.p_mw, &mut rng);
        let f = mw_freq_jitter(f_nominal, noise.mw_freq_jitter_std, &mut rng);
        let t = match noise.temperature_drift {
            Some(d) => drifting_temperature(k, n, d),
            None => app.temperature,
        };
        let b_point = b_lab + surface_field(noise.surface_field_std, &mut rng);
        let mut b_nv = frames.branch_field(&b_point, branch);
        b_nv.z += mw_phase_as_field(noise.mw_phase_field_std, &mut rng);

        let d = app.phonon.zfs(app.d_gs0, t) + sigma_d;
        let eig = eigensystem(&ground_hamiltonian(&b_nv, d, g));
        let b_mw_lab = mw_field_vector(mw_field_amplitude(p_m, app.k_ant), mw_dir.0, mw_dir.1);
        let b_mw_nv = frames.branch_field(&b_mw_lab, branch);
        let (t12, t13) = transition_strengths(&eig, &interaction_hamiltonian(&b_mw_nv, g));
        let delta = app.linewidth(p_l, p_m, g, t2);
        let w12 = mw_transition_rate(t12, lorentzian_dos(f, eig.nu12(), delta), app.rate_calibration);
        let w13 = mw_transition_rate(t13, lorentzian_dos(f, eig.nu13(), delta), app.rate_calibration);

        let rate = pl_at(&b_nv, t, app.beta(p_l), Some((w12, w13))).map_err(|e| e.at(branch, k))?;
        match counts.as_mut() {
            Some(c) if exposure > 0.0 => {
                let m = shot_noise(rate * exposure, &mut rng);
                c.push(m);
                pl.push(m as f64 / exposure);
            }
            Some(c) => {
                c.push(0);
                pl.push(rate);
            }
            None => pl.push(rate),
        }
    }
    Ok(BranchResult { pl0, pl, counts })
}

/// Grid of spectra over a sample under a Gaussian beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidefieldCube {
    pub nx: usize,
    pub ny: usize,
    /// Pixel pitch (m).
    pub pitch: f64,
    /// Beam center in sample coordinates (m).
    pub beam_center: (f64, f64),
    pub freqs: Vec<f64>,
    /// Row-major `[y][x]`; `None` where the pixel failed.
    pub pixels: Vec<Option<Spectrum>>,
    /// `(pixel index, message)` for failed pixels.
    pub errors: Vec<(usize, String)>,
}

impl WidefieldCube {
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn pixel(&self, ix: usize, iy: usize) -> Option<&Spectrum> {
        self.pixels[self.index(ix, iy)].as_ref()
    }

    pub fn position(&self, ix: usize, iy: usize) -> (f64, f64) {
        pixel_position(ix, iy, self.nx, self.ny, self.pitch)
    }
}

/// Pixel centers are symmetric about the origin.
pub fn pixel_position(ix: usize, iy: usize, nx: usize, ny: usize, pitch: f64) -> (f64, f64) {
    (
        (ix as f64 - 0.5 * (nx as f64 - 1.0)) * pitch,
        (iy as f64 - 0.5 * (ny as f64 - 1.0)) * pitch,
    )
}

/// Grid layout for [`simulate_widefield`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WidefieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
    pub beam_center: (f64, f64),
}

impl Default for WidefieldGrid {
    fn default() -> Self {
        Self { nx: 8, ny: 8, pitch: 3e-6, beam_center: (0.0, 0.0) }
    }
}

impl WidefieldGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(OdmrError::config("widefield", "grid must be at least 1x1"));
        }
        if !(self.pitch.is_finite() && self.pitch >= 0.0) {
            return Err(OdmrError::config("widefield.pitch", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Simulate every pixel with its local field and beam-scaled laser power.
/// Pixel `i` draws from [`pixel_source`]`(src, i)`, so the cube does not
/// depend on thread count.
pub fn simulate_widefield<F>(
    field_fn: F,
    apparatus: &ApparatusConfig,
    noise: &NoiseConfig,
    sweep: &SweepGrid,
    grid: &WidefieldGrid,
    src: RandomSource,
) -> Result<WidefieldCube>
where
    F: Fn(f64, f64) -> FieldVector + Sync,
{
    grid.validate()?;
    apparatus.validate()?;
    noise.validate()?;
    sweep.validate()?;
    let (nx, ny) = (grid.nx, grid.ny);
    let results: Vec<Result<Spectrum>> = (0..nx * ny)
        .into_par_iter()
        .map(|i| {
            let (x, y) = pixel_position(i % nx, i / nx, nx, ny, grid.pitch);
            let (dx, dy) = (x - grid.beam_center.0, y - grid.beam_center.1);
            let scale = crate::noise::gaussian_beam_intensity(dx, dy, 1.0, apparatus.beam_waist);
            simulate_with_laser(&field_fn(x, y), apparatus, noise, sweep, pixel_source(src, i), apparatus.p_laser * scale)
        })
        .collect();
    let mut pixels = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => pixels.push(Some(s)),
            Err(e) => {
                errors.push((i, e.to_string()));
                pixels.push(None);
            }
        }
    }
    Ok(WidefieldCube { nx, ny, pitch: grid.pitch, beam_center: grid.beam_center, freqs: sweep.freqs(), pixels, errors })
}

/// `10 log10(sum ref^2 / sum (noisy - ref)^2)` in dB; `+inf` for an exact
/// match.
pub fn snr_db(noisy: &[f64], reference: &[f64]) -> Result<f64> {
    if noisy.len() != reference.len() {
        return Err(OdmrError::InvalidInput("SNR inputs differ in length".into()));
    }
    let signal: f64 = reference.iter().map(|r| r * r).sum();
    let resid: f64 = noisy.iter().zip(reference).map(|(n, r)| (n - r).powi(2)).sum();
    if resid == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / resid).log10())
}

pub fn snr_of_spectrum(noisy: &Spectrum, reference: &Spectrum) -> Result<f64> {
    if noisy.freqs != reference.freqs {
        return Err(OdmrError::InvalidInput("spectra are on different grids".into()));
    }
    snr_db(&noisy.contrast, &reference.contrast)
}
