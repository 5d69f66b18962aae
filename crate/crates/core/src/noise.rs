//! Stochastic apparatus and environment models.
//!
//! Every draw goes through a [`RandomSource`]: a root seed plus a stream id.
//! Streams for individual pixels, orientation branches and frequency points
//! are derived from the root deterministically, so results do not depend on
//! evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{OdmrError, Result};
use crate::physics::{FieldVector, G_NV};

/// Above this mean the Poisson draw uses a rounded normal N(n, n).
pub const POISSON_NORMAL_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GDistribution {
    #[default]
    Uniform,
    Normal,
}

/// Noise sources. A source with zero width (or a disabled flag) is skipped
/// without touching the random stream's effect on the output, so the fully
/// disabled configuration reproduces the noiseless spectrum bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Laser power std as a fraction of the applied power.
    pub laser_power_rel_std: f64,
    /// MW power std as a fraction of the nominal power.
    pub mw_power_rel_std: f64,
    /// MW phase noise expressed as an axial field std (T).
    pub mw_phase_field_std: f64,
    /// MW frequency jitter std (Hz).
    pub mw_freq_jitter_std: f64,
    /// Per-branch Gaussian shift of D with std 1/T2* (enables spin dephasing).
    pub dephasing: bool,
    /// Std of the per-spectrum T2* draw (s).
    pub t2_star_std: f64,
    /// Std of the NV g-factor.
    pub g_std: f64,
    pub g_distribution: GDistribution,
    /// Linear temperature drift (start K, end K) across one sweep.
    pub temperature_drift: Option<(f64, f64)>,
    /// Surface-impurity field std per component (T).
    pub surface_field_std: f64,
    /// Poisson photon counting on the swept points.
    pub shot_noise: bool,
    /// Also apply photon counting to the baseline PL.
    pub baseline_shot_noise: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            laser_power_rel_std: 0.005,
            mw_power_rel_std: 0.005,
            mw_phase_field_std: 1e-12,
            mw_freq_jitter_std: 0.0,
            dephasing: true,
            t2_star_std: 0.0,
            g_std: 0.0003,
            g_distribution: GDistribution::Uniform,
            temperature_drift: None,
            surface_field_std: 0.0,
            shot_noise: true,
            baseline_shot_noise: false,
        }
    }
}

impl NoiseConfig {
    /// Every source switched off.
    pub fn disabled() -> Self {
        Self {
            laser_power_rel_std: 0.0,
            mw_power_rel_std: 0.0,
            mw_phase_field_std: 0.0,
            mw_freq_jitter_std: 0.0,
            dephasing: false,
            t2_star_std: 0.0,
            g_std: 0.0,
            g_distribution: GDistribution::Uniform,
            temperature_drift: None,
            surface_field_std: 0.0,
            shot_noise: false,
            baseline_shot_noise: false,
        }
    }

    /// Only photon shot noise.
    pub fn shot_only() -> Self {
        Self { shot_noise: true, ..Self::disabled() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise.laser_power_rel_std", self.laser_power_rel_std),
            ("noise.mw_power_rel_std", self.mw_power_rel_std),
            ("noise.mw_phase_field_std", self.mw_phase_field_std),
            ("noise.mw_freq_jitter_std", self.mw_freq_jitter_std),
            ("noise.t2_star_std", self.t2_star_std),
            ("noise.g_std", self.g_std),
            ("noise.surface_field_std", self.surface_field_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(OdmrError::config(name, "standard deviation must be finite and >= 0"));
            }
        }
        if let Some((a, b)) = self.temperature_drift {
            if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
                return Err(OdmrError::config("noise.temperature_drift", "temperatures must be >= 0 K"));
            }
        }
        Ok(())
    }

    /// Whether anything perturbs the static spin Hamiltonian point to point.
    pub fn perturbs_hamiltonian_per_point(&self) -> bool {
        self.mw_phase_field_std > 0.0 || self.surface_field_std > 0.0 || self.temperature_drift.is_some()
    }
}

/// Seed plus stream id. Cheap to copy; child streams are derived by mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Deterministic child stream for `tag`.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    Normal::new(mean, std).expect("std is finite and >= 0").sample(rng)
}

/// Gaussian power draw clamped at zero. `std == 0` returns `nominal`.
pub fn sample_gaussian_power<R: Rng + ?Sized>(nominal: f64, std: f64, rng: &mut R) -> f64 {
    if std == 0.0 {
        return nominal;
    }
    normal(rng, nominal, std).max(0.0)
}

/// Poisson photon count with mean `n_ideal`.
pub fn shot_noise<R: Rng + ?Sized>(n_ideal: f64, rng: &mut R) -> u64 {
    if !(n_ideal > 0.0) {
        return 0;
    }
    if n_ideal > POISSON_NORMAL_THRESHOLD {
        return normal(rng, n_ideal, n_ideal.sqrt()).round().max(0.0) as u64;
    }
    Poisson::new(n_ideal).expect("positive finite mean").sample(rng) as u64
}

/// Zero-field-splitting shift from spin dephasing, N(0, (1/T2*)^2) in Hz.
pub fn dephasing_shift<R: Rng + ?Sized>(t2_star: f64, rng: &mut R) -> f64 {
    normal(rng, 0.0, 1.0 / t2_star)
}

/// T2* draw from N(mean, std^2), truncated below at 0.1 mean.
pub fn sample_t2_star<R: Rng + ?Sized>(mean: f64, std: f64, rng: &mut R) -> f64 {
    normal(rng, mean, std).max(0.1 * mean)
}

/// g-factor draw around 2.0028. Uniform mode matches the requested std.
pub fn sample_g<R: Rng + ?Sized>(g_std: f64, distribution: GDistribution, rng: &mut R) -> f64 {
    if g_std == 0.0 {
        return G_NV;
    }
    match distribution {
        GDistribution::Uniform => {
            let half = 3f64.sqrt() * g_std;
            rng.random_range(G_NV - half..G_NV + half)
        }
        GDistribution::Normal => normal(rng, G_NV, g_std),
    }
}

/// Isotropic Gaussian field vector with per-component std.
pub fn surface_field<R: Rng + ?Sized>(std: f64, rng: &mut R) -> FieldVector {
    if std == 0.0 {
        return FieldVector::zeros();
    }
    FieldVector::new(normal(rng, 0.0, std), normal(rng, 0.0, std), normal(rng, 0.0, std))
}

/// Oxygen-terminated surface field std (T), 1-10 nT range.
pub const SURFACE_STD_OXYGEN: f64 = 5e-9;
/// Hydrogen/fluorine-terminated surface field std (T), 0.1-1 uT range.
pub const SURFACE_STD_HYDROGEN: f64 = 0.5e-6;

pub fn mw_freq_jitter<R: Rng + ?Sized>(nu: f64, std: f64, rng: &mut R) -> f64 {
    normal(rng, nu, std)
}

/// Axial field offset (T) standing in for MW phase noise.
pub fn mw_phase_as_field<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    normal(rng, 0.0, std)
}

/// Linear temperature at sweep index `k` of `n` points.
pub fn drifting_temperature(k: usize, n: usize, drift: (f64, f64)) -> f64 {
    let (a, b) = drift;
    if n < 2 {
        return a;
    }
    a + (b - a) * k as f64 / (n - 1) as f64
}

/// Gaussian beam intensity `I0 exp(-2 r^2 / w0^2)`.
pub fn gaussian_beam_intensity(x: f64, y: f64, i0: f64, w0: f64) -> f64 {
    i0 * (-2.0 * (x * x + y * y) / (w0 * w0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var.sqrt())
    }

    const N: usize = 100_000;

    #[test]
    fn power_draws() {
        let mut rng = RandomSource::new(1).rng();
        assert_eq!(sample_gaussian_power(0.3, 0.0, &mut rng), 0.3);
        let v: Vec<f64> = (0..N).map(|_| sample_gaussian_power(1.0, 0.01, &mut rng)).collect();
        let (m, s) = moments(&v);
        assert!((m - 1.0).abs() < 3.0 * 0.01 / (N as f64).sqrt());
        assert!((s / 0.01 - 1.0).abs() < 0.05);
        let mut rng = RandomSource::new(2).rng();
        assert!((0..1000).all(|_| sample_gaussian_power(0.0, 1.0, &mut rng) >= 0.0));
    }

    #[test]
    fn poisson_counts() {
        let mut rng = RandomSource::new(3).rng();
        assert_eq!(shot_noise(0.0, &mut rng), 0);
        let v: Vec<f64> = (0..N).map(|_| shot_noise(100.0, &mut rng) as f64).collect();
        let (m, _) = moments(&v);
        assert!((m - 100.0).abs() < 1.0);
        let v: Vec<f64> = (0..10_000).map(|_| shot_noise(100.0, &mut rng) as f64).collect();
        let (m, s) = moments(&v);
        let ratio = s * s / m;
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
        let big: Vec<f64> = (0..10_000).map(|_| shot_noise(4e6, &mut rng) as f64).collect();
        let (m, s) = moments(&big);
        assert!((m - 4e6).abs() < 3.0 * 2000.0 / 100.0 * 3.0);
        assert!((s / 2000.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn dephasing_draws() {
        let mut rng = RandomSource::new(4).rng();
        let v: Vec<f64> = (0..N).map(|_| dephasing_shift(0.5e-6, &mut rng)).collect();
        let (m, s) = moments(&v);
        assert!((s / 2e6 - 1.0).abs() < 0.05);
        assert!(m.abs() < 3.0 * 2e6 / (N as f64).sqrt());
    }

    #[test]
    fn g_draws() {
        let mut rng = RandomSource::new(5).rng();
        assert_eq!(sample_g(0.0, GDistribution::Uniform, &mut rng), 2.0028);
        let v: Vec<f64> = (0..N).map(|_| sample_g(0.0003, GDistribution::Uniform, &mut rng)).collect();
        let (_, s) = moments(&v);
        assert!((s / 0.0003 - 1.0).abs() < 0.05);
        let half = 3f64.sqrt() * 0.0003;
        assert!(v.iter().all(|g| (g - 2.0028).abs() <= half));
        let v: Vec<f64> = (0..N).map(|_| sample_g(0.0003, GDistribution::Normal, &mut rng)).collect();
        let (m, s) = moments(&v);
        assert!((s / 0.0003 - 1.0).abs() < 0.05);
        assert!((m - 2.0028).abs() < 3.0 * 0.0003 / (N as f64).sqrt());
    }

    #[test]
    fn surface_draws() {
        let mut rng = RandomSource::new(6).rng();
        assert_eq!(surface_field(0.0, &mut rng), FieldVector::zeros());
        assert!((1e-9..=10e-9).contains(&SURFACE_STD_OXYGEN));
        let v: Vec<FieldVector> = (0..N).map(|_| surface_field(1e-8, &mut rng)).collect();
        for c in 0..3 {
            let comp: Vec<f64> = v.iter().map(|f| f[c]).collect();
            let (_, s) = moments(&comp);
            assert!((s / 1e-8 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn jitter_and_phase_identity_at_zero() {
        let mut rng = RandomSource::new(7).rng();
        assert_eq!(mw_freq_jitter(2.87e9, 0.0, &mut rng), 2.87e9);
        assert_eq!(mw_phase_as_field(0.0, &mut rng), 0.0);
    }

    #[test]
    fn temperature_drift_endpoints() {
        assert_eq!(drifting_temperature(0, 11, (295.15, 301.15)), 295.15);
        assert_eq!(drifting_temperature(10, 11, (295.15, 301.15)), 301.15);
        assert!((drifting_temperature(5, 11, (295.15, 301.15)) - 298.15).abs() < 1e-12);
    }

    #[test]
    fn beam_profile() {
        let w0 = 1e-5;
        assert_eq!(gaussian_beam_intensity(0.0, 0.0, 3.0, w0), 3.0);
        let e = gaussian_beam_intensity(w0, 0.0, 1.0, w0);
        assert!((e - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(gaussian_beam_intensity(3e-6, -4e-6, 1.0, w0), gaussian_beam_intensity(-4e-6, 3e-6, 1.0, w0));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let root = RandomSource::new(42);
        let a: u64 = root.child(3).child(9).rng().random();
        let b: u64 = root.child(3).child(9).rng().random();
        let c: u64 = root.child(9).child(3).rng().random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
