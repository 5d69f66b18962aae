//! Contrast-over-linewidth figure of merit and power sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{simulate_spectrum, ApparatusConfig, SweepGrid};
use crate::error::{OdmrError, Result};
use crate::noise::{NoiseConfig, RandomSource};
use crate::physics::FieldVector;
use crate::reconstruct::{detect_and_fit, DetectOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FomPoint {
    pub p_laser: f64,
    pub p_mw: f64,
    /// Fitted amplitude of the target dip.
    pub contrast: f64,
    /// Fitted FWHM of the target dip (Hz).
    pub linewidth: f64,
    /// `contrast / linewidth` (1/Hz).
    pub fom: f64,
}

/// Shared settings of a figure-of-merit evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FomSettings {
    /// Index of the dip among the detected ones, ascending in frequency.
    pub target_dip: usize,
    pub detect: DetectOptions,
    pub noise: NoiseConfig,
    /// Spectra averaged per cell; only meaningful with noise enabled.
    pub repeats: usize,
}

impl Default for FomSettings {
    fn default() -> Self {
        Self {
            target_dip: 0,
            detect: DetectOptions { prominence: 1e-5, window_halfwidths: 3.0, invert: false },
            noise: NoiseConfig::disabled(),
            repeats: 1,
        }
    }
}

/// Simulate at the apparatus powers and fit the target dip.
pub fn evaluate_fom(
    b_lab: &FieldVector,
    apparatus: &ApparatusConfig,
    sweep: &SweepGrid,
    settings: &FomSettings,
    src: RandomSource,
) -> Result<FomPoint> {
    let repeats = settings.repeats.max(1);
    let mut mean: Option<Vec<f64>> = None;
    let mut freqs = Vec::new();
    for r in 0..repeats {
        let s = simulate_spectrum(b_lab, apparatus, &settings.noise, sweep, src.child(r as u64))?;
        match mean.as_mut() {
            Some(m) => m.iter_mut().zip(&s.contrast).for_each(|(a, c)| *a += c),
            None => {
                freqs = s.freqs;
                mean = Some(s.contrast);
            }
        }
    }
    let contrast: Vec<f64> = mean.unwrap_or_default().into_iter().map(|c| c / repeats as f64).collect();
    let fits = detect_and_fit(&freqs, &contrast, &settings.detect)?;
    let target = fits.get(settings.target_dip).ok_or_else(|| {
        OdmrError::Fit(format!("target dip {} not found ({} detected)", settings.target_dip, fits.len()))
    })?;
    if !target.fit.converged || !(target.fit.gamma > 0.0) {
        return Err(OdmrError::Fit(format!(
            "dip fit did not converge after {} iterations (residual {:.3e})",
            target.fit.iterations, target.fit.residual_norm
        )));
    }
    let linewidth = target.fit.fwhm();
    Ok(FomPoint {
        p_laser: apparatus.p_laser,
        p_mw: apparatus.p_mw,
        contrast: target.fit.amplitude,
        linewidth,
        fom: target.fit.amplitude / linewidth,
    })
}

/// Figure of merit over the laser x MW power grid, row-major in laser
/// power. Failed cells are `None` and listed in `failures`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomMap {
    pub laser_grid: Vec<f64>,
    pub mw_grid: Vec<f64>,
    pub cells: Vec<Option<FomPoint>>,
    pub failures: Vec<(usize, usize, String)>,
}

impl FomMap {
    pub fn get(&self, i_laser: usize, i_mw: usize) -> Option<&FomPoint> {
        self.cells[i_laser * self.mw_grid.len() + i_mw].as_ref()
    }

    /// Cell with the largest figure of merit.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let n = self.mw_grid.len();
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.map(|p| (k, p.fom)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| (k / n, k % n))
    }

    /// `P_laser,P_mw,contrast,linewidth,fom` rows; failed cells are skipped.
    pub fn to_csv_rows(&self) -> Vec<String> {
        self.cells
            .iter()
            .flatten()
            .map(|p| format!("{:e},{:e},{:e},{:e},{:e}", p.p_laser, p.p_mw, p.contrast, p.linewidth, p.fom))
            .collect()
    }
}

pub const FOM_CSV_HEADER: &str = "p_laser_w,p_mw_w,contrast,linewidth_hz,fom_per_hz";

pub fn sweep_fom(
    b_lab: &FieldVector,
    apparatus: &ApparatusConfig,
    sweep: &SweepGrid,
    laser_grid: &[f64],
    mw_grid: &[f64],
    settings: &FomSettings,
    src: RandomSource,
) -> Result<FomMap> {
    if laser_grid.is_empty() || mw_grid.is_empty() {
        return Err(OdmrError::InvalidInput("power grids must be non-empty".into()));
    }
    let n = mw_grid.len();
    let results: Vec<Result<FomPoint>> = (0..laser_grid.len() * n)
        .into_par_iter()
        .map(|k| {
            let app = ApparatusConfig { p_laser: laser_grid[k / n], p_mw: mw_grid[k % n], ..apparatus.clone() };
            evaluate_fom(b_lab, &app, sweep, settings, src.child(k as u64))
        })
        .collect();
    let mut cells = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => cells.push(Some(p)),
            Err(e) => {
                failures.push((k / n, k % n, e.to_string()));
                cells.push(None);
            }
        }
    }
    Ok(FomMap { laser_grid: laser_grid.to_vec(), mw_grid: mw_grid.to_vec(), cells, failures })
}

/// `P = 10^((dBm - 30) / 10)` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::zfs_temperature;

    fn setup() -> (ApparatusConfig, SweepGrid) {
        let app = ApparatusConfig { p_laser: 0.02, p_mw: 0.01, ..Default::default() };
        let d = zfs_temperature(app.temperature);
        (app, SweepGrid::centered(d, 50e3, 241).unwrap())
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(50.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn fom_identity_and_eta_invariance() {
        let (app, sweep) = setup();
        let s = FomSettings::default();
        let p = evaluate_fom(&FieldVector::zeros(), &app, &sweep, &s, RandomSource::new(1)).unwrap();
        assert_eq!(p.fom, p.contrast / p.linewidth);
        assert!(p.linewidth > 0.0);
        let half = ApparatusConfig { eta: 0.5, ..app.clone() };
        let q = evaluate_fom(&FieldVector::zeros(), &half, &sweep, &s, RandomSource::new(1)).unwrap();
        assert!((q.fom / p.fom - 1.0).abs() < 1e-9);
    }

    #[test]
    fn more_mw_power_broadens() {
        let (app, sweep) = setup();
        let s = FomSettings::default();
        let lo = evaluate_fom(&FieldVector::zeros(), &app, &sweep, &s, RandomSource::new(1)).unwrap();
        let hi_app = ApparatusConfig { p_mw: 0.1, ..app };
        let hi = evaluate_fom(&FieldVector::zeros(), &hi_app, &sweep, &s, RandomSource::new(1)).unwrap();
        assert!(hi.linewidth > lo.linewidth);
    }

    #[test]
    fn sweep_shape_determinism_and_single_cell() {
        let (app, sweep) = setup();
        let s = FomSettings::default();
        let lasers = [0.01, 0.02];
        let mws = [0.005, 0.01, 0.02];
        let a = sweep_fom(&FieldVector::zeros(), &app, &sweep, &lasers, &mws, &s, RandomSource::new(3)).unwrap();
        assert_eq!(a.cells.len(), 6);
        assert_eq!(a.cells.iter().flatten().count() + a.failures.len(), 6);
        assert_eq!(a.to_csv_rows().len(), a.cells.iter().flatten().count());
        let b = sweep_fom(&FieldVector::zeros(), &app, &sweep, &lasers, &mws, &s, RandomSource::new(3)).unwrap();
        assert_eq!(a, b);
        let c = sweep_fom(&FieldVector::zeros(), &app, &sweep, &lasers, &mws, &s, RandomSource::new(99)).unwrap();
        assert_eq!(a.argmax(), c.argmax());

        let one = sweep_fom(&FieldVector::zeros(), &app, &sweep, &[0.02], &[0.01], &s, RandomSource::new(3)).unwrap();
        let direct = evaluate_fom(&FieldVector::zeros(), &app, &sweep, &s, RandomSource::new(3).child(0)).unwrap();
        assert_eq!(one.get(0, 0).unwrap(), &direct);
    }

    #[test]
    fn contrast_peaks_at_intermediate_laser_power() {
        let app = ApparatusConfig::default();
        let sweep = SweepGrid::centered(zfs_temperature(300.0), 100e3, 1601).unwrap();
        let lasers = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0];
        let m = sweep_fom(&FieldVector::zeros(), &app, &sweep, &lasers, &[dbm_to_watts(30.0)], &FomSettings::default(), RandomSource::new(1))
            .unwrap();
        assert!(m.failures.is_empty());
        let c: Vec<f64> = m.cells.iter().flatten().map(|p| p.contrast).collect();
        let imax = (0..c.len()).max_by(|a, b| c[*a].total_cmp(&c[*b])).unwrap();
        assert!(imax > 0 && imax < c.len() - 1, "{c:?}");
        assert!(c[0] < c[imax] && c[c.len() - 1] < c[imax]);
    }

    #[test]
    fn noisy_mode_averages() {
        let (app, sweep) = setup();
        let app = ApparatusConfig { integration_time: 0.05, ..app };
        let detect = DetectOptions { prominence: 0.01, ..Default::default() };
        let s = FomSettings { noise: NoiseConfig::shot_only(), repeats: 4, detect, ..Default::default() };
        let a = evaluate_fom(&FieldVector::zeros(), &app, &sweep, &s, RandomSource::new(8)).unwrap();
        let b = evaluate_fom(&FieldVector::zeros(), &app, &sweep, &s, RandomSource::new(8)).unwrap();
        assert_eq!(a, b);
        let clean = evaluate_fom(&FieldVector::zeros(), &app, &sweep, &FomSettings::default(), RandomSource::new(8)).unwrap();
        assert!((a.linewidth / clean.linewidth - 1.0).abs() < 0.1, "{a:?} {clean:?}");
        assert!((a.contrast / clean.contrast - 1.0).abs() < 0.1);
    }

    #[test]
    fn missing_target_is_an_error() {
        let (app, sweep) = setup();
        let s = FomSettings { target_dip: 5, ..Default::default() };
        assert!(evaluate_fom(&FieldVector::zeros(), &app, &sweep, &s, RandomSource::new(1)).is_err());
        assert!(sweep_fom(&FieldVector::zeros(), &app, &sweep, &[], &[1.0], &s, RandomSource::new(1)).is_err());
    }
}
