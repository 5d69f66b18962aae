//! Python bindings: `import pynvodmr`.
//!
//! Configuration objects round-trip through JSON so every field of the Rust
//! types is reachable; structured results come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use nvodmr::acceptance;
use nvodmr::config::RunConfig;
use nvodmr::engine::{self, SweepGrid};
use nvodmr::optimize::{self, FomSettings};
use nvodmr::physics::{self, G_NV};
use nvodmr::reconstruct::{self, filters, DetectOptions, PairAssignment};
use nvodmr::{ApparatusConfig, FieldVector, NoiseConfig, OdmrError, RandomSource};

fn err(e: OdmrError) -> PyErr {
    match e {
        OdmrError::Config { .. } | OdmrError::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn from_json<T: DeserializeOwned>(s: &str) -> PyResult<T> {
    serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn field(b: [f64; 3]) -> FieldVector {
    FieldVector::from(b)
}

/// Laser, microwave and sample parameters.
#[pyclass(name = "Apparatus", module = "pynvodmr", skip_from_py_object)]
#[derive(Clone)]
struct PyApparatus {
    inner: ApparatusConfig,
}

#[pymethods]
impl PyApparatus {
    #[new]
    #[pyo3(signature = (p_laser=None, p_mw=None, temperature=None, integration_time=None))]
    fn new(p_laser: Option<f64>, p_mw: Option<f64>, temperature: Option<f64>, integration_time: Option<f64>) -> PyResult<Self> {
        let mut inner = ApparatusConfig::default();
        if let Some(v) = p_laser {
            inner.p_laser = v;
        }
        if let Some(v) = p_mw {
            inner.p_mw = v;
        }
        if let Some(v) = temperature {
            inner.temperature = v;
        }
        if let Some(v) = integration_time {
            inner.integration_time = v;
        }
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner: ApparatusConfig = from_json(s)?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("apparatus serializes")
    }

    #[getter]
    fn p_laser(&self) -> f64 {
        self.inner.p_laser
    }

    #[getter]
    fn p_mw(&self) -> f64 {
        self.inner.p_mw
    }

    #[getter]
    fn temperature(&self) -> f64 {
        self.inner.temperature
    }

    /// Expected resonance FWHM (Hz) at the configured powers.
    fn linewidth(&self) -> f64 {
        reconstruct::nominal_linewidth(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Apparatus(p_laser={}, p_mw={}, temperature={})", self.inner.p_laser, self.inner.p_mw, self.inner.temperature)
    }
}

/// Noise sources; `Noise()` enables the defaults.
#[pyclass(name = "Noise", module = "pynvodmr", skip_from_py_object)]
#[derive(Clone)]
struct PyNoise {
    inner: NoiseConfig,
}

#[pymethods]
impl PyNoise {
    #[new]
    fn new() -> Self {
        Self { inner: NoiseConfig::default() }
    }

    #[staticmethod]
    fn disabled() -> Self {
        Self { inner: NoiseConfig::disabled() }
    }

    #[staticmethod]
    fn shot_only() -> Self {
        Self { inner: NoiseConfig::shot_only() }
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner: NoiseConfig = from_json(s)?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("noise config serializes")
    }
}

#[pyclass(name = "Spectrum", module = "pynvodmr", skip_from_py_object)]
#[derive(Clone)]
struct PySpectrum {
    inner: engine::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[new]
    fn new(freqs: Vec<f64>, contrast: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: engine::Spectrum::new(freqs, contrast).map_err(err)? })
    }

    #[getter]
    fn freqs(&self) -> Vec<f64> {
        self.inner.freqs.clone()
    }

    #[getter]
    fn contrast(&self) -> Vec<f64> {
        self.inner.contrast.clone()
    }

    #[getter]
    fn photon_counts(&self) -> Option<Vec<u64>> {
        self.inner.photon_counts.clone()
    }

    #[getter]
    fn metadata(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.metadata)
    }

    fn __len__(&self) -> usize {
        self.inner.freqs.len()
    }

    /// Detected dips with their Lorentzian fits, ascending in frequency.
    #[pyo3(signature = (prominence=1e-3, window_halfwidths=3.0))]
    fn fit_dips(&self, py: Python<'_>, prominence: f64, window_halfwidths: f64) -> PyResult<Py<PyAny>> {
        let opts = DetectOptions { prominence, window_halfwidths, invert: false };
        let fits = reconstruct::detect_and_fit(&self.inner.freqs, &self.inner.contrast, &opts).map_err(err)?;
        to_py(py, &fits)
    }

    /// Vector field (T) from the eight dips, with the bias removed.
    #[pyo3(signature = (bias, refine=false, prominence=1e-3))]
    fn reconstruct(&self, py: Python<'_>, bias: [f64; 3], refine: bool, prominence: f64) -> PyResult<Py<PyAny>> {
        let bias = field(bias);
        let assignment = PairAssignment::from_bias(&bias).map_err(err)?;
        let opts = DetectOptions { prominence, ..Default::default() };
        let mut r = reconstruct::reconstruct_spectrum(&self.inner, &assignment, &bias, G_NV, &opts).map_err(err)?;
        if refine {
            r = reconstruct::refine_exact(&r, &bias, G_NV).map_err(err)?;
        }
        to_py(py, &r)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("spectrum serializes")
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner: engine::Spectrum = from_json(s)?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }
}

fn sweep_grid(f_start: f64, f_end: f64, n_freq: usize) -> PyResult<SweepGrid> {
    SweepGrid::new(f_start, f_end, n_freq).map_err(err)
}

/// Simulate one CW-ODMR spectrum for a lab-frame field `b` (T).
#[pyfunction]
#[pyo3(signature = (b, apparatus=None, noise=None, f_start=2.77e9, f_end=2.97e9, n_freq=501, seed=0))]
#[allow(clippy::too_many_arguments)]
fn simulate_spectrum(
    py: Python<'_>,
    b: [f64; 3],
    apparatus: Option<PyRef<'_, PyApparatus>>,
    noise: Option<PyRef<'_, PyNoise>>,
    f_start: f64,
    f_end: f64,
    n_freq: usize,
    seed: u64,
) -> PyResult<PySpectrum> {
    let app = apparatus.map(|a| a.inner.clone()).unwrap_or_default();
    let noise = noise.map(|n| n.inner.clone()).unwrap_or_else(NoiseConfig::disabled);
    let sweep = sweep_grid(f_start, f_end, n_freq)?;
    let s = py
        .detach(|| engine::simulate_spectrum(&field(b), &app, &noise, &sweep, RandomSource::new(seed)))
        .map_err(err)?;
    Ok(PySpectrum { inner: s })
}

/// Zero-field splitting (Hz) at temperature `t` (K).
#[pyfunction]
fn zero_field_splitting(t: f64) -> f64 {
    physics::zfs_temperature(t)
}

/// Resonance frequencies (Hz) of the four NV orientations, ascending.
#[pyfunction]
#[pyo3(signature = (b, temperature=300.0))]
fn resonances(b: [f64; 3], temperature: f64) -> Vec<f64> {
    let b = field(b);
    let d = physics::zfs_temperature(temperature);
    let mut f: Vec<f64> = nvodmr::ensemble::nv_rotations()
        .iter()
        .flat_map(|r| {
            let e = physics::eigensystem(&physics::ground_hamiltonian(&(r * b), d, G_NV));
            [e.nu12(), e.nu13()]
        })
        .collect();
    f.sort_by(f64::total_cmp);
    f
}

#[pyfunction]
fn gaussian_filter(y: Vec<f64>, sigma: f64) -> Vec<f64> {
    filters::gaussian_filter_1d(&y, sigma)
}

#[pyfunction]
#[pyo3(signature = (y, sigma_s, sigma_r, window=30))]
fn bilateral_filter(y: Vec<f64>, sigma_s: f64, sigma_r: f64, window: usize) -> PyResult<Vec<f64>> {
    filters::bilateral_filter_1d(&y, sigma_s, sigma_r, window).map_err(err)
}

/// `10 log10(sum r^2 / sum (y - r)^2)`.
#[pyfunction]
fn snr_db(y: Vec<f64>, reference: Vec<f64>) -> PyResult<f64> {
    engine::snr_db(&y, &reference).map_err(err)
}

#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    optimize::dbm_to_watts(dbm)
}

/// Contrast/linewidth over a laser x MW power grid; one dict per cell,
/// `None` for cells whose fit failed.
#[pyfunction]
#[pyo3(signature = (b, laser_w, mw_w, apparatus=None, f_start=2.77e9, f_end=2.97e9, n_freq=501, target_dip=0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn sweep_fom(
    py: Python<'_>,
    b: [f64; 3],
    laser_w: Vec<f64>,
    mw_w: Vec<f64>,
    apparatus: Option<PyRef<'_, PyApparatus>>,
    f_start: f64,
    f_end: f64,
    n_freq: usize,
    target_dip: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let app = apparatus.map(|a| a.inner.clone()).unwrap_or_default();
    let sweep = sweep_grid(f_start, f_end, n_freq)?;
    let settings = FomSettings { target_dip, ..Default::default() };
    let map = py
        .detach(|| optimize::sweep_fom(&field(b), &app, &sweep, &laser_w, &mw_w, &settings, RandomSource::new(seed)))
        .map_err(err)?;
    to_py(py, &map)
}

/// Parse and validate a TOML run configuration; returns it as a dict.
#[pyfunction]
fn load_config(py: Python<'_>, toml: &str) -> PyResult<Py<PyAny>> {
    let cfg = RunConfig::from_toml_str(toml).map_err(err)?;
    to_py(py, &cfg)
}

/// Run acceptance checks; returns `(id, passed, line)` tuples.
#[pyfunction]
#[pyo3(signature = (ids=None))]
fn selftest(py: Python<'_>, ids: Option<Vec<usize>>) -> Vec<(usize, bool, String)> {
    let ids = ids.unwrap_or_else(|| acceptance::CRITERIA.iter().map(|c| c.id).collect());
    py.detach(|| {
        ids.into_iter()
            .map(|id| {
                let o = acceptance::run(id);
                (id, o.passed, o.line())
            })
            .collect()
    })
}

#[pymodule]
fn pynvodmr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyApparatus>()?;
    m.add_class::<PyNoise>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(simulate_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(zero_field_splitting, m)?)?;
    m.add_function(wrap_pyfunction!(resonances, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_filter, m)?)?;
    m.add_function(wrap_pyfunction!(bilateral_filter, m)?)?;
    m.add_function(wrap_pyfunction!(snr_db, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_fom, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add("G_NV", G_NV)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
