//! File formats: spectrum CSV/JSON, wide-field cubes, reconstruction
//! results, field maps and figure-of-merit heatmaps.
//!
//! CSV outputs start with `#` comment lines; the `# metadata:` line holds a
//! single-line JSON object with the full provenance.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{Spectrum, WidefieldCube};
use crate::error::{OdmrError, Result};
use crate::optimize::{FomMap, FOM_CSV_HEADER};
use crate::physics::FieldVector;
use crate::reconstruct::ReconstructionResult;

pub const CUBE_MAGIC: &[u8; 8] = b"NVODMRCB";
const METADATA_PREFIX: &str = "# metadata: ";

fn io_err(path: &Path, e: impl std::fmt::Display) -> OdmrError {
    OdmrError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn write_header(w: &mut impl Write, kind: &str, metadata: &Value) -> std::io::Result<()> {
    writeln!(w, "# nvodmr {kind}")?;
    writeln!(w, "{METADATA_PREFIX}{}", serde_json::to_string(metadata).unwrap_or_else(|_| "null".into()))
}

pub fn write_spectrum_csv(path: &Path, s: &Spectrum) -> Result<()> {
    s.validate()?;
    let mut w = create(path)?;
    write_header(&mut w, "spectrum", &s.metadata).map_err(|e| io_err(path, e))?;
    let mut c = csv::Writer::from_writer(w);
    let res = (|| -> csv::Result<()> {
        match &s.photon_counts {
            Some(counts) => {
                c.write_record(["freq_hz", "contrast", "photons"])?;
                for ((f, v), n) in s.freqs.iter().zip(&s.contrast).zip(counts) {
                    c.write_record([format!("{f:.6}"), format!("{v:e}"), n.to_string()])?;
                }
            }
            None => {
                c.write_record(["freq_hz", "contrast"])?;
                for (f, v) in s.freqs.iter().zip(&s.contrast) {
                    c.write_record([format!("{f:.6}"), format!("{v:e}")])?;
                }
            }
        }
        c.flush()?;
        Ok(())
    })();
    res.map_err(|e| io_err(path, e))
}

fn split_metadata(text: &str) -> (Value, String) {
    let mut meta = Value::Null;
    let mut body = String::with_capacity(text.len());
    for line in text.lines() {
        if let Some(json) = line.strip_prefix(METADATA_PREFIX) {
            meta = serde_json::from_str(json).unwrap_or(Value::Null);
        } else if !line.starts_with('#') {
            body.push_str(line);
            body.push('\n');
        }
    }
    (meta, body)
}

pub fn read_spectrum_csv(path: &Path) -> Result<Spectrum> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (metadata, body) = split_metadata(&text);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers().map_err(|e| io_err(path, e))?.clone();
    if headers.get(0) != Some("freq_hz") || headers.get(1) != Some("contrast") {
        return Err(io_err(path, "expected columns freq_hz,contrast[,photons]"));
    }
    let with_counts = headers.get(2) == Some("photons");
    let (mut freqs, mut contrast, mut counts) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| io_err(path, format!("row {k}: missing column {i}")));
        let num = |i: usize| -> Result<f64> {
            field(i)?.trim().parse().map_err(|e| io_err(path, format!("row {k}: {e}")))
        };
        freqs.push(num(0)?);
        contrast.push(num(1)?);
        if with_counts {
            counts.push(field(2)?.trim().parse::<u64>().map_err(|e| io_err(path, format!("row {k}: {e}")))?);
        }
    }
    let s = Spectrum { freqs, contrast, photon_counts: with_counts.then_some(counts), metadata };
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

fn write_envelope<T: Serialize>(path: &Path, format: &str, body: T) -> Result<()> {
    let env = Envelope { format: format.into(), version: 1, body };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &env).map_err(|e| io_err(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn read_envelope<T: for<'de> Deserialize<'de>>(path: &Path, format: &str) -> Result<T> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let env: Envelope<T> = serde_json::from_reader(BufReader::new(f)).map_err(|e| io_err(path, e))?;
    if env.format != format {
        return Err(io_err(path, format!("expected format `{format}`, found `{}`", env.format)));
    }
    Ok(env.body)
}

#[derive(Serialize, Deserialize)]
struct SpectrumBody {
    spectrum: Spectrum,
}

pub fn write_spectrum_json(path: &Path, s: &Spectrum) -> Result<()> {
    s.validate()?;
    write_envelope(path, "nvodmr-spectrum", SpectrumBody { spectrum: s.clone() })
}

pub fn read_spectrum_json(path: &Path) -> Result<Spectrum> {
    let s = read_envelope::<SpectrumBody>(path, "nvodmr-spectrum")?.spectrum;
    s.validate()?;
    Ok(s)
}

/// Read a spectrum from `.json` or CSV by extension.
pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_spectrum_json(path),
        _ => read_spectrum_csv(path),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubePixelEntry {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    pub file: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeIndex {
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
    pub beam_center: (f64, f64),
    pub n_freq: usize,
    pub pixels: Vec<CubePixelEntry>,
    pub metadata: Value,
}

pub fn pixel_file_name(ix: usize, iy: usize) -> String {
    format!("pixel_y{iy:03}_x{ix:03}.csv")
}

/// Write `index.json` plus one CSV per pixel into `dir`.
pub fn write_cube_dir(dir: &Path, cube: &WidefieldCube, metadata: &Value) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut pixels = Vec::with_capacity(cube.pixels.len());
    for iy in 0..cube.ny {
        for ix in 0..cube.nx {
            let i = cube.index(ix, iy);
            let (x, y) = cube.position(ix, iy);
            let error = cube.errors.iter().find(|(k, _)| *k == i).map(|(_, e)| e.clone());
            let file = match &cube.pixels[i] {
                Some(s) => {
                    let name = pixel_file_name(ix, iy);
                    write_spectrum_csv(&dir.join(&name), s)?;
                    Some(name)
                }
                None => None,
            };
            pixels.push(CubePixelEntry { ix, iy, x, y, file, error });
        }
    }
    let index = CubeIndex {
        nx: cube.nx,
        ny: cube.ny,
        pitch: cube.pitch,
        beam_center: cube.beam_center,
        n_freq: cube.freqs.len(),
        pixels,
        metadata: metadata.clone(),
    };
    write_envelope(&dir.join("index.json"), "nvodmr-cube", index)
}

pub fn read_cube_dir(dir: &Path) -> Result<WidefieldCube> {
    let index: CubeIndex = read_envelope(&dir.join("index.json"), "nvodmr-cube")?;
    let n = index.nx * index.ny;
    if index.pixels.len() != n {
        return Err(io_err(dir, format!("index lists {} pixels for a {}x{} grid", index.pixels.len(), index.nx, index.ny)));
    }
    let mut pixels = vec![None; n];
    let mut errors = Vec::new();
    let mut freqs = Vec::new();
    for p in &index.pixels {
        if p.ix >= index.nx || p.iy >= index.ny {
            return Err(io_err(dir, format!("pixel ({}, {}) outside the grid", p.ix, p.iy)));
        }
        let i = p.iy * index.nx + p.ix;
        if let Some(e) = &p.error {
            errors.push((i, e.clone()));
        }
        if let Some(f) = &p.file {
            let s = read_spectrum_csv(&dir.join(f))?;
            if freqs.is_empty() {
                freqs = s.freqs.clone();
            }
            pixels[i] = Some(s);
        }
    }
    errors.sort_by_key(|e| e.0);
    Ok(WidefieldCube { nx: index.nx, ny: index.ny, pitch: index.pitch, beam_center: index.beam_center, freqs, pixels, errors })
}

/// Flat binary cube: magic, little-endian `u64` ny, nx, n_freq, `u64`
/// JSON length, JSON metadata, `n_freq` frequencies, then contrast as
/// `[y][x][freq]`. Failed pixels are NaN.
pub fn write_cube_binary(path: &Path, cube: &WidefieldCube, metadata: &Value) -> Result<()> {
    let json = serde_json::to_vec(metadata).map_err(|e| io_err(path, e))?;
    let mut w = create(path)?;
    let nf = cube.freqs.len();
    let res = (|| -> std::io::Result<()> {
        w.write_all(CUBE_MAGIC)?;
        for v in [cube.ny as u64, cube.nx as u64, nf as u64, json.len() as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&json)?;
        for f in &cube.freqs {
            w.write_all(&f.to_le_bytes())?;
        }
        for p in &cube.pixels {
            match p {
                Some(s) => s.contrast.iter().try_for_each(|v| w.write_all(&v.to_le_bytes()))?,
                None => (0..nf).try_for_each(|_| w.write_all(&f64::NAN.to_le_bytes()))?,
            }
        }
        w.flush()
    })();
    res.map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCube {
    pub ny: usize,
    pub nx: usize,
    pub freqs: Vec<f64>,
    /// Row-major `[y][x][freq]`.
    pub data: Vec<f64>,
    pub metadata: Value,
}

impl BinaryCube {
    pub fn pixel(&self, ix: usize, iy: usize) -> &[f64] {
        let nf = self.freqs.len();
        let start = (iy * self.nx + ix) * nf;
        &self.data[start..start + nf]
    }
}

pub fn read_cube_binary(path: &Path) -> Result<BinaryCube> {
    let mut r = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
    if &magic != CUBE_MAGIC {
        return Err(io_err(path, "not an nvodmr binary cube"));
    }
    let mut u64s = [0u64; 4];
    for v in &mut u64s {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|e| io_err(path, e))?;
        *v = u64::from_le_bytes(b);
    }
    let [ny, nx, nf, json_len] = u64s.map(|v| v as usize);
    let mut json = vec![0u8; json_len];
    r.read_exact(&mut json).map_err(|e| io_err(path, e))?;
    let metadata = serde_json::from_slice(&json).map_err(|e| io_err(path, e))?;
    let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap_or([0; 8]))).collect())
    };
    let freqs = read_f64s(nf)?;
    let data = read_f64s(ny * nx * nf)?;
    Ok(BinaryCube { ny, nx, freqs, data, metadata })
}

#[derive(Serialize, Deserialize)]
struct ReconstructionBody {
    result: ReconstructionResult,
    /// Known input field, when the spectrum was simulated.
    truth: Option<FieldVector>,
    metadata: Value,
}

pub fn write_reconstruction_json(
    path: &Path,
    result: &ReconstructionResult,
    truth: Option<FieldVector>,
    metadata: &Value,
) -> Result<()> {
    write_envelope(path, "nvodmr-reconstruction", ReconstructionBody { result: result.clone(), truth, metadata: metadata.clone() })
}

pub fn read_reconstruction_json(path: &Path) -> Result<(ReconstructionResult, Option<FieldVector>, Value)> {
    let b: ReconstructionBody = read_envelope(path, "nvodmr-reconstruction")?;
    Ok((b.result, b.truth, b.metadata))
}

/// One field-map row; `None` marks a pixel whose reconstruction failed.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMapRow {
    pub x: f64,
    pub y: f64,
    pub b: Option<FieldVector>,
}

pub fn write_field_map_csv(path: &Path, rows: &[FieldMapRow], metadata: &Value) -> Result<()> {
    let mut w = create(path)?;
    write_header(&mut w, "field-map", metadata).map_err(|e| io_err(path, e))?;
    let mut c = csv::Writer::from_writer(w);
    let res = (|| -> csv::Result<()> {
        c.write_record(["x_m", "y_m", "bx_t", "by_t", "bz_t"])?;
        for r in rows {
            let b = r.b.unwrap_or(FieldVector::repeat(f64::NAN));
            c.write_record([r.x, r.y, b.x, b.y, b.z].map(|v| format!("{v:e}")))?;
        }
        c.flush()?;
        Ok(())
    })();
    res.map_err(|e| io_err(path, e))
}

pub fn read_field_map_csv(path: &Path) -> Result<Vec<FieldMapRow>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (_, body) = split_metadata(&text);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let v: Vec<f64> = rec.iter().map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| io_err(path, e))?;
        if v.len() != 5 {
            return Err(io_err(path, "expected 5 columns"));
        }
        let b = FieldVector::new(v[2], v[3], v[4]);
        rows.push(FieldMapRow { x: v[0], y: v[1], b: b.iter().all(|c| c.is_finite()).then_some(b) });
    }
    Ok(rows)
}

pub fn write_fom_csv(path: &Path, map: &FomMap, metadata: &Value) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        write_header(&mut w, "fom-heatmap", metadata)?;
        for (i, j, e) in &map.failures {
            writeln!(w, "# failed cell laser={:e} mw={:e}: {}", map.laser_grid[*i], map.mw_grid[*j], e.replace('\n', " "))?;
        }
        writeln!(w, "{FOM_CSV_HEADER}")?;
        for row in map.to_csv_rows() {
            writeln!(w, "{row}")?;
        }
        w.flush()
    })();
    res.map_err(|e| io_err(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

/// Data lines (non-comment, non-header) of a CSV file.
pub fn count_data_rows(path: &Path) -> Result<usize> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut n = 0usize;
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        if !line.starts_with('#') && !line.trim().is_empty() {
            n += 1;
        }
    }
    Ok(n.saturating_sub(1))
}

pub fn cube_pixel_path(dir: &Path, ix: usize, iy: usize) -> PathBuf {
    dir.join(pixel_file_name(ix, iy))
}
