//! `nvodmr` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use nvodmr::acceptance;
use nvodmr::config::RunConfig;
use nvodmr::engine::{simulate_spectrum, simulate_widefield, snr_db, ApparatusConfig, Spectrum};
use nvodmr::io;
use nvodmr::optimize::sweep_fom;
use nvodmr::physics::G_NV;
use nvodmr::reconstruct::{detect_and_fit, find_and_fit_peaks, refine_exact, reconstruct_field_with, ReconstructionResult};
use nvodmr::reconstruct::filters::gaussian_filter_1d;
use nvodmr::{FieldVector, NoiseConfig, RandomSource};

#[derive(Parser, Debug)]
#[command(name = "nvodmr", version, about = "CW-ODMR simulation and vector magnetometry for NV ensembles")]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Disable every noise source.
    #[arg(long, global = true)]
    no_noise: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one spectrum (CSV + JSON).
    Simulate,
    /// Simulate a wide-field cube under a Gaussian beam.
    Widefield,
    /// Reconstruct the field from a spectrum, a cube directory, or a fresh simulation.
    Reconstruct {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Filter a spectrum and report the SNR.
    Denoise {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Figure-of-merit heatmap over laser and MW power.
    SweepFom,
    /// Run the acceptance suite.
    Selftest {
        /// Criteria to run (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

struct Run {
    cfg: RunConfig,
    app: ApparatusConfig,
    noise: NoiseConfig,
    seed: u64,
    out: PathBuf,
    command: &'static str,
}

impl Run {
    fn new(cli: &Cli, command: &'static str) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::from_path(p).with_context(|| format!("loading {}", p.display()))?,
            None => RunConfig::default(),
        };
        let seed = match cli.seed.or(cfg.seed) {
            Some(s) => s,
            None => {
                let s = rand::random::<u64>();
                eprintln!("seed: {s}");
                s
            }
        };
        cfg.seed = Some(seed);
        if cli.no_noise {
            cfg.noise = NoiseConfig::disabled();
        }
        if let Some(out) = &cli.out {
            cfg.output.dir = out.clone();
        }
        let app = cfg.apparatus()?;
        Ok(Self { noise: cfg.noise.clone(), out: cfg.output.dir.clone(), app, seed, cfg, command })
    }

    fn src(&self) -> RandomSource {
        RandomSource::new(self.seed)
    }

    fn provenance(&self) -> Value {
        json!({
            "tool": "nvodmr",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "config": self.cfg,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn tag(&self, mut s: Spectrum) -> Spectrum {
        s.metadata = json!({ "simulation": s.metadata, "run": self.provenance() });
        s
    }

    fn simulate(&self, b: &FieldVector, noise: &NoiseConfig) -> Result<Spectrum> {
        Ok(self.tag(simulate_spectrum(b, &self.app, noise, &self.cfg.sweep, self.src())?))
    }
}

fn written(path: &Path) {
    println!("wrote {}", path.display());
}

fn cmd_simulate(run: &Run) -> Result<()> {
    let s = run.simulate(&run.cfg.field.uniform(), &run.noise)?;
    let csv = run.path(&format!("{}.csv", run.cfg.output.stem));
    let js = run.path(&format!("{}.json", run.cfg.output.stem));
    io::write_spectrum_csv(&csv, &s)?;
    io::write_spectrum_json(&js, &s)?;
    written(&csv);
    written(&js);
    let fits = detect_and_fit(&s.freqs, &s.contrast, &run.cfg.reconstruct.detect)?;
    println!("{} dips", fits.len());
    for f in fits.iter().take(16) {
        println!("  {:.6} GHz  contrast {:.4}  FWHM {:.3} MHz", f.fit.center * 1e-9, f.fit.amplitude, f.fit.fwhm() * 1e-6);
    }
    if fits.len() > 16 {
        println!("  ... {} more; raise reconstruct.detect.prominence for noisy data", fits.len() - 16);
    }
    Ok(())
}

fn cmd_widefield(run: &Run) -> Result<()> {
    let field = run.cfg.field.clone();
    let cube = simulate_widefield(|x, y| field.at(x, y), &run.app, &run.noise, &run.cfg.sweep, &run.cfg.widefield, run.src())?;
    let dir = run.path("cube");
    io::write_cube_dir(&dir, &cube, &run.provenance())?;
    written(&dir);
    if run.cfg.output.binary_cube {
        let bin = run.path("cube.bin");
        io::write_cube_binary(&bin, &cube, &run.provenance())?;
        written(&bin);
    }
    for (i, e) in &cube.errors {
        eprintln!("pixel {i}: {e}");
    }
    println!("{} of {} pixels simulated", cube.pixels.iter().flatten().count(), cube.pixels.len());
    Ok(())
}

fn reconstruct_one(run: &Run, s: &Spectrum) -> Result<ReconstructionResult> {
    let rc = &run.cfg.reconstruct;
    let assignment = rc.assignment()?;
    let centers = find_and_fit_peaks(s, &rc.detect)?;
    let g = nvodmr::physics::gamma_nv(G_NV);
    let linear = reconstruct_field_with(&centers, &assignment, &rc.bias_field(), g)?;
    Ok(if rc.refine { refine_exact(&linear, &rc.bias_field(), G_NV)? } else { linear })
}

fn fmt_ut(b: &FieldVector) -> String {
    format!("({:+.4}, {:+.4}, {:+.4}) uT", b.x * 1e6, b.y * 1e6, b.z * 1e6)
}

fn cmd_reconstruct(run: &Run, input: Option<PathBuf>) -> Result<()> {
    let input = input.or_else(|| run.cfg.reconstruct.input.clone());
    if let Some(dir) = input.as_ref().filter(|p| p.is_dir()) {
        return reconstruct_cube(run, dir);
    }
    let bias = run.cfg.reconstruct.bias_field();
    let (spectrum, truth) = match &input {
        Some(p) => (io::read_spectrum(p).with_context(|| format!("reading {}", p.display()))?, None),
        None => {
            let b = run.cfg.field.uniform();
            (run.simulate(&(bias + b), &run.noise)?, Some(b))
        }
    };
    let r = reconstruct_one(run, &spectrum)?;
    let js = run.path("reconstruction.json");
    io::write_reconstruction_json(&js, &r, truth, &run.provenance())?;
    written(&js);
    let map = run.path("field_map.csv");
    io::write_field_map_csv(&map, &[io::FieldMapRow { x: 0.0, y: 0.0, b: Some(r.b_actual) }], &run.provenance())?;
    written(&map);
    println!("B = {}", fmt_ut(&r.b_actual));
    if let Some(t) = truth {
        println!("error = {}", fmt_ut(&(r.b_actual - t)));
    }
    Ok(())
}

fn reconstruct_cube(run: &Run, dir: &Path) -> Result<()> {
    let cube = io::read_cube_dir(dir).with_context(|| format!("reading cube {}", dir.display()))?;
    let results: Vec<(usize, Result<ReconstructionResult>)> = (0..cube.pixels.len())
        .into_par_iter()
        .map(|i| {
            let r = match &cube.pixels[i] {
                Some(s) => reconstruct_one(run, s),
                None => Err(anyhow::anyhow!("pixel was not simulated")),
            };
            (i, r)
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut per_pixel = Vec::with_capacity(results.len());
    let mut failed = 0;
    for (i, r) in results {
        let (ix, iy) = (i % cube.nx, i / cube.nx);
        let (x, y) = cube.position(ix, iy);
        match r {
            Ok(r) => {
                rows.push(io::FieldMapRow { x, y, b: Some(r.b_actual) });
                per_pixel.push(json!({ "ix": ix, "iy": iy, "result": r }));
            }
            Err(e) => {
                failed += 1;
                rows.push(io::FieldMapRow { x, y, b: None });
                per_pixel.push(json!({ "ix": ix, "iy": iy, "error": e.to_string() }));
            }
        }
    }
    let js = run.path("reconstruction.json");
    io::write_json(&js, &json!({ "format": "nvodmr-reconstruction-cube", "version": 1, "pixels": per_pixel, "metadata": run.provenance() }))?;
    written(&js);
    let map = run.path("field_map.csv");
    io::write_field_map_csv(&map, &rows, &run.provenance())?;
    written(&map);
    println!("{} of {} pixels reconstructed", rows.len() - failed, rows.len());
    Ok(())
}

fn cmd_denoise(run: &Run, input: Option<PathBuf>) -> Result<()> {
    let dn = &run.cfg.denoise;
    let input = input.or_else(|| dn.input.clone());
    let (noisy, reference) = match &input {
        Some(p) => (io::read_spectrum(p).with_context(|| format!("reading {}", p.display()))?, None),
        None => {
            let b = run.cfg.field.uniform();
            (run.simulate(&b, &run.noise)?, Some(run.simulate(&b, &NoiseConfig::disabled())?))
        }
    };
    let filter = dn.filter();
    let filtered = filter.apply(&noisy.contrast);
    let mut out = noisy.with_contrast(filtered.clone());
    out.photon_counts = None;
    out.metadata = json!({ "source": noisy.metadata, "filter": filter.name(), "settings": dn, "run": run.provenance() });
    let csv = run.path(&format!("{}_denoised.csv", run.cfg.output.stem));
    io::write_spectrum_csv(&csv, &out)?;
    written(&csv);

    let mut report = json!({
        "filter": filter.name(),
        "settings": dn,
        "rms_change": nvodmr::reconstruct::filters::rms_difference(&noisy.contrast, &filtered),
        "metadata": run.provenance(),
    });
    if let Some(r) = &reference {
        let raw = snr_db(&noisy.contrast, &r.contrast)?;
        let after = snr_db(&filtered, &r.contrast)?;
        let scan: Vec<Value> = dn
            .scan
            .iter()
            .map(|s| Ok(json!({ "sigma": s, "snr_db": snr_db(&gaussian_filter_1d(&noisy.contrast, *s), &r.contrast)? })))
            .collect::<Result<_>>()?;
        report["snr_raw_db"] = json!(raw);
        report["snr_filtered_db"] = json!(after);
        report["gaussian_scan"] = json!(scan);
        println!("SNR raw {raw:.2} dB -> {} {after:.2} dB", filter.name());
    }
    let js = run.path("denoise_report.json");
    io::write_json(&js, &report)?;
    written(&js);
    Ok(())
}

fn cmd_sweep_fom(run: &Run) -> Result<()> {
    let sf = &run.cfg.sweep_fom;
    let map = sweep_fom(&run.cfg.field.uniform(), &run.app, &run.cfg.sweep, &sf.laser_w, &sf.mw_watts(), &sf.settings(&run.noise), run.src())?;
    let csv = run.path("fom.csv");
    io::write_fom_csv(&csv, &map, &run.provenance())?;
    written(&csv);
    for (i, j, e) in &map.failures {
        eprintln!("cell laser={:e} W mw={:e} W failed: {e}", map.laser_grid[*i], map.mw_grid[*j]);
    }
    if let Some(p) = map.argmax().and_then(|(i, j)| map.get(i, j)) {
        println!(
            "best FOM {:.3e} /Hz at P_laser {:.3e} W, P_mw {:.3e} W (contrast {:.4}, FWHM {:.3} MHz)",
            p.fom, p.p_laser, p.p_mw, p.contrast, p.linewidth * 1e-6
        );
    }
    Ok(())
}

fn cmd_selftest(only: &[usize]) -> bool {
    let ids: Vec<usize> = if only.is_empty() { acceptance::CRITERIA.iter().map(|c| c.id).collect() } else { only.to_vec() };
    let mut ok = true;
    for id in ids {
        let o = acceptance::run(id);
        println!("{}", o.line());
        ok &= o.passed;
    }
    ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let name = match &cli.command {
        Command::Simulate => "simulate",
        Command::Widefield => "widefield",
        Command::Reconstruct { .. } => "reconstruct",
        Command::Denoise { .. } => "denoise",
        Command::SweepFom => "sweep-fom",
        Command::Selftest { only } => return Ok(cmd_selftest(only)),
    };
    let run = Run::new(cli, name)?;
    match &cli.command {
        Command::Simulate => cmd_simulate(&run)?,
        Command::Widefield => cmd_widefield(&run)?,
        Command::Reconstruct { input } => cmd_reconstruct(&run, input.clone())?,
        Command::Denoise { input } => cmd_denoise(&run, input.clone())?,
        Command::SweepFom => cmd_sweep_fom(&run)?,
        Command::Selftest { .. } => unreachable!(),
    }
    Ok(true)
}
