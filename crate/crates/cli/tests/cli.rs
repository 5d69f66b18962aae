use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nvodmr::io;
use nvodmr::physics::zfs_temperature;

fn nvodmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvodmr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn repo_config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

const SMALL: &str = r#"
[apparatus]
p_laser = 0.02
p_mw_dbm = 10.0

[sweep]
f_start = 2.855e9
f_end = 2.875e9
n_freq = 401
"#;

#[test]
fn zero_field_simulation_has_one_dip_at_the_zero_field_splitting() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5", "--no-noise", "simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 dips"), "{}", stdout(&o));

    let s = io::read_spectrum_csv(&out.join("spectrum.csv")).unwrap();
    let j = io::read_spectrum_json(&out.join("spectrum.json")).unwrap();
    assert_eq!(s.contrast, j.contrast);
    let k = (0..s.contrast.len()).max_by(|a, b| s.contrast[*a].total_cmp(&s.contrast[*b])).unwrap();
    let step = s.freqs[1] - s.freqs[0];
    assert!((s.freqs[k] - zfs_temperature(300.0)).abs() <= step);
    assert_eq!(j.metadata["run"]["seed"], 5);
    assert_eq!(j.metadata["run"]["command"], "simulate");
    assert_eq!(j.metadata["run"]["config"]["apparatus"]["p_mw_dbm"], 10.0);
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    // one output directory, since the resolved config (including it) is embedded
    let out = tmp.path().join("o");
    let run = |seed: &str, threads: &str| {
        let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed, "--threads", threads, "simulate"]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("spectrum.csv")).unwrap()
    };
    let a = run("11", "1");
    assert_eq!(a, run("11", "2"));
    assert_ne!(a, run("12", "1"));
}

#[test]
fn unseeded_runs_record_the_drawn_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "simulate"]);
    assert!(o.status.success());
    let printed: u64 = stderr(&o).trim().strip_prefix("seed: ").unwrap().parse().unwrap();
    let j = io::read_spectrum_json(&out.join("spectrum.json")).unwrap();
    assert_eq!(j.metadata["run"]["seed"], printed);
}

#[test]
fn reconstruction_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nvodmr(&["--config", &repo_config("reconstruct.toml"), "--out", tmp.path().to_str().unwrap(), "--no-noise", "reconstruct"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (r, truth, meta) = io::read_reconstruction_json(&tmp.path().join("reconstruction.json")).unwrap();
    let truth = truth.unwrap();
    assert!((truth - nvodmr::FieldVector::new(5e-6, 4e-6, 3e-6)).norm() < 1e-15);
    for e in (r.b_actual - truth).iter() {
        assert!(e.abs() < 0.5e-6, "{:?}", r.b_actual);
    }
    assert!(r.zfs.is_some());
    assert_eq!(meta["seed"], 3);
    let rows = io::read_field_map_csv(&tmp.path().join("field_map.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].b, Some(r.b_actual));
}

#[test]
fn reconstruct_reads_a_saved_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    // the sample sits in the bias field, so the recovered value is the target
    let body = std::fs::read_to_string(repo_config("reconstruct.toml"))
        .unwrap()
        .replace("b = [5e-6, 4e-6, 3e-6]", "b = [0.805e-3, 0.304e-3, 0.603e-3]");
    let cfg = write_config(tmp.path(), &body);
    let cfg = cfg.to_str().unwrap().to_string();
    let out = tmp.path().to_str().unwrap();
    assert!(nvodmr(&["--config", &cfg, "--out", out, "--no-noise", "simulate"]).status.success());
    let input = tmp.path().join("spectrum.json");
    let o = nvodmr(&["--config", &cfg, "--out", out, "reconstruct", "--input", input.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (r, truth, _) = io::read_reconstruction_json(&tmp.path().join("reconstruction.json")).unwrap();
    assert!(truth.is_none());
    assert!((r.b_actual - nvodmr::FieldVector::new(5e-6, 4e-6, 3e-6)).amax() < 0.5e-6, "{:?}", r.b_actual);
}

#[test]
fn widefield_cube_and_field_map() {
    let tmp = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(repo_config("widefield.toml")).unwrap().replace("nx = 4\nny = 4", "nx = 2\nny = 1");
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().to_str().unwrap();
    let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", out, "--no-noise", "widefield"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bin = io::read_cube_binary(&tmp.path().join("cube.bin")).unwrap();
    assert_eq!((bin.ny, bin.nx, bin.freqs.len()), (1, 2, 1601));
    assert_eq!(bin.metadata["command"], "widefield");

    let cube = tmp.path().join("cube");
    let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", out, "reconstruct", "--input", cube.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = io::read_field_map_csv(&tmp.path().join("field_map.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    // 1 T/m along x over a 3 um pitch
    let (l, r) = (rows[0].b.unwrap(), rows[1].b.unwrap());
    assert!(rows[0].x < rows[1].x);
    assert!(((r.x - l.x) - 3e-6).abs() < 0.5e-6, "{l:?} {r:?}");
    assert!((r.y - l.y).abs() < 0.5e-6);
}

#[test]
fn denoise_reports_snr_gain() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = nvodmr(&["--out", out, "--seed", "1", "denoise"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("denoise_report.json")).unwrap()).unwrap();
    let raw = report["snr_raw_db"].as_f64().unwrap();
    let after = report["snr_filtered_db"].as_f64().unwrap();
    assert!(after > raw, "{raw} -> {after}");
    assert_eq!(report["gaussian_scan"].as_array().unwrap().len(), 8);
    let s = io::read_spectrum_csv(&tmp.path().join("spectrum_denoised.csv")).unwrap();
    assert_eq!(s.freqs.len(), 501);
}

#[test]
fn sweep_fom_grid_has_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}\n[sweep_fom]\nlaser_w = [0.005, 0.01, 0.02]\nmw_dbm = [5.0, 10.0, 15.0]\n");
    let cfg = write_config(tmp.path(), &body);
    let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "--no-noise", "sweep-fom"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("best FOM"));
    assert_eq!(io::count_data_rows(&tmp.path().join("fom.csv")).unwrap(), 9);
}

#[test]
fn bad_configs_exit_nonzero_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (body, field) in [
        ("bogus = 1\n", "bogus"),
        ("[sweep]\nn_freq = 1\n", "sweep.n_freq"),
        ("[apparatus]\np_laser = -1.0\n", "apparatus.p_laser"),
        ("[apparatus]\np_mw_dbm = 80.0\n", "apparatus.p_mw_dbm"),
    ] {
        let cfg = write_config(tmp.path(), body);
        let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "simulate"]);
        assert!(!o.status.success(), "{body}");
        assert!(stderr(&o).contains(field), "{body}: {}", stderr(&o));
    }
    let o = nvodmr(&["--config", "/nonexistent/run.toml", "simulate"]);
    assert!(!o.status.success());
    let o = nvodmr(&["--threads", "0", "simulate"]);
    assert!(!o.status.success());
}

#[test]
fn failed_reconstruction_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    // no bias in the sample field: the 8 dips collapse and the solve must refuse
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[reconstruct]\nbias = [0.8e-3, 0.3e-3, 0.6e-3]\n"));
    let o = nvodmr(&["--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "--seed", "1", "--no-noise", "reconstruct"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn selftest_subset() {
    let o = nvodmr(&["selftest", "--only", "1,9,10"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{out}");
}
