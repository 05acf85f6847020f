// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use purcell_core::spectrum::uniform_grid;
use purcell_core::{generalized_purcell, CavityMode, EmitterModel, LineShape, Spectrum};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_purcell-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write_spectrum(dir: &TempDir, name: &str, s: &Spectrum) -> PathBuf {
    let path = dir.path().join(name);
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn nv_spectrum() -> (Vec<LineShape>, Spectrum) {
    let truth = EmitterModel::reference().emission_lines(1000.0).unwrap();
    let grid = uniform_grid(620.0, 880.0, 0.1);
    let s = Spectrum::from_frequency_fn(&grid, "nv", |nu| truth.iter().map(|l| l.value(nu)).sum()).unwrap();
    (truth, s)
}

fn write_guess(dir: &TempDir, lines: &[LineShape], shift: f64) -> PathBuf {
    let guess: Vec<LineShape> = lines
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            LineShape::lorentzian(l.center() + sign * shift, l.fwhm() * 1.1, l.area() * 0.9).unwrap()
        })
        .collect();
    let path = dir.path().join("guess.json");
    std::fs::write(&path, serde_json::to_string(&guess).unwrap()).unwrap();
    path
}

#[test]
fn fit_round_trip() {
    let dir = TempDir::new().unwrap();
    let (truth, s) = nv_spectrum();
    let input = write_spectrum(&dir, "nv.csv", &s);
    let guess = write_guess(&dir, &truth, 0.1);
    let out = dir.path().join("fit.json");
    let o = run(&[
        "--no-timestamp",
        "fit",
        "--input",
        p(&input),
        "--initial",
        p(&guess),
        "--output",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert_eq!(v["converged"], true);
    let norm: f64 = s.intensities().iter().map(|y| y * y).sum();
    assert!(v["chi2"].as_f64().unwrap() < 1e-12 * norm);
    let lines = v["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 8);
    for (l, t) in lines.iter().zip(&truth) {
        assert!((l["center_thz"].as_f64().unwrap() - t.center()).abs() < 1e-6);
    }
    assert!(v.get("meta").is_some() && v["meta"].get("generated_at_unix").is_none());
}

#[test]
fn fit_input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let (truth, _) = nv_spectrum();
    let guess = write_guess(&dir, &truth, 0.1);
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["fit", "--input", p(&empty), "--initial", p(&guess)]);
    assert_eq!(code(&o), 1);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "wavelength_nm,intensity\n630,1\n631,oops\n").unwrap();
    let o = run(&["fit", "--input", p(&bad), "--initial", p(&guess)]);
    assert_eq!(code(&o), 1);
    assert!(
        String::from_utf8_lossy(&o.stderr).contains(":3:"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn fit_non_convergence_exits_two_with_output() {
    let dir = TempDir::new().unwrap();
    let (truth, s) = nv_spectrum();
    let input = write_spectrum(&dir, "nv.csv", &s);
    let guess = write_guess(&dir, &truth, 1.5);
    let out = dir.path().join("fit.json");
    let o = run(&[
        "fit",
        "--input",
        p(&input),
        "--initial",
        p(&guess),
        "--max-iterations",
        "1",
        "--output",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(read_json(&out)["converged"], false);
}

#[test]
fn sweep_outputs() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("sweep.csv");
    let o = run(&[
        "--no-timestamp",
        "sweep",
        "--output",
        p(&csv),
        "--start-nm",
        "620",
        "--stop-nm",
        "700",
        "--step-nm",
        "0.5",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 161);
    let summary = stdout_json(&o);
    let op = &summary["operating_point"];
    assert!((op["purcell_enhancement"].as_f64().unwrap() - 1.7).abs() < 0.15);
    assert!((op["beta"].as_f64().unwrap() - 0.42).abs() < 0.04);
    assert!((op["intensity_enhancement"].as_f64().unwrap() - 1.2).abs() < 0.05);
}

#[test]
fn one_point_sweep_matches_library() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("one.csv");
    let o = run(&["sweep", "--output", p(&csv), "--start-nm", "653", "--stop-nm", "653"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    let r = generalized_purcell(&EmitterModel::reference(), &CavityMode::m1_c1());
    assert_eq!(row[0], 653.0);
    assert_eq!(row[1], r.f_star);
    assert_eq!(row[2], r.beta);
    for (x, c) in row[3..].iter().zip(&r.per_line) {
        assert_eq!(*x, c.f_star);
    }
}

#[test]
fn sweep_rejects_insane_grid() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("s.csv");
    assert_eq!(code(&run(&["sweep", "--output", p(&csv), "--start-nm", "150"])), 1);
    assert_eq!(code(&run(&["sweep", "--output", p(&csv), "--stop-nm", "2500"])), 1);
}

fn zpl_spectrum(n_lines: usize, area: f64, offset: f64) -> Spectrum {
    let centers = [636.4, 637.1, 637.9];
    let lines: Vec<LineShape> = centers[..n_lines]
        .iter()
        .map(|&nm| LineShape::gaussian(purcell_core::wavelength_to_frequency(nm).unwrap(), 0.25, area).unwrap())
        .collect();
    let grid = uniform_grid(625.0, 650.0, 0.01);
    Spectrum::from_frequency_fn(&grid, "zpl", |nu| {
        offset + lines.iter().map(|l| l.value(nu)).sum::<f64>()
    })
    .unwrap()
}

#[test]
fn count_three_zpls() {
    let dir = TempDir::new().unwrap();
    let input = write_spectrum(&dir, "zpl.csv", &zpl_spectrum(3, 0.7, 0.0));
    let o = run(&["count", "--input", p(&input), "--reference-area", "0.7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!((v["count"].as_f64().unwrap() - 3.0).abs() < 0.01);
    assert_eq!(v["integer_interval"], serde_json::json!([2, 4]));
}

#[test]
fn count_background_only_is_zero() {
    let dir = TempDir::new().unwrap();
    let input = write_spectrum(&dir, "bg.csv", &zpl_spectrum(0, 0.7, 5.0));
    let o = run(&[
        "count",
        "--input",
        p(&input),
        "--reference-area",
        "0.7",
        "--background",
        "constant",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["count"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn count_reversed_window_exits_one() {
    let dir = TempDir::new().unwrap();
    let input = write_spectrum(&dir, "zpl.csv", &zpl_spectrum(3, 0.7, 0.0));
    let o = run(&[
        "count",
        "--input",
        p(&input),
        "--reference-area",
        "0.7",
        "--window-nm",
        "645",
        "629",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn dose_plan_defaults() {
    let o = run(&["dose", "plan", "--target", "1"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["dose_per_cm2"].as_f64().unwrap(), 1.0e13);
    assert!((v["single_emitter_probability"].as_f64().unwrap() - 0.368).abs() < 5e-4);
    assert_eq!(v["spot_area_is_default"], true);
    assert_eq!(code(&run(&["dose", "plan", "--target", "0"])), 1);
}

#[test]
fn dose_plan_at_given_dose() {
    let o = run(&["dose", "plan", "--dose-per-cm2", "3e13", "--spot-area-cm2", "1.25e-11"]);
    let v = stdout_json(&o);
    assert!((v["expected_count"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(v["spot_area_is_default"], false);
}

#[test]
fn dose_yield_on_series() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("series.csv");
    let mut text = String::from("dose_ions_per_cm2,count,count_sigma\n");
    for (d, c) in [
        (3e13, 3.0),
        (6e13, 6.0),
        (1e14, 9.0),
        (2e14, 21.0),
        (3e14, 29.0),
        (4.4e14, 45.0),
    ] {
        let mu: f64 = 0.008 * 1.25e-11 * d;
        text.push_str(&format!("{d},{c},{}\n", mu.sqrt()));
    }
    std::fs::write(&path, text).unwrap();
    let o = run(&["dose", "yield", "--input", p(&path)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let y = v["yield"].as_f64().unwrap();
    let s = v["sigma"].as_f64().unwrap();
    assert!((y - 0.008).abs() < 2.0 * s, "{y} ± {s}");
    assert_eq!(v["points"].as_array().unwrap().len(), 6);
}

#[test]
fn reports_are_deterministic() {
    let a = run(&["--no-timestamp", "reproduce-paper"]);
    let b = run(&["reproduce-paper", "--no-timestamp"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let stamped = stdout_json(&run(&["reproduce-paper"]));
    assert!(stamped["meta"]["generated_at_unix"].as_u64().is_some());
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"plan": {"target": 3, "k_max": 2}, "no_timestamp": true}"#).unwrap();
    let v = stdout_json(&run(&["--config", p(&cfg), "dose", "plan"]));
    assert_eq!(v["dose_per_cm2"].as_f64().unwrap(), 3e13);
    assert_eq!(v["distribution"].as_array().unwrap().len(), 3);
    let v = stdout_json(&run(&["--config", p(&cfg), "dose", "plan", "--target", "1"]));
    assert_eq!(v["dose_per_cm2"].as_f64().unwrap(), 1e13);

    std::fs::write(&cfg, r#"{"no_such_flag": 1}"#).unwrap();
    assert_eq!(code(&run(&["--config", p(&cfg), "dose", "plan"])), 1);
}
