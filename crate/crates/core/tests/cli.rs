use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cradon::grid::io::{load, save};
use cradon::grid::{AngularGrid, RadialGrid, Sinogram, SinogramKind};

const OFFSET_BUMP: &str =
    r#"{"components":[{"shape":"smooth_bump","center":[0.3,0.0],"radius":0.25,"amplitude":1.0}]}"#;

fn cradon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cradon")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_spec(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.display().to_string()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn phantom_render_writes_pgm_and_echoes_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "f.json", OFFSET_BUMP);
    let out = cradon(&["phantom", "render", "--spec", &spec, "--size", "32", "--out", &p(dir.path(), "f.pgm")]);
    assert_eq!(code(&out), 0);
    let pgm = fs::read(dir.path().join("f.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 32\n65535\n"));
    assert_eq!(pgm.len(), 15 + 2 * 32 * 32);
    assert!(stdout(&out).contains("smooth_bump"));

    let empty = write_spec(dir.path(), "e.json", r#"{"components":[]}"#);
    let out = cradon(&["phantom", "render", "--spec", &empty, "--size", "8", "--out", &p(dir.path(), "e.pgm")]);
    assert_eq!(code(&out), 0);
    assert!(fs::read(dir.path().join("e.pgm")).unwrap()[13..].iter().all(|&b| b == 0));
}

#[test]
fn bad_phantoms_and_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let outside = write_spec(
        dir.path(),
        "bad.json",
        r#"{"components":[{"shape":"smooth_bump","center":[0.8,0.0],"radius":0.3,"amplitude":1.0}]}"#,
    );
    let out = cradon(&["phantom", "render", "--spec", &outside, "--out", &p(dir.path(), "x.pgm")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("support reaches"));

    let garbled = write_spec(dir.path(), "garbled.json", "{components: 3");
    assert_eq!(code(&cradon(&["phantom", "render", "--spec", &garbled, "--out", &p(dir.path(), "x.pgm")])), 2);
    assert_eq!(code(&cradon(&["check"])), 2);
    assert_eq!(code(&cradon(&["forward", "--spec", &outside, "--angles", "100", "--out", "x"])), 2);
    let missing = p(dir.path(), "missing.csin");
    assert_eq!(code(&cradon(&["check", "--in", &missing])), 2);
    let threads = Command::new(env!("CARGO_BIN_EXE_cradon"))
        .args(["bessel", "zeros", "--order", "0", "--count", "2"])
        .env("CRADON_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&threads), 2);
}

#[test]
fn forward_then_check_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "f.json", OFFSET_BUMP);
    let (a, b) = (p(dir.path(), "a.csin"), p(dir.path(), "b.csin"));
    for out in [&a, &b] {
        assert_eq!(code(&cradon(&["forward", "--spec", &spec, "--out", out])), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let report = p(dir.path(), "report.json");
    let out = cradon(&["check", "--in", &a, "--kind", "circular", "--orders", "16", "--zeros", "10", "--out", &report]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["verdict"], "pass");
    assert_eq!(json["provenance"]["input"], a.as_str());
    for c in json["conditions"].as_array().unwrap() {
        for e in c["entries"].as_array().unwrap() {
            assert!(e["residual"].as_f64().unwrap() >= 0.0);
        }
    }
    assert_eq!(code(&cradon(&["check", "--in", &a, "--kind", "planar"])), 2);
}

#[test]
fn check_accepts_zero_data_and_rejects_noise() {
    let dir = tempfile::tempdir().unwrap();
    let angular = AngularGrid::new(64).unwrap();
    let radial = RadialGrid::new(0.0, 2.0, 129).unwrap();
    let zero = Sinogram::zeros(SinogramKind::Circular, angular, radial).unwrap();
    let zero_path = dir.path().join("zero.csin");
    save(&zero_path, &zero).unwrap();
    let out = cradon(&["check", "--in", &zero_path.display().to_string()]);
    assert_eq!(code(&out), 0);

    // a fixed pseudo-random pattern, no support or moment structure
    let mut state = 0x2545f4914f6cdd1du64;
    let noise = zero
        .map_cells(|_, _, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .unwrap();
    let noise_path = dir.path().join("noise.csv");
    save(&noise_path, &noise).unwrap();
    let out = cradon(&["check", "--in", &noise_path.display().to_string(), "--kind", "circular"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("verdict=fail"));
    assert_eq!(code(&cradon(&["check", "--in", &noise_path.display().to_string()])), 2);
}

#[test]
fn decompose_emits_harmonic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "f.json", OFFSET_BUMP);
    let g = p(dir.path(), "g.csin");
    assert_eq!(code(&cradon(&["forward", "--spec", &spec, "--angles", "32", "--radii", "65", "--out", &g])), 0);
    let csv = p(dir.path(), "h.csv");
    assert_eq!(code(&cradon(&["decompose", "--in", &g, "--orders", "4", "--out", &csv])), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,rho,re,im"));
    assert_eq!(lines.count(), 9 * 65);
    assert_eq!(code(&cradon(&["decompose", "--in", &g, "--orders", "16", "--out", &csv])), 2);
}

#[test]
fn pipeline_passes_and_perturbation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "f.json", OFFSET_BUMP);
    let clean = p(dir.path(), "clean");
    let out = cradon(&["pipeline", "--spec", &spec, "--out-dir", &clean]);
    assert_eq!(code(&out), 0);
    let line = stdout(&out);
    assert!(line.starts_with("verdict=pass l2_rel_err="), "{line}");
    let err: f64 = line.trim().rsplit('=').next().unwrap().parse().unwrap();
    assert!(err <= 0.05);
    for file in ["g.csin", "report.json", "f_rec.pgm"] {
        assert!(dir.path().join("clean").join(file).exists(), "{file}");
    }
    let sino = load(&dir.path().join("clean/g.csin"), None).unwrap();
    assert_eq!((sino.angular().count(), sino.radial().count()), (256, 512));

    let bad = p(dir.path(), "bad");
    let out = cradon(&["pipeline", "--spec", &spec, "--out-dir", &bad, "--perturb", "moment:3:1e-2"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("verdict=fail"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bad/report.json")).unwrap()).unwrap();
    let moments = json["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["condition"] == "circular_moments")
        .unwrap();
    let entry = moments["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["n"] == 3 && e["k_or_zero_index"] == 0)
        .unwrap();
    assert_eq!(entry["pass"], false);
    assert_eq!(json["provenance"]["extra"]["perturbation"], "moment:3:0.01");
}

#[test]
fn planar_pipeline_runs_planar_checks() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "f.json", OFFSET_BUMP);
    let out_dir = p(dir.path(), "planar");
    let out = cradon(&["pipeline", "--spec", &spec, "--kind", "planar", "--angles", "64", "--out-dir", &out_dir]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "verdict=pass l2_rel_err=nan");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("planar/report.json")).unwrap()).unwrap();
    let names: Vec<&str> =
        json["conditions"].as_array().unwrap().iter().map(|c| c["condition"].as_str().unwrap()).collect();
    assert_eq!(names, ["planar_evenness", "planar_moments", "planar_mellin"]);
    assert!(!dir.path().join("planar/f_rec.pgm").exists());
}

#[test]
fn invert_reports_reforward_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "f.json", OFFSET_BUMP);
    let g = p(dir.path(), "g.csin");
    assert_eq!(code(&cradon(&["forward", "--spec", &spec, "--out", &g])), 0);
    let (img, rep) = (p(dir.path(), "f.pgm"), p(dir.path(), "inv.json"));
    let out = cradon(&["invert", "--in", &g, "--orders", "8", "--size", "64", "--out", &img, "--report", &rep]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read(&img).unwrap().starts_with(b"P5\n64 64\n65535\n"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(json["reconstruction_grid"]["count"], 257);
    let residuals = json["reforward_residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 9);
    assert!(residuals[0]["relative_l2"].as_f64().unwrap() < 0.05);
}

#[test]
fn bessel_zeros_csv() {
    let out = cradon(&["bessel", "zeros", "--order", "1", "--count", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "index,zero");
    let (idx, zero) = rows[1].split_once(',').unwrap();
    assert_eq!(idx, "1");
    let z: f64 = zero.parse().unwrap();
    assert!((z - 3.831705970207512).abs() < 1e-13);
    let mantissa = zero.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 15);
}
