use std::path::{Path, PathBuf};
use std::process::Command;

use prescurv_cli::output::{read_manifest, sha256_hex};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: &str) -> (i32, String, String) {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_prescurv"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn csv_value(path: PathBuf, key: &str) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    if header == ["key", "value"] {
        return lines.find_map(|l| l.strip_prefix(&format!("{key},"))).unwrap().to_string();
    }
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == key).unwrap()].to_string()
}

fn report_value(path: PathBuf, key: &str) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().find_map(|l| l.strip_prefix(&format!("{key} = "))).unwrap().parse().unwrap()
}

#[test]
fn solve_empty_volume_and_manifest() {
    let t = TempDir::new().unwrap();
    let (code, _, err) = run(t.path(), &["solve"], "[grid]\nn = 16\n[solve]\nv = 0.0\n");
    assert_eq!(code, 0, "{err}");
    let out = t.path().join("out");
    assert_eq!(csv_value(out.join("solve.csv"), "cells"), "0");
    assert_eq!(csv_value(out.join("solve.csv"), "energy"), "0.0");
    let arts = read_manifest(&out.join("manifest.txt")).unwrap();
    let names: Vec<&str> = arts.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["mask.hdr", "mask.pgm", "solve.csv"]);
    for (n, h) in &arts {
        assert_eq!(&sha256_hex(&std::fs::read(out.join(n)).unwrap()), h);
    }
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("[config]") && manifest.contains("n = 16"));
}

#[test]
fn config_errors_exit_2() {
    let t = TempDir::new().unwrap();
    assert_eq!(run(t.path(), &["solve"], "[solve]\nv = 2.0\n").0, 2);
    assert_eq!(run(t.path(), &["solve"], "[grid]\ncells = 4\n").0, 2);
    assert_eq!(run(t.path(), &["solve"], "[solve]\ntol_lambda = 0.0\n").0, 2);
    assert_eq!(run(t.path(), &["sweep"], "[sweep]\nv_list = []\n").0, 2);
    assert_eq!(run(t.path(), &["solve", "--jobs", "0"], "").0, 2);
    assert_eq!(run(t.path(), &["frobnicate"], "").0, 2);
}

#[test]
fn solve_matches_oracle_fixture() {
    let t = TempDir::new().unwrap();
    let fixture = include_str!("../fixtures/oracle_4x4_seed42.csv");
    let line = fixture.lines().find(|l| l.starts_with("min,2.0,")).unwrap();
    let f: Vec<&str> = line.split(',').collect();
    let cfg = "seed = 42\n[grid]\nn = 4\n[forcing]\ntype = \"random\"\namplitude = 24.0\n\
               [solve]\nmode = \"unconstrained\"\nlambda = 2.0\n";
    let (code, _, err) = run(t.path(), &["solve"], cfg);
    assert_eq!(code, 0, "{err}");
    let out = t.path().join("out");
    let mask = prescurv_core::io::read_mask(&out.join("mask.pgm")).unwrap();
    assert_eq!(prescurv_cli::verify::bits(&mask), f[3]);
    let energy: f64 = csv_value(out.join("solve.csv"), "energy").parse().unwrap();
    let tilted = energy - 2.0 * mask.volume();
    assert!((tilted - f[2].parse::<f64>().unwrap()).abs() < 1e-12);
}

#[test]
fn penalized_solve_reports_lemma() {
    let t = TempDir::new().unwrap();
    let cfg = "[grid]\nn = 32\n[forcing]\ntype = \"trig\"\nmodes = [{ k = [1, 0], amplitude = 0.5 }]\n\
               [solve]\nmode = \"penalized\"\nv = 0.1\n";
    let (code, _, err) = run(t.path(), &["solve"], cfg);
    assert_eq!(code, 0, "{err}");
    assert_eq!(csv_value(t.path().join("out/solve.csv"), "lemma_vol_holds"), "true");
}

#[test]
fn sweep_of_zero_forcing() {
    let t = TempDir::new().unwrap();
    let cfg = "[grid]\nn = 128\n[sweep]\nv_min = 0.004\nv_max = 0.25\ncount = 9\n";
    let (code, _, err) = run(t.path(), &["sweep"], cfg);
    assert_eq!(code, 0, "{err}");
    let out = t.path().join("out");
    let slope = report_value(out.join("report.txt"), "scaling_slope");
    assert!((slope - 0.5).abs() < 0.03, "{slope}");
    assert_eq!(report_value(out.join("report.txt"), "subadditive_violations"), 0.0);
    let svg = std::fs::read_to_string(out.join("curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<circle"));
    assert_eq!(std::fs::read_to_string(out.join("curve.csv")).unwrap().lines().count(), 10);
}

#[test]
fn check_g_reports() {
    let t = TempDir::new().unwrap();
    let (code, _, err) = run(t.path(), &["check-g"], "[grid]\nn = 16\n");
    assert_eq!(code, 0, "{err}");
    let out = t.path().join("out/check_g.csv");
    assert_eq!(csv_value(out.clone(), "lambda_star"), "1.0");
    assert_eq!(csv_value(out, "sigma_sup"), "0.0");

    let cfg = format!(
        "[grid]\nn = 32\n[forcing]\ntype = \"trig\"\nmodes = [{{ k = [1, 0], amplitude = {} }}]\n",
        std::f64::consts::PI
    );
    assert_eq!(run(t.path(), &["check-g"], &cfg).0, 0);
    let sigma: f64 = csv_value(t.path().join("out/check_g.csv"), "sigma_sup").parse().unwrap();
    assert!((sigma - 0.5).abs() < 1e-8, "{sigma}");

    let (code, _, _) = run(t.path(), &["check-g"], "[grid]\nn = 8\n[forcing]\ntype = \"random\"\n");
    assert_eq!(code, 3);
    let (code, _, err) = run(t.path(), &["check-g"], "[grid]\nn = 8\n[forcing]\ntype = \"random\"\nzero_mean = true\n");
    assert_eq!(code, 0, "{err}");
}

#[test]
fn wulff_of_zero_forcing() {
    let t = TempDir::new().unwrap();
    let cfg = "[grid]\nn = 8\n[wulff]\nmax_q = 2\nvolume = 1.0\nraster = 64\n";
    let (code, _, err) = run(t.path(), &["wulff"], cfg);
    assert_eq!(code, 0, "{err}");
    let out = t.path().join("out");
    let csv = std::fs::read_to_string(out.join("tension.csv")).unwrap();
    for l in csv.lines().skip(1) {
        let phi: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!((phi - 1.0).abs() <= 0.0275 + 1e-12, "{l}");
    }
    assert_eq!(csv.lines().count(), 9);
    assert!((report_value(out.join("report.txt"), "volume") - 1.0).abs() < 1e-12);
    assert!(out.join("wulff.svg").exists() && out.join("wulff.pgm").exists());

    let few = "[grid]\nn = 8\n[wulff]\ndirections = [[1, 0], [0, 1]]\n";
    assert_eq!(run(t.path(), &["wulff"], few).0, 2);
}

#[test]
fn asym_single_volume() {
    let t = TempDir::new().unwrap();
    let cfg = "[grid]\nn = 8\n[asym]\nv_list = [0.5]\nmax_q = 2\n";
    let (code, _, err) = run(t.path(), &["asym"], cfg);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(t.path().join("out/convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(run(t.path(), &["asym"], "[grid]\nn = 8\n").0, 2);
}

#[test]
fn nondiff_quick_preset() {
    let t = TempDir::new().unwrap();
    let (code, _, err) = run(t.path(), &["example-nondiff", "--quick"], "");
    assert_eq!(code, 0, "{err}");
    let rep = t.path().join("out/transition.txt");
    assert!(report_value(rep.clone(), "lambda_jump") > 0.0);
    assert!(report_value(rep.clone(), "f_jump") <= report_value(rep.clone(), "f_slack"));
    assert!(report_value(rep.clone(), "v_a") < report_value(rep, "v_b"));
    assert!(t.path().join("out/switch_b.pgm").exists());
}

#[test]
fn oracle_verify_and_corrupted_fixture() {
    let t = TempDir::new().unwrap();
    let (code, stdout, err) = run(t.path(), &["oracle-verify", "--quick"], "");
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("PASS fixture"));
    assert!(stdout.contains("PASS oracle-energy"));

    let good = include_str!("../fixtures/oracle_4x4_seed42.csv");
    let path = t.path().join("bad.csv");
    let cfg = format!("[verify]\nfixture = {:?}\n", path.to_str().unwrap());
    let flipped: String = good
        .lines()
        .map(|l| match l.strip_prefix("isovol,5,") {
            Some(f) => format!("isovol,5,{}\n", f.parse::<f64>().unwrap() + 0.5),
            None => format!("{l}\n"),
        })
        .collect();
    std::fs::write(&path, flipped).unwrap();
    assert_eq!(run(t.path(), &["oracle-verify", "--quick"], &cfg).0, 3);
    std::fs::write(&path, good.replacen("grid,", "grd,", 1)).unwrap();
    assert_eq!(run(t.path(), &["oracle-verify", "--quick"], &cfg).0, 2);
}

#[test]
fn identical_runs_hash_identically() {
    let cfg = "seed = 7\n[grid]\nn = 24\n[forcing]\ntype = \"random\"\nzero_mean = true\namplitude = 2.0\n\
               [sweep]\nv_list = [0.05, 0.1, 0.2]\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_eq!(run(d.path(), &["sweep", "--jobs", "2"], cfg).0, 0);
    }
    let ma = std::fs::read(a.path().join("out/manifest.txt")).unwrap();
    let mb = std::fs::read(b.path().join("out/manifest.txt")).unwrap();
    assert_eq!(ma, mb);
    let (_, _, _) = run(b.path(), &["sweep", "--seed", "8"], cfg);
    let mc = std::fs::read(b.path().join("out/manifest.txt")).unwrap();
    assert_ne!(ma, mc);
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        prescurv_cli::Config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 4);
}
