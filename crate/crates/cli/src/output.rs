//! Artifact writer: every file goes through one `Output`, which records its
//! sha256 for the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use prescurv_core::io::{header_path, write_field, write_mask};
use prescurv_core::{Mask, ScalarField};
use sha2::{Digest, Sha256};

use crate::{CliError, Config};

pub const MANIFEST: &str = "manifest.txt";

pub struct Output {
    dir: PathBuf,
    command: String,
    config: Config,
    artifacts: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Output {
    pub fn create(dir: &Path, command: &str, config: &Config) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command: command.into(), config: config.clone(), artifacts: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = std::fs::read(self.dir.join(name))?;
        self.artifacts.retain(|(n, _)| n != name);
        self.artifacts.push((name.into(), sha256_hex(&bytes)));
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), contents)?;
        self.record(name)
    }

    /// PGM mask plus its `.hdr` grid header.
    pub fn mask(&mut self, name: &str, m: &Mask) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_mask(&path, m)?;
        self.record(name)?;
        let hdr = header_path(&path);
        self.record(&hdr.file_name().expect("file name").to_string_lossy())
    }

    pub fn field(&mut self, name: &str, f: &ScalarField) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_field(&path, f)?;
        self.record(name)?;
        let hdr = header_path(&path);
        self.record(&hdr.file_name().expect("file name").to_string_lossy())
    }

    pub fn artifacts(&self) -> &[(String, String)] {
        &self.artifacts
    }

    /// Writes the manifest: command, run id, seed, artifact hashes and the
    /// effective config. Contains no timestamps or absolute paths.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "run_id = {}", self.config.run_id);
        let _ = writeln!(s, "seed = {}", self.config.seed);
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        s.push_str("\n[artifacts]\n");
        let mut arts = self.artifacts.clone();
        arts.sort();
        for (n, h) in &arts {
            let _ = writeln!(s, "{h}  {n}");
        }
        s.push_str("\n[config]\n");
        let mut echo = self.config.clone();
        echo.out = None;
        s.push_str(&echo.to_toml());
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, s)?;
        Ok(path)
    }
}

/// Reads the `[artifacts]` block of a manifest as `(name, sha256)` pairs.
pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    let mut inside = false;
    for line in text.lines() {
        if line.starts_with('[') {
            inside = line == "[artifacts]";
            continue;
        }
        if inside {
            if let Some((h, n)) = line.split_once("  ") {
                out.push((n.to_string(), h.to_string()));
            }
        }
    }
    Ok(out)
}

/// Shortest round-trip representation, so CSVs are bit-exact and diffable.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

/// Line plot of `(x, y)` series with optional per-point vertical whiskers.
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    /// Segment slopes drawn as short ticks through each point.
    pub slopes: Vec<Option<(f64, f64)>>,
}

impl Plot {
    pub fn svg(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 56.0);
        let pts = self.series.iter().flat_map(|s| s.points.iter().copied());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ =
            writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#, b = h - m, r = w - m);
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
                px(xv),
                h - m + 14.0,
                short(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
                m - 4.0,
                py(yv) + 3.0,
                short(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
            w / 2.0,
            esc(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            w / 2.0,
            h - 12.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            esc(&self.y_label)
        );
        let dx = 0.03 * (x1 - x0);
        for (k, ser) in self.series.iter().enumerate() {
            let d: Vec<String> = ser
                .points
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { 'M' } else { 'L' }, px(x), py(y)))
                .collect();
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, d.join(" "), ser.color);
            for (i, &(x, y)) in ser.points.iter().enumerate() {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, px(x), py(y), ser.color);
                if let Some(Some((left, right))) = ser.slopes.get(i) {
                    for (slope, side, col) in [(left, -1.0, "#c0392b"), (right, 1.0, "#2471a3")] {
                        let xe = x + side * dx;
                        let ye = y + slope * side * dx;
                        let _ = writeln!(
                            s,
                            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{col}"/>"#,
                            px(x),
                            py(y),
                            px(xe),
                            py(ye)
                        );
                    }
                }
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11" fill="{}">{}</text>"#,
                w - m - 120.0,
                m + 14.0 * k as f64,
                ser.color,
                esc(&ser.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn short(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-2 || x.abs() >= 1e4) {
        format!("{x:.2e}")
    } else {
        format!("{x:.3}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Closed polygon outline in its own bounding box.
pub fn polygon_svg(vertices: &[[f64; 3]]) -> String {
    let size = 400.0;
    let r = vertices.iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max).max(1e-300) * 1.1;
    let p = |v: &[f64; 3]| ((v[0] / r + 1.0) * size / 2.0, (1.0 - v[1] / r) * size / 2.0);
    let d: Vec<String> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (x, y) = p(v);
            format!("{}{x:.3} {y:.3}", if i == 0 { 'M' } else { 'L' })
        })
        .collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\">\n\
         <rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n\
         <path d=\"{} Z\" fill=\"#d6eaf8\" stroke=\"#1b4f72\" stroke-width=\"1.5\"/>\n</svg>\n",
        d.join(" ")
    )
}
