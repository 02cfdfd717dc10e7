//! Mask and field files: binary PGM (P5) or raw little-endian `f64`, each with a
//! `.hdr` text sidecar holding the grid.
//!
//! ```text
//! dim 2
//! sides 64 64
//! h 0.015625
//! boundary periodic periodic
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{AxisBoundary, PeriodicGrid};
use crate::mask::Mask;

pub fn header_path(data: &Path) -> PathBuf {
    data.with_extension("hdr")
}

pub fn format_header(g: &PeriodicGrid) -> String {
    let join = |v: Vec<String>| v.join(" ");
    format!(
        "dim {}\nsides {}\nh {:e}\nboundary {}\n",
        g.dim(),
        join(g.sides().iter().map(|s| s.to_string()).collect()),
        g.h(),
        join(g.boundary().iter().map(|b| b.as_str().to_string()).collect()),
    )
}

pub fn parse_header(text: &str) -> Result<PeriodicGrid> {
    let mut dim = None;
    let mut sides = None;
    let mut h = None;
    let mut boundary = None;
    let bad = |m: &str| Error::Format(format!("header: {m}"));
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or_default();
        let rest: Vec<&str> = it.collect();
        match key {
            "dim" => dim = rest.first().and_then(|s| s.parse::<usize>().ok()),
            "sides" => sides = rest.iter().map(|s| s.parse::<usize>().ok()).collect::<Option<Vec<_>>>(),
            "h" => h = rest.first().and_then(|s| s.parse::<f64>().ok()),
            "boundary" => boundary = rest.iter().map(|s| AxisBoundary::parse(s)).collect::<Option<Vec<_>>>(),
            _ => return Err(bad(&format!("unknown key {key}"))),
        }
    }
    let dim = dim.ok_or_else(|| bad("missing dim"))?;
    let sides = sides.ok_or_else(|| bad("missing sides"))?;
    if sides.len() != dim {
        return Err(bad("sides do not match dim"));
    }
    let h = h.ok_or_else(|| bad("missing h"))?;
    let boundary = boundary.unwrap_or_else(|| vec![AxisBoundary::Periodic; dim]);
    PeriodicGrid::with_boundary(&sides, h, &boundary)
}

fn write_header(data: &Path, g: &PeriodicGrid) -> Result<()> {
    fs::write(header_path(data), format_header(g))?;
    Ok(())
}

fn read_header(data: &Path) -> Result<PeriodicGrid> {
    parse_header(&fs::read_to_string(header_path(data))?)
}

/// Image width is the last axis; remaining axes are stacked as rows.
fn image_shape(g: &PeriodicGrid) -> (usize, usize) {
    let w = *g.sides().last().unwrap();
    (w, g.cell_count() / w)
}

pub fn write_mask(path: &Path, m: &Mask) -> Result<()> {
    let (w, rows) = image_shape(m.grid());
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{w} {rows}\n255\n")?;
    let bytes: Vec<u8> = m.cells().iter().map(|&b| if b { 255 } else { 0 }).collect();
    f.write_all(&bytes)?;
    write_header(path, m.grid())
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    let grid = read_header(path)?;
    let data = fs::read(path)?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < data.len() && (data[pos].is_ascii_whitespace() || data[pos] == b'#') {
            if data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Format("not a binary PGM".into()));
    }
    let w: usize = token()?.parse().map_err(|_| Error::Format("bad width".into()))?;
    let rows: usize = token()?.parse().map_err(|_| Error::Format("bad height".into()))?;
    let maxval: usize = token()?.parse().map_err(|_| Error::Format("bad maxval".into()))?;
    if (w, rows) != image_shape(&grid) || maxval != 255 {
        return Err(Error::GridMismatch("image shape differs from header".into()));
    }
    let body = &data[pos + 1..];
    if body.len() != grid.cell_count() {
        return Err(Error::Format("truncated PGM body".into()));
    }
    Mask::new(grid, body.iter().map(|&b| b >= 128).collect())
}

pub fn write_field(path: &Path, f: &ScalarField) -> Result<()> {
    let bytes: Vec<u8> = f.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes)?;
    write_header(path, f.grid())
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let grid = read_header(path)?;
    read_field_on(path, grid)
}

/// Reads raw values, checking the count against `grid`.
pub fn read_field_on(path: &Path, grid: PeriodicGrid) -> Result<ScalarField> {
    let data = fs::read(path)?;
    if data.len() != grid.cell_count() * 8 {
        return Err(Error::GridMismatch(format!("{} bytes for {} cells", data.len(), grid.cell_count())));
    }
    let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    ScalarField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("prescurv-io-{}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d.join(name)
    }

    #[test]
    fn mask_round_trip() {
        let g = PeriodicGrid::with_boundary(
            &[3, 4, 5],
            0.5,
            &[AxisBoundary::Periodic, AxisBoundary::Closed, AxisBoundary::Open],
        )
        .unwrap();
        let m = Mask::from_indices(g, [0, 7, 59]);
        let p = tmp("m.pgm");
        write_mask(&p, &m).unwrap();
        assert_eq!(read_mask(&p).unwrap(), m);
    }

    #[test]
    fn field_round_trip() {
        let g = PeriodicGrid::torus(2, 6, 1.0).unwrap();
        let f = ScalarField::from_fn(g.clone(), |x| (x[0] * 7.0).sin() / 3.0);
        let p = tmp("f.f64");
        write_field(&p, &f).unwrap();
        assert_eq!(read_field(&p).unwrap(), f);
        assert!(read_field_on(&p, PeriodicGrid::torus(2, 5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn header_errors() {
        assert!(parse_header("dim 2\nsides 4\nh 1").is_err());
        assert!(parse_header("dim 2\nsides 4 4\nh 0.25\ncolour red").is_err());
        let g = parse_header("dim 2\nsides 4 4\nh 0.25").unwrap();
        assert!(g.is_periodic());
    }
}
