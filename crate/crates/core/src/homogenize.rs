//! Homogenized surface tension, Wulff shapes and the large-volume limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::Ledger;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::forcing::check_condg;
use crate::grid::PeriodicGrid;
use crate::mask::Mask;
use crate::maxflow::FlowAlgorithm;
use crate::solver::{min_cut_mask_with, minimize_volume_constrained, tilted_unary, Cell, ConstrainedOptions};
use crate::stencil::PerimeterStencil;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive integer directions with `|q|_∞ ≤ max_inf`, one per `±q` pair.
pub fn rational_directions(dim: usize, max_inf: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let r = -max_inf..=max_inf;
    let mut push = |q: Vec<i64>| {
        let g = q.iter().fold(0, |a, &b| gcd(a, b));
        let first = q.iter().find(|&&c| c != 0).copied().unwrap_or(0);
        if g == 1 && first > 0 {
            out.push(q);
        }
    };
    for a in r.clone() {
        for b in r.clone() {
            if dim == 2 {
                push(vec![a, b]);
            } else {
                for c in r.clone() {
                    push(vec![a, b, c]);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabOptions {
    /// Free band thicknesses in cells, ascending; empty means `n, 3n/2, 2n`
    /// for a unit cell of side `n`.
    pub widths: Vec<usize>,
    /// Frozen pad thickness in cells; default `max(4, ⌈4/Λ*⌉)`.
    pub pad: Option<usize>,
    pub max_cells: usize,
}

impl Default for SlabOptions {
    fn default() -> Self {
        Self { widths: Vec::new(), pad: None, max_cells: 1 << 23 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensionSample {
    pub q: Vec<i64>,
    pub nu: Vec<f64>,
    pub phi: f64,
    pub widths: Vec<usize>,
    /// Per-width estimates before extrapolation.
    pub raw: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    pub dim: usize,
    pub samples: Vec<TensionSample>,
}

impl Anisotropy {
    /// Directions given as integer vectors with prescribed values.
    pub fn from_values(dim: usize, values: &[(Vec<i64>, f64)]) -> Result<Self> {
        let samples = values
            .iter()
            .map(|(q, phi)| {
                let nu = unit(q, dim)?;
                Ok(TensionSample { q: q.clone(), nu, phi: *phi, widths: vec![], raw: vec![*phi], residual: 0.0 })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, samples })
    }

    pub fn from_fn(dim: usize, dirs: &[Vec<i64>], phi: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = dirs.iter().map(|q| Ok((q.clone(), phi(&unit(q, dim)?)))).collect::<Result<Vec<_>>>()?;
        Self::from_values(dim, &values)
    }

    pub fn to_csv(&self) -> String {
        let axes = ["nx", "ny", "nz"];
        let mut out = axes[..self.dim].join(",") + ",phi,residual\n";
        for s in &self.samples {
            for c in &s.nu {
                out.push_str(&format!("{c:.17e},"));
            }
            out.push_str(&format!("{:.17e},{:.17e}\n", s.phi, s.residual));
        }
        out
    }

    /// Samples outside `[(1 - σ) ρ(ν), 2 ρ(ν)]`, where `ρ` is the stencil's
    /// flat-interface density.
    pub fn sandwich_violations(&self, sigma_sup: f64, s: &PerimeterStencil) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, x)| {
                let rho = s.directional_density(&x.nu);
                let tol = 1e-9 * rho;
                x.phi < (1.0 - sigma_sup) * rho - tol || x.phi > 2.0 * rho + tol
            })
            .map(|(i, _)| i)
            .collect()
    }
}

fn unit(q: &[i64], dim: usize) -> Result<Vec<f64>> {
    if q.len() != dim || q.iter().all(|&c| c == 0) {
        return Err(Error::OutOfRange(format!("direction {q:?} is not a nonzero {dim}-vector")));
    }
    let n = q.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    Ok(q.iter().map(|&c| c as f64 / n).collect())
}

fn resolve_pad(g: &ScalarField, s: &PerimeterStencil, opts: &SlabOptions) -> Result<usize> {
    if let Some(p) = opts.pad {
        return Ok(p);
    }
    let lambda = check_condg(g, s)?;
    if lambda <= 0.0 {
        return Err(Error::InvalidForcing("Λ* = 0: no pad thickness keeps the slab stable".into()));
    }
    Ok(((4.0 / lambda).ceil() as usize).clamp(4, 256))
}

fn check_cell(g: &ScalarField) -> Result<()> {
    let grid = g.grid();
    if !grid.is_periodic() {
        return Err(Error::NonPeriodic);
    }
    if grid.sides().windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidGrid("unit cell must be a cube".into()));
    }
    let scale = g.sup_norm().max(1e-300);
    if g.mean().abs() > 1e-9 * scale {
        return Err(Error::InvalidForcing(format!("forcing mean {} is not zero", g.mean())));
    }
    Ok(())
}

/// Energy per unit area of the two-sheet layered minimizer for one band width.
fn slab_energy(
    g: &ScalarField,
    q: &[i64],
    width: usize,
    pad: usize,
    s: &PerimeterStencil,
    max_cells: usize,
) -> Result<f64> {
    let cell = g.grid();
    let d = cell.dim();
    let n = cell.sides()[0];
    let h = cell.h();
    let len = cell.length(0);
    let qn = q.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    let nu: Vec<f64> = q.iter().map(|&c| c as f64 / qn).collect();
    // layer period mL/|q| must hold two free bands and two pads
    let need = (2.0 * (width + 2 * pad) as f64 * h * qn / len).ceil().max(1.0) as i64;
    let tiles = |m: i64| -> Vec<usize> { q.iter().map(|&c| (m / gcd(m, c)) as usize).collect() };
    let span = q.iter().fold(1i64, |a, &c| if c == 0 { a } else { a / gcd(a, c) * c.abs() });
    let m = (need..need + span).min_by_key(|&m| tiles(m).iter().product::<usize>()).expect("nonempty range");
    let sides: Vec<usize> = tiles(m).iter().map(|k| k * n).collect();
    let cells = sides.iter().try_fold(1usize, |a, &b| a.checked_mul(b)).unwrap_or(usize::MAX);
    if cells > max_cells {
        return Err(Error::GridTooLarge { cells, limit: max_cells });
    }
    let big = PeriodicGrid::new(&sides, h)?;
    let gb = g.tiled(big.clone())?;
    let period = m as f64 * len / qn;
    let half_band = 0.5 * width as f64 * h;
    let fixed: Vec<Cell> = (0..big.cell_count())
        .map(|i| {
            let x = big.center(i);
            let t = (0..d).map(|a| x[a] * nu[a]).sum::<f64>().rem_euclid(period);
            let to_lower = t.min(period - t);
            let to_upper = (t - 0.5 * period).abs();
            if to_lower <= half_band || to_upper <= half_band {
                Cell::Free
            } else if t > 0.5 * period {
                Cell::In
            } else {
                Cell::Out
            }
        })
        .collect();
    let m = min_cut_mask_with(&big, s, &tilted_unary(&gb, 0.0), Some(&fixed), FlowAlgorithm::Dinic)?;
    let l = Ledger::of(&m, &gb, s)?;
    let area = 2.0 * big.total_volume() / period;
    Ok(l.energy / area)
}

fn extrapolate(raw: &[f64]) -> (f64, f64) {
    match raw.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (raw[0], 0.0),
        2 => (raw[1], (raw[1] - raw[0]).abs()),
        n => {
            let (a, b, c) = (raw[n - 3], raw[n - 2], raw[n - 1]);
            let (d1, d2) = (b - a, c - b);
            let residual = d2.abs();
            let denom = d2 - d1;
            let ratio = if d1 != 0.0 { d2 / d1 } else { 0.0 };
            if denom.abs() > 1e-14 * c.abs().max(1.0) && ratio > 0.0 && ratio < 1.0 {
                (c - d2 * d2 / denom, residual)
            } else {
                (c, residual)
            }
        }
    }
}

/// `φ(ν)` for `ν = q/|q|` from layered slabs of growing free width, Aitken
/// extrapolated over the last three widths.
pub fn cell_surface_tension(
    g: &ScalarField,
    q: &[i64],
    s: &PerimeterStencil,
    opts: &SlabOptions,
) -> Result<TensionSample> {
    check_cell(g)?;
    s.check_grid(g.grid())?;
    let pad = resolve_pad(g, s, opts)?;
    tension_with_pad(g, q, s, opts, pad)
}

fn tension_with_pad(
    g: &ScalarField,
    q: &[i64],
    s: &PerimeterStencil,
    opts: &SlabOptions,
    pad: usize,
) -> Result<TensionSample> {
    let d = g.grid().dim();
    let nu = unit(q, d)?;
    let gq = q.iter().fold(0, |a, &b| gcd(a, b));
    let q: Vec<i64> = q.iter().map(|c| c / gq).collect();
    let n = g.grid().sides()[0];
    let widths = if opts.widths.is_empty() { vec![n, n + n / 2, 2 * n] } else { opts.widths.clone() };
    if widths.windows(2).any(|w| w[0] >= w[1]) || widths[0] == 0 {
        return Err(Error::OutOfRange("slab widths must be positive and increasing".into()));
    }
    let raw = widths.iter().map(|&w| slab_energy(g, &q, w, pad, s, opts.max_cells)).collect::<Result<Vec<_>>>()?;
    let (phi, residual) = extrapolate(&raw);
    Ok(TensionSample { q, nu, phi, widths, raw, residual })
}

/// `φ` on every direction of `dirs`, in parallel.
pub fn surface_tension(
    g: &ScalarField,
    dirs: &[Vec<i64>],
    s: &PerimeterStencil,
    opts: &SlabOptions,
) -> Result<Anisotropy> {
    check_cell(g)?;
    s.check_grid(g.grid())?;
    let pad = resolve_pad(g, s, opts)?;
    let samples = dirs.par_iter().map(|q| tension_with_pad(g, q, s, opts, pad)).collect::<Result<Vec<_>>>()?;
    Ok(Anisotropy { dim: g.grid().dim(), samples })
}

#[derive(Clone, Debug)]
pub struct WulffShape {
    pub dim: usize,
    /// Unit normals of the constraints, both signs.
    pub normals: Vec<[f64; 3]>,
    /// Support values at the target volume.
    pub support: Vec<f64>,
    /// Polygon vertices in counter-clockwise order (2D) or polytope vertices (3D),
    /// centred at the origin, at the target volume.
    pub vertices: Vec<[f64; 3]>,
    /// Vertex indices of each facet (3D only).
    pub faces: Vec<Vec<usize>>,
    /// Constraint index of each edge (2D, edge `i` runs from vertex `i`) or facet (3D).
    pub facet_normal: Vec<usize>,
    pub volume: f64,
    /// `|W|` for the sampled `φ` before scaling.
    pub unit_volume: f64,
    pub scale: f64,
    /// `∮ φ(ν)` over the boundary at the target volume.
    pub f0: f64,
    /// The same for the unscaled shape.
    pub f0_unit: f64,
    pub perimeter: f64,
}

const EPS: f64 = 1e-12;

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn lerp(p: &[f64; 3], q: &[f64; 3], t: f64) -> [f64; 3] {
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]
}

/// Clips a labelled convex polygon by `n·x ≤ c`. Label `i` belongs to the edge leaving vertex `i`.
fn clip_polygon(
    poly: &[([f64; 3], Option<usize>)],
    n: &[f64; 3],
    c: f64,
    label: usize,
) -> Vec<([f64; 3], Option<usize>)> {
    let mut out = Vec::new();
    let k = poly.len();
    let tol = EPS * c.abs().max(1.0);
    for i in 0..k {
        let (p, lab) = poly[i];
        let (q, _) = poly[(i + 1) % k];
        let (fp, fq) = (dot(n, &p) - c, dot(n, &q) - c);
        let (pin, qin) = (fp <= tol, fq <= tol);
        match (pin, qin) {
            (true, true) => out.push((p, lab)),
            (true, false) => {
                out.push((p, lab));
                if fp < -tol {
                    out.push((lerp(&p, &q, fp / (fp - fq)), Some(label)));
                } else {
                    out.last_mut().expect("pushed").1 = Some(label);
                }
            }
            (false, true) => {
                if fq < -tol {
                    out.push((lerp(&p, &q, fp / (fp - fq)), lab));
                }
            }
            (false, false) => {}
        }
    }
    out
}

fn polygon_area(v: &[[f64; 3]]) -> f64 {
    let k = v.len();
    0.5 * (0..k).map(|i| v[i][0] * v[(i + 1) % k][1] - v[(i + 1) % k][0] * v[i][1]).sum::<f64>()
}

fn facet_area(v: &[[f64; 3]]) -> f64 {
    let mut a = [0.0; 3];
    for i in 1..v.len().saturating_sub(1) {
        let c = cross(&sub(&v[i], &v[0]), &sub(&v[i + 1], &v[0]));
        a = [a[0] + c[0], a[1] + c[1], a[2] + c[2]];
    }
    0.5 * dot(&a, &a).sqrt()
}

struct Polytope {
    /// `(constraint, ordered vertices)` per facet; `None` marks the bounding box.
    faces: Vec<(Option<usize>, Vec<[f64; 3]>)>,
}

impl Polytope {
    fn cube(r: f64) -> Self {
        let mut faces = Vec::new();
        for a in 0..3 {
            for sgn in [-1.0, 1.0] {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let mut f = Vec::new();
                for (u, w) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                    let mut p = [0.0; 3];
                    p[a] = sgn * r;
                    p[b] = u * r;
                    p[c] = w * r * sgn;
                    f.push(p);
                }
                faces.push((None, f));
            }
        }
        Self { faces }
    }

    fn clip(&mut self, n: &[f64; 3], c: f64, label: usize) {
        let tol = EPS * c.abs().max(1.0);
        let mut cap: Vec<[f64; 3]> = Vec::new();
        let mut faces = Vec::new();
        for (lab, f) in self.faces.drain(..) {
            let k = f.len();
            let mut out = Vec::new();
            for i in 0..k {
                let (p, q) = (f[i], f[(i + 1) % k]);
                let (fp, fq) = (dot(n, &p) - c, dot(n, &q) - c);
                if fp <= tol {
                    out.push(p);
                    if fp.abs() <= tol {
                        cap.push(p);
                    }
                }
                if (fp < -tol && fq > tol) || (fp > tol && fq < -tol) {
                    let r = lerp(&p, &q, fp / (fp - fq));
                    out.push(r);
                    cap.push(r);
                }
            }
            if out.len() >= 3 && facet_area(&out) > tol * tol {
                faces.push((lab, out));
            }
        }
        let mut pts: Vec<[f64; 3]> = Vec::new();
        for p in cap {
            if !pts.iter().any(|q| dot(&sub(q, &p), &sub(q, &p)).sqrt() <= 1e-9 * c.abs().max(1.0)) {
                pts.push(p);
            }
        }
        if pts.len() >= 3 {
            let k = pts.len() as f64;
            let ctr = pts.iter().fold([0.0; 3], |a, p| [a[0] + p[0] / k, a[1] + p[1] / k, a[2] + p[2] / k]);
            let e1 = {
                let trial = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let u = cross(n, &trial);
                let l = dot(&u, &u).sqrt();
                [u[0] / l, u[1] / l, u[2] / l]
            };
            let e2 = cross(n, &e1);
            pts.sort_by(|a, b| {
                let (da, db) = (sub(a, &ctr), sub(b, &ctr));
                let ta = dot(&da, &e2).atan2(dot(&da, &e1));
                let tb = dot(&db, &e2).atan2(dot(&db, &e1));
                ta.total_cmp(&tb)
            });
            // keep the facet oriented with outward normal n
            pts.reverse();
            if facet_area(&pts) > tol * tol {
                faces.push((Some(label), pts));
            }
        }
        self.faces = faces;
    }

    fn volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|(_, f)| {
                let mut s = 0.0;
                for i in 1..f.len() - 1 {
                    s += dot(&f[0], &cross(&f[i], &f[i + 1]));
                }
                s / 6.0
            })
            .sum::<f64>()
            .abs()
    }
}

/// Intersection of `{x·ν ≤ φ(ν)}` over the samples and their negatives,
/// scaled to volume `v`, optionally rasterized about the centre of `grid`.
pub fn wulff_shape(a: &Anisotropy, v: f64, grid: Option<&PeriodicGrid>) -> Result<WulffShape> {
    let d = a.dim;
    if !(d == 2 || d == 3) {
        return Err(Error::InvalidGrid(format!("dimension {d}")));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::OutOfRange(format!("volume {v}")));
    }
    let mut normals: Vec<[f64; 3]> = Vec::new();
    let mut phis = Vec::new();
    for s in &a.samples {
        if !(s.phi > 0.0 && s.phi.is_finite()) {
            return Err(Error::OutOfRange(format!("φ({:?}) = {} is not positive", s.q, s.phi)));
        }
        for sgn in [1.0, -1.0] {
            let mut n = [0.0; 3];
            for (t, c) in s.nu.iter().enumerate() {
                n[t] = sgn * c;
            }
            if !normals.iter().any(|m| dot(m, &n) > 1.0 - 1e-12) {
                normals.push(n);
                phis.push(s.phi);
            }
        }
    }
    let need = if d == 2 { 8 } else { 26 };
    if normals.len() < need {
        return Err(Error::InsufficientDirections { got: normals.len(), need });
    }
    let pmin = phis.iter().copied().fold(f64::INFINITY, f64::min);
    let pmax = phis.iter().copied().fold(0.0, f64::max);
    let r = 64.0 * pmax;
    let unbounded = || Error::InsufficientDirections { got: normals.len(), need };
    let (unit_volume, vertices, faces, facet_normal) = if d == 2 {
        let mut poly: Vec<([f64; 3], Option<usize>)> =
            vec![([-r, -r, 0.0], None), ([r, -r, 0.0], None), ([r, r, 0.0], None), ([-r, r, 0.0], None)];
        for (i, n) in normals.iter().enumerate() {
            poly = clip_polygon(&poly, n, phis[i], i);
        }
        if poly.len() < 3 || poly.iter().any(|p| p.1.is_none()) {
            return Err(unbounded());
        }
        let verts: Vec<[f64; 3]> = poly.iter().map(|p| p.0).collect();
        let labels = poly.iter().map(|p| p.1.expect("bounded")).collect();
        (polygon_area(&verts), verts, Vec::new(), labels)
    } else {
        let mut p = Polytope::cube(r);
        for (i, n) in normals.iter().enumerate() {
            p.clip(n, phis[i], i);
        }
        if p.faces.is_empty() || p.faces.iter().any(|f| f.0.is_none()) {
            return Err(unbounded());
        }
        let mut verts: Vec<[f64; 3]> = Vec::new();
        let mut faces = Vec::new();
        let mut labels = Vec::new();
        for (lab, f) in &p.faces {
            let mut idx = Vec::new();
            for q in f {
                let j = match verts.iter().position(|w| dot(&sub(w, q), &sub(w, q)) <= 1e-18 * pmax * pmax) {
                    Some(j) => j,
                    None => {
                        verts.push(*q);
                        verts.len() - 1
                    }
                };
                idx.push(j);
            }
            faces.push(idx);
            labels.push(lab.expect("bounded"));
        }
        (p.volume(), verts, faces, labels)
    };
    if !(unit_volume > 0.0) || pmin <= 0.0 {
        return Err(Error::OutOfRange("degenerate Wulff shape".into()));
    }
    let scale = (v / unit_volume).powf(1.0 / d as f64);
    let (f0_unit, perimeter_unit) = if d == 2 {
        let k = vertices.len();
        (0..k).fold((0.0, 0.0), |(f, p), i| {
            let e = sub(&vertices[(i + 1) % k], &vertices[i]);
            let len = dot(&e, &e).sqrt();
            (f + len * phis[facet_normal[i]], p + len)
        })
    } else {
        faces.iter().zip(&facet_normal).fold((0.0, 0.0), |(f, p), (idx, &l)| {
            let pts: Vec<[f64; 3]> = idx.iter().map(|&j| vertices[j]).collect();
            let ar = facet_area(&pts);
            (f + ar * phis[l], p + ar)
        })
    };
    let sd = scale.powi(d as i32 - 1);
    let vertices: Vec<[f64; 3]> = vertices.iter().map(|p| [p[0] * scale, p[1] * scale, p[2] * scale]).collect();
    let support: Vec<f64> = phis.iter().map(|p| p * scale).collect();
    let mut w = WulffShape {
        dim: d,
        normals,
        support,
        vertices,
        faces,
        facet_normal,
        volume: v,
        unit_volume,
        scale,
        f0: f0_unit * sd,
        f0_unit,
        perimeter: perimeter_unit * sd,
    };
    if let Some(grid) = grid {
        if grid.dim() != d {
            return Err(Error::GridMismatch("raster grid dimension".into()));
        }
        let _ = w.rasterize(grid);
    }
    Ok(w)
}

impl WulffShape {
    /// Cells whose centre lies in the shape placed at the domain centre.
    pub fn rasterize(&mut self, grid: &PeriodicGrid) -> Mask {
        let d = self.dim;
        let c = grid.domain_center();
        Mask::from_fn(grid.clone(), |x| {
            let mut y = [0.0; 3];
            for a in 0..d {
                y[a] = x[a] - c[a];
            }
            self.normals.iter().zip(&self.support).all(|(n, &p)| dot(n, &y) <= p * (1.0 + 1e-12))
        })
    }

    /// Exact check that every polygon turn is to the left (2D) or that every
    /// vertex satisfies every constraint (3D).
    pub fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let tol = 1e-9 * self.scale.max(1.0);
        if self.dim == 2 {
            let k = v.len();
            (0..k).all(|i| {
                let (a, b, c) = (v[i], v[(i + 1) % k], v[(i + 2) % k]);
                cross(&sub(&b, &a), &sub(&c, &b))[2] >= -tol * tol
            })
        } else {
            v.iter().all(|p| self.normals.iter().zip(&self.support).all(|(n, &s)| dot(n, p) <= s + tol))
        }
    }

    pub fn vertex_text(&self) -> String {
        let mut out = String::new();
        for p in &self.vertices {
            let cs: Vec<String> = p[..self.dim].iter().map(|c| format!("{c:.17e}")).collect();
            out.push_str(&cs.join(" "));
            out.push('\n');
        }
        for f in &self.faces {
            let cs: Vec<String> = f.iter().map(|j| j.to_string()).collect();
            out.push_str(&format!("f {}\n", cs.join(" ")));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub v: f64,
    pub tiles: usize,
    pub volume: f64,
    /// `|Ẽ_v Δ W| / |W|` after the best lattice translation.
    pub symdiff: f64,
    /// `ε^{d-1} F(E_v)` with `ε = (|W|/v)^{1/d}`.
    pub energy_rescaled: f64,
    pub f0: f64,
    /// `energy_rescaled / f0 - 1`.
    pub gap: f64,
    /// `τ + 3h P(W_v)/|W_v|`.
    pub tol: f64,
    pub limsup_ok: bool,
    pub lower_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("v,tiles,volume,symdiff,energy_rescaled,f0,gap,tol,limsup_ok,lower_ok\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
                r.v, r.tiles, r.volume, r.symdiff, r.energy_rescaled, r.f0, r.gap, r.tol, r.limsup_ok, r.lower_ok
            ));
        }
        out
    }
}

/// Volume-constrained minimizers on tiled copies of the unit cell `g`, compared
/// with the Wulff shape of `a` after rescaling and optimal translation. The
/// refinement band is widened to at least half a unit cell and the rasterized
/// Wulff shape joins the initial guesses.
pub fn asymptotic_convergence(
    g: &ScalarField,
    v_list: &[f64],
    a: &Anisotropy,
    s: &PerimeterStencil,
    opts: &ConstrainedOptions,
) -> Result<ConvergenceTable> {
    check_cell(g)?;
    if v_list.is_empty() || v_list.windows(2).any(|w| w[0] >= w[1]) || v_list[0] <= 0.0 {
        return Err(Error::OutOfRange("volumes must be positive and increasing".into()));
    }
    let cell = g.grid();
    let d = cell.dim();
    let n = cell.sides()[0];
    let len = cell.length(0);
    let h = cell.h();
    let unit = wulff_shape(a, 1.0, None)?;
    let opts = ConstrainedOptions { band: opts.band.max(n / 2), ..opts.clone() };
    let tau = s.tau();
    let rows = v_list
        .iter()
        .map(|&v| {
            let w = wulff_shape(a, v, None)?;
            let extent = w.vertices.iter().map(|p| dot(p, p).sqrt()).fold(0.0, f64::max);
            let tiles = ((4.0 * extent / len).ceil() as usize).max(2);
            let grid = PeriodicGrid::new(&vec![tiles * n; d], h)?;
            let gb = g.tiled(grid.clone())?;
            let mut w = w;
            let raster = w.rasterize(&grid);
            let half = vec![(n / 2) as i64; d];
            let opts = ConstrainedOptions { starts: vec![raster.clone(), raster.translated(&half)], ..opts.clone() };
            let r = minimize_volume_constrained(&gb, v, s, &opts)?;
            let (_, sd) = r.mask.best_translation_overlap(&raster)?;
            let eps = (unit.unit_volume / r.volume()).powf(1.0 / d as f64);
            let energy_rescaled = eps.powi(d as i32 - 1) * r.energy();
            let f0 = unit.f0_unit;
            let gap = energy_rescaled / f0 - 1.0;
            let tol = tau + 3.0 * h * w.perimeter / w.volume;
            Ok(ConvergenceRow {
                v,
                tiles,
                volume: r.volume(),
                symdiff: sd / raster.volume().max(f64::MIN_POSITIVE),
                energy_rescaled,
                f0,
                gap,
                tol,
                limsup_ok: gap <= tol,
                lower_ok: gap >= -tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].symdiff < w[0].symdiff);
    Ok(ConvergenceTable { rows, strictly_decreasing })
}
