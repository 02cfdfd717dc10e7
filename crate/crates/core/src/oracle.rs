//! Exhaustive minimizers on tiny grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::Ledger;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mask::Mask;
use crate::stencil::PerimeterStencil;

/// Largest cell count accepted for enumeration.
pub const ORACLE_CELL_LIMIT: usize = 20;

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Every global minimizer, in enumeration order of their bit patterns.
    pub minimizers: Vec<Mask>,
    pub ledger: Ledger,
    pub energy: f64,
}

impl OracleResult {
    /// Intersection of all minimizers.
    pub fn minimal(&self) -> Mask {
        let mut m = self.minimizers[0].clone();
        for o in &self.minimizers[1..] {
            m = m.intersection(o).expect("same grid");
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsovolRow {
    pub cells: usize,
    pub volume: f64,
    pub f: f64,
    /// `(f(k) - f(k-1)) / h^d`.
    pub left: Option<f64>,
    /// `(f(k+1) - f(k)) / h^d`.
    pub right: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IsovolTable {
    pub rows: Vec<IsovolRow>,
    /// One minimizer per cell count.
    pub minimizers: Vec<Mask>,
}

impl IsovolTable {
    pub fn f(&self, cells: usize) -> f64 {
        self.rows[cells].f
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.17e}"));
        let mut s = String::from("cells,volume,f,left,right\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.17e},{:.17e},{},{}\n", r.cells, r.volume, r.f, opt(r.left), opt(r.right)));
        }
        s
    }

    /// Pairs `(a, b)` with `f(a+b) > f(a) + f(b)` beyond roundoff.
    pub fn subadditivity_violations(&self) -> Vec<(usize, usize)> {
        let n = self.rows.len() - 1;
        let mut out = Vec::new();
        for a in 1..=n {
            for b in a..=n - a {
                let lhs = self.f(a + b);
                let rhs = self.f(a) + self.f(b);
                if lhs > rhs + 1e-12 * (1.0 + rhs.abs()) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

struct Enumerator {
    n: usize,
    /// Per cell: `(k, other)` for every stencil pair touching it.
    incident: Vec<Vec<(usize, Option<usize>)>>,
    weights: Vec<f64>,
    hd: f64,
    g: Vec<f64>,
    tol: f64,
}

#[derive(Clone, Default)]
struct Bucket {
    best: f64,
    candidates: Vec<(f64, u32)>,
}

impl Bucket {
    fn offer(&mut self, e: f64, bits: u32, tol: f64) {
        if self.candidates.is_empty() || e < self.best {
            self.best = e;
        }
        if e <= self.best + tol {
            self.candidates.push((e, bits));
            if self.candidates.len() > 4096 {
                self.prune(tol);
            }
        }
    }

    fn prune(&mut self, tol: f64) {
        let best = self.best;
        self.candidates.retain(|&(e, _)| e <= best + tol);
    }

    fn merge(mut self, other: Bucket, tol: f64) -> Bucket {
        if other.candidates.is_empty() {
            return self;
        }
        if self.candidates.is_empty() || other.best < self.best {
            self.best = other.best;
        }
        self.candidates.extend(other.candidates);
        self.prune(tol);
        self
    }
}

impl Enumerator {
    fn new(g: &ScalarField, s: &PerimeterStencil) -> Result<Self> {
        let grid = g.grid();
        s.check_grid(grid)?;
        let n = grid.cell_count();
        if n > ORACLE_CELL_LIMIT {
            return Err(Error::GridTooLarge { cells: n, limit: ORACLE_CELL_LIMIT });
        }
        let mut incident = vec![Vec::new(); n];
        s.for_each_pair(grid, |k, x, y| {
            if y == Some(x) {
                return;
            }
            incident[x].push((k, y));
            if let Some(y) = y {
                incident[y].push((k, Some(x)));
            }
        });
        let weights: Vec<f64> = (0..s.offsets().len()).map(|k| s.cut_weight(k, grid)).collect();
        let hd = grid.cell_volume();
        let scale = 1.0
            + g.values().iter().map(|v| v.abs()).sum::<f64>() * hd
            + incident.iter().flatten().map(|&(k, _)| weights[k]).sum::<f64>();
        Ok(Self { n, incident, weights, hd, g: g.values().to_vec(), tol: 1e-9 * scale })
    }

    /// Walks the Gray code of the low `n - top` bits with the high bits fixed to `chunk`.
    fn walk(&self, chunk: u32, top: usize, per_count: bool) -> Vec<Bucket> {
        let low = self.n - top;
        let mut bits: u32 = chunk << low;
        let mut counts = vec![0i64; self.weights.len()];
        let inside = |bits: u32, x: usize| bits >> x & 1 == 1;
        for x in 0..self.n {
            for &(k, y) in &self.incident[x] {
                let other = y.is_some_and(|y| inside(bits, y));
                // each interior pair is listed at both ends
                if inside(bits, x) != other && (y.is_none() || y.unwrap() > x) {
                    counts[k] += 1;
                }
            }
        }
        let (mut gs, mut gc) = (0.0f64, 0.0f64);
        let add = |gs: &mut f64, gc: &mut f64, v: f64| {
            let t = *gs + v;
            if gs.abs() >= v.abs() {
                *gc += (*gs - t) + v;
            } else {
                *gc += (v - t) + *gs;
            }
            *gs = t;
        };
        for x in 0..self.n {
            if inside(bits, x) {
                add(&mut gs, &mut gc, self.g[x]);
            }
        }
        let energy = |counts: &[i64], g: f64| -> f64 {
            counts.iter().zip(&self.weights).map(|(&c, &w)| c as f64 * w).sum::<f64>() - g * self.hd
        };
        let buckets = if per_count { self.n + 1 } else { 1 };
        let mut out = vec![Bucket::default(); buckets];
        let slot = |bits: u32| if per_count { bits.count_ones() as usize } else { 0 };
        out[slot(bits)].offer(energy(&counts, gs + gc), bits, self.tol);
        for i in 1u64..(1u64 << low) {
            let x = i.trailing_zeros() as usize;
            let was = inside(bits, x);
            for &(k, y) in &self.incident[x] {
                let other = y.is_some_and(|y| inside(bits, y));
                counts[k] += if was == other { 1 } else { -1 };
            }
            bits ^= 1 << x;
            add(&mut gs, &mut gc, if was { -self.g[x] } else { self.g[x] });
            out[slot(bits)].offer(energy(&counts, gs + gc), bits, self.tol);
        }
        out
    }

    fn run(&self, per_count: bool) -> Vec<Bucket> {
        let top = self.n.min(6);
        let tol = self.tol;
        (0..1u32 << top)
            .into_par_iter()
            .map(|c| self.walk(c, top, per_count))
            .reduce_with(|a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y, tol)).collect())
            .expect("at least one chunk")
    }
}

fn mask_of(g: &ScalarField, bits: u32) -> Mask {
    let n = g.grid().cell_count();
    Mask::from_indices(g.grid().clone(), (0..n).filter(|&x| bits >> x & 1 == 1))
}

/// Exact ledgers of every near-optimal candidate; returns all exact argmins.
fn resolve(g: &ScalarField, s: &PerimeterStencil, mut bucket: Bucket, tol: f64) -> Result<(Vec<Mask>, Ledger)> {
    bucket.prune(tol);
    bucket.candidates.sort_by_key(|&(_, b)| b);
    let mut best: Option<Ledger> = None;
    let mut masks = Vec::new();
    for (_, bits) in bucket.candidates {
        let m = mask_of(g, bits);
        let l = Ledger::of(&m, g, s)?;
        match best {
            Some(b) if l.energy > b.energy => {}
            Some(b) if l.energy == b.energy => masks.push(m),
            _ => {
                best = Some(l);
                masks = vec![m];
            }
        }
    }
    Ok((masks, best.expect("nonempty bucket")))
}

/// Every global minimizer of `P(E) - Σ_{x∈E} g_eff(x) h^d`, by enumeration.
pub fn brute_force_min(g_eff: &ScalarField, s: &PerimeterStencil) -> Result<OracleResult> {
    let en = Enumerator::new(g_eff, s)?;
    let bucket = en.run(false).pop().expect("one bucket");
    let (minimizers, ledger) = resolve(g_eff, s, bucket, en.tol)?;
    Ok(OracleResult { minimizers, ledger, energy: ledger.energy })
}

/// Exact `f(k h^d) = min_{|E| = k h^d} P(E) - ∫_E g` for every `k`, with difference quotients.
pub fn brute_force_isovol(g: &ScalarField, s: &PerimeterStencil) -> Result<IsovolTable> {
    let en = Enumerator::new(g, s)?;
    let hd = g.grid().cell_volume();
    let mut rows = Vec::new();
    let mut minimizers = Vec::new();
    for (k, bucket) in en.run(true).into_iter().enumerate() {
        let (ms, l) = resolve(g, s, bucket, en.tol)?;
        rows.push(IsovolRow { cells: k, volume: l.volume, f: l.energy, left: None, right: None });
        minimizers.push(ms.into_iter().next().expect("argmin"));
    }
    for k in 0..rows.len() {
        if k > 0 {
            rows[k].left = Some((rows[k].f - rows[k - 1].f) / hd);
        }
        if k + 1 < rows.len() {
            rows[k].right = Some((rows[k + 1].f - rows[k].f) / hd);
        }
    }
    Ok(IsovolTable { rows, minimizers })
}

/// Shifts a forcing by `λ`.
pub fn tilt(g: &ScalarField, lambda: f64) -> ScalarField {
    g.map(|v| v + lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    #[test]
    fn hand_counts() {
        let grid = PeriodicGrid::torus(2, 4, 1.0).unwrap();
        let s = PerimeterStencil::preset(crate::stencil::StencilPreset::N4);
        let t = brute_force_isovol(&ScalarField::zeros(grid.clone()), &s).unwrap();
        assert_eq!(t.f(0), 0.0);
        assert_eq!(t.f(1), 4.0 * 0.25);
        assert_eq!(t.f(16), 0.0);
        assert_eq!(t.f(4), 2.0);
        let neg = brute_force_min(&ScalarField::constant(grid.clone(), -100.0), &s).unwrap();
        assert!(neg.minimizers.len() == 1 && neg.minimizers[0].is_empty());
        let pos = brute_force_min(&ScalarField::constant(grid, 100.0), &s).unwrap();
        assert_eq!(pos.minimizers[0].count(), 16);
    }

    #[test]
    fn too_large() {
        let grid = PeriodicGrid::new(&[3, 7], 0.25).unwrap();
        let e = brute_force_min(&ScalarField::zeros(grid), &PerimeterStencil::default_for(2));
        assert!(matches!(e, Err(Error::GridTooLarge { cells: 21, .. })));
    }
}
