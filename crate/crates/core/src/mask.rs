use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::fft::{fft_nd, to_complex, Direction};
use crate::grid::{PeriodicGrid, Step, MAX_DIM};

/// A candidate set `E` as a binary cell field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    grid: PeriodicGrid,
    cells: Vec<bool>,
}

impl Mask {
    pub fn new(grid: PeriodicGrid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.cell_count() {
            return Err(Error::GridMismatch(format!("{} cells for grid of {}", cells.len(), grid.cell_count())));
        }
        Ok(Self { grid, cells })
    }

    pub fn empty(grid: PeriodicGrid) -> Self {
        let n = grid.cell_count();
        Self { grid, cells: vec![false; n] }
    }

    pub fn full(grid: PeriodicGrid) -> Self {
        let n = grid.cell_count();
        Self { grid, cells: vec![true; n] }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> bool) -> Self {
        let d = grid.dim();
        let cells = (0..grid.cell_count()).map(|i| f(&grid.center(i)[..d])).collect();
        Self { grid, cells }
    }

    pub fn from_indices(grid: PeriodicGrid, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(grid);
        for i in idx {
            m.cells[i] = true;
        }
        m
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, idx: usize) -> bool {
        self.cells[idx]
    }

    pub fn set(&mut self, idx: usize, v: bool) {
        self.cells[idx] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// `count · h^d`.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i)
    }

    pub fn complement(&self) -> Self {
        Self { grid: self.grid.clone(), cells: self.cells.iter().map(|c| !c).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let cells = self.cells.iter().zip(&other.cells).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), cells })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    /// `self ⊆ other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    /// Cyclic shift: `out(x + shift) = self(x)`.
    pub fn translated(&self, shift: &[i64]) -> Self {
        let mut cells = vec![false; self.cells.len()];
        for i in self.indices() {
            cells[self.grid.shifted(i, shift)] = true;
        }
        Self { grid: self.grid.clone(), cells }
    }

    /// Same membership on an identically shaped grid with other boundary flags.
    pub fn on_grid(&self, grid: PeriodicGrid) -> Result<Self> {
        if !grid.same_shape(&self.grid) {
            return Err(Error::GridMismatch("shape differs".into()));
        }
        Ok(Self { grid, cells: self.cells.clone() })
    }

    /// Cells whose centre lies within distance `r` of `center` (periodic distance
    /// on periodic axes).
    pub fn ball(grid: &PeriodicGrid, center: &[f64], r: f64) -> Result<Self> {
        let l = (0..grid.dim()).map(|a| grid.length(a)).fold(f64::INFINITY, f64::min);
        if !(r > 0.0 && r <= 0.5 * l) {
            return Err(Error::OutOfRange(format!("ball radius {r} not in (0, {}]", 0.5 * l)));
        }
        let d = grid.dim();
        Ok(Self::from_fn(grid.clone(), |x| grid.distance(x, &center[..d]) <= r))
    }

    pub fn sym_diff_volume(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let n = self.cells.iter().zip(&other.cells).filter(|(a, b)| a != b).count();
        Ok(n as f64 * self.grid.cell_volume())
    }

    /// Cyclic shift `s` minimizing `|translate(self, s) Δ other|`, by FFT
    /// cross-correlation. Ties go to the lexicographically smallest shift with
    /// components in `[0, n_i)`.
    pub fn best_translation_overlap(&self, other: &Self) -> Result<(Vec<i64>, f64)> {
        self.grid.check_same(&other.grid)?;
        if !self.grid.is_periodic() {
            return Err(Error::NonPeriodic);
        }
        let sides = self.grid.sides();
        let to_f = |m: &Mask| m.cells.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        let mut a = to_complex(&to_f(self));
        let mut b = to_complex(&to_f(other));
        fft_nd(&mut a, sides, Direction::Forward);
        fft_nd(&mut b, sides, Direction::Forward);
        for (x, y) in a.iter_mut().zip(&b) {
            *x = x.conj() * y;
        }
        fft_nd(&mut a, sides, Direction::Inverse);
        let n = self.cells.len() as f64;
        let mut best = (0usize, i64::MIN);
        for (i, c) in a.iter().enumerate() {
            let overlap = (c.re / n).round() as i64;
            if overlap > best.1 {
                best = (i, overlap);
            }
        }
        let c = self.grid.coords(best.0);
        let shift: Vec<i64> = (0..self.grid.dim()).map(|a| c[a] as i64).collect();
        let sd = (self.count() + other.count()) as i64 - 2 * best.1;
        Ok((shift, sd as f64 * self.grid.cell_volume()))
    }

    fn face_offsets(&self) -> Vec<[i64; MAX_DIM]> {
        let mut out = Vec::new();
        for a in 0..self.grid.dim() {
            for s in [-1i64, 1] {
                let mut o = [0; MAX_DIM];
                o[a] = s;
                out.push(o);
            }
        }
        out
    }

    /// Face-adjacent components (wrapping on periodic axes), by decreasing volume.
    pub fn connected_components(&self) -> Vec<Mask> {
        let offsets = self.face_offsets();
        let mut label = vec![usize::MAX; self.cells.len()];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::new();
        for start in self.indices() {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![start];
            label[start] = id;
            queue.push_back(start);
            while let Some(x) = queue.pop_front() {
                for o in &offsets {
                    if let Step::Inside(y) = self.grid.step(x, &o[..self.grid.dim()]) {
                        if self.cells[y] && label[y] == usize::MAX {
                            label[y] = id;
                            members.push(y);
                            queue.push_back(y);
                        }
                    }
                }
            }
            comps.push(members);
        }
        comps.sort_by(|a, b| b.len().cmp(&a.len()));
        comps.into_iter().map(|c| Mask::from_indices(self.grid.clone(), c)).collect()
    }

    /// Cells of `E` with a face neighbour outside `E` (closed exterior counts as outside).
    pub fn boundary_cells(&self) -> Vec<usize> {
        let offsets = self.face_offsets();
        self.indices()
            .filter(|&x| {
                offsets.iter().any(|o| match self.grid.step(x, &o[..self.grid.dim()]) {
                    Step::Inside(y) => !self.cells[y],
                    Step::ClosedExterior => true,
                    Step::OpenExterior => false,
                })
            })
            .collect()
    }

    /// Centre of mass; circular mean on periodic axes. `None` for the empty set.
    pub fn center_of_mass(&self) -> Option<[f64; MAX_DIM]> {
        let n = self.count();
        if n == 0 {
            return None;
        }
        let d = self.grid.dim();
        let mut out = [0.0; MAX_DIM];
        for a in 0..d {
            let l = self.grid.length(a);
            if self.grid.boundary()[a] == crate::grid::AxisBoundary::Periodic {
                let (mut s, mut c) = (0.0, 0.0);
                for i in self.indices() {
                    let t = 2.0 * std::f64::consts::PI * self.grid.center(i)[a] / l;
                    s += t.sin();
                    c += t.cos();
                }
                let ang = s.atan2(c).rem_euclid(2.0 * std::f64::consts::PI);
                out[a] = ang * l / (2.0 * std::f64::consts::PI);
            } else {
                out[a] = self.indices().map(|i| self.grid.center(i)[a]).sum::<f64>() / n as f64;
            }
        }
        Some(out)
    }

    /// Largest distance between centres of boundary cells.
    pub fn diameter(&self) -> f64 {
        let b = self.boundary_cells();
        let pts: Vec<_> = b.iter().map(|&i| self.grid.center(i)).collect();
        let d = self.grid.dim();
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(self.grid.distance(&pts[i][..d], &pts[j][..d]));
            }
        }
        best
    }

    /// Nearest-neighbour resample of the indicator, scaled by `factor` about the
    /// domain centres of source and target. Target cells outside the scaled source are empty.
    pub fn rescaled(&self, factor: f64, target: &PeriodicGrid) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::OutOfRange(format!("scale factor {factor}")));
        }
        let d = self.grid.dim();
        if target.dim() != d {
            return Err(Error::GridMismatch("dimension differs".into()));
        }
        for a in 0..d {
            let cells = factor * self.grid.length(a) / target.h();
            if cells < 8.0 {
                return Err(Error::TargetTooCoarse(format!("scaled source spans {cells:.2} target cells on axis {a}")));
            }
        }
        let cs = self.grid.domain_center();
        let ct = target.domain_center();
        let h = self.grid.h();
        let cells = (0..target.cell_count())
            .map(|i| {
                let y = target.center(i);
                let mut src = [0usize; MAX_DIM];
                for a in 0..d {
                    let x = cs[a] + (y[a] - ct[a]) / factor;
                    let k = (x / h).floor() as i64;
                    let n = self.grid.sides()[a] as i64;
                    if k < 0 || k >= n {
                        return false;
                    }
                    src[a] = k as usize;
                }
                self.cells[self.grid.index(&src[..d])]
            })
            .collect();
        Ok(Self { grid: target.clone(), cells })
    }
}
