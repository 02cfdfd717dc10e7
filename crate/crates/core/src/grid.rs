use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What lies beyond the last cell of an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisBoundary {
    /// The axis wraps around (torus).
    Periodic,
    /// Cuts across the boundary are free: relative perimeter inside the box.
    Open,
    /// The exterior is empty and boundary cuts are paid (Dirichlet box).
    Closed,
}

impl AxisBoundary {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisBoundary::Periodic => "periodic",
            AxisBoundary::Open => "open",
            AxisBoundary::Closed => "closed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "periodic" => Some(Self::Periodic),
            "open" => Some(Self::Open),
            "closed" => Some(Self::Closed),
            _ => None,
        }
    }
}

pub const MAX_DIM: usize = 3;

/// Result of stepping from a cell by an integer offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Inside(usize),
    /// Left the box through a closed axis: the neighbour is an empty exterior cell.
    ClosedExterior,
    /// Left the box through an open axis: the pair does not exist.
    OpenExterior,
}

/// Uniform cell grid on a box of side `n_i * h`, cell-centred.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    sides: Vec<usize>,
    h: f64,
    boundary: Vec<AxisBoundary>,
    strides: Vec<usize>,
}

impl PeriodicGrid {
    /// Fully periodic grid.
    pub fn new(sides: &[usize], h: f64) -> Result<Self> {
        Self::with_boundary(sides, h, &vec![AxisBoundary::Periodic; sides.len()])
    }

    /// Square/cubic torus of physical side `length`.
    pub fn torus(dim: usize, n: usize, length: f64) -> Result<Self> {
        Self::new(&vec![n; dim], length / n as f64)
    }

    pub fn with_boundary(sides: &[usize], h: f64, boundary: &[AxisBoundary]) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&sides.len()) {
            return Err(Error::InvalidGrid(format!("dimension {} not in {{2,3}}", sides.len())));
        }
        if boundary.len() != sides.len() {
            return Err(Error::InvalidGrid("boundary flags do not match dimension".into()));
        }
        if let Some(n) = sides.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGrid(format!("side {n} < 2")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let mut total: usize = 1;
        for &n in sides {
            total = total.checked_mul(n).ok_or_else(|| Error::InvalidGrid("cell count overflows".into()))?;
        }
        if total > u32::MAX as usize {
            return Err(Error::InvalidGrid("cell count exceeds u32 range".into()));
        }
        let mut strides = vec![1; sides.len()];
        for a in (0..sides.len() - 1).rev() {
            strides[a] = strides[a + 1] * sides[a + 1];
        }
        Ok(Self { sides: sides.to_vec(), h, boundary: boundary.to_vec(), strides })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> &[AxisBoundary] {
        &self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary.iter().all(|&b| b == AxisBoundary::Periodic)
    }

    pub fn cell_count(&self) -> usize {
        self.sides.iter().product()
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// `h^(d-1)`.
    pub fn face_area(&self) -> f64 {
        self.h.powi(self.dim() as i32 - 1)
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.sides[axis] as f64 * self.h
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_count() as f64 * self.cell_volume()
    }

    /// Same geometry, different boundary convention.
    pub fn with_all_boundaries(&self, b: AxisBoundary) -> Self {
        Self::with_boundary(&self.sides, self.h, &vec![b; self.dim()]).expect("valid grid")
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.sides == other.sides && self.h == other.h
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.sides, other.sides)))
        }
    }

    pub fn index(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn coords(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut r = idx;
        for a in 0..self.dim() {
            out[a] = r / self.strides[a];
            r %= self.strides[a];
        }
        out
    }

    /// Physical coordinates of the cell centre.
    pub fn center(&self, idx: usize) -> [f64; MAX_DIM] {
        let c = self.coords(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            x[a] = (c[a] as f64 + 0.5) * self.h;
        }
        x
    }

    pub fn step(&self, idx: usize, offset: &[i64]) -> Step {
        let c = self.coords(idx);
        let mut out = 0;
        let mut closed = false;
        for a in 0..self.dim() {
            let n = self.sides[a] as i64;
            let mut v = c[a] as i64 + offset[a];
            if v < 0 || v >= n {
                match self.boundary[a] {
                    AxisBoundary::Periodic => v = v.rem_euclid(n),
                    AxisBoundary::Open => return Step::OpenExterior,
                    AxisBoundary::Closed => {
                        closed = true;
                        continue;
                    }
                }
            }
            out += v as usize * self.strides[a];
        }
        if closed {
            Step::ClosedExterior
        } else {
            Step::Inside(out)
        }
    }

    /// Calls `f(x, step(x, offset))` for every cell in index order.
    pub fn for_each_step(&self, offset: &[i64], mut f: impl FnMut(usize, Step)) {
        const OPEN: i64 = -1;
        const CLOSED: i64 = -2;
        let d = self.dim();
        let tables: Vec<Vec<i64>> = (0..d)
            .map(|a| {
                let n = self.sides[a] as i64;
                (0..n)
                    .map(|c| {
                        let v = c + offset[a];
                        if (0..n).contains(&v) {
                            v * self.strides[a] as i64
                        } else {
                            match self.boundary[a] {
                                AxisBoundary::Periodic => v.rem_euclid(n) * self.strides[a] as i64,
                                AxisBoundary::Open => OPEN,
                                AxisBoundary::Closed => CLOSED,
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        let mut c = [0usize; MAX_DIM];
        for x in 0..self.cell_count() {
            let mut idx = 0i64;
            let mut closed = false;
            let mut open = false;
            for a in 0..d {
                match tables[a][c[a]] {
                    OPEN => open = true,
                    CLOSED => closed = true,
                    v => idx += v,
                }
            }
            let step = if open {
                Step::OpenExterior
            } else if closed {
                Step::ClosedExterior
            } else {
                Step::Inside(idx as usize)
            };
            f(x, step);
            for a in (0..d).rev() {
                c[a] += 1;
                if c[a] < self.sides[a] {
                    break;
                }
                c[a] = 0;
            }
        }
    }

    /// Cyclic shift of a cell index (all axes wrap).
    pub fn shifted(&self, idx: usize, shift: &[i64]) -> usize {
        let c = self.coords(idx);
        (0..self.dim())
            .map(|a| {
                let n = self.sides[a] as i64;
                (c[a] as i64 + shift[a]).rem_euclid(n) as usize * self.strides[a]
            })
            .sum()
    }

    /// Displacement `x - y` along an axis, wrapped to the nearest image on periodic axes.
    pub fn axis_delta(&self, axis: usize, x: f64, y: f64) -> f64 {
        let d = x - y;
        if self.boundary[axis] == AxisBoundary::Periodic {
            let l = self.length(axis);
            d - l * (d / l).round()
        } else {
            d
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.dim()).map(|a| self.axis_delta(a, x[a], y[a]).powi(2)).sum::<f64>().sqrt()
    }

    /// Geometric centre of the box.
    pub fn domain_center(&self) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            x[a] = 0.5 * self.length(a);
        }
        x
    }
}

// PeriodicGrid holds an f64; equality is still reflexive for valid (finite) grids.
impl Eq for PeriodicGrid {}
impl std::hash::Hash for PeriodicGrid {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sides().hash(state);
        self.h().to_bits().hash(state);
        self.boundary().hash(state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(PeriodicGrid::new(&[1, 4], 0.1).is_err());
        assert!(PeriodicGrid::new(&[4, 4], 0.0).is_err());
        assert!(PeriodicGrid::new(&[4], 0.1).is_err());
        assert!(PeriodicGrid::new(&[usize::MAX, 4], 0.1).is_err());
    }

    #[test]
    fn index_round_trip_and_steps() {
        let g = PeriodicGrid::new(&[3, 5], 0.2).unwrap();
        for i in 0..g.cell_count() {
            let c = g.coords(i);
            assert_eq!(g.index(&c[..2]), i);
        }
        assert_eq!(g.step(0, &[-1, 0]), Step::Inside(g.index(&[2, 0])));
        let b = PeriodicGrid::with_boundary(&[3, 5], 0.2, &[AxisBoundary::Closed, AxisBoundary::Open]).unwrap();
        assert_eq!(b.step(0, &[-1, 0]), Step::ClosedExterior);
        assert_eq!(b.step(0, &[0, -1]), Step::OpenExterior);
    }

    #[test]
    fn bulk_steps_match_single_steps() {
        let g = PeriodicGrid::with_boundary(
            &[3, 4, 5],
            0.1,
            &[AxisBoundary::Periodic, AxisBoundary::Closed, AxisBoundary::Open],
        )
        .unwrap();
        for o in [[1i64, 0, 0], [-2, 1, 1], [0, -1, -2], [1, 2, 3]] {
            let mut seen = 0;
            g.for_each_step(&o, |x, s| {
                assert_eq!(s, g.step(x, &o));
                seen += 1;
            });
            assert_eq!(seen, g.cell_count());
        }
    }

    #[test]
    fn periodic_distance_wraps() {
        let g = PeriodicGrid::torus(2, 10, 1.0).unwrap();
        let d = g.distance(&[0.05, 0.5], &[0.95, 0.5]);
        assert!((d - 0.1).abs() < 1e-12);
    }
}
