use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::numeric::exact_sum;

/// Real value per cell, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::GridMismatch(format!("{} values for {} cells", values.len(), grid.cell_count())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidForcing(format!("non-finite value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        let n = grid.cell_count();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        let n = grid.cell_count();
        Self { grid, values: vec![c; n] }
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.cell_count()).map(|i| f(&grid.center(i)[..d])).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Cell average, exactly rounded.
    pub fn mean(&self) -> f64 {
        exact_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ g` over the whole box.
    pub fn integral(&self) -> f64 {
        exact_sum(self.values.iter().copied()) * self.grid.cell_volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Subtracts the cell average.
    pub fn zero_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Same values on a grid of identical shape (e.g. a different boundary convention).
    pub fn on_grid(&self, grid: PeriodicGrid) -> Result<Self> {
        if !grid.same_shape(&self.grid) {
            return Err(Error::GridMismatch("shape differs".into()));
        }
        Ok(Self { grid, values: self.values.clone() })
    }

    /// Cyclic shift: `out(x + shift) = self(x)`.
    pub fn translated(&self, shift: &[i64]) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            values[self.grid.shifted(i, shift)] = v;
        }
        Self { grid: self.grid.clone(), values }
    }

    /// Repeats the field `reps[a]` times along each axis onto `grid`.
    pub fn tiled(&self, grid: PeriodicGrid) -> Result<Self> {
        let d = self.grid.dim();
        if grid.dim() != d || grid.h() != self.grid.h() {
            return Err(Error::GridMismatch("tiling needs equal dimension and spacing".into()));
        }
        for a in 0..d {
            if grid.sides()[a] % self.grid.sides()[a] != 0 {
                return Err(Error::GridMismatch("target is not a whole number of tiles".into()));
            }
        }
        let values = (0..grid.cell_count())
            .map(|i| {
                let c = grid.coords(i);
                let mut src = [0usize; 3];
                for a in 0..d {
                    src[a] = c[a] % self.grid.sides()[a];
                }
                self.values[self.grid.index(&src[..d])]
            })
            .collect();
        Ok(Self { grid, values })
    }

    /// Sub-box starting at `origin` (periodic wrap on the source) placed on `grid`.
    pub fn window(&self, origin: &[usize], grid: PeriodicGrid) -> Result<Self> {
        let d = self.grid.dim();
        if grid.dim() != d || grid.h() != self.grid.h() {
            return Err(Error::GridMismatch("window needs equal dimension and spacing".into()));
        }
        let values = (0..grid.cell_count())
            .map(|i| {
                let c = grid.coords(i);
                let mut src = [0usize; 3];
                for a in 0..d {
                    src[a] = (origin[a] + c[a]) % self.grid.sides()[a];
                }
                self.values[self.grid.index(&src[..d])]
            })
            .collect();
        Ok(Self { grid, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_norms() {
        let g = PeriodicGrid::torus(2, 4, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        assert!((f.mean() - 0.5).abs() < 1e-15);
        assert!((f.sup_norm() - 0.875).abs() < 1e-15);
        assert!(f.zero_mean().mean().abs() < 1e-15);
    }

    #[test]
    fn tiling_repeats() {
        let g = PeriodicGrid::torus(2, 4, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] + 10.0 * x[1]);
        let big = PeriodicGrid::new(&[8, 12], 0.25).unwrap();
        let t = f.tiled(big.clone()).unwrap();
        assert_eq!(t.get(big.index(&[5, 9])), f.get(f.grid().index(&[1, 1])));
        assert!(f.tiled(PeriodicGrid::new(&[6, 8], 0.25).unwrap()).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let g = PeriodicGrid::torus(2, 2, 1.0).unwrap();
        assert!(ScalarField::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
