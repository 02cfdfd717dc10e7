//! Cauchy–Crofton cut-counting perimeter.
//!
//! A stencil stores one representative `o` of each offset pair `{o, -o}` with a
//! dimensionless weight `w`. The perimeter of a mask is
//! `Σ_o w(o) · h^(d-1) · #{x : M(x) ≠ M(x+o)}`, so each cut is counted once.
//! Weights are calibrated so that flat interfaces with normals along stencil
//! offsets are measured exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, Step};
use crate::mask::Mask;
use crate::numeric::ExactSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilPreset {
    N4,
    N8,
    N16,
    N6,
    N26,
}

impl StencilPreset {
    pub fn dim(self) -> usize {
        match self {
            Self::N4 | Self::N8 | Self::N16 => 2,
            Self::N6 | Self::N26 => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::N4 => "n4",
            Self::N8 => "n8",
            Self::N16 => "n16",
            Self::N6 => "n6",
            Self::N26 => "n26",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "n4" => Some(Self::N4),
            "n8" => Some(Self::N8),
            "n16" => Some(Self::N16),
            "n6" => Some(Self::N6),
            "n26" => Some(Self::N26),
            _ => None,
        }
    }

    /// Default for a dimension: 16-neighbourhood in 2D, 26 in 3D.
    pub fn default_for(dim: usize) -> Self {
        if dim == 3 {
            Self::N26
        } else {
            Self::N16
        }
    }

    fn half_offsets(self) -> Vec<[i64; 3]> {
        let range = match self {
            Self::N4 | Self::N6 => 1,
            Self::N8 | Self::N26 => 1,
            Self::N16 => 2,
        };
        let dim = self.dim() as usize;
        let mut out = Vec::new();
        let z_range = if dim == 3 { -range..=range } else { 0..=0 };
        for a in -range..=range {
            for b in -range..=range {
                for c in z_range.clone() {
                    let o = [a, b, c];
                    if !is_canonical(&o) {
                        continue;
                    }
                    let keep = match self {
                        Self::N4 | Self::N6 => o.iter().map(|v| v.abs()).sum::<i64>() == 1,
                        Self::N8 | Self::N26 => true,
                        Self::N16 => gcd(a.abs(), b.abs()) == 1,
                    };
                    if keep {
                        out.push(o);
                    }
                }
            }
        }
        out
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// First non-zero coordinate positive.
fn is_canonical(o: &[i64; 3]) -> bool {
    o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

fn norm(o: &[i64; 3]) -> f64 {
    o.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerimeterStencil {
    dim: usize,
    offsets: Vec<[i64; 3]>,
    weights: Vec<f64>,
}

impl PerimeterStencil {
    pub fn preset(p: StencilPreset) -> Self {
        Self::calibrated(p.dim(), &p.half_offsets()).expect("presets calibrate")
    }

    pub fn default_for(dim: usize) -> Self {
        Self::preset(StencilPreset::default_for(dim))
    }

    /// Explicit offsets and weights; `-o` is implied for every `o`.
    pub fn with_weights(dim: usize, offsets: &[[i64; 3]], weights: &[f64]) -> Result<Self> {
        if offsets.is_empty() || offsets.len() != weights.len() {
            return Err(Error::DegenerateStencil);
        }
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim}")));
        }
        let mut pairs: Vec<([i64; 3], f64)> = Vec::new();
        for (o, &w) in offsets.iter().zip(weights) {
            if !(w > 0.0 && w.is_finite()) || (dim == 2 && o[2] != 0) {
                return Err(Error::DegenerateStencil);
            }
            let c = if is_canonical(o) {
                *o
            } else if o.iter().all(|&v| v == 0) {
                return Err(Error::DegenerateStencil);
            } else {
                [-o[0], -o[1], -o[2]]
            };
            if pairs.iter().any(|(p, _)| *p == c) {
                return Err(Error::DegenerateStencil);
            }
            pairs.push((c, w));
        }
        Ok(Self { dim, offsets: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
    }

    /// Weights making every offset direction exact:
    /// `Σ_k w_k |o_k · ν_j| = 1` for `ν_j = o_j / |o_j|`.
    pub fn calibrated(dim: usize, offsets: &[[i64; 3]]) -> Result<Self> {
        let k = offsets.len();
        if k == 0 {
            return Err(Error::DegenerateStencil);
        }
        let a = DMatrix::from_fn(k, k, |j, i| {
            let oj = &offsets[j];
            let oi = &offsets[i];
            (0..3).map(|t| (oi[t] * oj[t]) as f64).sum::<f64>().abs() / norm(oj)
        });
        let b = DVector::from_element(k, 1.0);
        let w = a.svd(true, true).solve(&b, 1e-12).map_err(|_| Error::DegenerateStencil)?;
        // offsets related by axis permutations and reflections share one weight
        let class = |o: &[i64; 3]| {
            let mut c = o.map(i64::abs);
            c.sort_unstable();
            c
        };
        let mut w = w.as_slice().to_vec();
        for j in 0..k {
            let members: Vec<usize> = (0..k).filter(|&i| class(&offsets[i]) == class(&offsets[j])).collect();
            let mean = members.iter().map(|&i| w[i]).sum::<f64>() / members.len() as f64;
            for i in members {
                w[i] = mean;
            }
        }
        Self::with_weights(dim, offsets, &w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One representative per `{o, -o}` pair.
    pub fn offsets(&self) -> &[[i64; 3]] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Measured length of a unit flat interface with normal `nu`.
    pub fn directional_density(&self, nu: &[f64]) -> f64 {
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(o, w)| w * (0..self.dim).map(|t| o[t] as f64 * nu[t]).sum::<f64>().abs())
            .sum()
    }

    /// Largest relative directional error `max_ν |density(ν) - 1|`, sampled densely.
    pub fn tau(&self) -> f64 {
        let mut worst: f64 = 0.0;
        if self.dim == 2 {
            let n = 7200;
            for i in 0..n {
                let t = std::f64::consts::PI * i as f64 / n as f64;
                worst = worst.max((self.directional_density(&[t.cos(), t.sin()]) - 1.0).abs());
            }
        } else {
            let n = 20000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for i in 0..n {
                let z = 1.0 - (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                let nu = [r * t.cos(), r * t.sin(), z];
                worst = worst.max((self.directional_density(&nu) - 1.0).abs());
            }
        }
        worst
    }

    /// Visits every stencil pair of the grid once as `(offset_index, x, y)`;
    /// `y = None` is an empty exterior cell beyond a closed axis.
    pub fn for_each_pair(&self, grid: &PeriodicGrid, mut f: impl FnMut(usize, usize, Option<usize>)) {
        let closed = grid.boundary().contains(&crate::grid::AxisBoundary::Closed);
        for (k, o) in self.offsets.iter().enumerate() {
            grid.for_each_step(o, |x, st| match st {
                Step::Inside(y) => f(k, x, Some(y)),
                Step::ClosedExterior => f(k, x, None),
                Step::OpenExterior => {}
            });
            if closed {
                let neg = [-o[0], -o[1], -o[2]];
                grid.for_each_step(&neg, |x, st| {
                    if st == Step::ClosedExterior {
                        f(k, x, None);
                    }
                });
            }
        }
    }

    /// Cut count per offset.
    pub fn cut_counts(&self, m: &Mask) -> Result<Vec<u64>> {
        self.check_grid(m.grid())?;
        let cells = m.cells();
        let mut counts = vec![0u64; self.offsets.len()];
        self.for_each_pair(m.grid(), |k, x, y| {
            let inside_y = y.is_some_and(|y| cells[y]);
            if cells[x] != inside_y {
                counts[k] += 1;
            }
        });
        Ok(counts)
    }

    /// Physical weight of one cut along offset `k`.
    pub fn cut_weight(&self, k: usize, grid: &PeriodicGrid) -> f64 {
        self.weights[k] * grid.face_area()
    }

    pub fn perimeter(&self, m: &Mask) -> Result<f64> {
        let counts = self.cut_counts(m)?;
        let mut s = ExactSum::new();
        for (k, &c) in counts.iter().enumerate() {
            s.add(c as f64 * self.cut_weight(k, m.grid()));
        }
        Ok(s.value())
    }

    pub fn check_grid(&self, grid: &PeriodicGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "{}-dimensional stencil on a {}-dimensional grid",
                self.dim,
                grid.dim()
            )));
        }
        if self.offsets.is_empty() {
            return Err(Error::DegenerateStencil);
        }
        Ok(())
    }
}

pub fn perimeter(m: &Mask, s: &PerimeterStencil) -> Result<f64> {
    s.perimeter(m)
}
