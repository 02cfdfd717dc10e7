//! Forcing fields: builders, the divergence potential `σ` and the smallness
//! condition `∫_E g ≤ (1-Λ) P(E, Q)`.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft_nd, signed_frequency, to_complex, Direction};
use crate::field::ScalarField;
use crate::grid::{AxisBoundary, PeriodicGrid, MAX_DIM};
use crate::solver::min_cut_mask;
use crate::stencil::PerimeterStencil;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigMode {
    /// Integer wavevector; the mode is `A sin(2π Σ k_a x_a / L_a + phase)`.
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingKind {
    Zero,
    TrigPoly {
        modes: Vec<TrigMode>,
    },
    /// Two truncated radial parabolas `H (1 - |x-c|²/r²)₊`.
    BumpPair {
        a: Vec<f64>,
        b: Vec<f64>,
        height_a: f64,
        height_b: f64,
        radius_a: f64,
        radius_b: f64,
    },
    Raster {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    pub zero_mean: bool,
}

impl ForcingSpec {
    pub fn zero() -> Self {
        Self { kind: ForcingKind::Zero, zero_mean: false }
    }

    pub fn trig(modes: Vec<TrigMode>) -> Self {
        Self { kind: ForcingKind::TrigPoly { modes }, zero_mean: false }
    }

    /// Tall thin bump at `a`, short wide bump at `b`, shifted to zero mean.
    pub fn bump_pair(a: &[f64], b: &[f64], heights: (f64, f64), radii: (f64, f64)) -> Self {
        Self {
            kind: ForcingKind::BumpPair {
                a: a.to_vec(),
                b: b.to_vec(),
                height_a: heights.0,
                height_b: heights.1,
                radius_a: radii.0,
                radius_b: radii.1,
            },
            zero_mean: true,
        }
    }

    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        let d = grid.dim();
        match &self.kind {
            ForcingKind::Zero | ForcingKind::Raster { .. } => Ok(()),
            ForcingKind::TrigPoly { modes } => {
                for m in modes {
                    if m.k.len() != d || !m.amplitude.is_finite() || !m.phase.is_finite() {
                        return Err(Error::InvalidForcing(format!("bad trig mode {:?}", m.k)));
                    }
                }
                Ok(())
            }
            ForcingKind::BumpPair { a, b, height_a, height_b, radius_a, radius_b } => {
                if a.len() != d || b.len() != d {
                    return Err(Error::InvalidForcing("bump centres have the wrong dimension".into()));
                }
                if !(*height_a > 0.0 && *height_b > 0.0 && *radius_a > 0.0 && *radius_b > 0.0) {
                    return Err(Error::InvalidForcing("bump heights and radii must be positive".into()));
                }
                for (c, r) in [(a, radius_a), (b, radius_b)] {
                    for ax in 0..d {
                        if c[ax] - r < 0.0 || c[ax] + r > grid.length(ax) {
                            return Err(Error::InvalidForcing("bump support leaves the cell".into()));
                        }
                    }
                }
                let dist = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                if dist < radius_a + radius_b {
                    return Err(Error::InvalidForcing("bump supports overlap".into()));
                }
                Ok(())
            }
        }
    }
}

/// Samples `spec` at cell centres.
pub fn build_field(spec: &ForcingSpec, grid: &PeriodicGrid) -> Result<ScalarField> {
    spec.validate(grid)?;
    let d = grid.dim();
    let raw = match &spec.kind {
        ForcingKind::Zero => ScalarField::zeros(grid.clone()),
        ForcingKind::TrigPoly { modes } => ScalarField::from_fn(grid.clone(), |x| {
            modes
                .iter()
                .map(|m| {
                    let t: f64 = (0..d).map(|a| m.k[a] as f64 * x[a] / grid.length(a)).sum();
                    m.amplitude * (2.0 * std::f64::consts::PI * t + m.phase).sin()
                })
                .sum()
        }),
        ForcingKind::BumpPair { a, b, height_a, height_b, radius_a, radius_b } => {
            ScalarField::from_fn(grid.clone(), |x| {
                let bump = |c: &[f64], h: f64, r: f64| {
                    let q: f64 = (0..d).map(|ax| (x[ax] - c[ax]).powi(2)).sum();
                    h * (1.0 - q / (r * r)).max(0.0)
                };
                bump(a, *height_a, *radius_a) + bump(b, *height_b, *radius_b)
            })
        }
        ForcingKind::Raster { path } => crate::io::read_field_on(path, grid.clone())?,
    };
    Ok(if spec.zero_mean { raw.zero_mean() } else { raw })
}

/// Periodic vector field `σ = ∇Δ⁻¹ g` sampled at cell centres.
#[derive(Clone, Debug)]
pub struct VectorFieldSigma {
    grid: PeriodicGrid,
    components: Vec<Vec<f64>>,
    /// Fourier coefficients of each component at the retained modes.
    modes: Vec<([i64; MAX_DIM], [Complex64; MAX_DIM])>,
    pub sup_norm: f64,
    /// Largest `|σ|` over cell centres.
    pub sampled_sup: f64,
}

impl VectorFieldSigma {
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    /// `σ` at an arbitrary point, from the trigonometric interpolant.
    pub fn eval(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let d = self.grid.dim();
        let mut out = [0.0; MAX_DIM];
        for (k, c) in &self.modes {
            let t: f64 = (0..d).map(|a| k[a] as f64 * x[a] / self.grid.length(a)).sum();
            let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t);
            for a in 0..d {
                out[a] += (c[a] * e).re;
            }
        }
        out
    }

    fn norm_at(&self, x: &[f64]) -> f64 {
        let v = self.eval(x);
        v.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Spectral divergence of the sampled field.
    pub fn divergence(&self) -> ScalarField {
        let grid = &self.grid;
        let n = grid.cell_count();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for a in 0..grid.dim() {
            let mut buf = to_complex(&self.components[a]);
            fft_nd(&mut buf, grid.sides(), Direction::Forward);
            for (i, z) in buf.iter().enumerate() {
                acc[i] += z * derivative_symbol(grid, i, a);
            }
        }
        fft_nd(&mut acc, grid.sides(), Direction::Inverse);
        ScalarField::new(grid.clone(), acc.iter().map(|z| z.re / n as f64).collect()).expect("same grid")
    }

    /// `‖div σ - g‖∞`.
    pub fn divergence_residual(&self, g: &ScalarField) -> f64 {
        let div = self.divergence();
        div.values().iter().zip(g.values()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Symbol `i 2π k_a / L_a` of `∂_a`; zero on the Nyquist bin, where the
/// derivative of a real interpolant is not defined.
fn derivative_symbol(grid: &PeriodicGrid, idx: usize, axis: usize) -> Complex64 {
    let n = grid.sides()[axis];
    let c = grid.coords(idx)[axis];
    if n % 2 == 0 && c == n / 2 {
        return Complex64::new(0.0, 0.0);
    }
    let k = signed_frequency(c, n) as f64;
    Complex64::new(0.0, 2.0 * std::f64::consts::PI * k / grid.length(axis))
}

/// Spectral Poisson solve: `σ = ∇φ` with `Δφ = g` and zero mean `φ`.
pub fn solve_div_sigma(g: &ScalarField) -> Result<VectorFieldSigma> {
    let grid = g.grid();
    if !grid.is_periodic() {
        return Err(Error::NonPeriodic);
    }
    let mean = g.mean();
    let tol = 1e-12 * g.sup_norm().max(f64::MIN_POSITIVE);
    if mean.abs() > tol {
        return Err(Error::IncompatibleSource { mean, tol });
    }
    let d = grid.dim();
    let n = grid.cell_count();
    let mut ghat = to_complex(g.values());
    fft_nd(&mut ghat, grid.sides(), Direction::Forward);
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); n]; d];
    let mut modes = Vec::new();
    let peak = ghat.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    for i in 0..n {
        let syms: Vec<Complex64> = (0..d).map(|a| derivative_symbol(grid, i, a)).collect();
        let lap: f64 = syms.iter().map(|s| -s.im * s.im).sum();
        if lap == 0.0 {
            continue;
        }
        let phi = ghat[i] / lap;
        let mut coef = [Complex64::new(0.0, 0.0); MAX_DIM];
        for a in 0..d {
            comps[a][i] = phi * syms[a];
            coef[a] = comps[a][i] / n as f64;
        }
        if ghat[i].norm() > 1e-14 * peak {
            let c = grid.coords(i);
            let mut k = [0i64; MAX_DIM];
            let mut shift = 0.0;
            for a in 0..d {
                k[a] = signed_frequency(c[a], grid.sides()[a]);
                shift += k[a] as f64 / grid.sides()[a] as f64;
            }
            // sample j sits at (j + 1/2) h
            let rot = Complex64::from_polar(1.0, -std::f64::consts::PI * shift);
            for c in coef.iter_mut().take(d) {
                *c *= rot;
            }
            modes.push((k, coef));
        }
    }
    let components: Vec<Vec<f64>> = comps
        .into_iter()
        .map(|mut c| {
            fft_nd(&mut c, grid.sides(), Direction::Inverse);
            c.iter().map(|z| z.re / n as f64).collect()
        })
        .collect();
    let mut sigma = VectorFieldSigma { grid: grid.clone(), components, modes, sup_norm: 0.0, sampled_sup: 0.0 };
    let norms: Vec<f64> = (0..n).map(|i| (0..d).map(|a| sigma.components[a][i].powi(2)).sum::<f64>().sqrt()).collect();
    sigma.sampled_sup = norms.iter().copied().fold(0.0, f64::max);
    sigma.sup_norm = continuous_sup(&sigma, &norms);
    Ok(sigma)
}

/// Sup of the interpolant `|σ|`: pattern search from the largest samples.
/// Falls back to the sampled maximum when the spectrum is too wide to evaluate.
fn continuous_sup(sigma: &VectorFieldSigma, norms: &[f64]) -> f64 {
    let best_sample = norms.iter().copied().fold(0.0, f64::max);
    if sigma.modes.is_empty() || sigma.modes.len() > 4096 {
        return best_sample;
    }
    let grid = &sigma.grid;
    let d = grid.dim();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut best = best_sample;
    for &start in order.iter().take(8) {
        let mut x = grid.center(start);
        let mut fx = sigma.norm_at(&x[..d]);
        let mut step = 0.5 * grid.h();
        while step > 1e-12 * grid.h() {
            let mut moved = false;
            for a in 0..d {
                for s in [-1.0, 1.0] {
                    let mut y = x;
                    y[a] += s * step;
                    let fy = sigma.norm_at(&y[..d]);
                    if fy > fx {
                        x = y;
                        fx = fy;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(fx);
    }
    best
}

/// `(‖σ‖∞ < 1, 1 - ‖σ‖∞)`; when it holds, `Λ* ≥ 1 - ‖σ‖∞`.
pub fn sufficient_condg_via_sigma(g: &ScalarField) -> Result<(bool, f64)> {
    let s = solve_div_sigma(g)?;
    Ok((s.sup_norm < 1.0, 1.0 - s.sup_norm))
}

/// Bisection tolerance on `Λ`.
pub const CONDG_TOL: f64 = 1e-3;

/// Largest `Λ ∈ [0, 1]` (to within [`CONDG_TOL`], rounded down) such that
/// `∫_E g ≤ (1-Λ) P(E, Q)` for every `E ⊂ Q`, with the relative perimeter
/// taken on the grid box with free boundary.
pub fn check_condg(g: &ScalarField, s: &PerimeterStencil) -> Result<f64> {
    check_condg_with(g, s, AxisBoundary::Open)
}

/// [`check_condg`] with the perimeter taken under boundary convention `b`.
/// With `Periodic`, `Λ* ≥ 1 - ‖σ‖∞` holds whenever `‖σ‖∞ < 1`.
pub fn check_condg_with(g: &ScalarField, s: &PerimeterStencil, b: AxisBoundary) -> Result<f64> {
    let grid = g.grid().with_all_boundaries(b);
    let hd = grid.cell_volume();
    let holds = |lambda: f64| -> Result<bool> {
        if lambda >= 1.0 {
            return Ok(g.max() <= 0.0);
        }
        let unary: Vec<f64> = g.values().iter().map(|v| -v * hd / (1.0 - lambda)).collect();
        Ok(min_cut_mask(&grid, s, &unary, None)?.is_empty())
    };
    if holds(1.0)? {
        return Ok(1.0);
    }
    if !holds(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > CONDG_TOL {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_field() {
        let grid = PeriodicGrid::torus(2, 32, 1.0).unwrap();
        let spec = ForcingSpec::trig(vec![TrigMode { k: vec![1, 0], amplitude: 2.0, phase: 0.0 }]);
        let f = build_field(&spec, &grid).unwrap();
        let x = grid.center(grid.index(&[5, 9]));
        assert!((f.get(grid.index(&[5, 9])) - 2.0 * (2.0 * std::f64::consts::PI * x[0]).sin()).abs() < 1e-14);
        assert!(f.mean().abs() < 1e-15);
        assert_eq!(build_field(&ForcingSpec::zero(), &grid).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn bump_validation() {
        let grid = PeriodicGrid::torus(2, 32, 1.0).unwrap();
        let overlap = ForcingSpec::bump_pair(&[0.3, 0.5], &[0.4, 0.5], (1.0, 1.0), (0.1, 0.1));
        assert!(build_field(&overlap, &grid).is_err());
        let outside = ForcingSpec::bump_pair(&[0.05, 0.5], &[0.6, 0.5], (1.0, 1.0), (0.1, 0.1));
        assert!(build_field(&outside, &grid).is_err());
    }
}
