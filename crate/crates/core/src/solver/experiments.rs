use serde::{Deserialize, Serialize};

use super::constrained::{minimize_volume_constrained, ConstrainedOptions};
use super::cut::{tilted_minimizer, Cell};
use super::{SolveResult, Status};
use crate::energy::Ledger;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{AxisBoundary, PeriodicGrid};
use crate::mask::Mask;
use crate::stencil::PerimeterStencil;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    /// Side of the centred box.
    pub r: f64,
    pub energy: f64,
    pub volume: f64,
    pub diameter: f64,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Smallest side from which every later energy agrees within `1e-12`.
    pub r0: Option<f64>,
}

/// Constrained solves restricted to centred boxes of increasing side `R`
/// (cells outside forced empty). A smaller box's minimizer stays admissible in
/// every larger box and competes there, so the reported energies never increase.
pub fn stability_in_r(
    g: &ScalarField,
    v: f64,
    s: &PerimeterStencil,
    r_list: &[f64],
    opts: &ConstrainedOptions,
) -> Result<StabilityReport> {
    if r_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::OutOfRange("box sides must be ascending".into()));
    }
    let grid = g.grid();
    let d = grid.dim();
    let lmin = (0..d).map(|a| grid.length(a)).fold(f64::INFINITY, f64::min);
    let centre = grid.domain_center();
    let mut rows: Vec<StabilityRow> = Vec::new();
    let mut prev: Option<(Mask, Ledger)> = None;
    for &r in r_list {
        if !(r > 0.0) || r > lmin * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!("box side {r} exceeds the grid")));
        }
        let inside: Vec<Cell> = (0..grid.cell_count())
            .map(|x| {
                let c = grid.center(x);
                if (0..d).all(|a| (c[a] - centre[a]).abs() <= 0.5 * r) {
                    Cell::Free
                } else {
                    Cell::Out
                }
            })
            .collect();
        let free = inside.iter().filter(|&&c| c == Cell::Free).count();
        if (free as f64) * grid.cell_volume() < v - 0.5 * grid.cell_volume() {
            return Err(Error::OutOfRange(format!("volume {v} does not fit in a box of side {r}")));
        }
        let o = ConstrainedOptions { fixed: Some(inside), ..opts.clone() };
        let res = minimize_volume_constrained(g, v, s, &o)?;
        let (mask, ledger, status) = match prev.take() {
            Some((m, l)) if l.energy < res.ledger.energy => (m, l, Status::Adjusted),
            _ => (res.mask, res.ledger, res.status),
        };
        rows.push(StabilityRow { r, energy: ledger.energy, volume: ledger.volume, diameter: mask.diameter(), status });
        prev = Some((mask, ledger));
    }
    let mut r0 = None;
    if let Some(last) = rows.last() {
        for row in rows.iter().rev() {
            if (row.energy - last.energy).abs() <= 1e-12 * (1.0 + last.energy.abs()) {
                r0 = Some(row.r);
            } else {
                break;
            }
        }
    }
    Ok(StabilityReport { rows, r0 })
}

#[derive(Clone, Debug)]
pub struct DirichletResult {
    pub result: SolveResult,
    pub tiles: usize,
    pub eps: f64,
    /// `P(E) - ∫_E (g + ε)`.
    pub energy: f64,
    pub nonempty: bool,
    /// Energy of the full box, `P(Q_N) - ∫_{Q_N}(g + ε)`.
    pub full_box_energy: f64,
}

/// Minimizes `P(E) - ∫_E (g + ε)` over `E ⊂ Q_N`, where `Q_N` tiles the unit
/// cell `N` times per axis and boundary cuts of the box are paid.
pub fn minimize_dirichlet_box(
    cell: &ScalarField,
    eps: f64,
    tiles: usize,
    s: &PerimeterStencil,
) -> Result<DirichletResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange(format!("epsilon {eps}")));
    }
    if tiles == 0 {
        return Err(Error::OutOfRange("at least one tile".into()));
    }
    let cg = cell.grid();
    let d = cg.dim();
    let sides: Vec<usize> = cg.sides().iter().map(|&n| n * tiles).collect();
    let grid = PeriodicGrid::with_boundary(&sides, cg.h(), &vec![AxisBoundary::Closed; d])?;
    let g = cell.tiled(grid)?;
    let mask = tilted_minimizer(&g, eps, s, None)?;
    let full = Ledger::of(&Mask::full(g.grid().clone()), &g, s)?;
    let mut result = SolveResult::new(mask, &g, s, Status::Unconstrained)?;
    result.multiplier = Some(eps);
    let energy = result.ledger.tilted(eps);
    let nonempty = !result.mask.is_empty();
    Ok(DirichletResult { result, tiles, eps, energy, nonempty, full_box_energy: full.tilted(eps) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub r: f64,
    /// `min_x |E ∩ B_r(x)| / r^d` over boundary cells `x`.
    pub inside: f64,
    /// `min_x |B_r(x) \ E| / r^d` over boundary cells `x`.
    pub outside: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// `C(d) / (μ + ‖g‖∞)`.
    pub r0: f64,
    pub rows: Vec<DensityRow>,
    /// Radii above `r0`, not evaluated.
    pub skipped: Vec<f64>,
    /// Smallest ratio over all evaluated rows.
    pub gamma_emp: Option<f64>,
    /// Reference constant `ω_d / 4^d`.
    pub gamma_default: f64,
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 / 3.0 * std::f64::consts::PI,
    }
}

/// Default radius constant `C(d) = c(d) ω_d^{-1/d} / 2 = d / 2`.
pub fn density_radius_constant(d: usize) -> f64 {
    d as f64 / 2.0
}

/// Default density constant `(c(d) / 4d)^d = ω_d / 4^d`.
pub fn density_gamma_default(d: usize) -> f64 {
    unit_ball_volume(d) / 4f64.powi(d as i32)
}

/// Empirical volume densities of `E` and its complement in balls centred at
/// boundary cells, for every radius up to `r0 = c_radius / (μ + ‖g‖∞)`.
pub fn density_report(
    result: &SolveResult,
    mu: f64,
    g: &ScalarField,
    radii: &[f64],
    c_radius: Option<f64>,
) -> Result<DensityReport> {
    let m = &result.mask;
    if m.is_empty() {
        return Err(Error::OutOfRange("density needs a nonempty mask".into()));
    }
    let grid = m.grid();
    let d = grid.dim();
    let h = grid.h();
    let hd = grid.cell_volume();
    let c = c_radius.unwrap_or_else(|| density_radius_constant(d));
    let r0 = c / (mu.abs() + g.sup_norm());
    let boundary = m.boundary_cells();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &r in radii {
        if r > r0 || !(r > 0.0) {
            skipped.push(r);
            continue;
        }
        let reach = (r / h).floor() as i64;
        let mut offsets = Vec::new();
        let span = |a: usize| if a < d { -reach..=reach } else { 0..=0 };
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    let q = [i, j, k];
                    let dist2: f64 = q.iter().map(|&t| (t as f64 * h).powi(2)).sum();
                    if dist2 <= r * r * (1.0 + 1e-12) {
                        offsets.push(q);
                    }
                }
            }
        }
        let rd = r.powi(d as i32);
        let (mut inside, mut outside) = (f64::INFINITY, f64::INFINITY);
        for &x in &boundary {
            let (mut a, mut b) = (0usize, 0usize);
            for o in &offsets {
                match grid.step(x, &o[..d]) {
                    crate::grid::Step::Inside(y) => {
                        if m.get(y) {
                            a += 1;
                        } else {
                            b += 1;
                        }
                    }
                    crate::grid::Step::ClosedExterior => b += 1,
                    crate::grid::Step::OpenExterior => {}
                }
            }
            inside = inside.min(a as f64 * hd / rd);
            outside = outside.min(b as f64 * hd / rd);
        }
        rows.push(DensityRow { r, inside, outside });
    }
    let gamma_emp = rows.iter().map(|row| row.inside.min(row.outside)).reduce(f64::min);
    Ok(DensityReport { r0, rows, skipped, gamma_emp, gamma_default: density_gamma_default(d) })
}
