use serde::{Deserialize, Serialize};

use super::constrained::{minimize_volume_constrained, ConstrainedOptions, Strategy};
use super::cut::{tilted_minimizer, Cell};
use super::{SolveResult, Status};
use crate::energy::Ledger;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::stencil::PerimeterStencil;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyBranch {
    /// Minimizer of `P - ∫(g - μ)`, optimal when its volume is at least `v`.
    Above,
    /// Minimizer of `P - ∫(g + μ)`, optimal when its volume is at most `v`.
    Below,
    /// Volume-constrained solve at `v`.
    Constrained,
    /// Exhaustive scan of every attainable volume.
    Scan,
}

#[derive(Clone, Debug)]
pub struct PenalizedResult {
    pub result: SolveResult,
    pub mu: f64,
    pub v: f64,
    /// `F(E) + μ||E| - v|`.
    pub penalized_energy: f64,
    pub branch: PenaltyBranch,
    /// `max(min P - ∫(g-μ) - μv, min P - ∫(g+μ) + μv)`.
    pub lower_bound: f64,
    /// The returned mask is a proven global minimizer of the penalized energy.
    pub certified: bool,
    pub below_threshold: bool,
}

/// Minimizer of `F_μ(E) = P(E) - ∫_E g + μ||E| - v|`.
///
/// On `|E| ≥ v` the energy equals `P - ∫(g - μ) - μv`, on `|E| ≤ v` it equals
/// `P - ∫(g + μ) + μv`; both are tilted problems. When neither tilted
/// minimizer lies on its own branch the constrained solve at `v` competes.
/// Grids with at most `opts.exact_cell_limit` cells are scanned over every
/// volume with the exact constrained solver.
pub fn minimize_penalized(
    g: &ScalarField,
    mu: f64,
    v: f64,
    s: &PerimeterStencil,
    opts: &ConstrainedOptions,
) -> Result<PenalizedResult> {
    let grid = g.grid();
    let total = grid.total_volume();
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::OutOfRange(format!("penalty {mu}")));
    }
    if !(0.0..=total * (1.0 + 1e-12)).contains(&v) {
        return Err(Error::OutOfRange(format!("volume {v} outside [0, {total}]")));
    }
    let g_inf = g.sup_norm();
    let below_threshold = mu <= g_inf;
    if below_threshold {
        log::warn!("{}", Error::PenaltyBelowThreshold { mu, g_inf });
    }
    let fixed = opts.fixed.as_deref();
    let above = tilted_minimizer(g, -mu, s, fixed)?;
    let below = tilted_minimizer(g, mu, s, fixed)?;
    let la = Ledger::of(&above, g, s)?;
    let lb = Ledger::of(&below, g, s)?;
    let lower_bound = (la.tilted(-mu) - mu * v).max(lb.tilted(mu) + mu * v);

    let mut cands = vec![(above, la, PenaltyBranch::Above), (below, lb, PenaltyBranch::Below)];
    let free = fixed.map_or(grid.cell_count(), |f| f.iter().filter(|&&c| c == Cell::Free).count());
    let on_branch = la.volume >= v || lb.volume <= v;
    if free <= opts.exact_cell_limit {
        let h = grid.cell_volume();
        let lo = fixed.map_or(0, |f| f.iter().filter(|&&c| c == Cell::In).count());
        let exact = ConstrainedOptions { strategy: Strategy::Exact, ..opts.clone() };
        for k in lo..=lo + free {
            let r = minimize_volume_constrained(g, k as f64 * h, s, &exact)?;
            cands.push((r.mask, r.ledger, PenaltyBranch::Scan));
        }
    } else if !on_branch {
        let r = minimize_volume_constrained(g, v, s, opts)?;
        cands.push((r.mask, r.ledger, PenaltyBranch::Constrained));
    }
    let scanned = cands.iter().any(|c| c.2 == PenaltyBranch::Scan);
    let (mask, ledger, branch) = cands
        .into_iter()
        .reduce(|a, b| if b.1.penalized(mu, v) < a.1.penalized(mu, v) { b } else { a })
        .expect("candidates");
    let penalized_energy = ledger.penalized(mu, v);
    let certified = scanned || penalized_energy <= lower_bound + 1e-12 * (1.0 + lower_bound.abs());
    let status =
        if (ledger.volume - v).abs() <= 0.5 * grid.cell_volume() { Status::ExactVolume } else { Status::Unconstrained };
    let mut result = SolveResult::new(mask, g, s, status)?;
    result.multiplier = match branch {
        PenaltyBranch::Above => Some(-mu),
        PenaltyBranch::Below => Some(mu),
        _ => None,
    };
    Ok(PenalizedResult { result, mu, v, penalized_energy, branch, lower_bound, certified, below_threshold })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaVolCheck {
    pub holds: bool,
    /// `||E| - v|`.
    pub lhs: f64,
    /// `(F_μ(E) + v‖g‖∞) / (μ - ‖g‖∞)`.
    pub rhs: f64,
    pub slack: f64,
}

/// Volume deviation bound `||E| - v| ≤ (F_μ(E) + v‖g‖∞)/(μ - ‖g‖∞)`, valid
/// for every mask once `μ > ‖g‖∞`.
pub fn check_lemma_vol(result: &SolveResult, mu: f64, v: f64, g: &ScalarField) -> Result<LemmaVolCheck> {
    let g_inf = g.sup_norm();
    if mu <= g_inf {
        return Err(Error::PenaltyBelowThreshold { mu, g_inf });
    }
    let lhs = (result.ledger.volume - v).abs();
    let rhs = (result.ledger.penalized(mu, v) + v * g_inf) / (mu - g_inf);
    let slack = rhs - lhs;
    let round = 1e-12 * (lhs.abs() + rhs.abs() + 1.0);
    Ok(LemmaVolCheck { holds: slack >= -round, lhs, rhs, slack })
}
