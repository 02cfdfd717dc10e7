//! Exact discrete minimization of `P(E) - ∫_E g`, tilted, penalized and
//! volume-constrained.

mod adjust;
mod constrained;
mod cut;
mod experiments;
mod penalized;

use serde::{Deserialize, Serialize};

pub use adjust::adjust_to_count;
pub use constrained::{minimize_volume_constrained, ConstrainedOptions, Finish, Strategy};
pub use cut::{min_cut_mask, min_cut_mask_with, tilted_minimizer, tilted_unary, Cell};
pub use experiments::{
    density_gamma_default, density_radius_constant, density_report, minimize_dirichlet_box, stability_in_r,
    DensityReport, DensityRow, DirichletResult, StabilityReport, StabilityRow,
};
pub use penalized::{check_lemma_vol, minimize_penalized, LemmaVolCheck, PenalizedResult, PenaltyBranch};

use crate::energy::Ledger;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mask::Mask;
use crate::stencil::PerimeterStencil;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Plain tilted solve, no volume target.
    Unconstrained,
    ExactVolume,
    Bracketed,
    Adjusted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Unconstrained => "unconstrained",
            Status::ExactVolume => "exact_volume",
            Status::Bracketed => "bracketed",
            Status::Adjusted => "adjusted",
        }
    }
}

/// Multiplier bracket around a volume target: minimizers at `lambda_lo` have
/// volume `vol_lo ≤ v`, those at `lambda_hi` have `vol_hi ≥ v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub vol_lo: f64,
    pub vol_hi: f64,
    pub energy_lo: f64,
    pub energy_hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.lambda_hi - self.lambda_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }

    /// Affine interpolation `F_lo + λ (v - vol_lo)` between the bracket endpoints.
    pub fn interpolate(&self, v: f64) -> f64 {
        if self.vol_hi > self.vol_lo {
            let slope = (self.energy_hi - self.energy_lo) / (self.vol_hi - self.vol_lo);
            self.energy_lo + slope * (v - self.vol_lo)
        } else {
            self.energy_lo
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub mask: Mask,
    pub ledger: Ledger,
    pub multiplier: Option<f64>,
    pub bracket: Option<Bracket>,
    pub status: Status,
    /// Estimate of `f(v)` from the bracket interpolation.
    pub f_lower: Option<f64>,
    /// Rigorous lower bound on `f(v)` from whole-domain tilted minimizers.
    pub f_lower_certified: Option<f64>,
}

/// Serializable summary of a [`SolveResult`] (mask stored separately).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub status: Status,
    pub perimeter: f64,
    pub g_integral: f64,
    pub volume: f64,
    pub energy: f64,
    pub cells: usize,
    pub multiplier: Option<f64>,
    pub bracket: Option<Bracket>,
    pub f_lower: Option<f64>,
    pub f_lower_certified: Option<f64>,
}

impl SolveResult {
    pub fn new(mask: Mask, g: &ScalarField, s: &PerimeterStencil, status: Status) -> Result<Self> {
        let ledger = Ledger::of(&mask, g, s)?;
        Ok(Self { mask, ledger, multiplier: None, bracket: None, status, f_lower: None, f_lower_certified: None })
    }

    pub fn energy(&self) -> f64 {
        self.ledger.energy
    }

    pub fn volume(&self) -> f64 {
        self.ledger.volume
    }

    pub fn perimeter(&self) -> f64 {
        self.ledger.perimeter
    }

    pub fn record(&self) -> SolveRecord {
        SolveRecord {
            status: self.status,
            perimeter: self.ledger.perimeter,
            g_integral: self.ledger.g_integral,
            volume: self.ledger.volume,
            energy: self.ledger.energy,
            cells: self.mask.count(),
            multiplier: self.multiplier,
            bracket: self.bracket,
            f_lower: self.f_lower,
            f_lower_certified: self.f_lower_certified,
        }
    }
}

/// Minimal global minimizer of `P(E) - Σ_{x∈E} (g(x) + λ) h^d`.
pub fn minimize_unconstrained(g: &ScalarField, lambda: f64, s: &PerimeterStencil) -> Result<SolveResult> {
    if !lambda.is_finite() {
        return Err(Error::OutOfRange(format!("multiplier {lambda}")));
    }
    let mask = tilted_minimizer(g, lambda, s, None)?;
    let mut r = SolveResult::new(mask, g, s, Status::Unconstrained)?;
    r.multiplier = Some(lambda);
    Ok(r)
}

/// Minimal minimizers for an ascending list of multipliers; the masks are nested.
pub fn parametric_sweep(g: &ScalarField, lambdas: &[f64], s: &PerimeterStencil) -> Result<Vec<SolveResult>> {
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::OutOfRange("multipliers must be ascending".into()));
    }
    use rayon::prelude::*;
    lambdas.par_iter().map(|&l| minimize_unconstrained(g, l, s)).collect()
}
