//! Exact energy ledger shared by every solver and the oracle.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::ScalarField;
use crate::mask::Mask;
use crate::numeric::exact_sum;
use crate::stencil::PerimeterStencil;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub perimeter: f64,
    /// `Σ_{x∈E} g(x) h^d`.
    pub g_integral: f64,
    pub volume: f64,
    /// `perimeter - g_integral`.
    pub energy: f64,
}

impl Ledger {
    pub fn of(m: &Mask, g: &ScalarField, s: &PerimeterStencil) -> Result<Self> {
        m.grid().check_same(g.grid())?;
        let perimeter = s.perimeter(m)?;
        let g_integral = exact_sum(m.indices().map(|i| g.get(i))) * m.grid().cell_volume();
        Ok(Self { perimeter, g_integral, volume: m.volume(), energy: perimeter - g_integral })
    }

    /// `F(E) - λ|E|`.
    pub fn tilted(&self, lambda: f64) -> f64 {
        self.energy - lambda * self.volume
    }

    /// `F(E) + μ||E| - v|`.
    pub fn penalized(&self, mu: f64, v: f64) -> f64 {
        self.energy + mu * (self.volume - v).abs()
    }
}

pub fn energy(m: &Mask, g: &ScalarField, s: &PerimeterStencil) -> Result<f64> {
    Ok(Ledger::of(m, g, s)?.energy)
}
