//! Experiment configuration: one TOML file, one level of sections.
//!
//! ```toml
//! run_id = "disk"
//! seed = 42
//!
//! [grid]
//! dim = 2
//! n = 128
//! length = 1.0
//!
//! [forcing]
//! type = "trig"
//! modes = [{ k = [1, 0], amplitude = 0.5 }]
//!
//! [solve]
//! mode = "constrained"
//! v = 0.1
//! ```

use std::path::{Path, PathBuf};

use prescurv_core::forcing::{build_field, ForcingKind, ForcingSpec, TrigMode};
use prescurv_core::rng::CounterRng;
use prescurv_core::solver::{ConstrainedOptions, Finish, Strategy};
use prescurv_core::{AxisBoundary, PerimeterStencil, PeriodicGrid, ScalarField, StencilPreset};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run_id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub wulff: WulffConfig,
    #[serde(default)]
    pub asym: AsymConfig,
    #[serde(default)]
    pub nondiff: NondiffConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    /// Cells per side; `sides` overrides it.
    pub n: usize,
    pub sides: Option<Vec<usize>>,
    /// Physical side length of the first axis; `h = length / sides[0]`.
    pub length: f64,
    /// One name for all axes or one per axis: periodic, open, closed.
    pub boundary: Vec<String>,
    pub stencil: Option<String>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 2, n: 64, sides: None, length: 1.0, boundary: vec!["periodic".into()], stencil: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingConfig {
    /// zero, trig, bump_pair, raster or random.
    #[serde(rename = "type")]
    pub kind: String,
    pub zero_mean: bool,
    pub modes: Vec<TrigMode>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub heights: Vec<f64>,
    pub radii: Vec<f64>,
    pub path: Option<PathBuf>,
    /// Half-width of the uniform values of a random field.
    pub amplitude: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            kind: "zero".into(),
            zero_mean: false,
            modes: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            heights: Vec::new(),
            radii: Vec::new(),
            path: None,
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    /// constrained, penalized or unconstrained.
    pub mode: String,
    pub v: f64,
    pub lambda: f64,
    pub mu: Option<f64>,
    pub strategy: Strategy,
    pub finish: Finish,
    pub tol_lambda: Option<f64>,
    pub band: usize,
    pub seeds: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let o = ConstrainedOptions::default();
        Self {
            mode: "constrained".into(),
            v: 0.0,
            lambda: 0.0,
            mu: None,
            strategy: o.strategy,
            finish: o.finish,
            tol_lambda: None,
            band: o.band,
            seeds: o.seeds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub v_list: Vec<f64>,
    /// Geometric list from `v_min` to `v_max` when `v_list` is empty.
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub count: usize,
    pub deltas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { v_list: Vec::new(), v_min: None, v_max: None, count: 9, deltas: vec![0.1, 0.3, 0.5] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WulffConfig {
    /// Directions are primitive `q` with `|q|_∞ ≤ max_q`.
    pub max_q: i64,
    /// Explicit directions; replaces `max_q` when nonempty.
    pub directions: Vec<Vec<i64>>,
    pub widths: Vec<usize>,
    pub pad: Option<usize>,
    pub volume: f64,
    /// Raster side in cells; the raster spans `2.5` shape diameters.
    pub raster: usize,
}

impl Default for WulffConfig {
    fn default() -> Self {
        Self { max_q: 4, directions: Vec::new(), widths: Vec::new(), pad: None, volume: 1.0, raster: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymConfig {
    pub v_list: Vec<f64>,
    pub max_q: i64,
    pub widths: Vec<usize>,
    pub pad: Option<usize>,
}

impl Default for AsymConfig {
    fn default() -> Self {
        Self { v_list: Vec::new(), max_q: 4, widths: Vec::new(), pad: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NondiffConfig {
    pub v_list: Vec<f64>,
}

impl Default for NondiffConfig {
    fn default() -> Self {
        Self { v_list: (1..=12).map(|i| i as f64 * 0.004).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Random fields per grid and multiplier.
    pub seeds: u64,
    /// Oracle fixture CSV; the bundled one when absent.
    pub fixture: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seeds: 100, fixture: None }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c: Config = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        if c.run_id.is_empty() {
            c.run_id = "run".into();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        self.stencil()?;
        let positive = |name: &str, x: Option<f64>| match x {
            Some(t) if !(t > 0.0 && t.is_finite()) => Err(invalid(format!("{name} must be positive"))),
            _ => Ok(()),
        };
        positive("solve.tol_lambda", self.solve.tol_lambda)?;
        positive("solve.mu", self.solve.mu)?;
        positive("wulff.volume", Some(self.wulff.volume))?;
        if !["constrained", "penalized", "unconstrained"].contains(&self.solve.mode.as_str()) {
            return Err(invalid(format!("unknown solve.mode {}", self.solve.mode)));
        }
        if !self.solve.lambda.is_finite() || !self.solve.v.is_finite() {
            return Err(invalid("solve values must be finite"));
        }
        if self.sweep.deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(invalid("sweep.deltas must lie in (0, 1)"));
        }
        if self.wulff.max_q < 1 || self.asym.max_q < 1 {
            return Err(invalid("max_q must be at least 1"));
        }
        if self.wulff.raster < 8 {
            return Err(invalid("wulff.raster must be at least 8"));
        }
        self.forcing_spec()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<PeriodicGrid, CliError> {
        let g = &self.grid;
        if !(g.dim == 2 || g.dim == 3) {
            return Err(invalid(format!("grid.dim {} must be 2 or 3", g.dim)));
        }
        let sides = g.sides.clone().unwrap_or_else(|| vec![g.n; g.dim]);
        if sides.len() != g.dim || sides.iter().any(|&s| s < 2) {
            return Err(invalid("grid.sides must give one side ≥ 2 per axis"));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(invalid("grid.length must be positive"));
        }
        let names = match g.boundary.len() {
            1 => vec![g.boundary[0].clone(); g.dim],
            n if n == g.dim => g.boundary.clone(),
            _ => return Err(invalid("grid.boundary needs one entry or one per axis")),
        };
        let boundary = names
            .iter()
            .map(|s| AxisBoundary::parse(s).ok_or_else(|| invalid(format!("unknown boundary {s}"))))
            .collect::<Result<Vec<_>, _>>()?;
        PeriodicGrid::with_boundary(&sides, g.length / sides[0] as f64, &boundary).map_err(|e| invalid(e.to_string()))
    }

    pub fn stencil(&self) -> Result<PerimeterStencil, CliError> {
        let preset = match &self.grid.stencil {
            Some(s) => StencilPreset::parse(s).ok_or_else(|| invalid(format!("unknown stencil {s}")))?,
            None => StencilPreset::default_for(self.grid.dim),
        };
        if preset.dim() != self.grid.dim {
            return Err(invalid(format!("stencil {} does not fit dimension {}", preset.as_str(), self.grid.dim)));
        }
        Ok(PerimeterStencil::preset(preset))
    }

    /// `None` for random fields, which are not a `ForcingSpec`.
    pub fn forcing_spec(&self) -> Result<Option<ForcingSpec>, CliError> {
        let f = &self.forcing;
        let kind = match f.kind.as_str() {
            "zero" => ForcingKind::Zero,
            "trig" => {
                if f.modes.is_empty() {
                    return Err(invalid("trig forcing needs modes"));
                }
                ForcingKind::TrigPoly { modes: f.modes.clone() }
            }
            "bump_pair" => {
                if f.heights.len() != 2 || f.radii.len() != 2 {
                    return Err(invalid("bump_pair needs two heights and two radii"));
                }
                ForcingKind::BumpPair {
                    a: f.a.clone(),
                    b: f.b.clone(),
                    height_a: f.heights[0],
                    height_b: f.heights[1],
                    radius_a: f.radii[0],
                    radius_b: f.radii[1],
                }
            }
            "raster" => {
                ForcingKind::Raster { path: f.path.clone().ok_or_else(|| invalid("raster forcing needs path"))? }
            }
            "random" => {
                if !(f.amplitude >= 0.0 && f.amplitude.is_finite()) {
                    return Err(invalid("forcing.amplitude must be nonnegative"));
                }
                return Ok(None);
            }
            other => return Err(invalid(format!("unknown forcing type {other}"))),
        };
        let spec = ForcingSpec { kind, zero_mean: f.zero_mean };
        if !matches!(spec.kind, ForcingKind::Raster { .. }) {
            spec.validate(&self.grid()?).map_err(|e| invalid(e.to_string()))?;
        }
        Ok(Some(spec))
    }

    pub fn field(&self) -> Result<ScalarField, CliError> {
        self.field_on(&self.grid()?)
    }

    pub fn field_on(&self, grid: &PeriodicGrid) -> Result<ScalarField, CliError> {
        match self.forcing_spec()? {
            Some(spec) => build_field(&spec, grid).map_err(CliError::from_core),
            None => {
                let mut r = CounterRng::new(self.seed);
                let a = self.forcing.amplitude;
                let v = (0..grid.cell_count()).map(|_| r.uniform(-a, a)).collect();
                let f = ScalarField::new(grid.clone(), v).map_err(CliError::from_core)?;
                Ok(if self.forcing.zero_mean { f.zero_mean() } else { f })
            }
        }
    }

    pub fn constrained_options(&self) -> ConstrainedOptions {
        ConstrainedOptions {
            strategy: self.solve.strategy,
            finish: self.solve.finish,
            tol_lambda: self.solve.tol_lambda,
            band: self.solve.band,
            seeds: self.solve.seeds,
            ..ConstrainedOptions::default()
        }
    }

    /// `sweep.v_list`, or the geometric list it describes.
    pub fn sweep_volumes(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.sweep;
        if !s.v_list.is_empty() {
            return Ok(s.v_list.clone());
        }
        match (s.v_min, s.v_max) {
            (Some(lo), Some(hi)) if lo > 0.0 && hi > lo && s.count >= 2 => {
                Ok((0..s.count).map(|i| lo * (hi / lo).powf(i as f64 / (s.count - 1) as f64)).collect())
            }
            (None, None) => Err(invalid("sweep needs v_list or v_min/v_max")),
            _ => Err(invalid("sweep needs 0 < v_min < v_max and count ≥ 2")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_rejections() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.run_id, "run");
        assert_eq!(c.grid().unwrap().sides(), &[64, 64]);
        assert!(Config::parse("bogus = 1").is_err());
        assert!(Config::parse("[grid]\nsize = 3").is_err());
        assert!(Config::parse("[grid]\ndim = 4").is_err());
        assert!(Config::parse("[solve]\ntol_lambda = -1.0").is_err());
        assert!(Config::parse("[forcing]\ntype = \"trig\"").is_err());
        assert!(Config::parse("[grid]\nstencil = \"n26\"").is_err());
        let c = Config::parse("[forcing]\ntype = \"trig\"\nmodes = [{ k = [1, 0], amplitude = 2.0 }]").unwrap();
        assert!((c.field().unwrap().sup_norm() - 2.0).abs() < 0.01);
    }

    #[test]
    fn geometric_sweep() {
        let c = Config::parse("[sweep]\nv_min = 0.001\nv_max = 0.1\ncount = 3").unwrap();
        let v = c.sweep_volumes().unwrap();
        assert!((v[1] - 0.01).abs() < 1e-15 && v.len() == 3);
        assert!(Config::parse("").unwrap().sweep_volumes().is_err());
    }
}
