//! Oracle equivalence and invariant suite behind `oracle-verify`.
//!
//! The bundled fixture holds exhaustive-search results on a 4×4 torus with a
//! seeded random forcing:
//!
//! ```text
//! # seed, n, amplitude
//! grid,42,4,24.0
//! # min: multiplier, energy, minimal minimizer as 0/1 in cell order
//! min,-2.0,-1.04,1000010101000010
//! # isovol: cells, f
//! isovol,1,0.42
//! ```

use prescurv_core::oracle::ORACLE_CELL_LIMIT;
use prescurv_core::rng::CounterRng;
use prescurv_core::solver::{ConstrainedOptions, Strategy};
use prescurv_core::{
    brute_force_isovol, brute_force_min, minimize_unconstrained, minimize_volume_constrained, oracle, Mask,
    PerimeterStencil, PeriodicGrid, ScalarField,
};

use crate::output::num;
use crate::CliError;

pub const BUNDLED_FIXTURE: &str = include_str!("../fixtures/oracle_4x4_seed42.csv");

/// Multipliers tabulated in the fixture.
pub const FIXTURE_LAMBDAS: [f64; 5] = [-8.0, -2.0, 0.0, 2.0, 8.0];

pub fn random_field(grid: &PeriodicGrid, seed: u64, amplitude: f64) -> ScalarField {
    let mut r = CounterRng::new(seed);
    let v = (0..grid.cell_count()).map(|_| r.uniform(-amplitude, amplitude)).collect();
    ScalarField::new(grid.clone(), v).expect("cell count")
}

pub fn bits(m: &Mask) -> String {
    m.cells().iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(grid: &PeriodicGrid, s: &str) -> Result<Mask, CliError> {
    let cells: Vec<bool> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::Config(format!("bad mask character {c:?}"))),
        })
        .collect::<Result<_, _>>()?;
    Mask::new(grid.clone(), cells).map_err(|e| CliError::Config(e.to_string()))
}

/// Fixture text computed by exhaustive enumeration alone.
pub fn oracle_fixture(seed: u64, n: usize, amplitude: f64, s: &PerimeterStencil) -> prescurv_core::Result<String> {
    let grid = PeriodicGrid::torus(2, n, 1.0)?;
    let g = random_field(&grid, seed, amplitude);
    let mut out = String::from("# seed, n, amplitude\n");
    out.push_str(&format!("grid,{seed},{n},{}\n", num(amplitude)));
    out.push_str("# min: multiplier, energy, minimal minimizer as 0/1 in cell order\n");
    for &l in &FIXTURE_LAMBDAS {
        let r = brute_force_min(&oracle::tilt(&g, l), s)?;
        out.push_str(&format!("min,{},{},{}\n", num(l), num(r.energy), bits(&r.minimal())));
    }
    out.push_str("# isovol: cells, f\n");
    let t = brute_force_isovol(&g, s)?;
    for r in &t.rows {
        out.push_str(&format!("isovol,{},{}\n", r.cells, num(r.f)));
    }
    Ok(out)
}

pub struct Fixture {
    pub g: ScalarField,
    pub mins: Vec<(f64, f64, Mask)>,
    pub isovol: Vec<(usize, f64)>,
}

pub fn parse_fixture(text: &str) -> Result<Fixture, CliError> {
    let bad = |l: &str| CliError::Config(format!("bad fixture line: {l}"));
    let mut g = None;
    let mut mins = Vec::new();
    let mut isovol = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let f: Vec<&str> = line.split(',').collect();
        match f[0] {
            "grid" if f.len() == 4 => {
                let seed = f[1].parse().map_err(|_| bad(line))?;
                let n: usize = f[2].parse().map_err(|_| bad(line))?;
                let amp: f64 = f[3].parse().map_err(|_| bad(line))?;
                let grid = PeriodicGrid::torus(2, n, 1.0).map_err(|_| bad(line))?;
                g = Some(random_field(&grid, seed, amp));
            }
            "min" if f.len() == 4 => {
                let grid = g.as_ref().ok_or_else(|| bad(line))?.grid();
                let l = f[1].parse().map_err(|_| bad(line))?;
                let e = f[2].parse().map_err(|_| bad(line))?;
                mins.push((l, e, parse_bits(grid, f[3])?));
            }
            "isovol" if f.len() == 3 => {
                isovol.push((f[1].parse().map_err(|_| bad(line))?, f[2].parse().map_err(|_| bad(line))?));
            }
            _ => return Err(bad(line)),
        }
    }
    let g = g.ok_or_else(|| CliError::Config("fixture has no grid line".into()))?;
    if mins.is_empty() || isovol.len() != g.grid().cell_count() + 1 {
        return Err(CliError::Config("fixture is incomplete".into()));
    }
    Ok(Fixture { g, mins, isovol })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl Check {
    fn new(name: &str) -> Self {
        Self { name: name.into(), cases: 0, failures: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Solver results against the stored fixture.
pub fn check_fixture(fx: &Fixture, s: &PerimeterStencil) -> Result<Check, CliError> {
    let mut c = Check::new("fixture");
    for (l, e, m) in &fx.mins {
        let r = minimize_unconstrained(&fx.g, *l, s)?;
        let got = r.ledger.tilted(*l);
        c.expect(close(got, *e), || format!("lambda {l}: energy {got} vs {e}"));
        c.expect(&r.mask == m, || format!("lambda {l}: minimal minimizer {} vs {}", bits(&r.mask), bits(m)));
    }
    let hd = fx.g.grid().cell_volume();
    let opts = ConstrainedOptions { strategy: Strategy::Exact, ..ConstrainedOptions::default() };
    for &(k, f) in &fx.isovol {
        let r = minimize_volume_constrained(&fx.g, k as f64 * hd, s, &opts)?;
        c.expect(close(r.energy(), f), || format!("cells {k}: f {} vs {f}", r.energy()));
    }
    Ok(c)
}

/// Grids with at most [`ORACLE_CELL_LIMIT`] cells used by the random suite.
pub fn suite_grids() -> Vec<PeriodicGrid> {
    vec![
        PeriodicGrid::torus(2, 4, 1.0).unwrap(),
        PeriodicGrid::new(&[4, 5], 0.25).unwrap(),
        PeriodicGrid::torus(2, 3, 1.0).unwrap(),
        PeriodicGrid::new(&[2, 2, 4], 0.5).unwrap(),
    ]
}

pub const SUITE_LAMBDAS: [f64; 3] = [-4.0, 0.0, 4.0];

/// Half-width of the random forcing values, large enough for nontrivial minimizers.
pub const SUITE_AMPLITUDE: f64 = 24.0;

/// Solver energy against exhaustive enumeration on `seeds` random fields per
/// grid and multiplier, plus translation equivariance of the minimal minimizer.
pub fn check_random(seeds: u64, base_seed: u64) -> Result<Vec<Check>, CliError> {
    use rayon::prelude::*;
    let mut energy = Check::new("oracle-energy");
    let mut minimal = Check::new("minimal-minimizer");
    let mut shift = Check::new("translation");
    for grid in suite_grids() {
        debug_assert!(grid.cell_count() <= ORACLE_CELL_LIMIT);
        let s = PerimeterStencil::default_for(grid.dim());
        let rows: Vec<_> = (0..seeds)
            .into_par_iter()
            .map(|i| -> Result<_, CliError> {
                let g = random_field(&grid, base_seed.wrapping_add(i), SUITE_AMPLITUDE);
                let mut out = Vec::new();
                for &l in &SUITE_LAMBDAS {
                    let r = minimize_unconstrained(&g, l, &s)?;
                    let o = brute_force_min(&oracle::tilt(&g, l), &s)?;
                    let mut sh = vec![0i64; grid.dim()];
                    sh[0] = 1;
                    let t = minimize_unconstrained(&g.translated(&sh), l, &s)?;
                    out.push((
                        i,
                        l,
                        r.ledger.tilted(l),
                        o.energy,
                        r.mask == o.minimal(),
                        t.mask == r.mask.translated(&sh),
                    ));
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;
        let sides = format!("{:?}", grid.sides());
        for (i, l, got, want, same, tr) in rows.into_iter().flatten() {
            energy.expect(close(got, want), || format!("{sides} seed {i} lambda {l}: {got} vs {want}"));
            minimal.expect(same, || format!("{sides} seed {i} lambda {l}: minimal minimizer differs"));
            shift.expect(tr, || format!("{sides} seed {i} lambda {l}: not translation equivariant"));
        }
    }
    Ok(vec![energy, minimal, shift])
}
