use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adjust::adjust_to_count;
use super::cut::{tilted_minimizer, Cell};
use super::{Bracket, SolveResult, Status};
use crate::energy::Ledger;
use crate::error::{Error, Result};
use crate::fft::{fft_nd, to_complex, Direction};
use crate::field::ScalarField;
use crate::grid::{PeriodicGrid, Step};
use crate::mask::Mask;
use crate::stencil::PerimeterStencil;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// `Exact` on small grids, otherwise `Global` followed by `Local`.
    Auto,
    /// Branch and bound with Lagrangian bounds; certified optimum.
    Exact,
    /// Multiplier bisection over whole-domain minimizers only.
    Global,
    /// Global bisection plus band-restricted refinement of seeded candidates.
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finish {
    /// Return the bracket endpoint nearest the target volume.
    Bracketed,
    /// Return a mask of exactly the target volume.
    Adjusted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedOptions {
    pub strategy: Strategy,
    pub finish: Finish,
    /// Multiplier bracket width; default `1e-6 (1 + ‖g‖∞)`.
    pub tol_lambda: Option<f64>,
    /// Largest free-cell count handled by `Exact` under `Auto`.
    pub exact_cell_limit: usize,
    /// Half-width in cells of the refinement band.
    pub band: usize,
    pub max_local_iters: usize,
    /// Number of forcing peaks used as ball seeds.
    pub seeds: usize,
    /// Cells whose membership is imposed.
    pub fixed: Option<Vec<Cell>>,
    /// Extra initial guesses for the local strategy.
    pub starts: Vec<Mask>,
}

impl Default for ConstrainedOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            finish: Finish::Adjusted,
            tol_lambda: None,
            exact_cell_limit: 24,
            band: 3,
            max_local_iters: 40,
            seeds: 3,
            fixed: None,
            starts: Vec::new(),
        }
    }
}

struct Problem<'a> {
    g: &'a ScalarField,
    s: &'a PerimeterStencil,
    k: usize,
    v: f64,
    tol: f64,
}

#[derive(Clone)]
struct Candidate {
    mask: Mask,
    ledger: Ledger,
    bracket: Option<Bracket>,
    band_lower: Option<f64>,
    ends: Option<(Mask, Mask)>,
}

fn merge(base: Option<&[Cell]>, extra: impl Fn(usize) -> Cell, n: usize) -> Vec<Cell> {
    (0..n)
        .map(|x| match base.map_or(Cell::Free, |b| b[x]) {
            Cell::Free => extra(x),
            c => c,
        })
        .collect()
}

fn lower_bound(b: &Bracket, v: f64) -> f64 {
    (b.energy_lo + b.lambda_lo * (v - b.vol_lo)).max(b.energy_hi + b.lambda_hi * (v - b.vol_hi))
}

impl Problem<'_> {
    fn solve(&self, lambda: f64, fixed: &[Cell]) -> Result<Mask> {
        tilted_minimizer(self.g, lambda, self.s, Some(fixed))
    }

    /// Bisection on λ over minimizers agreeing with `fixed`. Minimal minimizers
    /// are nested in λ, so each step freezes the current endpoints.
    fn bisect(&self, fixed: &[Cell], guess: f64, scale: f64) -> Result<Search> {
        let step0 = scale.max(self.tol);
        let mut step = step0;
        let mut lo = guess - step;
        let mut a = self.solve(lo, fixed)?;
        let mut upper = None;
        let mut tries = 0;
        while a.count() > self.k {
            upper = Some((lo, a));
            step *= 2.0;
            lo = guess - step;
            a = self.solve(lo, fixed)?;
            tries += 1;
            if tries > 200 {
                return Err(Error::Solver("no multiplier below the target volume".into()));
            }
        }
        let (mut hi, mut b) = match upper {
            Some(u) => u,
            None => {
                let mut step = step0;
                let mut hi = guess + step;
                let mut b = self.solve(hi, fixed)?;
                while b.count() < self.k {
                    lo = hi;
                    a = b;
                    step *= 2.0;
                    hi = guess + step;
                    b = self.solve(hi, fixed)?;
                    tries += 1;
                    if tries > 200 {
                        return Err(Error::Solver("no multiplier above the target volume".into()));
                    }
                }
                (hi, b)
            }
        };
        let mut hit = None;
        if a.count() == self.k {
            hit = Some(a.clone());
        } else if b.count() == self.k {
            hit = Some(b.clone());
        }
        while hit.is_none() && hi - lo > self.tol {
            let mid = 0.5 * (lo + hi);
            let inner = merge(
                Some(fixed),
                |x| {
                    if a.get(x) {
                        Cell::In
                    } else if !b.get(x) {
                        Cell::Out
                    } else {
                        Cell::Free
                    }
                },
                fixed.len(),
            );
            let c = self.solve(mid, &inner)?;
            match c.count().cmp(&self.k) {
                std::cmp::Ordering::Less => {
                    lo = mid;
                    a = c;
                }
                std::cmp::Ordering::Greater => {
                    hi = mid;
                    b = c;
                }
                std::cmp::Ordering::Equal => {
                    hit = Some(c.clone());
                    lo = mid;
                    hi = mid;
                    a = c.clone();
                    b = c;
                }
            }
        }
        let la = Ledger::of(&a, self.g, self.s)?;
        let lb = if a == b { la } else { Ledger::of(&b, self.g, self.s)? };
        let bracket = Bracket {
            lambda_lo: lo,
            lambda_hi: hi,
            vol_lo: la.volume,
            vol_hi: lb.volume,
            energy_lo: la.energy,
            energy_hi: lb.energy,
        };
        let hit = hit.map(|m: Mask| {
            let l = if m == a { la } else { lb };
            (m, l)
        });
        Ok(Search { lo: a, hi: b, bracket, hit })
    }

    fn candidate(&self, mask: Mask) -> Result<Candidate> {
        let ledger = Ledger::of(&mask, self.g, self.s)?;
        Ok(Candidate { mask, ledger, bracket: None, band_lower: None, ends: None })
    }

    /// Trust-region descent: repeatedly solve the constrained problem inside a
    /// band around the current boundary and keep strict improvements, halving
    /// the band whenever a step fails.
    fn refine(&self, start: Candidate, opts: &ConstrainedOptions) -> Result<Candidate> {
        let n = self.g.grid().cell_count();
        let base = opts.fixed.as_deref();
        let mut cur = start;
        let mut guess = cur.bracket.map(|b| b.midpoint()).unwrap_or_else(|| {
            let d = self.g.grid().dim() as f64;
            (d - 1.0) / d * cur.ledger.perimeter / cur.ledger.volume.max(self.g.grid().cell_volume())
        });
        let mut width = opts.band.max(1);
        for _ in 0..opts.max_local_iters {
            let band = band_cells(&cur.mask, width);
            let fixed = merge(
                base,
                |x| {
                    if band[x] {
                        Cell::Free
                    } else if cur.mask.get(x) {
                        Cell::In
                    } else {
                        Cell::Out
                    }
                },
                n,
            );
            let scale = 0.05 * guess.abs() + self.g.sup_norm() + 1.0;
            let search = self.bisect(&fixed, guess, scale)?;
            guess = search.bracket.midpoint();
            let mut options = Vec::new();
            if let Some((m, _)) = search.hit {
                options.push(m);
            } else {
                options.push(adjust_to_count(&search.lo, self.k, self.g, self.s, Some(&fixed))?);
                options.push(adjust_to_count(&search.hi, self.k, self.g, self.s, Some(&fixed))?);
            }
            let mut improved = false;
            for m in options {
                let c = self.candidate(m)?;
                if c.ledger.energy < cur.ledger.energy - 1e-13 * (1.0 + cur.ledger.energy.abs()) {
                    cur = c;
                    improved = true;
                }
            }
            cur.bracket = Some(search.bracket);
            cur.ends = Some((search.lo, search.hi));
            cur.band_lower = Some(lower_bound(&search.bracket, self.v));
            if !improved {
                if width == 1 {
                    break;
                }
                width /= 2;
            }
        }
        Ok(cur)
    }

    fn exact(&self, base: &[Cell]) -> Result<Candidate> {
        let n = base.len();
        let start = adjust_to_count(
            &Mask::from_indices(self.g.grid().clone(), (0..n).filter(|&x| base[x] == Cell::In)),
            self.k,
            self.g,
            self.s,
            Some(base),
        )?;
        let mut best = self.candidate(start)?;
        let mut stack = vec![base.to_vec()];
        let mut root_bracket = None;
        while let Some(node) = stack.pop() {
            let ins = node.iter().filter(|&&c| c == Cell::In).count();
            let free = node.iter().filter(|&&c| c == Cell::Free).count();
            if ins > self.k || ins + free < self.k {
                continue;
            }
            if free == 0 {
                let m = Mask::new(self.g.grid().clone(), node.iter().map(|&c| c == Cell::In).collect())?;
                let c = self.candidate(m)?;
                if c.ledger.energy < best.ledger.energy {
                    best = c;
                }
                continue;
            }
            let scale = self.g.sup_norm() + 1.0;
            let search = self.bisect(&node, 0.0, scale)?;
            if root_bracket.is_none() {
                root_bracket = Some(search.bracket);
            }
            if let Some((m, l)) = search.hit {
                if l.energy < best.ledger.energy {
                    best = Candidate { mask: m, ledger: l, bracket: None, band_lower: None, ends: None };
                }
                continue;
            }
            let bound = lower_bound(&search.bracket, self.v);
            if bound > best.ledger.energy + 1e-9 * (1.0 + best.ledger.energy.abs()) {
                continue;
            }
            let pick = (0..n)
                .find(|&x| node[x] == Cell::Free && search.lo.get(x) != search.hi.get(x))
                .or_else(|| (0..n).find(|&x| node[x] == Cell::Free))
                .expect("free cell");
            for c in [Cell::Out, Cell::In] {
                let mut child = node.clone();
                child[pick] = c;
                stack.push(child);
            }
        }
        best.bracket = root_bracket;
        best.band_lower = Some(best.ledger.energy);
        Ok(best)
    }
}

struct Search {
    lo: Mask,
    hi: Mask,
    bracket: Bracket,
    hit: Option<(Mask, Ledger)>,
}

/// Cells within Chebyshev distance `width` of a cell whose face neighbour has
/// the opposite membership.
pub(crate) fn band_cells(m: &Mask, width: usize) -> Vec<bool> {
    let grid = m.grid();
    let d = grid.dim();
    let n = grid.cell_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for x in m.boundary_cells() {
        dist[x] = 0;
        queue.push_back(x);
    }
    for x in 0..n {
        if dist[x] == 0 {
            continue;
        }
        // cells next to a closed wall are boundary candidates too
        for a in 0..d {
            for s in [-1i64, 1] {
                let mut o = [0i64; 3];
                o[a] = s;
                if grid.step(x, &o[..]) == Step::ClosedExterior && m.get(x) && dist[x] != 0 {
                    dist[x] = 0;
                    queue.push_back(x);
                }
            }
        }
    }
    let mut offsets = Vec::new();
    let r = if d == 3 { -1..=1 } else { 0..=0 };
    for a in -1i64..=1 {
        for b in -1i64..=1 {
            for c in r.clone() {
                if (a, b, c) != (0, 0, 0) {
                    offsets.push([a, b, c]);
                }
            }
        }
    }
    while let Some(x) = queue.pop_front() {
        if dist[x] >= width {
            continue;
        }
        for o in &offsets {
            if let Step::Inside(y) = grid.step(x, o) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
    }
    dist.iter().map(|&v| v != usize::MAX).collect()
}

/// Circular convolution of `g` with the indicator of a ball of radius `r`.
fn ball_average(g: &ScalarField, r: f64) -> Vec<f64> {
    let grid = g.grid();
    let d = grid.dim();
    let kernel = Mask::from_fn(grid.clone(), |x| {
        (0..d)
            .map(|a| {
                let l = grid.length(a);
                let t = x[a] - 0.5 * grid.h();
                let t = t - l * (t / l).round();
                t * t
            })
            .sum::<f64>()
            <= r * r
    });
    let mut a = to_complex(g.values());
    let mut b: Vec<Complex64> =
        kernel.cells().iter().map(|&c| Complex64::new(if c { 1.0 } else { 0.0 }, 0.0)).collect();
    fft_nd(&mut a, grid.sides(), Direction::Forward);
    fft_nd(&mut b, grid.sides(), Direction::Forward);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_nd(&mut a, grid.sides(), Direction::Inverse);
    let n = grid.cell_count() as f64;
    a.iter().map(|c| c.re / n).collect()
}

/// Up to `count` well-separated maxima of the ball-averaged forcing.
fn peak_centers(g: &ScalarField, r: f64, count: usize) -> Vec<usize> {
    let grid = g.grid();
    let d = grid.dim();
    let avg = ball_average(g, r);
    let mut order: Vec<usize> = (0..avg.len()).collect();
    order.sort_by(|&a, &b| avg[b].total_cmp(&avg[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = Vec::new();
    for x in order {
        if out.len() == count {
            break;
        }
        let cx = grid.center(x);
        if out.iter().all(|&y| grid.distance(&cx[..d], &grid.center(y)[..d]) > 2.0 * r) {
            out.push(x);
        }
    }
    out
}

/// Slab of `k` cells normal to `axis`, placed where the forcing is largest.
fn slab_seed(g: &ScalarField, axis: usize, k: usize) -> Option<Mask> {
    let grid = g.grid();
    let n = grid.sides()[axis];
    let per_layer = grid.cell_count() / n;
    let layers = k / per_layer;
    if layers == 0 || layers >= n {
        return None;
    }
    let mut line = vec![0.0; n];
    for x in 0..grid.cell_count() {
        line[grid.coords(x)[axis]] += g.get(x);
    }
    let score = |s: usize| (0..layers).map(|t| line[(s + t) % n]).sum::<f64>();
    let start = (0..n).max_by(|&a, &b| score(a).total_cmp(&score(b)).then(b.cmp(&a)))?;
    Some(Mask::from_indices(
        grid.clone(),
        (0..grid.cell_count()).filter(|&x| (grid.coords(x)[axis] + n - start) % n < layers),
    ))
}

fn ball_seed(grid: &PeriodicGrid, center: usize, v: f64) -> Option<Mask> {
    let d = grid.dim();
    let omega = if d == 2 { std::f64::consts::PI } else { 4.0 / 3.0 * std::f64::consts::PI };
    let r = (v / omega).powf(1.0 / d as f64);
    let lmin = (0..d).map(|a| grid.length(a)).fold(f64::INFINITY, f64::min);
    if r > 0.5 * lmin {
        return None;
    }
    Mask::ball(grid, &grid.center(center)[..d], r.max(0.5 * grid.h())).ok()
}

/// `f(v) = min_{|E| = v} P(E) - ∫_E g`, with `v` rounded to whole cells.
pub fn minimize_volume_constrained(
    g: &ScalarField,
    v: f64,
    s: &PerimeterStencil,
    opts: &ConstrainedOptions,
) -> Result<SolveResult> {
    let grid = g.grid();
    s.check_grid(grid)?;
    let total = grid.total_volume();
    if !(0.0..=total * (1.0 + 1e-12)).contains(&v) {
        return Err(Error::OutOfRange(format!("volume {v} outside [0, {total}]")));
    }
    let n = grid.cell_count();
    let k = ((v / grid.cell_volume()).round() as usize).min(n);
    let v = k as f64 * grid.cell_volume();
    let tol = opts.tol_lambda.unwrap_or(1e-6 * (1.0 + g.sup_norm()));
    if !(tol > 0.0) {
        return Err(Error::OutOfRange("tol_lambda must be positive".into()));
    }
    let base: Vec<Cell> = match &opts.fixed {
        Some(f) if f.len() == n => f.clone(),
        Some(_) => return Err(Error::GridMismatch("fixed cells do not match the grid".into())),
        None => vec![Cell::Free; n],
    };
    let forced_in = base.iter().filter(|&&c| c == Cell::In).count();
    let free = base.iter().filter(|&&c| c == Cell::Free).count();
    if k < forced_in || k > forced_in + free {
        return Err(Error::OutOfRange(format!("volume {v} incompatible with fixed cells")));
    }
    let p = Problem { g, s, k, v, tol };
    let trivial = free == 0 || k == forced_in || k == forced_in + free;
    if trivial {
        let m = Mask::new(
            grid.clone(),
            base.iter().map(|&c| c == Cell::In || (c == Cell::Free && k > forced_in)).collect(),
        )?;
        let mut r = SolveResult::new(m, g, s, Status::ExactVolume)?;
        r.f_lower = Some(r.energy());
        r.f_lower_certified = Some(r.energy());
        return Ok(r);
    }
    let strategy = match opts.strategy {
        Strategy::Auto if free <= opts.exact_cell_limit => Strategy::Exact,
        Strategy::Auto => Strategy::Local,
        st => st,
    };
    if strategy == Strategy::Exact {
        let best = p.exact(&base)?;
        let mut r = SolveResult::new(best.mask, g, s, Status::ExactVolume)?;
        r.bracket = best.bracket;
        r.multiplier = best.bracket.map(|b| b.midpoint());
        r.f_lower = Some(r.energy());
        r.f_lower_certified = Some(r.energy());
        return Ok(r);
    }

    let global = p.bisect(&base, 0.0, g.sup_norm() + 1.0)?;
    let certified = lower_bound(&global.bracket, v);
    if let Some((m, _)) = global.hit {
        let mut r = SolveResult::new(m, g, s, Status::ExactVolume)?;
        r.bracket = Some(global.bracket);
        r.multiplier = Some(global.bracket.midpoint());
        r.f_lower = Some(r.energy());
        r.f_lower_certified = Some(r.energy());
        return Ok(r);
    }
    let mut starts =
        vec![adjust_to_count(&global.lo, k, g, s, Some(&base))?, adjust_to_count(&global.hi, k, g, s, Some(&base))?];
    if strategy == Strategy::Local {
        let d = grid.dim();
        let omega = if d == 2 { std::f64::consts::PI } else { 4.0 / 3.0 * std::f64::consts::PI };
        let r = (v / omega).powf(1.0 / d as f64);
        for c in peak_centers(g, r, opts.seeds) {
            if let Some(b) = ball_seed(grid, c, v) {
                starts.push(b);
            }
        }
        for a in 0..d {
            starts.extend(slab_seed(g, a, k));
        }
        for m in &opts.starts {
            grid.check_same(m.grid())?;
            starts.push(m.clone());
        }
    }
    let fixed = |m: &Mask| -> Result<Mask> {
        let merged = Mask::new(
            grid.clone(),
            (0..n)
                .map(|x| match base[x] {
                    Cell::In => true,
                    Cell::Out => false,
                    Cell::Free => m.get(x),
                })
                .collect(),
        )?;
        adjust_to_count(&merged, k, g, s, Some(&base))
    };
    let starts: Vec<Mask> = starts.iter().map(fixed).collect::<Result<_>>()?;
    let mut cands: Vec<Candidate> = starts.into_iter().map(|m| p.candidate(m)).collect::<Result<_>>()?;
    for c in cands.iter_mut().take(2) {
        c.bracket = Some(global.bracket);
        c.band_lower = Some(certified);
    }
    if strategy == Strategy::Local {
        cands = cands.into_par_iter().map(|c| p.refine(c, opts)).collect::<Result<_>>()?;
    }
    let best = cands
        .into_iter()
        .reduce(|a, b| if b.ledger.energy < a.ledger.energy { b } else { a })
        .expect("at least one candidate");
    let bracket = best.bracket.unwrap_or(global.bracket);
    let (mask, status) = match opts.finish {
        Finish::Adjusted => (best.mask, Status::Adjusted),
        Finish::Bracketed => {
            let (lo, hi) = best.ends.unwrap_or((global.lo, global.hi));
            let near = if v - bracket.vol_lo <= bracket.vol_hi - v { lo } else { hi };
            (near, Status::Bracketed)
        }
    };
    let mut r = SolveResult::new(mask, g, s, status)?;
    r.bracket = Some(bracket);
    r.multiplier = Some(bracket.midpoint());
    r.f_lower = Some(best.band_lower.unwrap_or(certified).max(certified));
    r.f_lower_certified = Some(certified);
    Ok(r)
}
