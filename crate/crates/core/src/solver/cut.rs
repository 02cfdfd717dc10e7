use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{PeriodicGrid, Step};
use crate::mask::Mask;
use crate::maxflow::{FlowAlgorithm, FlowGraph};
use crate::stencil::PerimeterStencil;

/// Membership constraint on one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Free,
    In,
    Out,
}

/// Minimal minimizer of `P(E) + Σ_{x∈E} unary(x)` over masks agreeing with `fixed`.
pub fn min_cut_mask(grid: &PeriodicGrid, s: &PerimeterStencil, unary: &[f64], fixed: Option<&[Cell]>) -> Result<Mask> {
    min_cut_mask_with(grid, s, unary, fixed, FlowAlgorithm::BoykovKolmogorov)
}

/// [`min_cut_mask`] with an explicit flow algorithm.
pub fn min_cut_mask_with(
    grid: &PeriodicGrid,
    s: &PerimeterStencil,
    unary: &[f64],
    fixed: Option<&[Cell]>,
    alg: FlowAlgorithm,
) -> Result<Mask> {
    s.check_grid(grid)?;
    if unary.len() != grid.cell_count() || fixed.is_some_and(|f| f.len() != unary.len()) {
        return Err(Error::GridMismatch("unary terms do not match the grid".into()));
    }
    if unary.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidForcing("non-finite unary term".into()));
    }
    let state = |x: usize| fixed.map_or(Cell::Free, |f| f[x]);
    let mut node = vec![u32::MAX; unary.len()];
    let mut free = Vec::new();
    for x in 0..unary.len() {
        if state(x) == Cell::Free {
            node[x] = free.len() as u32;
            free.push(x);
        }
    }
    let mut g = FlowGraph::new(free.len());
    let mut to_source = vec![0.0; free.len()];
    let mut to_sink = vec![0.0; free.len()];
    for (u, &x) in free.iter().enumerate() {
        let c = unary[x];
        if c > 0.0 {
            to_sink[u] += c;
        } else {
            to_source[u] -= c;
        }
    }
    let dense = free.len() * 4 >= unary.len();
    for (k, o) in s.offsets().iter().enumerate() {
        let c = s.cut_weight(k, grid);
        let neg = [-o[0], -o[1], -o[2]];
        let mut visit = |x: usize, st: Step, forward: bool| {
            let u = node[x];
            if u == u32::MAX {
                return;
            }
            let u = u as usize;
            match st {
                Step::Inside(y) if y == x => {}
                Step::Inside(y) => match state(y) {
                    Cell::Free => {
                        if forward {
                            g.add_edge(u, node[y] as usize, c, c);
                        }
                    }
                    Cell::In => to_source[u] += c,
                    Cell::Out => to_sink[u] += c,
                },
                Step::ClosedExterior => to_sink[u] += c,
                Step::OpenExterior => {}
            }
        };
        if dense {
            grid.for_each_step(o, |x, st| visit(x, st, true));
            grid.for_each_step(&neg, |x, st| visit(x, st, false));
        } else {
            for &x in &free {
                visit(x, grid.step(x, o), true);
                visit(x, grid.step(x, &neg), false);
            }
        }
    }
    for u in 0..free.len() {
        g.add_terminal(u, to_source[u], to_sink[u]);
    }
    g.max_flow_with(alg)?;
    let side = g.source_side().expect("flow computed");
    let cells = (0..unary.len())
        .map(|x| match state(x) {
            Cell::Free => side[node[x] as usize],
            Cell::In => true,
            Cell::Out => false,
        })
        .collect();
    Mask::new(grid.clone(), cells)
}

/// Unary terms `-(g(x) + λ) h^d`.
pub fn tilted_unary(g: &ScalarField, lambda: f64) -> Vec<f64> {
    let hd = g.grid().cell_volume();
    g.values().iter().map(|&v| -(v + lambda) * hd).collect()
}

/// Minimal minimizer of `P(E) - Σ_{x∈E} (g(x) + λ) h^d`.
pub fn tilted_minimizer(g: &ScalarField, lambda: f64, s: &PerimeterStencil, fixed: Option<&[Cell]>) -> Result<Mask> {
    min_cut_mask(g.grid(), s, &tilted_unary(g, lambda), fixed)
}
