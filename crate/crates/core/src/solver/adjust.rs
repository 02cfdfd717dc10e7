use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::cut::Cell;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Step;
use crate::mask::Mask;
use crate::stencil::PerimeterStencil;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Flipper<'a> {
    m: Mask,
    g: &'a ScalarField,
    s: &'a PerimeterStencil,
    weights: Vec<f64>,
    hd: f64,
}

impl Flipper<'_> {
    fn neighbors(&self, x: usize, mut f: impl FnMut(usize, Option<usize>)) {
        let grid = self.m.grid();
        for (k, o) in self.s.offsets().iter().enumerate() {
            let neg = [-o[0], -o[1], -o[2]];
            for off in [o, &neg] {
                match grid.step(x, off) {
                    Step::Inside(y) if y == x => {}
                    Step::Inside(y) => f(k, Some(y)),
                    Step::ClosedExterior => f(k, None),
                    Step::OpenExterior => {}
                }
            }
        }
    }

    /// Energy change from flipping `x`.
    fn delta(&self, x: usize) -> f64 {
        let inside = self.m.get(x);
        let mut dp = 0.0;
        self.neighbors(x, |k, y| {
            let other = y.is_some_and(|y| self.m.get(y));
            dp += if other == inside { self.weights[k] } else { -self.weights[k] };
        });
        let dg = self.g.get(x) * self.hd;
        if inside {
            dp + dg
        } else {
            dp - dg
        }
    }

    fn is_candidate(&self, x: usize, grow: bool, fixed: Option<&[Cell]>) -> bool {
        if self.m.get(x) == grow || fixed.is_some_and(|f| f[x] != Cell::Free) {
            return false;
        }
        let mut touches = false;
        self.neighbors(x, |_, y| {
            if let Some(y) = y {
                touches |= self.m.get(y) == grow;
            }
        });
        touches
    }
}

/// Greedy exchange: flips boundary cells with the smallest energy increase,
/// one at a time, until the mask has exactly `k` cells. An empty (full) start
/// is seeded at the cell with the largest (smallest) forcing.
pub fn adjust_to_count(
    m: &Mask,
    k: usize,
    g: &ScalarField,
    s: &PerimeterStencil,
    fixed: Option<&[Cell]>,
) -> Result<Mask> {
    let n = m.grid().cell_count();
    m.grid().check_same(g.grid())?;
    if k > n {
        return Err(Error::OutOfRange(format!("{k} cells requested on a grid of {n}")));
    }
    let grid = m.grid().clone();
    let weights = (0..s.offsets().len()).map(|i| s.cut_weight(i, &grid)).collect();
    let mut fl = Flipper { m: m.clone(), g, s, weights, hd: grid.cell_volume() };
    let grow = fl.m.count() < k;
    let free = |x: usize| fixed.is_none_or(|f| f[x] == Cell::Free);
    if (grow && fl.m.is_empty()) || (!grow && fl.m.count() == n && k < n) {
        let pick = (0..n).filter(|&x| free(x)).min_by(|&a, &b| {
            let (ga, gb) = (g.get(a), g.get(b));
            let ord = if grow { gb.total_cmp(&ga) } else { ga.total_cmp(&gb) };
            ord.then(a.cmp(&b))
        });
        let Some(x) = pick else {
            return Err(Error::Solver("no free cell to adjust".into()));
        };
        fl.m.set(x, grow);
    }
    let mut heap = BinaryHeap::new();
    // candidates touch the side being expanded into; scan from the smaller side
    let members = fl.m.count();
    let side_size = if grow { members } else { n - members };
    if side_size * 16 < n {
        let mut seen = vec![false; n];
        let sources: Vec<usize> = (0..n).filter(|&x| fl.m.get(x) == grow).collect();
        for x in sources {
            let mut near = Vec::new();
            fl.neighbors(x, |_, y| near.extend(y));
            for y in near {
                if !seen[y] && fl.is_candidate(y, grow, fixed) {
                    seen[y] = true;
                    heap.push(Reverse(Key(fl.delta(y), y)));
                }
            }
        }
    } else {
        for x in 0..n {
            if fl.is_candidate(x, grow, fixed) {
                heap.push(Reverse(Key(fl.delta(x), x)));
            }
        }
    }
    let mut count = fl.m.count();
    while count != k {
        let Some(Reverse(Key(d, x))) = heap.pop() else {
            return Err(Error::Solver("volume target unreachable under fixed cells".into()));
        };
        if !fl.is_candidate(x, grow, fixed) {
            continue;
        }
        let now = fl.delta(x);
        if now != d {
            heap.push(Reverse(Key(now, x)));
            continue;
        }
        fl.m.set(x, grow);
        if grow {
            count += 1;
        } else {
            count -= 1;
        }
        let mut touched = Vec::new();
        fl.neighbors(x, |_, y| touched.extend(y));
        for y in touched {
            if fl.is_candidate(y, grow, fixed) {
                heap.push(Reverse(Key(fl.delta(y), y)));
            }
        }
    }
    Ok(fl.m)
}
