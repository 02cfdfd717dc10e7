//! Fixtures shared by the benchmarks.

use prescurv_core::maxflow::FlowGraph;
use prescurv_core::rng::CounterRng;
use prescurv_core::{build_field, ForcingSpec, PeriodicGrid, ScalarField, TrigMode};

pub fn trig_field(n: usize) -> ScalarField {
    let grid = PeriodicGrid::torus(2, n, 1.0).expect("grid");
    let modes = vec![
        TrigMode { k: vec![1, 0], amplitude: 0.5, phase: 0.0 },
        TrigMode { k: vec![0, 1], amplitude: 0.25, phase: 0.3 },
    ];
    build_field(&ForcingSpec::trig(modes), &grid).expect("trig field")
}

pub fn random_field(n: usize, seed: u64, amplitude: f64) -> ScalarField {
    let grid = PeriodicGrid::torus(2, n, 1.0).expect("grid");
    let mut r = CounterRng::new(seed);
    let v = (0..grid.cell_count()).map(|_| r.uniform(-amplitude, amplitude)).collect();
    ScalarField::new(grid, v).expect("cell count")
}

/// Periodic 4-neighbour grid graph with random terminal capacities.
pub fn grid_graph(n: usize, seed: u64) -> FlowGraph {
    let mut r = CounterRng::new(seed);
    let mut f = FlowGraph::new(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = i * n + j;
            let t = r.uniform(-1.0, 1.0);
            f.add_terminal(x, t.max(0.0), (-t).max(0.0));
            f.add_edge(x, i * n + (j + 1) % n, 0.5, 0.5);
            f.add_edge(x, ((i + 1) % n) * n + j, 0.5, 0.5);
        }
    }
    f
}
