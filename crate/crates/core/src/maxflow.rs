//! Maximum flow on real capacities (Boykov–Kolmogorov or Dinic), with the minimal source-side cut.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowAlgorithm {
    /// Search-tree reuse; fastest on grid graphs.
    BoykovKolmogorov,
    Dinic,
}

/// Graph on `n` interior nodes plus an implicit source and sink.
#[derive(Clone, Debug)]
pub struct FlowGraph {
    n: usize,
    terminal_s: Vec<f64>,
    terminal_t: Vec<f64>,
    edges: Vec<(u32, u32, f64, f64)>,
    cut: Option<Vec<bool>>,
}

struct Csr {
    start: Vec<usize>,
    to: Vec<u32>,
    rev: Vec<u32>,
    cap: Vec<f64>,
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        Self { n, terminal_s: vec![0.0; n], terminal_t: vec![0.0; n], edges: Vec::new(), cut: None }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Adds capacity on the arcs `source → x` and `x → sink`.
    pub fn add_terminal(&mut self, x: usize, to_source: f64, to_sink: f64) {
        self.terminal_s[x] += to_source;
        self.terminal_t[x] += to_sink;
    }

    /// Adds an arc pair `x → y` (capacity `c_xy`) and `y → x` (`c_yx`).
    pub fn add_edge(&mut self, x: usize, y: usize, c_xy: f64, c_yx: f64) {
        if x != y && (c_xy > 0.0 || c_yx > 0.0) {
            self.edges.push((x as u32, y as u32, c_xy, c_yx));
        }
    }

    fn build(&self) -> (Csr, f64) {
        let s = self.n;
        let t = self.n + 1;
        let nodes = self.n + 2;
        let mut arcs: Vec<(u32, u32, f64, f64)> = Vec::with_capacity(self.edges.len() + self.n);
        let mut baseline = 0.0;
        for x in 0..self.n {
            // capacity present on both terminal arcs is always cut
            let m = self.terminal_s[x].min(self.terminal_t[x]);
            baseline += m;
            let (cs, ct) = (self.terminal_s[x] - m, self.terminal_t[x] - m);
            if cs > 0.0 {
                arcs.push((s as u32, x as u32, cs, 0.0));
            }
            if ct > 0.0 {
                arcs.push((x as u32, t as u32, ct, 0.0));
            }
        }
        arcs.extend_from_slice(&self.edges);
        let mut degree = vec![0usize; nodes + 1];
        for &(x, y, _, _) in &arcs {
            degree[x as usize + 1] += 1;
            degree[y as usize + 1] += 1;
        }
        for i in 0..nodes {
            degree[i + 1] += degree[i];
        }
        let start = degree.clone();
        let mut fill = degree;
        let total = start[nodes];
        let mut to = vec![0u32; total];
        let mut rev = vec![0u32; total];
        let mut cap = vec![0.0; total];
        for &(x, y, cxy, cyx) in &arcs {
            let (x, y) = (x as usize, y as usize);
            let a = fill[x];
            let b = fill[y];
            fill[x] += 1;
            fill[y] += 1;
            to[a] = y as u32;
            cap[a] = cxy;
            rev[a] = b as u32;
            to[b] = x as u32;
            cap[b] = cyx;
            rev[b] = a as u32;
        }
        (Csr { start, to, rev, cap }, baseline)
    }

    /// Runs the flow and stores the minimal cut. Returns the cut value.
    pub fn max_flow(&mut self) -> Result<f64> {
        self.max_flow_with(FlowAlgorithm::BoykovKolmogorov)
    }

    pub fn max_flow_with(&mut self, alg: FlowAlgorithm) -> Result<f64> {
        match alg {
            FlowAlgorithm::BoykovKolmogorov => self.boykov_kolmogorov(),
            FlowAlgorithm::Dinic => self.dinic(),
        }
    }

    fn dinic(&mut self) -> Result<f64> {
        let (mut g, baseline) = self.build();
        let s = self.n;
        let t = self.n + 1;
        let nodes = self.n + 2;
        let max_cap = g.cap.iter().fold(0.0f64, |m, &c| m.max(c));
        let eps = max_cap * 1e-13;
        let mut level = vec![u32::MAX; nodes];
        let mut current = vec![0usize; nodes];
        let mut flow = 0.0;
        let mut queue = VecDeque::new();
        let mut path: Vec<usize> = Vec::new();
        let mut phases = 0usize;
        loop {
            level.fill(u32::MAX);
            level[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for a in g.start[u]..g.start[u + 1] {
                    let v = g.to[a] as usize;
                    if g.cap[a] > eps && level[v] == u32::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[t] == u32::MAX {
                break;
            }
            phases += 1;
            if phases > 10 * nodes + 100 {
                return Err(Error::Solver("max-flow did not converge".into()));
            }
            for u in 0..nodes {
                current[u] = g.start[u];
            }
            // blocking flow by repeated advance/retreat
            let mut u = s;
            path.clear();
            loop {
                if u == t {
                    let mut push = f64::INFINITY;
                    for &a in &path {
                        push = push.min(g.cap[a]);
                    }
                    for &a in &path {
                        g.cap[a] -= push;
                        g.cap[g.rev[a] as usize] += push;
                    }
                    flow += push;
                    // retreat to the first saturated arc
                    let k = path.iter().position(|&a| g.cap[a] <= eps).unwrap_or(0);
                    path.truncate(k);
                    u = if k == 0 { s } else { g.to[path[k - 1]] as usize };
                    continue;
                }
                let mut advanced = false;
                while current[u] < g.start[u + 1] {
                    let a = current[u];
                    let v = g.to[a] as usize;
                    if g.cap[a] > eps && level[v] == level[u] + 1 {
                        path.push(a);
                        u = v;
                        advanced = true;
                        break;
                    }
                    current[u] += 1;
                }
                if !advanced {
                    if u == s {
                        break;
                    }
                    level[u] = u32::MAX;
                    let a = path.pop().unwrap();
                    u = g.to[g.rev[a] as usize] as usize;
                    current[u] += 1;
                }
            }
        }
        let mut side = vec![false; nodes];
        side[s] = true;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for a in g.start[u]..g.start[u + 1] {
                let v = g.to[a] as usize;
                if g.cap[a] > eps && !side[v] {
                    side[v] = true;
                    queue.push_back(v);
                }
            }
        }
        side.truncate(self.n);
        self.cut = Some(side);
        Ok(flow + baseline)
    }

    fn inner_csr(&self) -> Csr {
        let n = self.n;
        let mut degree = vec![0usize; n + 1];
        for &(x, y, _, _) in &self.edges {
            degree[x as usize + 1] += 1;
            degree[y as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let start = degree.clone();
        let mut fill = degree;
        let total = start[n];
        let mut to = vec![0u32; total];
        let mut rev = vec![0u32; total];
        let mut cap = vec![0.0; total];
        for &(x, y, cxy, cyx) in &self.edges {
            let (x, y) = (x as usize, y as usize);
            let (a, b) = (fill[x], fill[y]);
            fill[x] += 1;
            fill[y] += 1;
            to[a] = y as u32;
            cap[a] = cxy;
            rev[a] = b as u32;
            to[b] = x as u32;
            cap[b] = cyx;
            rev[b] = a as u32;
        }
        Csr { start, to, rev, cap }
    }

    fn boykov_kolmogorov(&mut self) -> Result<f64> {
        const NONE: u32 = u32::MAX;
        const TERMINAL: u32 = u32::MAX - 1;
        const ORPHAN: u32 = u32::MAX - 2;
        let n = self.n;
        let mut g = self.inner_csr();
        let mut flow = 0.0;
        // positive: residual from the source; negative: residual to the sink
        let mut tr = vec![0.0; n];
        let mut max_cap: f64 = 0.0;
        for x in 0..n {
            let m = self.terminal_s[x].min(self.terminal_t[x]);
            flow += m;
            tr[x] = self.terminal_s[x] - self.terminal_t[x];
            max_cap = max_cap.max(tr[x].abs());
        }
        max_cap = g.cap.iter().fold(max_cap, |m, &c| m.max(c));
        let eps = max_cap * 1e-13;
        let mut parent = vec![NONE; n];
        let mut sink = vec![false; n];
        let mut ts = vec![0u64; n];
        let mut dist = vec![0u32; n];
        let mut queued = vec![false; n];
        let mut active = VecDeque::new();
        let mut orphans: VecDeque<usize> = VecDeque::new();
        for x in 0..n {
            if tr[x] > eps {
                parent[x] = TERMINAL;
                dist[x] = 1;
                queued[x] = true;
                active.push_back(x);
            } else if tr[x] < -eps {
                parent[x] = TERMINAL;
                sink[x] = true;
                dist[x] = 1;
                queued[x] = true;
                active.push_back(x);
            } else {
                tr[x] = 0.0;
            }
        }
        let mut time: u64 = 0;
        let mut current: Option<usize> = None;
        loop {
            let i = match current.filter(|&i| parent[i] != NONE) {
                Some(i) => i,
                None => {
                    let mut pick = None;
                    while let Some(i) = active.pop_front() {
                        queued[i] = false;
                        if parent[i] != NONE {
                            pick = Some(i);
                            break;
                        }
                    }
                    match pick {
                        Some(i) => i,
                        None => break,
                    }
                }
            };
            current = None;
            // grow
            let mut middle = None;
            for a in g.start[i]..g.start[i + 1] {
                let j = g.to[a] as usize;
                let sister = g.rev[a] as usize;
                let residual = if sink[i] { g.cap[sister] } else { g.cap[a] };
                if residual <= eps {
                    continue;
                }
                if parent[j] == NONE {
                    sink[j] = sink[i];
                    parent[j] = sister as u32;
                    ts[j] = ts[i];
                    dist[j] = dist[i] + 1;
                    if !queued[j] {
                        queued[j] = true;
                        active.push_back(j);
                    }
                } else if sink[j] != sink[i] {
                    middle = Some(if sink[i] { sister } else { a });
                    break;
                } else if ts[j] <= ts[i] && dist[j] > dist[i] {
                    parent[j] = sister as u32;
                    ts[j] = ts[i];
                    dist[j] = dist[i] + 1;
                }
            }
            time += 1;
            let Some(mid) = middle else { continue };
            current = Some(i);
            // augment along source tree -> mid -> sink tree
            let mut bottleneck = g.cap[mid];
            let mut x = g.to[g.rev[mid] as usize] as usize;
            loop {
                let a = parent[x];
                if a == TERMINAL {
                    break;
                }
                bottleneck = bottleneck.min(g.cap[g.rev[a as usize] as usize]);
                x = g.to[a as usize] as usize;
            }
            bottleneck = bottleneck.min(tr[x]);
            let mut x = g.to[mid] as usize;
            loop {
                let a = parent[x];
                if a == TERMINAL {
                    break;
                }
                bottleneck = bottleneck.min(g.cap[a as usize]);
                x = g.to[a as usize] as usize;
            }
            bottleneck = bottleneck.min(-tr[x]);
            let rm = g.rev[mid] as usize;
            g.cap[rm] += bottleneck;
            g.cap[mid] -= bottleneck;
            let mut x = g.to[rm] as usize;
            loop {
                let a = parent[x] as usize;
                if parent[x] == TERMINAL {
                    break;
                }
                let sa = g.rev[a] as usize;
                g.cap[a] += bottleneck;
                g.cap[sa] -= bottleneck;
                if g.cap[sa] <= eps {
                    g.cap[sa] = 0.0;
                    parent[x] = ORPHAN;
                    orphans.push_front(x);
                }
                x = g.to[a] as usize;
            }
            tr[x] -= bottleneck;
            if tr[x] <= eps {
                tr[x] = 0.0;
                parent[x] = ORPHAN;
                orphans.push_front(x);
            }
            let mut x = g.to[mid] as usize;
            loop {
                let a = parent[x] as usize;
                if parent[x] == TERMINAL {
                    break;
                }
                let sa = g.rev[a] as usize;
                g.cap[sa] += bottleneck;
                g.cap[a] -= bottleneck;
                if g.cap[a] <= eps {
                    g.cap[a] = 0.0;
                    parent[x] = ORPHAN;
                    orphans.push_front(x);
                }
                x = g.to[a] as usize;
            }
            tr[x] += bottleneck;
            if tr[x] >= -eps {
                tr[x] = 0.0;
                parent[x] = ORPHAN;
                orphans.push_front(x);
            }
            if g.cap[mid] <= eps {
                g.cap[mid] = 0.0;
            }
            flow += bottleneck;
            // adoption
            time += 1;
            while let Some(o) = orphans.pop_front() {
                let side = sink[o];
                let mut best = NONE;
                let mut d_min = u32::MAX;
                for a0 in g.start[o]..g.start[o + 1] {
                    let residual = if side { g.cap[a0] } else { g.cap[g.rev[a0] as usize] };
                    if residual <= eps {
                        continue;
                    }
                    let j0 = g.to[a0] as usize;
                    if sink[j0] != side || parent[j0] == NONE {
                        continue;
                    }
                    let mut j = j0;
                    let mut d: u32 = 0;
                    loop {
                        if ts[j] == time {
                            d = d.saturating_add(dist[j]);
                            break;
                        }
                        let a = parent[j];
                        d += 1;
                        if a == TERMINAL {
                            ts[j] = time;
                            dist[j] = 1;
                            break;
                        }
                        if a == ORPHAN || a == NONE {
                            d = u32::MAX;
                            break;
                        }
                        j = g.to[a as usize] as usize;
                    }
                    if d < u32::MAX {
                        if d < d_min {
                            best = a0 as u32;
                            d_min = d;
                        }
                        let mut j = j0;
                        while ts[j] != time {
                            ts[j] = time;
                            dist[j] = d;
                            d -= 1;
                            j = g.to[parent[j] as usize] as usize;
                        }
                    }
                }
                if best != NONE {
                    parent[o] = best;
                    ts[o] = time;
                    dist[o] = d_min + 1;
                } else {
                    parent[o] = NONE;
                    for a0 in g.start[o]..g.start[o + 1] {
                        let j = g.to[a0] as usize;
                        if sink[j] != side || parent[j] == NONE {
                            continue;
                        }
                        let residual = if side { g.cap[a0] } else { g.cap[g.rev[a0] as usize] };
                        if residual > eps && !queued[j] {
                            queued[j] = true;
                            active.push_back(j);
                        }
                        let a = parent[j];
                        if a != TERMINAL && a != ORPHAN && g.to[a as usize] as usize == o {
                            parent[j] = ORPHAN;
                            orphans.push_back(j);
                        }
                    }
                }
            }
        }
        // minimal source side: residual reachability from the source
        let mut side = vec![false; n];
        let mut queue = VecDeque::new();
        for x in 0..n {
            if tr[x] > eps {
                side[x] = true;
                queue.push_back(x);
            }
        }
        while let Some(u) = queue.pop_front() {
            for a in g.start[u]..g.start[u + 1] {
                let v = g.to[a] as usize;
                if g.cap[a] > eps && !side[v] {
                    side[v] = true;
                    queue.push_back(v);
                }
            }
        }
        self.cut = Some(side);
        Ok(flow)
    }

    /// Nodes reachable from the source in the final residual graph: the
    /// smallest source set among all minimum cuts.
    pub fn source_side(&self) -> Option<&[bool]> {
        self.cut.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // CLRS example, max flow 23
        let mut g = FlowGraph::new(4);
        g.add_terminal(0, 16.0, 0.0);
        g.add_terminal(1, 13.0, 0.0);
        g.add_edge(0, 2, 12.0, 0.0);
        g.add_edge(1, 0, 4.0, 0.0);
        g.add_edge(2, 1, 9.0, 0.0);
        g.add_edge(1, 3, 14.0, 0.0);
        g.add_edge(3, 2, 7.0, 0.0);
        g.add_terminal(2, 0.0, 20.0);
        g.add_terminal(3, 0.0, 4.0);
        assert!((g.max_flow().unwrap() - 23.0).abs() < 1e-12);
    }

    #[test]
    fn minimal_cut_on_ties() {
        // both {} and {0} are minimum cuts; the minimal source side is empty
        let mut g = FlowGraph::new(1);
        g.add_terminal(0, 1.0, 1.0);
        assert_eq!(g.max_flow().unwrap(), 1.0);
        assert_eq!(g.source_side().unwrap(), &[false]);
        let mut g = FlowGraph::new(2);
        g.add_terminal(0, 2.0, 0.0);
        g.add_edge(0, 1, 1.0, 1.0);
        g.add_terminal(1, 0.0, 1.0);
        assert_eq!(g.max_flow().unwrap(), 1.0);
        assert_eq!(g.source_side().unwrap(), &[true, false]);
    }

    #[test]
    fn matches_brute_force_cuts() {
        use crate::rng::CounterRng;
        for (seed, alg) in (0..200).flat_map(|s| [(s, FlowAlgorithm::BoykovKolmogorov), (s, FlowAlgorithm::Dinic)]) {
            let mut r = CounterRng::new(seed);
            let n = 8;
            let mut g = FlowGraph::new(n);
            let mut ts = vec![0.0; n];
            let mut tt = vec![0.0; n];
            let mut es = Vec::new();
            for x in 0..n {
                ts[x] = r.uniform(0.0, 8.0).floor() / 4.0;
                tt[x] = r.uniform(0.0, 8.0).floor() / 4.0;
                g.add_terminal(x, ts[x], tt[x]);
                for y in x + 1..n {
                    if r.next_bool() {
                        // coarse values make ties between cuts common
                        let (a, b) = ((r.uniform(0.0, 4.0)).floor() / 4.0, (r.uniform(0.0, 4.0)).floor() / 4.0);
                        g.add_edge(x, y, a, b);
                        es.push((x, y, a, b));
                    }
                }
            }
            let flow = g.max_flow_with(alg).unwrap();
            let cost = |s: u32| {
                let inn = |x: usize| s >> x & 1 == 1;
                let mut c = 0.0;
                for x in 0..n {
                    c += if inn(x) { tt[x] } else { ts[x] };
                }
                for &(x, y, a, b) in &es {
                    if inn(x) && !inn(y) {
                        c += a;
                    }
                    if inn(y) && !inn(x) {
                        c += b;
                    }
                }
                c
            };
            let best = (0..1u32 << n).map(cost).fold(f64::INFINITY, f64::min);
            assert!((flow - best).abs() < 1e-9, "seed {seed}");
            let side = g.source_side().unwrap();
            let s: u32 = (0..n).filter(|&x| side[x]).map(|x| 1 << x).sum();
            assert!((cost(s) - best).abs() < 1e-9);
            let meet = (0..1u32 << n).filter(|&m| (cost(m) - best).abs() < 1e-9).fold(u32::MAX, |a, m| a & m);
            assert_eq!(s, meet, "seed {seed} {alg:?}");
        }
    }
}
