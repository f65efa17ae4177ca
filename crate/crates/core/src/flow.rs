//! Maximum flow with real capacities (Dinic).

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
}

/// Directed flow network. Each added arc gets a residual twin.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    eps: f64,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            arcs: Vec::new(),
            out: vec![Vec::new(); nodes],
            eps: 1e-12,
        }
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.out.push(Vec::new());
        self.out.len() - 1
    }

    /// Adds `from -> to` with capacity `cap`; returns the arc handle.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap });
        self.arcs.push(Arc { to: from, cap: 0.0 });
        self.out[from].push(id);
        self.out[to].push(id + 1);
        id
    }

    /// Adds both directions with capacity `cap`, as for an undirected link.
    pub fn add_edge(&mut self, a: usize, b: usize, cap: f64) {
        let id = self.arcs.len();
        self.arcs.push(Arc { to: b, cap });
        self.arcs.push(Arc { to: a, cap });
        self.out[a].push(id);
        self.out[b].push(id + 1);
    }

    /// Flow currently on the arc returned by [`FlowNetwork::add_arc`].
    pub fn flow(&self, arc: usize) -> f64 {
        self.arcs[arc + 1].cap
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.out.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.out[u] {
                let arc = &self.arcs[a];
                if arc.cap > self.eps && level[arc.to] == usize::MAX {
                    level[arc.to] = level[u] + 1;
                    q.push_back(arc.to);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn push(&mut self, u: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while next[u] < self.out[u].len() {
            let a = self.out[u][next[u]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > self.eps && level[to] == level[u] + 1 {
                let pushed = self.push(to, t, limit.min(cap), level, next);
                if pushed > self.eps {
                    self.arcs[a].cap -= pushed;
                    self.arcs[a ^ 1].cap += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    /// Pushes as much flow from `s` to `t` as possible and returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while let Some(level) = self.levels(s, t) {
            let mut next = vec![0; self.out.len()];
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut next);
                if f <= self.eps {
                    break;
                }
                total += f;
            }
        }
        total
    }
}
