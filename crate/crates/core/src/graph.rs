//! Small graph utilities shared by the layers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// True when the edges connect all `n` nodes.
pub fn spans(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if n <= 1 {
        return true;
    }
    let mut ds = DisjointSets::new(n);
    for (u, v) in edges {
        ds.union(u, v);
        if ds.components() == 1 {
            return true;
        }
    }
    ds.components() == 1
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over `adj[u] = [(v, edge)]` with nonnegative
/// edge costs. Returns distances and the predecessor `(node, edge)` per node.
/// Ties prefer the smaller predecessor node so results are reproducible.
pub fn dijkstra(
    adj: &[Vec<(usize, usize)>],
    cost: &[f64],
    source: usize,
    blocked_nodes: &[bool],
    blocked_edges: &[bool],
) -> (Vec<f64>, Vec<Option<(usize, usize)>>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, e) in &adj[u] {
            if blocked_edges.get(e).copied().unwrap_or(false)
                || blocked_nodes.get(v).copied().unwrap_or(false)
                || done[v]
            {
                continue;
            }
            let nd = d + cost[e];
            let better = nd < dist[v]
                || (nd == dist[v] && pred[v].is_some_and(|(p, _)| u < p));
            if better {
                dist[v] = nd;
                pred[v] = Some((u, e));
                heap.push(HeapItem { dist: nd, node: v });
            }
        }
    }
    (dist, pred)
}

/// Walks a predecessor array back from `target`; returns node and edge
/// sequences from the source.
pub fn trace_path(
    pred: &[Option<(usize, usize)>],
    source: usize,
    target: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut nodes = vec![target];
    let mut edges = Vec::new();
    let mut cur = target;
    while cur != source {
        let (p, e) = pred[cur]?;
        nodes.push(p);
        edges.push(e);
        cur = p;
    }
    nodes.reverse();
    edges.reverse();
    Some((nodes, edges))
}
