//! Steiner trees in the physical network.
//!
//! With link costs `-ln(1 - rho)`, the cheapest tree joining the hosts of all
//! logical nodes is exactly the most reliable protecting spanning tree. Two
//! solvers are registered by name:
//!
//! | name             | method                                   | bound        |
//! |------------------|------------------------------------------|--------------|
//! | `dreyfus-wagner` | dynamic program over terminal subsets    | exact        |
//! | `mst-2approx`    | MST of the metric closure, expanded      | within 2x    |
//!
//! The module also packs two edge-disjoint Steiner trees, which makes a
//! logical network with doubled links survivable, and measures edge
//! connectivity among a node set.

use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use crate::edgeset::EdgeSet;
use crate::engine::critical_links;
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::graph::{dijkstra, trace_path, DisjointSets};
use crate::model::{CrossLayerInstance, PhysicalNetwork};
use crate::routing::{LinkMapping, PhysicalPath};
use crate::trees::ProtectingTree;

/// Default terminal bound of the exact solver.
pub const DEFAULT_TERMINAL_BOUND: usize = 12;
/// Largest physical link count for which disjoint packing is searched
/// exhaustively.
pub const PACKING_EDGE_LIMIT: usize = 24;
/// Edge connectivity among terminals that guarantees two disjoint Steiner
/// trees.
pub const PACKING_CONNECTIVITY: usize = 13;

/// Terminals to join in a costed physical network.
#[derive(Debug, Clone)]
pub struct SteinerInstance<'a> {
    graph: &'a PhysicalNetwork,
    terminals: Vec<usize>,
    costs: Vec<f64>,
}

impl<'a> SteinerInstance<'a> {
    /// Terminals are deduplicated and sorted; costs must be finite and
    /// nonnegative, one per physical link.
    pub fn new(graph: &'a PhysicalNetwork, mut terminals: Vec<usize>, costs: Vec<f64>) -> Result<Self> {
        terminals.sort_unstable();
        terminals.dedup();
        if let Some(&t) = terminals.iter().find(|&&t| t >= graph.node_count()) {
            return Err(Error::UnknownNode(t.to_string()));
        }
        if costs.len() != graph.edge_count() || costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Generation("Steiner costs must be finite and nonnegative, one per link".into()));
        }
        Ok(SteinerInstance {
            graph,
            terminals,
            costs,
        })
    }

    /// Hosts of the logical nodes, priced by `-ln(1 - rho)`.
    pub fn for_instance(inst: &'a CrossLayerInstance) -> Self {
        let p = inst.physical();
        SteinerInstance {
            graph: p,
            terminals: inst.node_map().terminals(),
            costs: p.log_weights(),
        }
    }

    pub fn graph(&self) -> &PhysicalNetwork {
        self.graph
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

/// A tree of physical links whose leaves are all terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinerTree {
    edges: Vec<usize>,
    nodes: Vec<usize>,
    cost: f64,
}

impl SteinerTree {
    /// Sorted link indices.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    /// Sorted spanned nodes.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn edge_set(&self, universe: usize) -> EdgeSet {
        EdgeSet::from_indices(universe, self.edges.iter().copied())
    }

    /// Node sequence of the unique tree path between `a` and `b`.
    pub fn path(&self, g: &PhysicalNetwork, a: usize, b: usize) -> Option<Vec<usize>> {
        let mut pred = vec![usize::MAX; g.node_count()];
        pred[a] = a;
        let mut q = VecDeque::from([a]);
        while let Some(u) = q.pop_front() {
            for &(v, e) in g.neighbors(u) {
                if pred[v] == usize::MAX && self.edges.binary_search(&e).is_ok() {
                    pred[v] = u;
                    q.push_back(v);
                }
            }
        }
        if pred[b] == usize::MAX {
            return None;
        }
        let mut out = vec![b];
        while *out.last().unwrap() != a {
            out.push(pred[*out.last().unwrap()]);
        }
        out.reverse();
        Some(out)
    }

    /// Acyclic, joins every terminal, and every leaf is a terminal.
    pub fn is_valid(&self, si: &SteinerInstance) -> bool {
        let g = si.graph;
        let mut ds = DisjointSets::new(g.node_count());
        let mut degree = vec![0usize; g.node_count()];
        for &e in &self.edges {
            let pe = g.edge(e);
            if !ds.union(pe.u, pe.v) {
                return false;
            }
            degree[pe.u] += 1;
            degree[pe.v] += 1;
        }
        let joined = si
            .terminals
            .windows(2)
            .all(|w| ds.find(w[0]) == ds.find(w[1]));
        let leaves_ok = (0..g.node_count())
            .all(|v| degree[v] != 1 || si.terminals.binary_search(&v).is_ok());
        joined && leaves_ok
    }
}

/// Cheapest spanning forest of `candidates`, stripped of non-terminal leaves.
fn normalize(si: &SteinerInstance, candidates: impl IntoIterator<Item = usize>) -> SteinerTree {
    let g = si.graph;
    let mut cand: Vec<usize> = candidates.into_iter().collect();
    cand.sort_unstable();
    cand.dedup();
    cand.sort_by(|&a, &b| si.costs[a].total_cmp(&si.costs[b]).then(a.cmp(&b)));
    let mut ds = DisjointSets::new(g.node_count());
    let mut keep: Vec<usize> = cand
        .into_iter()
        .filter(|&e| ds.union(g.edge(e).u, g.edge(e).v))
        .collect();
    let is_terminal = |v: usize| si.terminals.binary_search(&v).is_ok();
    loop {
        let mut degree = vec![0usize; g.node_count()];
        for &e in &keep {
            degree[g.edge(e).u] += 1;
            degree[g.edge(e).v] += 1;
        }
        let before = keep.len();
        keep.retain(|&e| {
            let pe = g.edge(e);
            !((degree[pe.u] == 1 && !is_terminal(pe.u)) || (degree[pe.v] == 1 && !is_terminal(pe.v)))
        });
        if keep.len() == before {
            break;
        }
    }
    keep.sort_unstable();
    let mut nodes: Vec<usize> = keep
        .iter()
        .flat_map(|&e| [g.edge(e).u, g.edge(e).v])
        .chain(si.terminals.iter().copied())
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    let cost = keep.iter().map(|&e| si.costs[e]).sum();
    SteinerTree {
        edges: keep,
        nodes,
        cost,
    }
}

fn check_connected(si: &SteinerInstance, blocked: &[bool]) -> Result<Vec<f64>> {
    let Some(&t0) = si.terminals.first() else {
        return Ok(Vec::new());
    };
    let (dist, _) = dijkstra(si.graph.adjacency(), &si.costs, t0, &[], blocked);
    if si.terminals.iter().any(|&t| dist[t].is_infinite()) {
        return Err(Error::TerminalsDisconnected);
    }
    Ok(dist)
}

/// Strategy computing a Steiner tree.
pub trait SteinerSolver: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// True when results are minimum-cost.
    fn is_exact(&self) -> bool;

    fn solve(&self, si: &SteinerInstance) -> Result<SteinerTree>;
}

/// Dreyfus–Wagner over terminal subsets, up to `bound` terminals.
#[derive(Debug, Clone, Copy)]
pub struct DreyfusWagner {
    pub bound: usize,
}

impl Default for DreyfusWagner {
    fn default() -> Self {
        DreyfusWagner {
            bound: DEFAULT_TERMINAL_BOUND,
        }
    }
}

/// Minimum spanning tree of the terminals' shortest-path metric, with each
/// closure edge expanded into its path.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricClosureMst;

pub const SOLVER_NAMES: [&str; 2] = ["dreyfus-wagner", "mst-2approx"];

pub fn solver(name: &str) -> Result<Box<dyn SteinerSolver>> {
    match name {
        "dreyfus-wagner" => Ok(Box::new(DreyfusWagner::default())),
        "mst-2approx" => Ok(Box::new(MetricClosureMst)),
        _ => Err(Error::UnknownStrategy {
            kind: "Steiner solver",
            name: name.to_string(),
        }),
    }
}

#[derive(Clone, Copy)]
enum Back {
    Unset,
    Leaf,
    Split(usize),
    Edge(usize, usize),
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl SteinerSolver for DreyfusWagner {
    fn name(&self) -> &'static str {
        "dreyfus-wagner"
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn solve(&self, si: &SteinerInstance) -> Result<SteinerTree> {
        let k = si.terminals.len();
        if k > self.bound {
            return Err(Error::TerminalBound {
                terminals: k,
                bound: self.bound,
            });
        }
        check_connected(si, &[])?;
        if k <= 1 {
            return Ok(normalize(si, []));
        }
        let g = si.graph;
        let n = g.node_count();
        let full = (1usize << k) - 1;
        let mut dp = vec![f64::INFINITY; (full + 1) * n];
        let mut back = vec![Back::Unset; (full + 1) * n];
        for (i, &t) in si.terminals.iter().enumerate() {
            dp[(1 << i) * n + t] = 0.0;
            back[(1 << i) * n + t] = Back::Leaf;
        }
        for mask in 1..=full {
            let row = mask * n;
            if mask.count_ones() > 1 {
                let low = mask & mask.wrapping_neg();
                // Submasks holding the lowest bit, so each split is seen once.
                let mut sub = (mask - 1) & mask;
                while sub > 0 {
                    if sub & low != 0 {
                        let rest = mask ^ sub;
                        for v in 0..n {
                            let c = dp[sub * n + v] + dp[rest * n + v];
                            if c < dp[row + v] {
                                dp[row + v] = c;
                                back[row + v] = Back::Split(sub);
                            }
                        }
                    }
                    sub = (sub - 1) & mask;
                }
            }
            let mut heap: BinaryHeap<Item> = (0..n)
                .filter(|&v| dp[row + v].is_finite())
                .map(|v| Item(dp[row + v], v))
                .collect();
            let mut done = vec![false; n];
            while let Some(Item(d, u)) = heap.pop() {
                if done[u] || d > dp[row + u] {
                    continue;
                }
                done[u] = true;
                for &(v, e) in g.neighbors(u) {
                    let c = d + si.costs[e];
                    if c < dp[row + v] {
                        dp[row + v] = c;
                        back[row + v] = Back::Edge(u, e);
                        heap.push(Item(c, v));
                    }
                }
            }
        }
        let mut edges = Vec::new();
        let mut stack = vec![(full, si.terminals[0])];
        while let Some((mask, v)) = stack.pop() {
            match back[mask * n + v] {
                Back::Leaf => {}
                Back::Split(sub) => {
                    stack.push((sub, v));
                    stack.push((mask ^ sub, v));
                }
                Back::Edge(u, e) => {
                    edges.push(e);
                    stack.push((mask, u));
                }
                Back::Unset => unreachable!("reachable states are always set"),
            }
        }
        Ok(normalize(si, edges))
    }
}

fn approx_with(si: &SteinerInstance, blocked: &[bool]) -> Result<SteinerTree> {
    check_connected(si, blocked)?;
    let k = si.terminals.len();
    if k <= 1 {
        return Ok(normalize(si, []));
    }
    let adj = si.graph.adjacency();
    let runs: Vec<_> = si
        .terminals
        .iter()
        .map(|&t| dijkstra(adj, &si.costs, t, &[], blocked))
        .collect();
    // Prim over the closure; ties go to the smaller terminal pair.
    let mut in_tree = vec![false; k];
    in_tree[0] = true;
    let mut edges = Vec::new();
    for _ in 1..k {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..k).filter(|&i| in_tree[i]) {
            for j in (0..k).filter(|&j| !in_tree[j]) {
                let d = runs[i].0[si.terminals[j]];
                if best.is_none_or(|(b, _, _)| d < b) {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("terminals are connected");
        in_tree[j] = true;
        let (_, path) = trace_path(&runs[i].1, si.terminals[i], si.terminals[j]).expect("reachable");
        edges.extend(path);
    }
    Ok(normalize(si, edges))
}

impl SteinerSolver for MetricClosureMst {
    fn name(&self) -> &'static str {
        "mst-2approx"
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn solve(&self, si: &SteinerInstance) -> Result<SteinerTree> {
        approx_with(si, &[])
    }
}

pub fn steiner_exact(si: &SteinerInstance) -> Result<SteinerTree> {
    DreyfusWagner::default().solve(si)
}

pub fn steiner_2approx(si: &SteinerInstance) -> Result<SteinerTree> {
    MetricClosureMst.solve(si)
}

/// The most reliable routed spanning tree of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxProtectingTree {
    pub tree: ProtectingTree,
    pub steiner: SteinerTree,
    /// False when the terminal count forced the approximation; the
    /// probability is then only a lower bound.
    pub exact: bool,
}

impl MaxProtectingTree {
    pub fn prob(&self, physical: &PhysicalNetwork) -> f64 {
        self.tree.survivable_prob(physical)
    }
}

/// Routes every branch of a logical spanning tree along `steiner`.
pub fn route_along(inst: &CrossLayerInstance, steiner: &SteinerTree) -> Result<ProtectingTree> {
    let l = inst.logical();
    let p = inst.physical();
    let mut ds = DisjointSets::new(l.node_count());
    let tau: Vec<usize> = (0..l.edge_count())
        .filter(|&k| {
            let (s, t) = l.edge(k);
            ds.union(s, t)
        })
        .collect();
    let routes = tau
        .iter()
        .map(|&k| {
            let (a, b) = inst.mapped_endpoints(k);
            let nodes = steiner
                .path(p, a, b)
                .ok_or(Error::TerminalsDisconnected)?;
            PhysicalPath::from_nodes(p, nodes)
        })
        .collect::<Result<Vec<_>>>()?;
    ProtectingTree::from_routes(inst, tau, routes)
}

/// The cheapest Steiner tree on the hosts under `-ln(1 - rho)`, turned into a
/// protecting tree. Falls back to the approximation above the terminal bound.
pub fn max_protecting_tree(inst: &CrossLayerInstance) -> Result<MaxProtectingTree> {
    let si = SteinerInstance::for_instance(inst);
    let (steiner, exact) = match steiner_exact(&si) {
        Ok(t) => (t, true),
        Err(Error::TerminalBound { .. }) => (steiner_2approx(&si)?, false),
        Err(e) => return Err(e),
    };
    let tree = route_along(inst, &steiner)?;
    Ok(MaxProtectingTree {
        tree,
        steiner,
        exact,
    })
}

fn terminals_joined(
    si: &SteinerInstance,
    ds: &mut DisjointSets,
    edges: impl Iterator<Item = usize>,
) -> bool {
    for e in edges {
        let pe = si.graph.edge(e);
        ds.union(pe.u, pe.v);
    }
    let t = &si.terminals;
    t.windows(2).all(|w| ds.find(w[0]) == ds.find(w[1]))
}

struct Packing<'s, 'a> {
    si: &'s SteinerInstance<'a>,
    colour: Vec<u8>,
}

impl Packing<'_, '_> {
    fn joined(&self, side: u8, assigned: usize, with_rest: bool) -> bool {
        let n = self.si.graph.node_count();
        let m = self.colour.len();
        let edges = (0..m).filter(|&e| {
            if e < assigned {
                self.colour[e] == side
            } else {
                with_rest
            }
        });
        terminals_joined(self.si, &mut DisjointSets::new(n), edges)
    }

    fn search(&mut self, assigned: usize) -> bool {
        if !self.joined(0, assigned, true) || !self.joined(1, assigned, true) {
            return false;
        }
        for side in [0u8, 1] {
            if self.joined(side, assigned, false) {
                for e in assigned..self.colour.len() {
                    self.colour[e] = 1 - side;
                }
                return true;
            }
        }
        if assigned == self.colour.len() {
            return false;
        }
        let options: &[u8] = if assigned == 0 { &[0] } else { &[0, 1] };
        for &c in options {
            self.colour[assigned] = c;
            if self.search(assigned + 1) {
                return true;
            }
        }
        false
    }
}

/// Two edge-disjoint Steiner trees on the terminals, if found.
///
/// Exhaustive up to [`PACKING_EDGE_LIMIT`] physical links; beyond that a
/// greedy attempt whose failure proves nothing.
pub fn two_disjoint_steiner(si: &SteinerInstance) -> Option<(SteinerTree, SteinerTree)> {
    let m = si.graph.edge_count();
    let pair = if m <= PACKING_EDGE_LIMIT {
        let mut pk = Packing {
            si,
            colour: vec![0; m],
        };
        if !pk.search(0) {
            return None;
        }
        let a = normalize(si, (0..m).filter(|&e| pk.colour[e] == 0));
        let b = normalize(si, (0..m).filter(|&e| pk.colour[e] == 1));
        (a, b)
    } else {
        let a = approx_with(si, &[]).ok()?;
        let mut blocked = vec![false; m];
        for &e in a.edges() {
            blocked[e] = true;
        }
        let b = approx_with(si, &blocked).ok()?;
        (a, b)
    };
    let disjoint = pair.0.edge_set(m).is_disjoint(&pair.1.edge_set(m));
    (disjoint && pair.0.is_valid(si) && pair.1.is_valid(si)).then_some(pair)
}

/// Doubles every logical link and routes original `k` along the first packed
/// tree and its copy along the second. `None` when no packing was found.
pub fn augment(inst: &CrossLayerInstance) -> Result<Option<(CrossLayerInstance, LinkMapping)>> {
    let si = SteinerInstance::for_instance(inst);
    let Some((a, b)) = two_disjoint_steiner(&si) else {
        return Ok(None);
    };
    let aug = inst.augmented();
    let p = inst.physical();
    let routes = (0..aug.logical().edge_count())
        .map(|k| {
            let (x, y) = aug.mapped_endpoints(k);
            let tree = if k % 2 == 0 { &a } else { &b };
            let nodes = tree.path(p, x, y).ok_or(Error::TerminalsDisconnected)?;
            PhysicalPath::from_nodes(p, nodes)
        })
        .collect::<Result<Vec<_>>>()?;
    let mapping = LinkMapping::new(&aug, routes)?;
    Ok(Some((aug, mapping)))
}

/// True when two disjoint Steiner trees were packed and the augmented
/// instance, routed along them, has no critical link.
pub fn augment_and_check(inst: &CrossLayerInstance) -> Result<bool> {
    Ok(match augment(inst)? {
        Some((aug, m)) => critical_links(&aug, &m).is_empty(),
        None => false,
    })
}

/// Fewest links whose removal separates two nodes of `among`.
pub fn edge_connectivity(g: &PhysicalNetwork, among: &[usize]) -> usize {
    let Some((&first, rest)) = among.split_first() else {
        return 0;
    };
    // Connectivity between pairs is an ultrametric, so pairs through the
    // first node reach the minimum.
    rest.iter()
        .filter(|&&t| t != first)
        .map(|&t| {
            let mut f = FlowNetwork::new(g.node_count());
            for e in g.edges() {
                f.add_edge(e.u, e.v, 1.0);
            }
            f.max_flow(first, t).round() as usize
        })
        .min()
        .unwrap_or(0)
}

/// Whether the connectivity condition guaranteeing a packing holds.
pub fn packing_guaranteed(g: &PhysicalNetwork, terminals: &[usize]) -> bool {
    edge_connectivity(g, terminals) >= PACKING_CONNECTIVITY
}
