//! Physical routings of logical links.
//!
//! Candidate path pools are produced by a [`PoolPolicy`]. Three policies are
//! registered by name and selected at runtime through [`policy`]:
//!
//! | name            | pool                                              |
//! |-----------------|---------------------------------------------------|
//! | `all`           | every simple path                                 |
//! | `hops:H`        | every simple path with at most `H` links          |
//! | `k-shortest:K`  | the `K` cheapest simple paths under `-ln(1-rho)`  |
//!
//! Pools are sorted by cost, then hop count, then node sequence.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::edgeset::EdgeSet;
use crate::error::{Error, Result};
use crate::graph::{dijkstra, trace_path};
use crate::model::{CrossLayerInstance, PhysicalNetwork};

/// A simple path in the physical network, stored from its smaller endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhysicalPath {
    nodes: Vec<usize>,
    edges: Vec<usize>,
}

impl PhysicalPath {
    /// Checks simplicity and adjacency, then canonicalizes the direction.
    pub fn from_nodes(physical: &PhysicalNetwork, mut nodes: Vec<usize>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath("a path needs two distinct endpoints".into()));
        }
        if nodes.iter().collect::<BTreeSet<_>>().len() != nodes.len() {
            return Err(Error::InvalidPath("path repeats a node".into()));
        }
        if nodes[0] > nodes[nodes.len() - 1] {
            nodes.reverse();
        }
        let edges = nodes
            .windows(2)
            .map(|w| {
                physical.edge_between(w[0], w[1]).ok_or_else(|| {
                    Error::UnknownLink(
                        physical.name(w[0]).to_string(),
                        physical.name(w[1]).to_string(),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PhysicalPath { nodes, edges })
    }

    pub fn from_names(physical: &PhysicalNetwork, names: &[String]) -> Result<Self> {
        let nodes = names
            .iter()
            .map(|n| {
                physical
                    .index_of(n)
                    .ok_or_else(|| Error::UnknownNode(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodes(physical, nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Edge indices in path order.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    pub fn uses(&self, e: usize) -> bool {
        self.edges.contains(&e)
    }

    pub fn edge_set(&self, universe: usize) -> EdgeSet {
        EdgeSet::from_indices(universe, self.edges.iter().copied())
    }

    pub fn cost(&self, weights: &[f64]) -> f64 {
        self.edges.iter().map(|&e| weights[e]).sum()
    }

    pub fn names(&self, physical: &PhysicalNetwork) -> Vec<String> {
        self.nodes
            .iter()
            .map(|&i| physical.name(i).to_string())
            .collect()
    }

    /// Ordering used for pools: cost, then hops, then node sequence.
    pub fn pool_cmp(&self, other: &Self, weights: &[f64]) -> Ordering {
        self.cost(weights)
            .total_cmp(&other.cost(weights))
            .then(self.hops().cmp(&other.hops()))
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

/// Strategy producing the candidate paths between two physical nodes.
pub trait PoolPolicy: fmt::Debug + Send + Sync {
    /// Registry name, parseable by [`policy`].
    fn name(&self) -> String;

    /// True when the pool always holds every simple path.
    fn is_complete(&self) -> bool;

    /// Unordered candidate paths from `from` to `to`; `from < to`.
    fn enumerate(
        &self,
        physical: &PhysicalNetwork,
        weights: &[f64],
        from: usize,
        to: usize,
    ) -> Vec<PhysicalPath>;
}

#[derive(Debug, Clone, Copy)]
pub struct AllSimple;

#[derive(Debug, Clone, Copy)]
pub struct HopBounded(pub usize);

#[derive(Debug, Clone, Copy)]
pub struct KShortest(pub usize);

fn simple_paths(
    physical: &PhysicalNetwork,
    from: usize,
    to: usize,
    max_hops: usize,
) -> Vec<PhysicalPath> {
    fn dfs(
        p: &PhysicalNetwork,
        to: usize,
        max_hops: usize,
        nodes: &mut Vec<usize>,
        edges: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<PhysicalPath>,
    ) {
        let u = *nodes.last().unwrap();
        if u == to {
            out.push(PhysicalPath {
                nodes: nodes.clone(),
                edges: edges.clone(),
            });
            return;
        }
        if edges.len() == max_hops {
            return;
        }
        for &(v, e) in p.neighbors(u) {
            if on_path[v] {
                continue;
            }
            on_path[v] = true;
            nodes.push(v);
            edges.push(e);
            dfs(p, to, max_hops, nodes, edges, on_path, out);
            nodes.pop();
            edges.pop();
            on_path[v] = false;
        }
    }
    let mut on_path = vec![false; physical.node_count()];
    on_path[from] = true;
    let mut out = Vec::new();
    dfs(
        physical,
        to,
        max_hops,
        &mut vec![from],
        &mut Vec::new(),
        &mut on_path,
        &mut out,
    );
    out
}

impl PoolPolicy for AllSimple {
    fn name(&self) -> String {
        "all".into()
    }

    fn is_complete(&self) -> bool {
        true
    }

    fn enumerate(&self, p: &PhysicalNetwork, _: &[f64], from: usize, to: usize) -> Vec<PhysicalPath> {
        simple_paths(p, from, to, usize::MAX)
    }
}

impl PoolPolicy for HopBounded {
    fn name(&self) -> String {
        format!("hops:{}", self.0)
    }

    fn is_complete(&self) -> bool {
        false
    }

    fn enumerate(&self, p: &PhysicalNetwork, _: &[f64], from: usize, to: usize) -> Vec<PhysicalPath> {
        simple_paths(p, from, to, self.0)
    }
}

struct Candidate {
    cost: f64,
    path: PhysicalPath,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Reversed: BinaryHeap pops the cheapest candidate first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.path.hops().cmp(&self.path.hops()))
            .then_with(|| other.path.nodes.cmp(&self.path.nodes))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PoolPolicy for KShortest {
    fn name(&self) -> String {
        format!("k-shortest:{}", self.0)
    }

    fn is_complete(&self) -> bool {
        false
    }

    /// Yen's algorithm. Paths are kept in travel order from `from` while the
    /// search runs, which is already canonical since `from < to`.
    fn enumerate(&self, p: &PhysicalNetwork, w: &[f64], from: usize, to: usize) -> Vec<PhysicalPath> {
        let n = p.node_count();
        let mut accepted: Vec<PhysicalPath> = Vec::new();
        if self.0 == 0 {
            return accepted;
        }
        let (_, pred) = dijkstra(p.adjacency(), w, from, &[], &[]);
        let Some((nodes, edges)) = trace_path(&pred, from, to) else {
            return accepted;
        };
        accepted.push(PhysicalPath { nodes, edges });
        let mut heap = BinaryHeap::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        seen.insert(accepted[0].nodes.clone());
        while accepted.len() < self.0 {
            let last = accepted.last().unwrap().clone();
            for spur_at in 0..last.nodes.len() - 1 {
                let spur = last.nodes[spur_at];
                let root_nodes = &last.nodes[..=spur_at];
                let root_edges = &last.edges[..spur_at];
                let mut blocked_edges = vec![false; p.edge_count()];
                for a in &accepted {
                    if a.nodes.len() > spur_at && a.nodes[..=spur_at] == *root_nodes {
                        blocked_edges[a.edges[spur_at]] = true;
                    }
                }
                let mut blocked_nodes = vec![false; n];
                for &x in &root_nodes[..spur_at] {
                    blocked_nodes[x] = true;
                }
                let (_, pred) = dijkstra(p.adjacency(), w, spur, &blocked_nodes, &blocked_edges);
                if let Some((tail_nodes, tail_edges)) = trace_path(&pred, spur, to) {
                    let mut nodes = root_nodes.to_vec();
                    nodes.extend_from_slice(&tail_nodes[1..]);
                    let mut edges = root_edges.to_vec();
                    edges.extend(tail_edges);
                    if seen.insert(nodes.clone()) {
                        let path = PhysicalPath { nodes, edges };
                        heap.push(Candidate {
                            cost: path.cost(w),
                            path,
                        });
                    }
                }
            }
            match heap.pop() {
                Some(c) => accepted.push(c.path),
                None => break,
            }
        }
        accepted
    }
}

/// Parses a policy name: `all`, `hops:H` or `k-shortest:K`.
pub fn policy(spec: &str) -> Result<Box<dyn PoolPolicy>> {
    let unknown = || Error::UnknownStrategy {
        kind: "path pool policy",
        name: spec.to_string(),
    };
    if spec == "all" {
        return Ok(Box::new(AllSimple));
    }
    let (kind, arg) = spec.split_once(':').ok_or_else(unknown)?;
    let arg: usize = arg.parse().map_err(|_| unknown())?;
    match kind {
        "hops" => Ok(Box::new(HopBounded(arg))),
        "k-shortest" if arg > 0 => Ok(Box::new(KShortest(arg))),
        _ => Err(unknown()),
    }
}

/// Registered policy name patterns.
pub const POLICY_NAMES: [&str; 3] = ["all", "hops:H", "k-shortest:K"];

/// Largest physical network for which the default pool is every simple path.
pub const EXHAUSTIVE_NODE_LIMIT: usize = 12;
/// Pool size of the default policy on larger networks.
pub const DEFAULT_K: usize = 16;

/// All simple paths up to [`EXHAUSTIVE_NODE_LIMIT`] physical nodes, otherwise
/// the [`DEFAULT_K`] most reliable paths.
pub fn default_policy(physical: &PhysicalNetwork) -> Box<dyn PoolPolicy> {
    if physical.node_count() <= EXHAUSTIVE_NODE_LIMIT {
        Box::new(AllSimple)
    } else {
        Box::new(KShortest(DEFAULT_K))
    }
}

/// Sorted candidate pool for logical link `mu`.
pub fn candidate_paths(
    inst: &CrossLayerInstance,
    mu: usize,
    policy: &dyn PoolPolicy,
) -> Result<Vec<PhysicalPath>> {
    let p = inst.physical();
    let (a, b) = inst.mapped_endpoints(mu);
    let (from, to) = (a.min(b), a.max(b));
    let weights = p.log_weights();
    let mut pool = policy.enumerate(p, &weights, from, to);
    if pool.is_empty() {
        return Err(Error::Disconnected(
            p.name(from).to_string(),
            p.name(to).to_string(),
        ));
    }
    pool.sort_by(|x, y| x.pool_cmp(y, &weights));
    pool.dedup();
    Ok(pool)
}

/// Candidate pools for every logical link, in logical edge order.
pub fn candidate_pools(
    inst: &CrossLayerInstance,
    policy: &dyn PoolPolicy,
) -> Result<Vec<Vec<PhysicalPath>>> {
    (0..inst.logical().edge_count())
        .map(|mu| candidate_paths(inst, mu, policy))
        .collect()
}

/// One physical path per logical link, indexed by logical edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkMapping {
    routes: Vec<PhysicalPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkMappingDoc {
    pub routes: Vec<RouteDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub edge: [String; 2],
    pub path: Vec<String>,
}

impl LinkMapping {
    /// Checks that route `k` joins the hosts of logical edge `k`.
    pub fn new(inst: &CrossLayerInstance, routes: Vec<PhysicalPath>) -> Result<Self> {
        let l = inst.logical();
        if routes.len() != l.edge_count() {
            let missing = routes.len().min(l.edge_count());
            let (s, t) = l.edge(missing.min(l.edge_count().saturating_sub(1)));
            return Err(Error::Unmapped(l.name(s).into(), l.name(t).into()));
        }
        for (k, r) in routes.iter().enumerate() {
            let (a, b) = inst.mapped_endpoints(k);
            if r.endpoints() != (a.min(b), a.max(b)) {
                let (s, t) = l.edge(k);
                return Err(Error::InvalidPath(format!(
                    "route for ({}, {}) does not join their hosts",
                    l.name(s),
                    l.name(t)
                )));
            }
        }
        Ok(LinkMapping { routes })
    }

    pub fn from_doc(inst: &CrossLayerInstance, doc: &LinkMappingDoc) -> Result<Self> {
        let l = inst.logical();
        let mut slots: Vec<Option<PhysicalPath>> = vec![None; l.edge_count()];
        for r in &doc.routes {
            let idx = |n: &String| {
                l.index_of(n).ok_or_else(|| Error::UnknownNode(n.clone()))
            };
            let (s, t) = (idx(&r.edge[0])?, idx(&r.edge[1])?);
            let first = l
                .edge_between(s, t)
                .ok_or_else(|| Error::UnknownLogicalLink(r.edge[0].clone(), r.edge[1].clone()))?;
            // Parallel copies are filled in document order.
            let slot = (first..l.edge_count())
                .take_while(|&k| l.edge(k) == l.edge(first))
                .find(|&k| slots[k].is_none())
                .ok_or_else(|| {
                    Error::InvalidPath(format!("duplicate route for ({}, {})", r.edge[0], r.edge[1]))
                })?;
            slots[slot] = Some(PhysicalPath::from_names(inst.physical(), &r.path)?);
        }
        let routes = slots
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                p.ok_or_else(|| {
                    let (s, t) = l.edge(k);
                    Error::Unmapped(l.name(s).into(), l.name(t).into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(inst, routes)
    }

    pub fn from_json(inst: &CrossLayerInstance, text: &str) -> Result<Self> {
        let doc: LinkMappingDoc = serde_json::from_str(text)?;
        Self::from_doc(inst, &doc)
    }

    pub fn to_doc(&self, inst: &CrossLayerInstance) -> LinkMappingDoc {
        let l = inst.logical();
        LinkMappingDoc {
            routes: self
                .routes
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let (s, t) = l.edge(k);
                    RouteDoc {
                        edge: [l.name(s).to_string(), l.name(t).to_string()],
                        path: p.names(inst.physical()),
                    }
                })
                .collect(),
        }
    }

    pub fn routes(&self) -> &[PhysicalPath] {
        &self.routes
    }

    pub fn route(&self, k: usize) -> &PhysicalPath {
        &self.routes[k]
    }

    /// Physical links used by any route.
    pub fn used_edges(&self, universe: usize) -> EdgeSet {
        let mut s = EdgeSet::empty(universe);
        for r in &self.routes {
            for &e in r.edges() {
                s.insert(e);
            }
        }
        s
    }
}

/// Physical links not used by any routed link of `tau`.
pub fn co_mapping(tau: &[usize], mapping: &LinkMapping, physical: &PhysicalNetwork) -> Result<EdgeSet> {
    let mut out = EdgeSet::full(physical.edge_count());
    for &k in tau {
        let r = mapping
            .routes
            .get(k)
            .ok_or_else(|| Error::Unmapped(k.to_string(), String::new()))?;
        for &e in r.edges() {
            out.remove(e);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn names(inst: &CrossLayerInstance, paths: &[PhysicalPath]) -> Vec<String> {
        paths
            .iter()
            .map(|p| p.names(inst.physical()).join("-"))
            .collect()
    }

    fn logical_edge(inst: &CrossLayerInstance, s: &str, t: &str) -> usize {
        let l = inst.logical();
        l.edge_between(l.index_of(s).unwrap(), l.index_of(t).unwrap())
            .unwrap()
    }

    #[test]
    fn ring_pool_has_both_arcs() {
        let inst = fixtures::six_ring();
        let mu = logical_edge(&inst, "3", "4");
        let pool = candidate_paths(&inst, mu, &AllSimple).unwrap();
        assert_eq!(names(&inst, &pool), ["3-6-4", "3-2-5-1-4"]);
    }

    #[test]
    fn direct_link_is_the_one_shortest_path() {
        let unified = crate::model::FailureModel::unified(0.1).unwrap();
        let inst = crate::gen::random_instance(3, 6, 3.0, 3, 0.1)
            .unwrap()
            .with_failure_model(&unified)
            .unwrap();
        let mut seen = 0;
        for mu in 0..inst.logical().edge_count() {
            let (a, b) = inst.mapped_endpoints(mu);
            if let Some(e) = inst.physical().edge_between(a, b) {
                let pool = candidate_paths(&inst, mu, &KShortest(1)).unwrap();
                assert_eq!(pool.len(), 1);
                assert_eq!(pool[0].edges(), [e]);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn hop_bound_filters() {
        let inst = fixtures::six_ring();
        let mu = logical_edge(&inst, "3", "4");
        let pool = candidate_paths(&inst, mu, &HopBounded(2)).unwrap();
        assert_eq!(names(&inst, &pool), ["3-6-4"]);
        assert!(candidate_paths(&inst, mu, &HopBounded(1)).is_err());
    }

    #[test]
    fn yen_matches_sorted_enumeration() {
        for seed in 0..20 {
            let inst = crate::gen::random_instance(seed, 8, 3.5, 4, 0.15).unwrap();
            let w = inst.physical().log_weights();
            for mu in 0..inst.logical().edge_count() {
                let all = candidate_paths(&inst, mu, &AllSimple).unwrap();
                let k = candidate_paths(&inst, mu, &KShortest(5)).unwrap();
                assert_eq!(k.len(), all.len().min(5));
                for (a, b) in k.iter().zip(&all) {
                    assert!((a.cost(&w) - b.cost(&w)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn policy_registry() {
        assert_eq!(policy("all").unwrap().name(), "all");
        assert_eq!(policy("hops:3").unwrap().name(), "hops:3");
        assert_eq!(policy("k-shortest:16").unwrap().name(), "k-shortest:16");
        assert!(policy("k-shortest:0").is_err());
        assert!(policy("dfs").is_err());
        assert!(policy("hops:x").is_err());
    }

    #[test]
    fn co_mapping_of_red_tree() {
        let inst = fixtures::six_ring();
        let m = fixtures::six_ring_mapping(&inst);
        let p = inst.physical();
        let tau = [
            logical_edge(&inst, "1", "2"),
            logical_edge(&inst, "1", "3"),
            logical_edge(&inst, "3", "4"),
        ];
        let co = co_mapping(&tau, &m, p).unwrap();
        let got: Vec<_> = co.iter().map(|e| p.edge_names(e)).collect();
        assert_eq!(got, [("2", "3")]);
        assert_eq!(co_mapping(&[], &m, p).unwrap(), EdgeSet::full(p.edge_count()));
        assert!(co_mapping(&[0, 1, 2, 3], &m, p).unwrap().is_empty());
        assert!(co_mapping(&[9], &m, p).is_err());
    }

    #[test]
    fn mapping_json_round_trip() {
        let inst = fixtures::six_ring();
        let m = fixtures::six_ring_mapping(&inst);
        let text = serde_json::to_string(&m.to_doc(&inst)).unwrap();
        assert_eq!(LinkMapping::from_json(&inst, &text).unwrap(), m);
    }

    #[test]
    fn mapping_rejects_bad_routes() {
        let inst = fixtures::six_ring();
        let wrong_end = r#"{"routes":[{"edge":["1","2"],"path":["1","5"]}]}"#;
        assert!(LinkMapping::from_json(&inst, wrong_end).is_err());
        let partial = r#"{"routes":[{"edge":["1","2"],"path":["1","5","2"]}]}"#;
        assert!(matches!(
            LinkMapping::from_json(&inst, partial),
            Err(Error::Unmapped(..))
        ));
        let not_adjacent = r#"{"routes":[{"edge":["1","2"],"path":["1","2"]}]}"#;
        assert!(matches!(
            LinkMapping::from_json(&inst, not_adjacent),
            Err(Error::UnknownLink(..))
        ));
        let loops = r#"{"routes":[{"edge":["1","2"],"path":["1","5","1","5","2"]}]}"#;
        assert!(LinkMapping::from_json(&inst, loops).is_err());
    }

    /// Independent recursive enumerator over an adjacency matrix.
    fn oracle_paths(inst: &CrossLayerInstance, a: usize, b: usize) -> BTreeSet<Vec<usize>> {
        let p = inst.physical();
        let n = p.node_count();
        let mut adj = vec![vec![false; n]; n];
        for e in p.edges() {
            adj[e.u][e.v] = true;
            adj[e.v][e.u] = true;
        }
        fn rec(adj: &[Vec<bool>], cur: Vec<usize>, b: usize, out: &mut BTreeSet<Vec<usize>>) {
            let u = *cur.last().unwrap();
            if u == b {
                out.insert(cur);
                return;
            }
            for v in 0..adj.len() {
                if adj[u][v] && !cur.contains(&v) {
                    let mut next = cur.clone();
                    next.push(v);
                    rec(adj, next, b, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        rec(&adj, vec![a], b, &mut out);
        out
    }

    #[test]
    fn all_simple_matches_recursive_oracle() {
        let inst = fixtures::six_ring();
        let mu = logical_edge(&inst, "1", "2");
        let (a, b) = inst.mapped_endpoints(mu);
        let got: BTreeSet<_> = candidate_paths(&inst, mu, &AllSimple)
            .unwrap()
            .into_iter()
            .map(|p| p.nodes().to_vec())
            .collect();
        assert_eq!(got, oracle_paths(&inst, a, b));
        for seed in 0..30 {
            let inst = crate::gen::random_instance(seed, 9, 3.5, 4, 0.1).unwrap();
            let pools = candidate_pools(&inst, &AllSimple).unwrap();
            for (mu, pool) in pools.iter().enumerate() {
                let (a, b) = inst.mapped_endpoints(mu);
                let got: BTreeSet<_> = pool.iter().map(|p| p.nodes().to_vec()).collect();
                assert_eq!(got, oracle_paths(&inst, a.min(b), a.max(b)));
            }
            assert_eq!(pools, candidate_pools(&inst, &AllSimple).unwrap());
        }
    }
}
