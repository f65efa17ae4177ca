//! Critical links, the maximal survivable probability and base tree sets.
//!
//! For a fixed link mapping, a physical link is critical when its failure
//! alone disconnects the logical network. The survivable probability of the
//! mapping is the product of `1 - rho` over its critical links; the instance
//! value `phi` maximizes that over all mappings drawn from the candidate
//! pools. Two mapping searches are registered:
//!
//! | name               | method                                            |
//! |--------------------|---------------------------------------------------|
//! | `branch-and-bound` | depth-first, pruned by links already forced critical |
//! | `flat`             | every combination of pool entries                 |

use std::fmt;

use serde::Serialize;

use crate::edgeset::EdgeSet;
use crate::error::{Error, Result};
use crate::graph::DisjointSets;
use crate::model::{survival, CrossLayerInstance};
use crate::routing::{candidate_pools, LinkMapping, LinkMappingDoc, PhysicalPath, PoolPolicy};
use crate::trees::{
    edge_names, enumerate_spanning_trees, ProtectingTree, ProtectingTreeSet, TreeReport,
};

/// Largest spanning-tree count enumerated for full protecting sets.
pub const TREE_LIMIT: usize = 100_000;

/// Relative slack when comparing accumulated log-costs.
const COST_EPS: f64 = 1e-12;

/// Physical links whose single failure disconnects the logical network
/// under `mapping`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalLinkSet {
    pub edges: EdgeSet,
    pub mapping: LinkMapping,
}

impl CriticalLinkSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Reusable union-find buffer for repeated connectivity checks.
struct Connectivity {
    parent: Vec<usize>,
}

impl Connectivity {
    fn new(n: usize) -> Self {
        Connectivity {
            parent: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn spans(&mut self, edges: impl Iterator<Item = (usize, usize)>) -> bool {
        let n = self.parent.len();
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        let mut comps = n;
        for (a, b) in edges {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra != rb {
                self.parent[ra] = rb;
                comps -= 1;
                if comps == 1 {
                    return true;
                }
            }
        }
        comps <= 1
    }
}

fn critical_set(inst: &CrossLayerInstance, routes: &[PhysicalPath]) -> EdgeSet {
    let l = inst.logical();
    let universe = inst.physical().edge_count();
    let used = {
        let mut s = EdgeSet::empty(universe);
        for r in routes {
            for &e in r.edges() {
                s.insert(e);
            }
        }
        s
    };
    let mut conn = Connectivity::new(l.node_count());
    let mut out = EdgeSet::empty(universe);
    for e in used.iter() {
        let survivors = routes
            .iter()
            .zip(l.edges())
            .filter(|(r, _)| !r.uses(e))
            .map(|(_, &st)| st);
        if !conn.spans(survivors) {
            out.insert(e);
        }
    }
    out
}

/// Links whose failure disconnects the logical network under `m`.
pub fn critical_links(inst: &CrossLayerInstance, m: &LinkMapping) -> CriticalLinkSet {
    CriticalLinkSet {
        edges: critical_set(inst, m.routes()),
        mapping: m.clone(),
    }
}

/// Product of `1 - rho` over the critical links of `m`.
pub fn mapping_survivable_prob(inst: &CrossLayerInstance, m: &LinkMapping) -> f64 {
    let weights = inst.physical().log_weights();
    survival(critical_set(inst, m.routes()).weight(&weights))
}

/// Every spanning tree of the logical network, routed by `m`.
pub fn full_protecting_set(
    inst: &CrossLayerInstance,
    m: &LinkMapping,
    limit: usize,
) -> Result<ProtectingTreeSet> {
    let trees = enumerate_spanning_trees(inst.logical(), limit)?
        .into_iter()
        .map(|tau| ProtectingTree::new(inst, tau, m))
        .collect::<Result<Vec<_>>>()?;
    ProtectingTreeSet::new(trees)
}

/// Whether the critical links of `m` are exactly the links shared by every
/// routed spanning tree.
pub fn lemma2_check(inst: &CrossLayerInstance, m: &LinkMapping) -> Result<bool> {
    let full = full_protecting_set(inst, m, TREE_LIMIT)?;
    Ok(full.shared_edges() == critical_links(inst, m).edges)
}

/// A spanning tree of the logical links that survive the failure of `e`,
/// chosen greedily in link order.
fn tree_avoiding(inst: &CrossLayerInstance, m: &LinkMapping, e: usize) -> Option<Vec<usize>> {
    let l = inst.logical();
    let mut ds = DisjointSets::new(l.node_count());
    let tau: Vec<usize> = (0..l.edge_count())
        .filter(|&k| !m.route(k).uses(e) && {
            let (s, t) = l.edge(k);
            ds.union(s, t)
        })
        .collect();
    (tau.len() + 1 == l.node_count()).then_some(tau)
}

/// A small set of routed spanning trees that together protect every
/// non-critical link of `m`.
///
/// Greedy set cover over all routed spanning trees: each round takes the tree
/// protecting the most still-uncovered links, the earliest tree on ties. When
/// the logical network has more than [`TREE_LIMIT`] spanning trees, the
/// candidates are instead one tree per non-critical link, built to avoid it.
/// The result never has more trees than there are physical links.
pub fn base_set_extract(inst: &CrossLayerInstance, m: &LinkMapping) -> Result<ProtectingTreeSet> {
    let p = inst.physical();
    let critical = critical_links(inst, m).edges;
    let candidates: Vec<ProtectingTree> = match enumerate_spanning_trees(inst.logical(), TREE_LIMIT) {
        Ok(all) => all
            .into_iter()
            .map(|tau| ProtectingTree::new(inst, tau, m))
            .collect::<Result<_>>()?,
        Err(Error::TreeLimit { .. }) => {
            let mut out: Vec<ProtectingTree> = Vec::new();
            for e in critical.complement().iter() {
                if out.iter().any(|t| t.protects(e)) {
                    continue;
                }
                let tau = tree_avoiding(inst, m, e).expect("non-critical link has a tree avoiding it");
                out.push(ProtectingTree::new(inst, tau, m)?);
            }
            if out.is_empty() {
                let tau = enumerate_first_tree(inst);
                out.push(ProtectingTree::new(inst, tau, m)?);
            }
            out
        }
        Err(other) => return Err(other),
    };

    let mut uncovered = critical.complement();
    let mut chosen: Vec<ProtectingTree> = Vec::new();
    let mut taken = vec![false; candidates.len()];
    while !uncovered.is_empty() {
        let mut best: Option<(usize, usize)> = None;
        for (i, t) in candidates.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let gain = uncovered.iter().filter(|&e| t.protects(e)).count();
            if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        let Some((_, i)) = best else { break };
        taken[i] = true;
        for e in 0..p.edge_count() {
            if candidates[i].protects(e) {
                uncovered.remove(e);
            }
        }
        chosen.push(candidates[i].clone());
    }
    if chosen.is_empty() {
        chosen.push(candidates[0].clone());
    }
    ProtectingTreeSet::new(chosen)
}

fn enumerate_first_tree(inst: &CrossLayerInstance) -> Vec<usize> {
    let l = inst.logical();
    let mut ds = DisjointSets::new(l.node_count());
    (0..l.edge_count())
        .filter(|&k| {
            let (s, t) = l.edge(k);
            ds.union(s, t)
        })
        .collect()
}

/// Best mapping found by a search, with its critical set and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub mapping: LinkMapping,
    pub critical: EdgeSet,
    pub cost: f64,
}

/// Strategy minimizing the weighted critical set over a pool product.
pub trait MappingSearch: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Cheapest mapping with cost strictly below `cap`. Among equal costs the
    /// first one in search order wins.
    fn search(
        &self,
        inst: &CrossLayerInstance,
        pools: &[Vec<PhysicalPath>],
        weights: &[f64],
        cap: f64,
    ) -> Result<Option<SearchResult>>;
}

/// Depth-first search over logical links in ascending pool size, pools in
/// ascending cost, pruning any partial mapping whose forced-critical links
/// already cost as much as the incumbent.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

/// Plain enumeration of the pool product, in the same order as
/// [`BranchAndBound`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Flat;

pub const SEARCH_NAMES: [&str; 2] = ["branch-and-bound", "flat"];

pub fn search_strategy(name: &str) -> Result<Box<dyn MappingSearch>> {
    match name {
        "branch-and-bound" => Ok(Box::new(BranchAndBound)),
        "flat" => Ok(Box::new(Flat)),
        _ => Err(Error::UnknownStrategy {
            kind: "mapping search",
            name: name.to_string(),
        }),
    }
}

fn better(cost: f64, best: f64) -> bool {
    best.is_infinite() || cost < best - COST_EPS * best.abs().max(1.0)
}

fn search_order(pools: &[Vec<PhysicalPath>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pools.len()).collect();
    order.sort_by_key(|&k| (pools[k].len(), k));
    order
}

struct Bnb<'a> {
    inst: &'a CrossLayerInstance,
    pools: &'a [Vec<PhysicalPath>],
    weights: &'a [f64],
    order: Vec<usize>,
    /// Links every candidate of a pool uses.
    must_use: Vec<EdgeSet>,
    /// Links with positive weight; only they affect the bound.
    priced: Vec<usize>,
    choice: Vec<usize>,
    conn: Connectivity,
    best: f64,
    floor: f64,
    found: Option<Vec<usize>>,
    done: bool,
}

impl Bnb<'_> {
    /// Links critical in every completion of the first `depth` choices.
    fn forced(&mut self, depth: usize, prev: &EdgeSet) -> (EdgeSet, f64) {
        let l = self.inst.logical();
        let mut forced = prev.clone();
        let mut cost = prev.weight(self.weights);
        let mut assigned = vec![None; self.pools.len()];
        for (d, &k) in self.order[..depth].iter().enumerate() {
            assigned[k] = Some(&self.pools[k][self.choice[d]]);
        }
        for &e in &self.priced {
            if forced.contains(e) {
                continue;
            }
            let survivors = l.edges().iter().enumerate().filter_map(|(k, &st)| {
                let alive = match assigned[k] {
                    Some(p) => !p.uses(e),
                    None => !self.must_use[k].contains(e),
                };
                alive.then_some(st)
            });
            if !self.conn.spans(survivors) {
                forced.insert(e);
                cost += self.weights[e];
            }
        }
        (forced, cost)
    }

    fn dfs(&mut self, depth: usize, prev: &EdgeSet) {
        if self.done {
            return;
        }
        let (forced, cost) = self.forced(depth, prev);
        if !better(cost, self.best) {
            return;
        }
        if depth == self.order.len() {
            self.best = cost;
            self.found = Some(self.choice.clone());
            if !better(self.floor, cost) {
                self.done = true;
            }
            return;
        }
        let k = self.order[depth];
        for i in 0..self.pools[k].len() {
            self.choice[depth] = i;
            self.dfs(depth + 1, &forced);
            if self.done {
                return;
            }
        }
    }
}

fn assemble(
    inst: &CrossLayerInstance,
    pools: &[Vec<PhysicalPath>],
    order: &[usize],
    choice: &[usize],
    weights: &[f64],
) -> Result<SearchResult> {
    let mut routes = vec![None; pools.len()];
    for (d, &k) in order.iter().enumerate() {
        routes[k] = Some(pools[k][choice[d]].clone());
    }
    let routes: Vec<PhysicalPath> = routes.into_iter().map(|r| r.expect("complete")).collect();
    let critical = critical_set(inst, &routes);
    let cost = critical.weight(weights);
    Ok(SearchResult {
        mapping: LinkMapping::new(inst, routes)?,
        critical,
        cost,
    })
}

impl MappingSearch for BranchAndBound {
    fn name(&self) -> &'static str {
        "branch-and-bound"
    }

    fn search(
        &self,
        inst: &CrossLayerInstance,
        pools: &[Vec<PhysicalPath>],
        weights: &[f64],
        cap: f64,
    ) -> Result<Option<SearchResult>> {
        let universe = inst.physical().edge_count();
        let must_use = pools
            .iter()
            .map(|pool| {
                let mut s = EdgeSet::full(universe);
                for p in pool {
                    s.intersect_with(&p.edge_set(universe));
                }
                s
            })
            .collect();
        let order = search_order(pools);
        let mut bnb = Bnb {
            inst,
            pools,
            weights,
            choice: vec![0; order.len()],
            order,
            must_use,
            priced: (0..universe).filter(|&e| weights[e] > 0.0).collect(),
            conn: Connectivity::new(inst.logical().node_count()),
            best: cap,
            floor: 0.0,
            found: None,
            done: false,
        };
        let (_, floor) = bnb.forced(0, &EdgeSet::empty(universe));
        bnb.floor = floor;
        bnb.dfs(0, &EdgeSet::empty(universe));
        match bnb.found {
            Some(choice) => Ok(Some(assemble(inst, pools, &bnb.order, &choice, weights)?)),
            None => Ok(None),
        }
    }
}

impl MappingSearch for Flat {
    fn name(&self) -> &'static str {
        "flat"
    }

    fn search(
        &self,
        inst: &CrossLayerInstance,
        pools: &[Vec<PhysicalPath>],
        weights: &[f64],
        cap: f64,
    ) -> Result<Option<SearchResult>> {
        let order = search_order(pools);
        let mut choice = vec![0; order.len()];
        let mut best: Option<(f64, Vec<usize>)> = None;
        loop {
            let routes: Vec<PhysicalPath> = {
                let mut r = vec![None; pools.len()];
                for (d, &k) in order.iter().enumerate() {
                    r[k] = Some(pools[k][choice[d]].clone());
                }
                r.into_iter().map(|x| x.expect("complete")).collect()
            };
            let cost = critical_set(inst, &routes).weight(weights);
            let bar = best.as_ref().map_or(cap, |(c, _)| *c);
            if better(cost, bar) {
                best = Some((cost, choice.clone()));
            }
            // Odometer step, last position fastest.
            let mut d = order.len();
            loop {
                if d == 0 {
                    return match best {
                        Some((_, c)) => Ok(Some(assemble(inst, pools, &order, &c, weights)?)),
                        None => Ok(None),
                    };
                }
                d -= 1;
                choice[d] += 1;
                if choice[d] < pools[order[d]].len() {
                    break;
                }
                choice[d] = 0;
            }
        }
    }
}

/// Result of the survivable probability search.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivabilityReport {
    pub phi: f64,
    /// Sum of `-ln(1 - rho)` over the critical links.
    pub log_cost: f64,
    pub best_mapping: LinkMapping,
    pub critical: CriticalLinkSet,
    pub base_set: ProtectingTreeSet,
    /// Size of the critical set when every link shares one probability.
    pub k_min: Option<usize>,
    /// True when the pools held every simple path.
    pub exhaustive: bool,
    pub pool: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivabilityReportDoc {
    pub phi: f64,
    pub log_cost: f64,
    pub critical: Vec<[String; 2]>,
    pub best_mapping: LinkMappingDoc,
    pub base_set: Vec<TreeReport>,
    pub base_set_prob: f64,
    pub k_min: Option<usize>,
    pub exhaustive: bool,
    pub pool: String,
}

impl SurvivabilityReport {
    pub fn to_doc(&self, inst: &CrossLayerInstance) -> SurvivabilityReportDoc {
        let p = inst.physical();
        SurvivabilityReportDoc {
            phi: self.phi,
            log_cost: self.log_cost,
            critical: edge_names(p, &self.critical.edges),
            best_mapping: self.best_mapping.to_doc(inst),
            base_set: self.base_set.trees().iter().map(|t| t.to_report(inst)).collect(),
            base_set_prob: self.base_set.survivable_prob(p),
            k_min: self.k_min,
            exhaustive: self.exhaustive,
            pool: self.pool.clone(),
        }
    }
}

/// The shared probability when every physical link fails alike.
pub fn unified_rho(inst: &CrossLayerInstance) -> Option<f64> {
    let edges = inst.physical().edges();
    let first = edges.first()?.rho;
    edges.iter().all(|e| e.rho == first).then_some(first)
}

/// Maximal survivable probability over the pool product, with the base tree
/// set certifying it.
///
/// When all links share one probability the search minimizes the number of
/// critical links, which is the same optimum and stays meaningful at `rho = 0`.
pub fn max_survivable_prob(
    inst: &CrossLayerInstance,
    policy: &dyn PoolPolicy,
) -> Result<SurvivabilityReport> {
    max_survivable_prob_with(inst, policy, &BranchAndBound)
}

pub fn max_survivable_prob_with(
    inst: &CrossLayerInstance,
    policy: &dyn PoolPolicy,
    search: &dyn MappingSearch,
) -> Result<SurvivabilityReport> {
    let p = inst.physical();
    let pools = candidate_pools(inst, policy)?;
    let log_weights = p.log_weights();
    let unified = unified_rho(inst).is_some();
    let weights = if unified {
        vec![1.0; p.edge_count()]
    } else {
        log_weights.clone()
    };
    let found = search
        .search(inst, &pools, &weights, f64::INFINITY)?
        .expect("an uncapped search always finds a mapping");
    let log_cost = found.critical.weight(&log_weights);
    let base_set = base_set_extract(inst, &found.mapping)?;
    log::debug!(
        "phi search: {} critical links, pool {}",
        found.critical.len(),
        policy.name()
    );
    Ok(SurvivabilityReport {
        phi: survival(log_cost),
        log_cost,
        k_min: unified.then_some(found.critical.len()),
        critical: CriticalLinkSet {
            edges: found.critical,
            mapping: found.mapping.clone(),
        },
        best_mapping: found.mapping,
        base_set,
        exhaustive: policy.is_complete(),
        pool: policy.name(),
    })
}

/// Outcome of the survivability decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Survivability {
    pub survivable: bool,
    /// A mapping with no critical link, when one exists in the pools.
    pub witness: Option<LinkMapping>,
    pub exhaustive: bool,
}

/// Whether some mapping in the pool product has no critical link.
pub fn is_survivable(inst: &CrossLayerInstance, policy: &dyn PoolPolicy) -> Result<Survivability> {
    let pools = candidate_pools(inst, policy)?;
    let unit = vec![1.0; inst.physical().edge_count()];
    let found = BranchAndBound.search(inst, &pools, &unit, 0.5)?;
    Ok(Survivability {
        survivable: found.is_some(),
        witness: found.map(|f| f.mapping),
        exhaustive: policy.is_complete(),
    })
}

/// Fewest critical links over the pool product.
pub fn k_min(inst: &CrossLayerInstance, policy: &dyn PoolPolicy) -> Result<usize> {
    let pools = candidate_pools(inst, policy)?;
    let unit = vec![1.0; inst.physical().edge_count()];
    let found = BranchAndBound
        .search(inst, &pools, &unit, f64::INFINITY)?
        .expect("an uncapped search always finds a mapping");
    Ok(found.critical.len())
}
