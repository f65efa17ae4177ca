//! Logical spanning trees and their survival under a routing.

use serde::Serialize;

use crate::edgeset::EdgeSet;
use crate::error::{Error, Result};
use crate::graph::{spans, DisjointSets};
use crate::model::{survival, CrossLayerInstance, LogicalNetwork, PhysicalNetwork};
use crate::routing::{LinkMapping, PhysicalPath};

/// Number of spanning trees by the matrix-tree theorem, using fraction-free
/// elimination on the reduced Laplacian. `None` when the count overflows.
pub fn spanning_tree_count(gl: &LogicalNetwork) -> Option<u128> {
    let n = gl.node_count();
    if n <= 1 {
        return Some(1);
    }
    let m = n - 1;
    let mut a = vec![vec![0i128; m]; m];
    for &(s, t) in gl.edges() {
        for (x, y) in [(s, t), (t, s)] {
            if x > 0 {
                a[x - 1][x - 1] += 1;
                if y > 0 {
                    a[x - 1][y - 1] -= 1;
                }
            }
        }
    }
    // Bareiss.
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..m {
        if a[k][k] == 0 {
            let swap = (k + 1..m).find(|&r| a[r][k] != 0);
            match swap {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        for i in k + 1..m {
            for j in k + 1..m {
                let num = a[i][j]
                    .checked_mul(a[k][k])?
                    .checked_sub(a[i][k].checked_mul(a[k][j])?)?;
                a[i][j] = num / prev;
            }
        }
        prev = a[k][k];
    }
    u128::try_from(sign * a[m - 1][m - 1]).ok()
}

/// Every spanning tree of `gl` as a sorted list of logical edge indices, in
/// lexicographic order. Fails before enumerating when the matrix-tree count
/// exceeds `limit`.
pub fn enumerate_spanning_trees(gl: &LogicalNetwork, limit: usize) -> Result<Vec<Vec<usize>>> {
    let count = spanning_tree_count(gl);
    match count {
        Some(c) if c <= limit as u128 => {}
        _ => {
            return Err(Error::TreeLimit {
                count: count.map_or("overflow".into(), |c| c.to_string()),
                limit,
            })
        }
    }
    let n = gl.node_count();
    let edges = gl.edges();
    let mut out = Vec::new();
    if n <= 1 {
        out.push(Vec::new());
        return Ok(out);
    }

    // Include/exclude recursion: edge k joins the tree when it links two
    // components; it is skipped only if the rest can still span.
    fn rec(
        k: usize,
        n: usize,
        edges: &[(usize, usize)],
        chosen: &mut Vec<usize>,
        ds: &DisjointSets,
        out: &mut Vec<Vec<usize>>,
    ) {
        if chosen.len() == n - 1 {
            out.push(chosen.clone());
            return;
        }
        if k == edges.len() {
            return;
        }
        let (s, t) = edges[k];
        let mut joined = ds.clone();
        if joined.union(s, t) {
            chosen.push(k);
            rec(k + 1, n, edges, chosen, &joined, out);
            chosen.pop();
        }
        let rest = chosen
            .iter()
            .map(|&j| edges[j])
            .chain(edges[k + 1..].iter().copied());
        if spans(n, rest) {
            rec(k + 1, n, edges, chosen, ds, out);
        }
    }
    rec(0, n, edges, &mut Vec::new(), &DisjointSets::new(n), &mut out);
    Ok(out)
}

/// A logical spanning tree together with the routes of its branches.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectingTree {
    tau: Vec<usize>,
    routes: Vec<PhysicalPath>,
    used: EdgeSet,
}

impl ProtectingTree {
    /// Restricts `mapping` to the branches `tau`, which must span the logical
    /// network without cycles.
    pub fn new(inst: &CrossLayerInstance, tau: Vec<usize>, mapping: &LinkMapping) -> Result<Self> {
        let routes = tau
            .iter()
            .map(|&k| mapping.routes().get(k).cloned())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Unmapped("tree branch".into(), String::new()))?;
        Self::from_routes(inst, tau, routes)
    }

    pub fn from_routes(
        inst: &CrossLayerInstance,
        mut tau: Vec<usize>,
        routes: Vec<PhysicalPath>,
    ) -> Result<Self> {
        let l = inst.logical();
        let mut ds = DisjointSets::new(l.node_count());
        let acyclic = tau.iter().all(|&k| k < l.edge_count() && {
            let (s, t) = l.edge(k);
            ds.union(s, t)
        });
        if !acyclic || tau.len() + 1 != l.node_count() {
            return Err(Error::InvalidPath(
                "branches do not form a logical spanning tree".into(),
            ));
        }
        let mut pairs: Vec<_> = tau.drain(..).zip(routes).collect();
        pairs.sort_by_key(|(k, _)| *k);
        let (tau, routes): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let mut used = EdgeSet::empty(inst.physical().edge_count());
        for r in &routes {
            for &e in r.edges() {
                used.insert(e);
            }
        }
        Ok(ProtectingTree { tau, routes, used })
    }

    /// Logical edge indices of the branches, sorted.
    pub fn branches(&self) -> &[usize] {
        &self.tau
    }

    pub fn routes(&self) -> &[PhysicalPath] {
        &self.routes
    }

    /// Physical links used by any branch route.
    pub fn used_edges(&self) -> &EdgeSet {
        &self.used
    }

    /// True when no branch route crosses physical link `e`.
    pub fn protects(&self, e: usize) -> bool {
        !self.used.contains(e)
    }

    pub fn log_cost(&self, weights: &[f64]) -> f64 {
        self.used.weight(weights)
    }

    /// Product of `1 - rho_e` over the used links, evaluated in log space.
    pub fn survivable_prob(&self, physical: &PhysicalNetwork) -> f64 {
        survival(self.log_cost(&physical.log_weights()))
    }

    pub fn to_report(&self, inst: &CrossLayerInstance) -> TreeReport {
        let l = inst.logical();
        let p = inst.physical();
        TreeReport {
            tree: self
                .tau
                .iter()
                .map(|&k| {
                    let (s, t) = l.edge(k);
                    [l.name(s).to_string(), l.name(t).to_string()]
                })
                .collect(),
            used: edge_names(p, &self.used),
            prob: self.survivable_prob(p),
        }
    }
}

/// Names of the physical links in `set`, sorted by edge index.
pub fn edge_names(p: &PhysicalNetwork, set: &EdgeSet) -> Vec<[String; 2]> {
    set.iter()
        .map(|e| {
            let (u, v) = p.edge_names(e);
            [u.to_string(), v.to_string()]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeReport {
    pub tree: Vec<[String; 2]>,
    pub used: Vec<[String; 2]>,
    pub prob: f64,
}

/// A nonempty set of routed spanning trees over one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectingTreeSet {
    trees: Vec<ProtectingTree>,
}

impl ProtectingTreeSet {
    pub fn new(trees: Vec<ProtectingTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidPath("a protecting tree set needs a tree".into()));
        }
        Ok(ProtectingTreeSet { trees })
    }

    pub fn trees(&self) -> &[ProtectingTree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Physical links used by every tree.
    pub fn shared_edges(&self) -> EdgeSet {
        let mut shared = self.trees[0].used.clone();
        for t in &self.trees[1..] {
            shared.intersect_with(&t.used);
        }
        shared
    }

    /// Physical links protected by at least one tree.
    pub fn protected_edges(&self) -> EdgeSet {
        self.shared_edges().complement()
    }

    pub fn log_cost(&self, weights: &[f64]) -> f64 {
        self.shared_edges().weight(weights)
    }

    /// Product of `1 - rho_e` over the shared links; 1 when nothing is shared.
    pub fn survivable_prob(&self, physical: &PhysicalNetwork) -> f64 {
        survival(self.log_cost(&physical.log_weights()))
    }
}

pub fn used_edges(lambda: &ProtectingTree) -> &EdgeSet {
    lambda.used_edges()
}

pub fn protects(lambda: &ProtectingTree, e: usize) -> bool {
    lambda.protects(e)
}

pub fn tree_survivable_prob(lambda: &ProtectingTree, physical: &PhysicalNetwork) -> f64 {
    lambda.survivable_prob(physical)
}

pub fn tree_set_survivable_prob(set: &ProtectingTreeSet, physical: &PhysicalNetwork) -> f64 {
    set.survivable_prob(physical)
}
