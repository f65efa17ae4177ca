//! Cross-layer instances, failure models and the instance JSON format.
//!
//! Node ids are opaque strings in documents. Internally each layer assigns
//! dense indices in sorted string order, and every undirected edge is stored
//! with its smaller endpoint first, sorted. Two documents describing the same
//! network therefore produce identical indexed instances.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DisjointSets;

/// On-disk instance document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub physical: PhysicalDoc,
    pub logical: LogicalDoc,
    pub node_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalDoc {
    pub nodes: Vec<String>,
    pub edges: Vec<PhysicalEdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalEdgeDoc {
    pub u: String,
    pub v: String,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicalDoc {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

/// One broken invariant of an instance document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNode { layer: Layer, node: String },
    UnknownEdgeEndpoint { layer: Layer, node: String },
    SelfLoop { layer: Layer, node: String },
    ParallelEdge { layer: Layer, u: String, v: String },
    Disconnected { layer: Layer },
    TooFewLogicalNodes { count: usize },
    ProbabilityOutOfRange { u: String, v: String, rho: String },
    MappingMissing { logical: String },
    MappingUnknownLogical { logical: String },
    MappingUnknownPhysical { logical: String, physical: String },
    MappingNotInjective { physical: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Physical,
    Logical,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Physical => "physical",
            Layer::Logical => "logical",
        })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode { layer, node } => {
                write!(f, "{layer} network lists node `{node}` twice")
            }
            Violation::UnknownEdgeEndpoint { layer, node } => {
                write!(f, "{layer} edge references unknown node `{node}`")
            }
            Violation::SelfLoop { layer, node } => {
                write!(f, "{layer} network has a self-loop at `{node}`")
            }
            Violation::ParallelEdge { layer, u, v } => {
                write!(f, "{layer} network has parallel edges between `{u}` and `{v}`")
            }
            Violation::Disconnected { layer } => write!(f, "{layer} network disconnected"),
            Violation::TooFewLogicalNodes { count } => {
                write!(f, "logical network needs at least 2 nodes, found {count}")
            }
            Violation::ProbabilityOutOfRange { u, v, rho } => {
                write!(f, "failure probability {rho} on ({u}, {v}) outside [0, 1)")
            }
            Violation::MappingMissing { logical } => {
                write!(f, "logical node `{logical}` has no physical host")
            }
            Violation::MappingUnknownLogical { logical } => {
                write!(f, "node mapping references unknown logical node `{logical}`")
            }
            Violation::MappingUnknownPhysical { logical, physical } => write!(
                f,
                "logical node `{logical}` mapped to unknown physical node `{physical}`"
            ),
            Violation::MappingNotInjective { physical } => {
                write!(f, "node mapping not injective: physical node `{physical}` hosts several logical nodes")
            }
        }
    }
}

fn valid_probability(rho: f64) -> bool {
    (0.0..1.0).contains(&rho)
}

/// `-ln(1 - rho)`: the additive cost whose exponentiated negative sum is a
/// survival product. Rejects `rho` outside `[0, 1)`.
pub fn log_weight(rho: f64) -> Result<f64> {
    if !valid_probability(rho) {
        return Err(Error::Probability(rho));
    }
    Ok(-(-rho).ln_1p())
}

/// `exp(-cost)`, the survival probability for an accumulated log-weight.
pub fn survival(cost: f64) -> f64 {
    (-cost).exp()
}

fn check_layer<'a>(
    layer: Layer,
    nodes: &'a [String],
    edges: impl Iterator<Item = (&'a str, &'a str)>,
    out: &mut Vec<Violation>,
) {
    let mut index = HashMap::new();
    for n in nodes {
        if index.contains_key(n.as_str()) {
            out.push(Violation::DuplicateNode {
                layer,
                node: n.clone(),
            });
        } else {
            index.insert(n.as_str(), index.len());
        }
    }
    let mut seen = BTreeSet::new();
    let mut ds = DisjointSets::new(index.len());
    for (u, v) in edges {
        let mut known = true;
        for x in [u, v] {
            if !index.contains_key(x) {
                out.push(Violation::UnknownEdgeEndpoint {
                    layer,
                    node: x.to_string(),
                });
                known = false;
            }
        }
        if u == v {
            out.push(Violation::SelfLoop {
                layer,
                node: u.to_string(),
            });
            continue;
        }
        let key = if u < v { (u, v) } else { (v, u) };
        if !seen.insert(key) {
            out.push(Violation::ParallelEdge {
                layer,
                u: key.0.to_string(),
                v: key.1.to_string(),
            });
        }
        if known {
            ds.union(index[u], index[v]);
        }
    }
    if index.is_empty() || ds.components() > 1 {
        out.push(Violation::Disconnected { layer });
    }
}

pub fn validate_physical(doc: &PhysicalDoc) -> Vec<Violation> {
    let mut out = Vec::new();
    check_layer(
        Layer::Physical,
        &doc.nodes,
        doc.edges.iter().map(|e| (e.u.as_str(), e.v.as_str())),
        &mut out,
    );
    for e in &doc.edges {
        if !valid_probability(e.rho) {
            out.push(Violation::ProbabilityOutOfRange {
                u: e.u.clone(),
                v: e.v.clone(),
                rho: e.rho.to_string(),
            });
        }
    }
    out
}

/// Checks every invariant of an instance document. An empty list means the
/// document converts into a [`CrossLayerInstance`].
pub fn validate_instance(doc: &InstanceDoc) -> Vec<Violation> {
    let mut out = validate_physical(&doc.physical);
    check_layer(
        Layer::Logical,
        &doc.logical.nodes,
        doc.logical.edges.iter().map(|[u, v]| (u.as_str(), v.as_str())),
        &mut out,
    );
    let distinct_logical: BTreeSet<&str> = doc.logical.nodes.iter().map(String::as_str).collect();
    if distinct_logical.len() < 2 {
        out.push(Violation::TooFewLogicalNodes {
            count: distinct_logical.len(),
        });
    }
    let physical: BTreeSet<&str> = doc.physical.nodes.iter().map(String::as_str).collect();
    for s in &distinct_logical {
        if !doc.node_map.contains_key(*s) {
            out.push(Violation::MappingMissing {
                logical: s.to_string(),
            });
        }
    }
    let mut hosts: BTreeMap<&str, usize> = BTreeMap::new();
    for (s, i) in &doc.node_map {
        if !distinct_logical.contains(s.as_str()) {
            out.push(Violation::MappingUnknownLogical { logical: s.clone() });
            continue;
        }
        if !physical.contains(i.as_str()) {
            out.push(Violation::MappingUnknownPhysical {
                logical: s.clone(),
                physical: i.clone(),
            });
        }
        *hosts.entry(i.as_str()).or_default() += 1;
    }
    for (i, count) in hosts {
        if count > 1 {
            out.push(Violation::MappingNotInjective {
                physical: i.to_string(),
            });
        }
    }
    out
}

/// A physical link with its failure probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysEdge {
    pub u: usize,
    pub v: usize,
    pub rho: f64,
}

impl PhysEdge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

fn sorted_names(nodes: &[String]) -> (Vec<String>, HashMap<String, usize>) {
    let names: Vec<String> = nodes
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    (names, index)
}

/// Undirected physical network with per-link failure probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalNetwork {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<PhysEdge>,
    adj: Vec<Vec<(usize, usize)>>,
    lookup: HashMap<(usize, usize), usize>,
}

impl PhysicalNetwork {
    /// Builds a validated network from its document.
    pub fn from_doc(doc: &PhysicalDoc) -> Result<Self> {
        let violations = validate_physical(doc);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok(Self::build(doc))
    }

    fn build(doc: &PhysicalDoc) -> Self {
        let (names, index) = sorted_names(&doc.nodes);
        let mut edges: Vec<PhysEdge> = doc
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (index[&e.u], index[&e.v]);
                PhysEdge {
                    u: a.min(b),
                    v: a.max(b),
                    rho: e.rho,
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        let mut adj = vec![Vec::new(); names.len()];
        let mut lookup = HashMap::new();
        for (k, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, k));
            adj[e.v].push((e.u, k));
            lookup.insert((e.u, e.v), k);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        PhysicalNetwork {
            names,
            index,
            edges,
            adj,
            lookup,
        }
    }

    pub fn to_doc(&self) -> PhysicalDoc {
        PhysicalDoc {
            nodes: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| PhysicalEdgeDoc {
                    u: self.names[e.u].clone(),
                    v: self.names[e.v].clone(),
                    rho: e.rho,
                })
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn edges(&self) -> &[PhysEdge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &PhysEdge {
        &self.edges[e]
    }

    /// Neighbors of `u` as `(node, edge)` pairs sorted by node.
    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adj[u]
    }

    pub fn adjacency(&self) -> &[Vec<(usize, usize)>] {
        &self.adj
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&(a.min(b), a.max(b))).copied()
    }

    /// `(u, v)` names of edge `e`.
    pub fn edge_names(&self, e: usize) -> (&str, &str) {
        let x = &self.edges[e];
        (&self.names[x.u], &self.names[x.v])
    }

    pub fn rho(&self, e: usize) -> f64 {
        self.edges[e].rho
    }

    /// `-ln(1 - rho_e)` for every link, by edge index.
    pub fn log_weights(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|e| -(-e.rho).ln_1p())
            .collect()
    }

    /// Copy of the network with probabilities replaced by `model`.
    pub fn with_failure_model(&self, model: &FailureModel) -> Result<Self> {
        let mut out = self.clone();
        for (k, e) in out.edges.iter_mut().enumerate() {
            e.rho = model.rho(k)?;
        }
        Ok(out)
    }
}

/// Undirected logical network. Parallel edges only arise from augmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalNetwork {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
}

impl LogicalNetwork {
    fn build(doc: &LogicalDoc) -> Self {
        let (names, index) = sorted_names(&doc.nodes);
        let mut edges: Vec<(usize, usize)> = doc
            .edges
            .iter()
            .map(|[u, v]| {
                let (a, b) = (index[u], index[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        LogicalNetwork {
            names,
            index,
            edges,
        }
    }

    pub fn to_doc(&self) -> LogicalDoc {
        LogicalDoc {
            nodes: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(s, t)| [self.names[s].clone(), self.names[t].clone()])
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> (usize, usize) {
        self.edges[k]
    }

    /// First edge index joining `a` and `b`.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).ok().map(|mut k| {
            while k > 0 && self.edges[k - 1] == key {
                k -= 1;
            }
            k
        })
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.names.len()
    }

    /// The logical network with every link doubled. Copy `2k + 1` is parallel
    /// to original link `k`.
    pub fn with_parallel_copies(&self) -> Self {
        let edges = self.edges.iter().flat_map(|&e| [e, e]).collect();
        LogicalNetwork {
            names: self.names.clone(),
            index: self.index.clone(),
            edges,
        }
    }
}

/// Injective placement of logical nodes onto physical nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMapping {
    hosts: Vec<usize>,
}

impl NodeMapping {
    pub fn host(&self, s: usize) -> usize {
        self.hosts[s]
    }

    pub fn hosts(&self) -> &[usize] {
        &self.hosts
    }

    /// The image of the mapping, sorted: the Steiner terminal set.
    pub fn terminals(&self) -> Vec<usize> {
        let mut t = self.hosts.clone();
        t.sort_unstable();
        t
    }
}

/// A physical network, a logical network and the node placement between them.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossLayerInstance {
    physical: PhysicalNetwork,
    logical: LogicalNetwork,
    node_map: NodeMapping,
}

impl CrossLayerInstance {
    pub fn from_doc(doc: &InstanceDoc) -> Result<Self> {
        let violations = validate_instance(doc);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        let physical = PhysicalNetwork::build(&doc.physical);
        let logical = LogicalNetwork::build(&doc.logical);
        let hosts = logical
            .names
            .iter()
            .map(|s| physical.index[&doc.node_map[s]])
            .collect();
        Ok(CrossLayerInstance {
            physical,
            logical,
            node_map: NodeMapping { hosts },
        })
    }

    /// Assembles an instance from already-indexed parts. Used for augmented
    /// logical networks, which no document can describe.
    pub fn from_parts(
        physical: PhysicalNetwork,
        logical: LogicalNetwork,
        node_map: NodeMapping,
    ) -> Self {
        CrossLayerInstance {
            physical,
            logical,
            node_map,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            physical: self.physical.to_doc(),
            logical: self.logical.to_doc(),
            node_map: self
                .logical
                .names
                .iter()
                .zip(&self.node_map.hosts)
                .map(|(s, &i)| (s.clone(), self.physical.names[i].clone()))
                .collect(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn physical(&self) -> &PhysicalNetwork {
        &self.physical
    }

    pub fn logical(&self) -> &LogicalNetwork {
        &self.logical
    }

    pub fn node_map(&self) -> &NodeMapping {
        &self.node_map
    }

    /// Physical endpoints of logical edge `k`.
    pub fn mapped_endpoints(&self, k: usize) -> (usize, usize) {
        let (s, t) = self.logical.edges[k];
        (self.node_map.hosts[s], self.node_map.hosts[t])
    }

    pub fn with_failure_model(&self, model: &FailureModel) -> Result<Self> {
        Ok(CrossLayerInstance {
            physical: self.physical.with_failure_model(model)?,
            logical: self.logical.clone(),
            node_map: self.node_map.clone(),
        })
    }

    /// The same physical network and placement with every logical link doubled.
    pub fn augmented(&self) -> Self {
        CrossLayerInstance {
            physical: self.physical.clone(),
            logical: self.logical.with_parallel_copies(),
            node_map: self.node_map.clone(),
        }
    }
}

/// How physical links fail.
#[derive(Debug, Clone, PartialEq)]
pub enum FailureModel {
    /// Every link fails with the same probability.
    Unified(f64),
    /// Per-link probabilities indexed by physical edge.
    PerLink(Vec<f64>),
}

impl FailureModel {
    pub fn unified(rho: f64) -> Result<Self> {
        if !valid_probability(rho) {
            return Err(Error::Probability(rho));
        }
        Ok(FailureModel::Unified(rho))
    }

    pub fn per_link(rhos: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = rhos.iter().find(|r| !valid_probability(**r)) {
            return Err(Error::Probability(bad));
        }
        Ok(FailureModel::PerLink(rhos))
    }

    /// The probabilities already stored on the network's links.
    pub fn from_network(physical: &PhysicalNetwork) -> Self {
        FailureModel::PerLink(physical.edges.iter().map(|e| e.rho).collect())
    }

    pub fn is_unified(&self) -> bool {
        matches!(self, FailureModel::Unified(_))
    }

    pub fn rho(&self, e: usize) -> Result<f64> {
        match self {
            FailureModel::Unified(r) => Ok(*r),
            FailureModel::PerLink(v) => v
                .get(e)
                .copied()
                .ok_or_else(|| Error::UnknownLink(e.to_string(), String::new())),
        }
    }

    /// Objective coefficient of link `e`: 1 under the unified model (the
    /// objective counts links), `-ln(1 - rho_e)` otherwise.
    pub fn edge_weight(&self, e: usize) -> Result<f64> {
        match self {
            FailureModel::Unified(_) => Ok(1.0),
            FailureModel::PerLink(_) => log_weight(self.rho(e)?),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FailureModel::Unified(r) => format!("unified:{r}"),
            FailureModel::PerLink(v) => {
                let mean = if v.is_empty() {
                    0.0
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                };
                format!("per-link:mean={mean}")
            }
        }
    }
}
