//! The cross-layer formulations as explicit models.
//!
//! | id         | objective            | decides                                   |
//! |------------|----------------------|-------------------------------------------|
//! | `max-tree` | `min sum c x`        | cheapest routed logical spanning tree     |
//! | `base-set` | `min sum c g`        | weight of links shared by a protecting set |
//! | `surtest`  | `min sum y`          | feasible iff a survivable routing exists  |
//!
//! Naming: `y_s_t_i_j` routes logical link `(s,t)` over physical arc `i->j`;
//! `x_i_j` and `g_i_j` mark physical links; `z_s_t` selects a tree branch;
//! `w_i_j_s_t` carries post-failure tree flow on logical arc `s->t` when
//! link `(i,j)` is down; `f_s_t` carries the tree flow of `max-tree`. Node ids
//! are passed through [`sanitize`]. A parallel logical copy gets `_p<k>`
//! appended to its `s_t` part.
//!
//! The root `s0` is the lexicographically smallest logical node.
//!
//! In `max-tree`, `z` selects undirected branches and a separate continuous
//! single-commodity flow `f` on both orientations (capacity `(|V_L|-1) z`)
//! makes the selection connected. A binary `z` used directly as the flow
//! only admits stars centred at `s0`.

use xlayer_core::model::CrossLayerInstance;
use xlayer_core::FailureModel;

use crate::error::{MilpError, Result};
use crate::model::{sanitize, Metadata, MilpModel, ModelBuilder, ObjSense, Sense, VarKind};

pub const MAX_TREE: &str = "max-tree";
pub const BASE_SET: &str = "base-set";
pub const SURTEST: &str = "surtest";

pub trait Formulation: Send + Sync {
    fn id(&self) -> &'static str;

    fn build(&self, inst: &CrossLayerInstance, model: &FailureModel) -> Result<MilpModel>;
}

pub struct MaxTree;
pub struct BaseSet;
pub struct SurTest;

impl Formulation for MaxTree {
    fn id(&self) -> &'static str {
        MAX_TREE
    }

    fn build(&self, inst: &CrossLayerInstance, model: &FailureModel) -> Result<MilpModel> {
        build_max_tree_model(inst, model)
    }
}

impl Formulation for BaseSet {
    fn id(&self) -> &'static str {
        BASE_SET
    }

    fn build(&self, inst: &CrossLayerInstance, model: &FailureModel) -> Result<MilpModel> {
        build_base_set_model(inst, model)
    }
}

impl Formulation for SurTest {
    fn id(&self) -> &'static str {
        SURTEST
    }

    /// The failure model is irrelevant to feasibility.
    fn build(&self, inst: &CrossLayerInstance, _model: &FailureModel) -> Result<MilpModel> {
        build_surtest_model(inst)
    }
}

pub const FORMULATION_IDS: [&str; 3] = [MAX_TREE, BASE_SET, SURTEST];

pub fn formulation(id: &str) -> Result<Box<dyn Formulation>> {
    match id {
        MAX_TREE => Ok(Box::new(MaxTree)),
        BASE_SET => Ok(Box::new(BaseSet)),
        SURTEST => Ok(Box::new(SurTest)),
        _ => Err(MilpError::UnknownFormulation(id.to_string())),
    }
}

/// Sanitized labels shared by all three builders.
struct Labels {
    phys: Vec<String>,
    logi: Vec<String>,
    /// `s_t` per logical edge, with a copy suffix on parallel edges.
    links: Vec<String>,
    suffix: Vec<String>,
}

impl Labels {
    fn new(inst: &CrossLayerInstance) -> Self {
        let p = inst.physical();
        let l = inst.logical();
        let phys: Vec<String> = p.names().iter().map(|n| sanitize(n)).collect();
        let logi: Vec<String> = l.names().iter().map(|n| sanitize(n)).collect();
        let mut links = Vec::with_capacity(l.edge_count());
        let mut suffix = Vec::with_capacity(l.edge_count());
        for (k, &(s, t)) in l.edges().iter().enumerate() {
            let copy = l.edges()[..k].iter().filter(|&&e| e == (s, t)).count();
            let sfx = if copy == 0 { String::new() } else { format!("_p{copy}") };
            links.push(format!("{}_{}{sfx}", logi[s], logi[t]));
            suffix.push(sfx);
        }
        Labels {
            phys,
            logi,
            links,
            suffix,
        }
    }

    /// Orientation `a -> c` of logical link `k`.
    fn arc(&self, k: usize, a: usize, c: usize) -> String {
        format!("{}_{}{}", self.logi[a], self.logi[c], self.suffix[k])
    }

    fn edge(&self, inst: &CrossLayerInstance, e: usize) -> String {
        let pe = inst.physical().edge(e);
        format!("{}_{}", self.phys[pe.u], self.phys[pe.v])
    }
}

fn metadata(id: &str, inst: &CrossLayerInstance) -> Metadata {
    Metadata {
        formulation: id.to_string(),
        root: Some(inst.logical().name(0).to_string()),
    }
}

/// Declares `y` for every logical link and both orientations of every
/// physical link. Returns `y[k][e] = (forward, backward)`.
fn routing_vars(
    b: &mut ModelBuilder,
    inst: &CrossLayerInstance,
    lab: &Labels,
) -> Result<Vec<Vec<(usize, usize)>>> {
    let mut y = Vec::new();
    for link in &lab.links {
        let mut row = Vec::new();
        for pe in inst.physical().edges() {
            let (i, j) = (&lab.phys[pe.u], &lab.phys[pe.v]);
            let fwd = b.add_var(format!("y_{link}_{i}_{j}"), VarKind::Binary)?;
            let bwd = b.add_var(format!("y_{link}_{j}_{i}"), VarKind::Binary)?;
            row.push((fwd, bwd));
        }
        y.push(row);
    }
    Ok(y)
}

/// Flow conservation of each routing at every physical node. The supply at
/// the source host is `1` or, with `select`, the branch variable.
fn routing_rows(
    b: &mut ModelBuilder,
    inst: &CrossLayerInstance,
    lab: &Labels,
    y: &[Vec<(usize, usize)>],
    select: Option<&[usize]>,
) -> Result<()> {
    let p = inst.physical();
    for (k, link) in lab.links.iter().enumerate() {
        let (hs, ht) = inst.mapped_endpoints(k);
        for i in 0..p.node_count() {
            let mut terms = Vec::new();
            for &(_, e) in p.neighbors(i) {
                let (fwd, bwd) = y[k][e];
                let (out, inn) = if p.edge(e).u == i { (fwd, bwd) } else { (bwd, fwd) };
                terms.push((out, 1.0));
                terms.push((inn, -1.0));
            }
            let supply = if i == hs {
                1.0
            } else if i == ht {
                -1.0
            } else {
                0.0
            };
            let rhs = match select {
                Some(z) => {
                    if supply != 0.0 {
                        terms.push((z[k], -supply));
                    }
                    0.0
                }
                None => supply,
            };
            b.add_constraint(format!("route_{link}_{}", lab.phys[i]), terms, Sense::Eq, rhs)?;
        }
    }
    Ok(())
}

/// Tree size, edge selection and the single-commodity connectivity flow.
fn tree_rows(
    b: &mut ModelBuilder,
    inst: &CrossLayerInstance,
    lab: &Labels,
) -> Result<Vec<usize>> {
    let l = inst.logical();
    let n = l.node_count();
    let big = (n - 1) as f64;
    let z: Vec<usize> = lab
        .links
        .iter()
        .map(|link| b.add_var(format!("z_{link}"), VarKind::Binary))
        .collect::<Result<_>>()?;
    let mut arcs = Vec::new();
    for (k, &(s, t)) in l.edges().iter().enumerate() {
        let cont = VarKind::Continuous { lo: 0.0, hi: big };
        let st = b.add_var(format!("f_{}", lab.arc(k, s, t)), cont)?;
        let ts = b.add_var(format!("f_{}", lab.arc(k, t, s)), cont)?;
        arcs.push((k, s, t, st));
        arcs.push((k, t, s, ts));
    }
    for v in 0..n {
        let terms = arcs.iter().filter_map(|&(_, a, c, f)| {
            if a == v {
                Some((f, 1.0))
            } else if c == v {
                Some((f, -1.0))
            } else {
                None
            }
        });
        let rhs = if v == 0 { big } else { -1.0 };
        b.add_constraint(format!("tree_{}", lab.logi[v]), terms, Sense::Eq, rhs)?;
    }
    for &(k, a, c, f) in &arcs {
        b.add_constraint(
            format!("cap_{}", lab.arc(k, a, c)),
            [(f, 1.0), (z[k], -big)],
            Sense::Le,
            0.0,
        )?;
    }
    b.add_constraint("size", z.iter().map(|&v| (v, 1.0)), Sense::Eq, big)?;
    Ok(z)
}

fn weights(inst: &CrossLayerInstance, model: &FailureModel) -> Result<Vec<f64>> {
    (0..inst.physical().edge_count())
        .map(|e| model.edge_weight(e).map_err(MilpError::from))
        .collect()
}

/// Cheapest routed logical spanning tree: `min sum c_ij x_ij`.
pub fn build_max_tree_model(inst: &CrossLayerInstance, model: &FailureModel) -> Result<MilpModel> {
    let c = weights(inst, model)?;
    let lab = Labels::new(inst);
    let mut b = ModelBuilder::new(metadata(MAX_TREE, inst));
    let y = routing_vars(&mut b, inst, &lab)?;
    let x: Vec<usize> = (0..inst.physical().edge_count())
        .map(|e| b.add_var(format!("x_{}", lab.edge(inst, e)), VarKind::Binary))
        .collect::<Result<_>>()?;
    let z = tree_rows(&mut b, inst, &lab)?;
    routing_rows(&mut b, inst, &lab, &y, Some(&z))?;
    for (k, link) in lab.links.iter().enumerate() {
        for (e, &(fwd, bwd)) in y[k].iter().enumerate() {
            b.add_constraint(
                format!("link_{link}_{}", lab.edge(inst, e)),
                [(fwd, 1.0), (bwd, 1.0), (x[e], -1.0)],
                Sense::Le,
                0.0,
            )?;
        }
    }
    b.set_objective(ObjSense::Minimize, x.iter().zip(&c).map(|(&v, &w)| (v, w)))?;
    b.build()
}

/// Post-failure tree flow: for every physical link, a flow of `w` from the
/// root over logical arcs whose routing avoids the link. `shared` carries
/// `g` per physical link; without it the right-hand sides are constant.
fn protection_rows(
    b: &mut ModelBuilder,
    inst: &CrossLayerInstance,
    lab: &Labels,
    y: &[Vec<(usize, usize)>],
    shared: Option<&[usize]>,
) -> Result<()> {
    let l = inst.logical();
    let n = l.node_count();
    let share = 1.0 / (n - 1) as f64;
    for e in 0..inst.physical().edge_count() {
        let pe = lab.edge(inst, e);
        let mut arcs = Vec::new();
        for (k, &(s, t)) in l.edges().iter().enumerate() {
            for (a, c) in [(s, t), (t, s)] {
                let w = b.add_var(
                    format!("w_{pe}_{}", lab.arc(k, a, c)),
                    VarKind::Continuous { lo: 0.0, hi: 1.0 },
                )?;
                let (fwd, bwd) = y[k][e];
                b.add_constraint(
                    format!("avoid_{pe}_{}", lab.arc(k, a, c)),
                    [(w, 1.0), (fwd, 1.0), (bwd, 1.0)],
                    Sense::Le,
                    1.0,
                )?;
                arcs.push((a, c, w));
            }
        }
        for v in 0..n {
            let mut terms: Vec<(usize, f64)> = arcs
                .iter()
                .filter_map(|&(a, c, w)| {
                    if a == v {
                        Some((w, 1.0))
                    } else if c == v {
                        Some((w, -1.0))
                    } else {
                        None
                    }
                })
                .collect();
            let rhs = if v == 0 { 1.0 } else { -share };
            if let Some(g) = shared {
                // (1 - g) at the root, (g - 1) / (|V_L| - 1) elsewhere.
                terms.push((g[e], if v == 0 { 1.0 } else { -share }));
            }
            b.add_constraint(format!("keep_{pe}_{}", lab.logi[v]), terms, Sense::Eq, rhs)?;
        }
    }
    Ok(())
}

/// Minimum weight of physical links left unprotected: `min sum c_ij g_ij`.
pub fn build_base_set_model(inst: &CrossLayerInstance, model: &FailureModel) -> Result<MilpModel> {
    let c = weights(inst, model)?;
    let lab = Labels::new(inst);
    let mut b = ModelBuilder::new(metadata(BASE_SET, inst));
    let y = routing_vars(&mut b, inst, &lab)?;
    let g: Vec<usize> = (0..inst.physical().edge_count())
        .map(|e| b.add_var(format!("g_{}", lab.edge(inst, e)), VarKind::Binary))
        .collect::<Result<_>>()?;
    routing_rows(&mut b, inst, &lab, &y, None)?;
    protection_rows(&mut b, inst, &lab, &y, Some(&g))?;
    b.set_objective(ObjSense::Minimize, g.iter().zip(&c).map(|(&v, &w)| (v, w)))?;
    b.build()
}

/// Feasible iff some routing survives every single physical link failure.
pub fn build_surtest_model(inst: &CrossLayerInstance) -> Result<MilpModel> {
    let lab = Labels::new(inst);
    let mut b = ModelBuilder::new(metadata(SURTEST, inst));
    let y = routing_vars(&mut b, inst, &lab)?;
    routing_rows(&mut b, inst, &lab, &y, None)?;
    protection_rows(&mut b, inst, &lab, &y, None)?;
    let all: Vec<(usize, f64)> = y
        .iter()
        .flatten()
        .flat_map(|&(f, r)| [(f, 1.0), (r, 1.0)])
        .collect();
    b.set_objective(ObjSense::Minimize, all)?;
    b.build()
}
