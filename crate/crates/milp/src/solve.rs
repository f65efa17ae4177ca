//! Implicit enumeration for tiny models.
//!
//! Binaries are fixed depth-first. At every node:
//!
//! - linear rows propagate bounds on the binaries;
//! - the continuous part, which must be a network (each continuous variable
//!   is an arc: `+1` in one equality row, `-1` in another, upper-bounded by
//!   single-arc inequality rows), is checked by max-flow with the most
//!   permissive capacities the free binaries allow. A component whose supply
//!   depends on one free binary is probed at both values;
//! - free binaries that only ever hurt when raised, and whose equality rows
//!   are already balanced, are fixed to zero;
//! - the objective, which may involve binaries only, bounds the subtree.
//!
//! Branching follows unbalanced equality rows first, so routings are built
//! link by link along their paths. Among equal optima the first one found
//! is kept.

use xlayer_core::flow::FlowNetwork;

use crate::error::{MilpError, Result};
use crate::model::{MilpModel, ObjSense, Sense};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_binaries: usize,
    pub max_nodes: u64,
    /// Stop at the first feasible assignment instead of proving optimality.
    pub first_feasible: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_binaries: 1024,
            max_nodes: 5_000_000,
            first_feasible: false,
        }
    }
}

impl Limits {
    pub fn feasibility() -> Self {
        Limits {
            first_feasible: true,
            ..Limits::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub value: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Optimal(Incumbent),
    /// Some feasible assignment, when only feasibility was asked for.
    Feasible(Incumbent),
    Infeasible,
    LimitExceeded { incumbent: Option<Incumbent>, nodes: u64 },
}

impl Solution {
    pub fn value(&self) -> Option<f64> {
        match self {
            Solution::Optimal(inc) => Some(inc.value),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Solution::Infeasible)
    }

    pub fn is_feasible(&self) -> bool {
        match self {
            Solution::Optimal(_) | Solution::Feasible(_) => true,
            Solution::LimitExceeded { incumbent, .. } => incumbent.is_some(),
            Solution::Infeasible => false,
        }
    }
}

/// `sum terms <= rhs` over binaries and at most one continuous variable.
struct LeRow {
    terms: Vec<(usize, f64)>,
    rhs: f64,
    from_eq: bool,
}

struct EqRow {
    terms: Vec<(usize, f64)>,
    rhs: f64,
}

/// `coeff * arc + sum bins <= rhs` with `coeff > 0`.
struct Cap {
    coeff: f64,
    bins: Vec<(usize, f64)>,
    rhs: f64,
}

struct Arc {
    var: usize,
    tail: usize,
    head: usize,
    lo: f64,
    hi: f64,
    caps: Vec<usize>,
}

/// Flow row: net outflow `= rhs - sum bins`.
struct Node {
    rhs: f64,
    bins: Vec<(usize, f64)>,
}

struct Component {
    nodes: Vec<usize>,
    arcs: Vec<usize>,
    supply_bins: Vec<usize>,
}

type Dom = Vec<i8>;
const FREE: i8 = -1;

struct Solver {
    nvars: usize,
    is_bin: Vec<bool>,
    binaries: Vec<usize>,
    cost: Vec<f64>,
    le: Vec<LeRow>,
    var_le: Vec<Vec<usize>>,
    eq: Vec<EqRow>,
    lowerable: Vec<bool>,
    bounds: Vec<(f64, f64)>,
    caps: Vec<Cap>,
    arcs: Vec<Arc>,
    nodes: Vec<Node>,
    comps: Vec<Component>,
    best: f64,
    best_values: Option<Vec<f64>>,
    root_bound: f64,
    explored: u64,
    max_nodes: u64,
    aborted: bool,
    first_feasible: bool,
}

pub fn solve_tiny(m: &MilpModel, limits: &Limits) -> Result<Solution> {
    let count = m.binary_count();
    if count > limits.max_binaries {
        return Err(MilpError::TooManyBinaries {
            count,
            bound: limits.max_binaries,
        });
    }
    let mut s = Solver::new(m, limits.max_nodes)?;
    s.first_feasible = limits.first_feasible;
    let sign = match m.objective().sense {
        ObjSense::Minimize => 1.0,
        ObjSense::Maximize => -1.0,
    };
    let dom: Dom = vec![FREE; s.nvars];
    let all: Vec<usize> = (0..s.le.len()).collect();
    s.search(dom, all, true);
    let incumbent = s.best_values.take().map(|values| Incumbent {
        value: sign * s.best,
        values,
    });
    log::debug!("solve_tiny: {} nodes, aborted={}", s.explored, s.aborted);
    Ok(match (s.aborted, incumbent) {
        (true, incumbent) => Solution::LimitExceeded {
            incumbent,
            nodes: s.explored,
        },
        (false, Some(inc)) if limits.first_feasible => Solution::Feasible(inc),
        (false, Some(inc)) => Solution::Optimal(inc),
        (false, None) => Solution::Infeasible,
    })
}

/// Whether `value` beats `best` by more than the tolerance.
fn improves(value: f64, best: f64) -> bool {
    best.is_infinite() || value < best - TOL * best.abs().max(1.0)
}

fn unsupported(msg: impl Into<String>) -> MilpError {
    MilpError::Unsupported(msg.into())
}

impl Solver {
    fn new(m: &MilpModel, max_nodes: u64) -> Result<Self> {
        let vars = m.variables();
        let nvars = vars.len();
        let is_bin: Vec<bool> = vars.iter().map(|v| v.is_binary()).collect();
        let bounds: Vec<(f64, f64)> = vars.iter().map(|v| v.bounds()).collect();
        let sign = match m.objective().sense {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; nvars];
        for &(v, c) in &m.objective().terms {
            if !is_bin[v] {
                return Err(unsupported(format!(
                    "continuous `{}` in the objective",
                    vars[v].name
                )));
            }
            cost[v] = sign * c;
        }

        let mut le = Vec::new();
        let mut eq = Vec::new();
        let mut caps = Vec::new();
        let mut nodes = Vec::new();
        let mut tail: Vec<Option<usize>> = vec![None; nvars];
        let mut head: Vec<Option<usize>> = vec![None; nvars];
        let mut arc_caps: Vec<Vec<usize>> = vec![Vec::new(); nvars];
        let mut in_flow = vec![false; nvars];

        for c in m.constraints() {
            let cont: Vec<(usize, f64)> = c.terms.iter().copied().filter(|t| !is_bin[t.0]).collect();
            let bins: Vec<(usize, f64)> = c.terms.iter().copied().filter(|t| is_bin[t.0]).collect();
            let neg = |t: &[(usize, f64)]| t.iter().map(|&(v, a)| (v, -a)).collect::<Vec<_>>();
            if cont.is_empty() {
                match c.sense {
                    Sense::Le => le.push(LeRow { terms: bins, rhs: c.rhs, from_eq: false }),
                    Sense::Ge => le.push(LeRow { terms: neg(&bins), rhs: -c.rhs, from_eq: false }),
                    Sense::Eq => {
                        le.push(LeRow { terms: bins.clone(), rhs: c.rhs, from_eq: true });
                        le.push(LeRow { terms: neg(&bins), rhs: -c.rhs, from_eq: true });
                        eq.push(EqRow { terms: bins, rhs: c.rhs });
                    }
                }
                continue;
            }
            if c.sense == Sense::Eq {
                let id = nodes.len();
                for &(v, a) in &cont {
                    let slot = if a == 1.0 {
                        &mut tail[v]
                    } else if a == -1.0 {
                        &mut head[v]
                    } else {
                        return Err(unsupported(format!(
                            "coefficient {a} on continuous `{}` in `{}`",
                            vars[v].name, c.name
                        )));
                    };
                    if slot.replace(id).is_some() {
                        return Err(unsupported(format!(
                            "continuous `{}` is not a single arc",
                            vars[v].name
                        )));
                    }
                }
                for &(v, _) in &bins {
                    in_flow[v] = true;
                }
                nodes.push(Node { rhs: c.rhs, bins });
                continue;
            }
            let (terms, rhs) = match c.sense {
                Sense::Le => (c.terms.clone(), c.rhs),
                _ => (neg(&c.terms), -c.rhs),
            };
            let conts: Vec<(usize, f64)> = terms.iter().copied().filter(|t| !is_bin[t.0]).collect();
            match conts[..] {
                [(v, a)] if a > 0.0 => {
                    arc_caps[v].push(caps.len());
                    caps.push(Cap {
                        coeff: a,
                        bins: terms.iter().copied().filter(|t| is_bin[t.0]).collect(),
                        rhs,
                    });
                    le.push(LeRow { terms, rhs, from_eq: false });
                }
                _ => {
                    return Err(unsupported(format!(
                        "`{}` is not an upper bound on a single continuous variable",
                        c.name
                    )))
                }
            }
        }

        let mut arcs = Vec::new();
        let mut arc_of = vec![usize::MAX; nvars];
        for v in 0..nvars {
            if is_bin[v] {
                continue;
            }
            let (Some(t), Some(h)) = (tail[v], head[v]) else {
                return Err(unsupported(format!(
                    "continuous `{}` needs one `+1` and one `-1` equality row",
                    vars[v].name
                )));
            };
            let (lo, hi) = bounds[v];
            if !lo.is_finite() {
                return Err(unsupported(format!("unbounded below `{}`", vars[v].name)));
            }
            arc_of[v] = arcs.len();
            arcs.push(Arc {
                var: v,
                tail: t,
                head: h,
                lo,
                hi,
                caps: std::mem::take(&mut arc_caps[v]),
            });
        }

        // Components of the flow network.
        let mut uf = xlayer_core::graph::DisjointSets::new(nodes.len());
        for a in &arcs {
            uf.union(a.tail, a.head);
        }
        let mut comp_of = vec![usize::MAX; nodes.len()];
        let mut comps: Vec<Component> = Vec::new();
        for n in 0..nodes.len() {
            let r = uf.find(n);
            if comp_of[r] == usize::MAX {
                comp_of[r] = comps.len();
                comps.push(Component {
                    nodes: Vec::new(),
                    arcs: Vec::new(),
                    supply_bins: Vec::new(),
                });
            }
            let c = comp_of[r];
            comp_of[n] = c;
            comps[c].nodes.push(n);
            for &(v, _) in &nodes[n].bins {
                if !comps[c].supply_bins.contains(&v) {
                    comps[c].supply_bins.push(v);
                }
            }
        }
        for (i, a) in arcs.iter().enumerate() {
            comps[comp_of[a.tail]].arcs.push(i);
        }

        let mut var_le = vec![Vec::new(); nvars];
        for (r, row) in le.iter().enumerate() {
            for &(v, _) in &row.terms {
                var_le[v].push(r);
            }
        }
        let lowerable = (0..nvars)
            .map(|v| {
                is_bin[v]
                    && cost[v] >= 0.0
                    && !in_flow[v]
                    && var_le[v].iter().all(|&r| {
                        le[r].from_eq || le[r].terms.iter().all(|&(u, a)| u != v || a >= 0.0)
                    })
            })
            .collect();

        Ok(Solver {
            nvars,
            binaries: (0..nvars).filter(|&v| is_bin[v]).collect(),
            is_bin,
            cost,
            le,
            var_le,
            eq,
            lowerable,
            bounds,
            caps,
            arcs,
            nodes,
            comps,
            best: f64::INFINITY,
            best_values: None,
            root_bound: f64::NEG_INFINITY,
            explored: 0,
            max_nodes,
            aborted: false,
            first_feasible: false,
        })
    }

    /// Row propagation from the rows in `queue`. False on conflict.
    fn propagate(&self, dom: &mut Dom, mut queue: Vec<usize>) -> bool {
        let mut queued = vec![false; self.le.len()];
        for &r in &queue {
            queued[r] = true;
        }
        while let Some(r) = queue.pop() {
            queued[r] = false;
            let row = &self.le[r];
            let mut min_act = 0.0;
            for &(v, a) in &row.terms {
                let d = dom[v];
                min_act += if self.is_bin[v] {
                    match d {
                        FREE => a.min(0.0),
                        x => a * f64::from(x),
                    }
                } else {
                    let (lo, hi) = self.bounds[v];
                    (a * lo).min(a * hi)
                };
            }
            if min_act.is_nan() || min_act == f64::NEG_INFINITY {
                continue;
            }
            if min_act > row.rhs + TOL {
                return false;
            }
            for &(v, a) in &row.terms {
                if dom[v] != FREE || !self.is_bin[v] {
                    continue;
                }
                if min_act + a.abs() > row.rhs + TOL {
                    dom[v] = i8::from(a < 0.0);
                    for &r2 in &self.var_le[v] {
                        if !queued[r2] {
                            queued[r2] = true;
                            queue.push(r2);
                        }
                    }
                }
            }
        }
        true
    }

    fn value(dom: &Dom, v: usize, choice: Option<(usize, i8)>) -> Option<f64> {
        match choice {
            Some((c, x)) if c == v => Some(f64::from(x)),
            _ => (dom[v] != FREE).then(|| f64::from(dom[v])),
        }
    }

    /// Max-flow feasibility of component `c`. Free binaries in capacity rows
    /// take their most permissive value; supply binaries must be fixed or
    /// given by `choice`. Returns arc flows when feasible.
    fn flow_check(&self, dom: &Dom, c: usize, choice: Option<(usize, i8)>) -> Option<Vec<(usize, f64)>> {
        let comp = &self.comps[c];
        let local = |n: usize| comp.nodes.binary_search(&n).expect("node in component");
        let k = comp.nodes.len();
        let mut supply = vec![0.0; k];
        for (i, &n) in comp.nodes.iter().enumerate() {
            let node = &self.nodes[n];
            let mut s = node.rhs;
            for &(v, b) in &node.bins {
                s -= b * Self::value(dom, v, choice).expect("supply binary fixed");
            }
            supply[i] = s;
        }
        let mut net = FlowNetwork::new(k + 2);
        let (src, dst) = (k, k + 1);
        let mut handles = Vec::with_capacity(comp.arcs.len());
        let mut arc_caps = Vec::with_capacity(comp.arcs.len());
        for &ai in &comp.arcs {
            let a = &self.arcs[ai];
            let mut cap = a.hi;
            for &ci in &a.caps {
                let row = &self.caps[ci];
                let mut rest = row.rhs;
                for &(v, b) in &row.bins {
                    rest -= match Self::value(dom, v, choice) {
                        Some(x) => b * x,
                        None => b.min(0.0),
                    };
                }
                cap = cap.min(rest / row.coeff);
            }
            cap -= a.lo;
            if cap < -TOL {
                return None;
            }
            let (t, h) = (local(a.tail), local(a.head));
            supply[t] -= a.lo;
            supply[h] += a.lo;
            arc_caps.push((t, h, cap.max(0.0)));
        }
        let scale: f64 = 1.0 + supply.iter().map(|s| s.abs()).sum::<f64>();
        if supply.iter().sum::<f64>().abs() > TOL * scale {
            return None;
        }
        for &(t, h, cap) in &arc_caps {
            handles.push(net.add_arc(t, h, cap));
        }
        let mut need = 0.0;
        for (i, &s) in supply.iter().enumerate() {
            if s > TOL {
                net.add_arc(src, i, s);
                need += s;
            } else if s < -TOL {
                net.add_arc(i, dst, -s);
            }
        }
        if need == 0.0 {
            return Some(comp.arcs.iter().map(|&ai| (self.arcs[ai].var, self.arcs[ai].lo)).collect());
        }
        let got = net.max_flow(src, dst);
        if got < need - TOL * scale {
            return None;
        }
        Some(
            comp.arcs
                .iter()
                .zip(&handles)
                .map(|(&ai, &h)| (self.arcs[ai].var, self.arcs[ai].lo + net.flow(h)))
                .collect(),
        )
    }

    /// Flow checks on every component; fixes a single free supply binary
    /// when only one of its values is feasible. Returns the fixed variables,
    /// or `None` on conflict.
    fn probe(&self, dom: &mut Dom) -> Option<Vec<usize>> {
        let mut fixed = Vec::new();
        for (c, comp) in self.comps.iter().enumerate() {
            let free: Vec<usize> = comp.supply_bins.iter().copied().filter(|&v| dom[v] == FREE).collect();
            match free[..] {
                [] => {
                    self.flow_check(dom, c, None)?;
                }
                [v] => {
                    let zero = self.flow_check(dom, c, Some((v, 0))).is_some();
                    let one = self.flow_check(dom, c, Some((v, 1))).is_some();
                    match (zero, one) {
                        (false, false) => return None,
                        (true, false) => {
                            dom[v] = 0;
                            fixed.push(v);
                        }
                        (false, true) => {
                            dom[v] = 1;
                            fixed.push(v);
                        }
                        (true, true) => {}
                    }
                }
                _ => {}
            }
        }
        Some(fixed)
    }

    /// Fixes to zero every group of free binaries that only hurt when raised
    /// and whose equality rows are already balanced.
    fn zero_complete(&self, dom: &mut Dom) -> Vec<usize> {
        let mut uf = xlayer_core::graph::DisjointSets::new(self.nvars);
        let mut blocked = vec![false; self.nvars];
        for row in &self.eq {
            let mut residual = row.rhs;
            let mut first = None;
            for &(v, a) in &row.terms {
                if dom[v] == FREE {
                    match first {
                        None => first = Some(v),
                        Some(f) => {
                            uf.union(f, v);
                        }
                    }
                } else {
                    residual -= a * f64::from(dom[v]);
                }
            }
            if let Some(f) = first {
                if residual.abs() > TOL {
                    blocked[f] = true;
                }
            }
        }
        let mut bad = vec![false; self.nvars];
        for &v in &self.binaries {
            if dom[v] == FREE && (blocked[v] || !self.lowerable[v]) {
                bad[uf.find(v)] = true;
            }
        }
        let mut fixed = Vec::new();
        for &v in &self.binaries {
            if dom[v] == FREE && !bad[uf.find(v)] {
                dom[v] = 0;
                fixed.push(v);
            }
        }
        fixed
    }

    fn rows_of(&self, vars: &[usize]) -> Vec<usize> {
        let mut rows: Vec<usize> = vars.iter().flat_map(|&v| self.var_le[v].iter().copied()).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    fn lower_bound(&self, dom: &Dom) -> f64 {
        self.binaries
            .iter()
            .map(|&v| match dom[v] {
                FREE => self.cost[v].min(0.0),
                x => self.cost[v] * f64::from(x),
            })
            .sum()
    }

    /// Next variable and the value order to try.
    fn branch(&self, dom: &Dom) -> Option<(usize, [i8; 2])> {
        let mut pick: Option<(usize, usize, f64)> = None;
        for (r, row) in self.eq.iter().enumerate() {
            let mut residual = row.rhs;
            let mut free = 0;
            for &(v, a) in &row.terms {
                if dom[v] == FREE {
                    free += 1;
                } else {
                    residual -= a * f64::from(dom[v]);
                }
            }
            if free > 0 && residual.abs() > TOL && pick.is_none_or(|p| free < p.1) {
                pick = Some((r, free, residual));
            }
        }
        if let Some((r, _, residual)) = pick {
            let row = &self.eq[r];
            let v = row
                .terms
                .iter()
                .find(|&&(v, a)| dom[v] == FREE && (a > 0.0) == (residual > 0.0))
                .or_else(|| row.terms.iter().find(|&&(v, _)| dom[v] == FREE))
                .map(|t| t.0)?;
            return Some((v, [1, 0]));
        }
        self.binaries
            .iter()
            .find(|&&v| dom[v] == FREE)
            .map(|&v| (v, [0, 1]))
    }

    fn leaf(&mut self, dom: &Dom, bound: f64) {
        let mut values = vec![0.0; self.nvars];
        for &v in &self.binaries {
            values[v] = f64::from(dom[v]);
        }
        for c in 0..self.comps.len() {
            match self.flow_check(dom, c, None) {
                Some(flows) => {
                    for (v, x) in flows {
                        values[v] = x;
                    }
                }
                None => return,
            }
        }
        if improves(bound, self.best) {
            self.best = bound;
            self.best_values = Some(values);
        }
    }

    fn search(&mut self, mut dom: Dom, queue: Vec<usize>, root: bool) {
        if self.aborted || (self.first_feasible && self.best_values.is_some()) {
            return;
        }
        if self.best.is_finite() && !improves(self.root_bound, self.best) {
            return;
        }
        self.explored += 1;
        if self.explored > self.max_nodes {
            self.aborted = true;
            return;
        }
        let mut queue = queue;
        loop {
            if !self.propagate(&mut dom, queue) {
                return;
            }
            let Some(fixed) = self.probe(&mut dom) else {
                return;
            };
            let mut changed = fixed;
            changed.extend(self.zero_complete(&mut dom));
            if changed.is_empty() {
                break;
            }
            queue = self.rows_of(&changed);
        }
        let bound = self.lower_bound(&dom);
        if root {
            self.root_bound = bound;
        }
        if !improves(bound, self.best) {
            return;
        }
        let Some((v, order)) = self.branch(&dom) else {
            self.leaf(&dom, bound);
            return;
        };
        for x in order {
            let mut child = dom.clone();
            child[v] = x;
            self.search(child, self.var_le[v].clone(), false);
            if self.aborted {
                return;
            }
        }
    }
}
