//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! The oracles here share no code with the crates under test: simple paths
//! come from a plain DFS, connectivity from a local union-find, spanning
//! trees from subset enumeration.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlayer_cli::sweep::{run, summarize, unified_cases, SweepJob, SweepOptions};
use xlayer_core::engine::{
    base_set_extract, critical_links, full_protecting_set, is_survivable, k_min,
    max_survivable_prob, search_strategy, TREE_LIMIT,
};
use xlayer_core::gen::random_instance;
use xlayer_core::routing::{candidate_pools, AllSimple, KShortest};
use xlayer_core::steiner::{steiner_exact, SteinerInstance};
use xlayer_core::trees::ProtectingTree;
use xlayer_core::{fixtures, CrossLayerInstance, FailureModel, LinkMapping, PhysicalPath};
use xlayer_milp::{
    build_base_set_model, build_max_tree_model, build_surtest_model, solve_tiny, Limits, Solution,
};

const TOL_EXACT: f64 = 1e-12;
const TOL_REL: f64 = 1e-9;
const TOL_MILP: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], ok: String) -> Outcome {
    match failures.first() {
        None => Outcome { pass: true, detail: ok },
        Some(first) => Outcome {
            pass: false,
            detail: format!("{} failure(s), first: {first}", failures.len()),
        },
    }
}

// ---- independent oracles ----

struct Uf(Vec<usize>);

impl Uf {
    fn new(n: usize) -> Self {
        Uf((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }

    fn join(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

fn connects(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    let mut uf = Uf::new(n);
    let mut parts = n;
    for (a, b) in edges {
        if uf.join(a, b) {
            parts -= 1;
        }
    }
    parts <= 1
}

/// Every simple path from `a` to `b`, as edge index lists.
fn simple_paths(inst: &CrossLayerInstance, a: usize, b: usize) -> Vec<Vec<usize>> {
    fn dfs(
        inst: &CrossLayerInstance,
        at: usize,
        goal: usize,
        seen: &mut Vec<bool>,
        nodes: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == goal {
            out.push(nodes.clone());
            return;
        }
        let p = inst.physical();
        for (e, edge) in p.edges().iter().enumerate() {
            let next = if edge.u == at {
                edge.v
            } else if edge.v == at {
                edge.u
            } else {
                continue;
            };
            if !seen[next] {
                seen[next] = true;
                nodes.push(e);
                dfs(inst, next, goal, seen, nodes, out);
                nodes.pop();
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; inst.physical().node_count()];
    seen[a] = true;
    let mut out = Vec::new();
    dfs(inst, a, b, &mut seen, &mut Vec::new(), &mut out);
    out
}

fn pools(inst: &CrossLayerInstance) -> Vec<Vec<Vec<usize>>> {
    (0..inst.logical().edge_count())
        .map(|k| {
            let (a, b) = inst.mapped_endpoints(k);
            simple_paths(inst, a, b)
        })
        .collect()
}

fn pool_product(pools: &[Vec<Vec<usize>>]) -> f64 {
    pools.iter().map(|p| p.len() as f64).product()
}

/// Logical spanning trees by subset enumeration.
fn spanning_trees(inst: &CrossLayerInstance) -> Vec<Vec<usize>> {
    let l = inst.logical();
    let (n, m) = (l.node_count(), l.edge_count());
    (0u64..1 << m)
        .filter(|mask| mask.count_ones() as usize == n - 1)
        .map(|mask| (0..m).filter(|k| mask >> k & 1 == 1).collect::<Vec<_>>())
        .filter(|tau| connects(n, tau.iter().map(|&k| l.edge(k))))
        .collect()
}

/// Physical links whose deletion disconnects the logical network.
fn critical_by_deletion(inst: &CrossLayerInstance, routes: &[&Vec<usize>]) -> BTreeSet<usize> {
    let l = inst.logical();
    (0..inst.physical().edge_count())
        .filter(|e| {
            let alive = (0..l.edge_count()).filter(|&k| !routes[k].contains(e));
            !connects(l.node_count(), alive.map(|k| l.edge(k)))
        })
        .collect()
}

fn keep(inst: &CrossLayerInstance, edges: impl IntoIterator<Item = usize>) -> f64 {
    let p = inst.physical();
    edges.into_iter().map(|e| 1.0 - p.rho(e)).product()
}

/// Fewest critical links over the full pool product.
fn brute_k_min(inst: &CrossLayerInstance, pools: &[Vec<Vec<usize>>]) -> usize {
    let mut best = usize::MAX;
    let mut choice = vec![0usize; pools.len()];
    loop {
        let routes: Vec<&Vec<usize>> = choice.iter().zip(pools).map(|(&c, p)| &p[c]).collect();
        best = best.min(critical_by_deletion(inst, &routes).len());
        let mut d = 0;
        loop {
            if d == pools.len() {
                return best;
            }
            choice[d] += 1;
            if choice[d] < pools[d].len() {
                break;
            }
            choice[d] = 0;
            d += 1;
        }
    }
}

/// Most reliable routed spanning tree: every logical spanning tree, every
/// routing of its branches, scored on the union of the routes. Branches
/// whose running union already costs the incumbent are cut.
fn exhaustive_max_tree(inst: &CrossLayerInstance) -> f64 {
    let weights: Vec<f64> = inst.physical().edges().iter().map(|e| -(1.0 - e.rho).ln()).collect();
    let pools = pools(inst);
    let mut best = f64::INFINITY;
    fn go(
        tau: &[usize],
        pools: &[Vec<Vec<usize>>],
        w: &[f64],
        used: &mut Vec<u32>,
        cost: f64,
        best: &mut f64,
    ) {
        if cost >= *best {
            return;
        }
        let Some((&k, rest)) = tau.split_first() else {
            *best = cost;
            return;
        };
        for path in &pools[k] {
            let mut c = cost;
            for &e in path {
                if used[e] == 0 {
                    c += w[e];
                }
                used[e] += 1;
            }
            go(rest, pools, w, used, c, best);
            for &e in path {
                used[e] -= 1;
            }
        }
    }
    for tau in spanning_trees(inst) {
        let mut used = vec![0u32; weights.len()];
        go(&tau, &pools, &weights, &mut used, 0.0, &mut best);
    }
    (-best).exp()
}

fn mapping_from(inst: &CrossLayerInstance, routes: &[&Vec<usize>]) -> LinkMapping {
    let p = inst.physical();
    let paths = routes
        .iter()
        .enumerate()
        .map(|(k, edges)| {
            let (mut at, _) = inst.mapped_endpoints(k);
            let mut nodes = vec![at];
            for &e in edges.iter() {
                at = p.edge(e).other(at);
                nodes.push(at);
            }
            PhysicalPath::from_nodes(p, nodes).unwrap()
        })
        .collect();
    LinkMapping::new(inst, paths).unwrap()
}

// ---- instance families ----

/// Small per-link instances whose full pool product stays enumerable.
fn family(count: usize, max_nodes: usize, product_cap: f64) -> Vec<(u64, CrossLayerInstance)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let nodes = 5 + (seed as usize % (max_nodes - 4));
        let logical = 3 + (seed as usize / 3) % 2;
        let inst = random_instance(1000 + seed, nodes, 3.0, logical, 0.25).unwrap();
        if pool_product(&pools(&inst)) <= product_cap {
            out.push((seed, inst));
        }
        seed += 1;
    }
    out
}

// ---- criteria ----

fn tree_by_names(inst: &CrossLayerInstance, m: &LinkMapping, links: &[(&str, &str)]) -> ProtectingTree {
    let l = inst.logical();
    let tau = links
        .iter()
        .map(|(a, b)| l.edge_between(l.index_of(a).unwrap(), l.index_of(b).unwrap()).unwrap())
        .collect();
    ProtectingTree::new(inst, tau, m).unwrap()
}

fn criterion_1() -> Outcome {
    let inst = fixtures::six_ring();
    let m = fixtures::six_ring_mapping(&inst);
    let p = inst.physical();
    let red = tree_by_names(&inst, &m, &[("1", "2"), ("1", "3"), ("3", "4")]);
    let green = tree_by_names(&inst, &m, &[("1", "2"), ("2", "4"), ("3", "4")]);
    let set = xlayer_core::ProtectingTreeSet::new(vec![red.clone(), green.clone()]).unwrap();
    let shared: Vec<(String, String)> = set
        .shared_edges()
        .iter()
        .map(|e| {
            let (a, b) = p.edge_names(e);
            (a.to_string(), b.to_string())
        })
        .collect();
    let want: Vec<(String, String)> = [("1", "5"), ("2", "5"), ("3", "6"), ("4", "6")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    let mut failures = Vec::new();
    for (name, got, oracle, want) in [
        ("Prob(red)", red.survivable_prob(p), keep(&inst, red.used_edges().iter()), 0.46656),
        ("Prob(green)", green.survivable_prob(p), keep(&inst, green.used_edges().iter()), 0.52488),
        ("Prob(set)", set.survivable_prob(p), keep(&inst, set.shared_edges().iter()), 0.5832),
    ] {
        if (got - want).abs() > TOL_EXACT || (oracle - want).abs() > TOL_EXACT {
            failures.push(format!("{name} = {got} (oracle {oracle}), expected {want}"));
        }
    }
    if shared != want {
        failures.push(format!("shared set {shared:?}"));
    }
    outcome(
        &failures,
        "0.46656 / 0.52488 / 0.5832 and shared {(1,5),(2,5),(3,6),(4,6)} within 1e-12".into(),
    )
}

fn criterion_2() -> Outcome {
    let mut failures = Vec::new();
    let instances = family(50, 8, 2e5);
    let flat = search_strategy("flat").unwrap();
    for (seed, inst) in &instances {
        let k = brute_k_min(inst, &pools(inst));
        let engine_pools = candidate_pools(inst, &AllSimple).unwrap();
        let unit = vec![1.0; inst.physical().edge_count()];
        let flat_k = flat
            .search(inst, &engine_pools, &unit, f64::INFINITY)
            .unwrap()
            .unwrap()
            .critical
            .len();
        if flat_k != k || k_min(inst, &AllSimple).unwrap() != k {
            failures.push(format!("seed {seed}: k_min {flat_k} vs oracle {k}"));
        }
        for rho in [0.01, 0.05, 0.10, 0.15] {
            let u = inst.with_failure_model(&FailureModel::unified(rho).unwrap()).unwrap();
            // The weighted search, which never sees that the weights are equal.
            let w = u.physical().log_weights();
            let cost = flat.search(&u, &engine_pools, &w, f64::INFINITY).unwrap().unwrap().cost;
            let expected = (1.0 - rho).powi(k as i32);
            for (what, phi) in [
                ("phi", max_survivable_prob(&u, &AllSimple).unwrap().phi),
                ("weighted phi", (-cost).exp()),
            ] {
                if ((phi - expected) / expected).abs() > TOL_REL {
                    failures.push(format!("seed {seed} rho {rho}: {what} {phi} vs {expected}"));
                }
            }
        }
    }
    outcome(
        &failures,
        format!("{} instances x 4 rho, relative error <= 1e-9", instances.len()),
    )
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let instances = family(50, 8, 2e5);
    for (seed, inst) in &instances {
        let cost = steiner_exact(&SteinerInstance::for_instance(inst)).unwrap().cost();
        let oracle = exhaustive_max_tree(inst);
        if ((-cost).exp() - oracle).abs() > TOL_REL {
            failures.push(format!("seed {seed}: exp(-{cost}) vs {oracle}"));
        }
    }
    outcome(
        &failures,
        format!("{} instances, |exp(-cost) - exhaustive| <= 1e-9", instances.len()),
    )
}

fn random_pairs(count: usize) -> Vec<(CrossLayerInstance, Vec<Vec<usize>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..count as u64)
        .map(|seed| {
            let nodes = 5 + (seed % 4) as usize;
            let logical = 3 + (seed % 3) as usize;
            let inst = random_instance(5000 + seed, nodes, 3.0, logical.min(nodes), 0.25).unwrap();
            let routes = pools(&inst)
                .into_iter()
                .map(|pool| pool[rng.random_range(0..pool.len())].clone())
                .collect();
            (inst, routes)
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    let pairs = random_pairs(200);
    for (i, (inst, routes)) in pairs.iter().enumerate() {
        let refs: Vec<&Vec<usize>> = routes.iter().collect();
        let critical = critical_by_deletion(inst, &refs);
        let mut shared: Option<BTreeSet<usize>> = None;
        for tau in spanning_trees(inst) {
            let used: BTreeSet<usize> = tau.iter().flat_map(|&k| routes[k].iter().copied()).collect();
            shared = Some(match shared {
                None => used,
                Some(s) => s.intersection(&used).copied().collect(),
            });
        }
        let shared = shared.unwrap();
        let m = mapping_from(inst, &refs);
        let engine_critical: BTreeSet<usize> = critical_links(inst, &m).edges.iter().collect();
        let engine_shared: BTreeSet<usize> = full_protecting_set(inst, &m, TREE_LIMIT)
            .unwrap()
            .shared_edges()
            .iter()
            .collect();
        if shared != critical || engine_critical != critical || engine_shared != critical {
            failures.push(format!("pair {i}: critical {critical:?} shared {shared:?}"));
        }
    }
    outcome(&failures, format!("{} pairs, 0 counterexamples", pairs.len()))
}

fn milp_value(model: &xlayer_milp::MilpModel, limits: &Limits) -> Result<Option<f64>, String> {
    match solve_tiny(model, limits).map_err(|e| e.to_string())? {
        Solution::Optimal(inc) | Solution::Feasible(inc) => {
            if model.violations(&inc.values, 1e-7).is_empty() {
                Ok(Some(inc.value))
            } else {
                Err("solution violates its model".into())
            }
        }
        Solution::Infeasible => Ok(None),
        other => Err(format!("{other:?}")),
    }
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut outcomes = [0usize; 2];
    let instances: Vec<_> = (0..20u64)
        .map(|s| (s, random_instance(7000 + s, 5 + (s % 2) as usize, 3.0, 3 + (s % 2) as usize, 0.25).unwrap()))
        .collect();
    for (seed, inst) in &instances {
        let per = FailureModel::from_network(inst.physical());
        let phi = max_survivable_prob(inst, &AllSimple).unwrap().phi;
        match milp_value(&build_base_set_model(inst, &per).unwrap(), &Limits::default()) {
            Ok(Some(v)) if ((-v).exp() - phi).abs() <= TOL_MILP => {}
            other => failures.push(format!("seed {seed}: base-set {other:?} vs phi {phi}")),
        }
        let steiner = steiner_exact(&SteinerInstance::for_instance(inst)).unwrap().cost();
        match milp_value(&build_max_tree_model(inst, &per).unwrap(), &Limits::default()) {
            Ok(Some(v)) if (v - steiner).abs() <= TOL_MILP => {}
            other => failures.push(format!("seed {seed}: max-tree {other:?} vs {steiner}")),
        }
        for candidate in [inst.clone(), inst.augmented()] {
            let survivable = is_survivable(&candidate, &AllSimple).unwrap().survivable;
            match milp_value(&build_surtest_model(&candidate).unwrap(), &Limits::feasibility()) {
                Ok(v) if v.is_some() == survivable => outcomes[usize::from(survivable)] += 1,
                other => failures.push(format!("seed {seed}: SUR-TEST {other:?} vs {survivable}")),
            }
        }
    }
    outcome(
        &failures,
        format!(
            "20 instances, optima within 1e-6; SUR-TEST agrees on 40 models ({} survivable, {} not)",
            outcomes[1], outcomes[0]
        ),
    )
}

fn criterion_6() -> Outcome {
    let rhos: Vec<f64> = (0..30).map(|i| (150 - 5 * i) as f64 / 1000.0).collect();
    let jobs: Vec<SweepJob> = (0..10u64)
        .map(|s| SweepJob {
            id: format!("r{s}"),
            inst: random_instance(9000 + s, 8, 3.0, 4, 0.0).unwrap(),
            models: unified_cases(&rhos).unwrap(),
        })
        .collect();
    let rows = run(&jobs, &SweepOptions::default()).unwrap();
    let summary = summarize(&rows);
    let mut failures = Vec::new();
    for r in &rows {
        match (r.max_tree_prob, r.base_set_prob) {
            (Some(t), Some(phi)) if t <= phi + TOL_EXACT => {}
            _ => failures.push(format!("{} rho {}: tree {:?} phi {:?} {}", r.instance, r.param, r.max_tree_prob, r.base_set_prob, r.error)),
        }
    }
    if !summary.ratio_non_decreasing {
        failures.push("mean ratio decreases as rho decreases".into());
    }
    let first = summary.models.first().map_or(f64::NAN, |m| m.mean_ratio);
    let last = summary.models.last().map_or(f64::NAN, |m| m.mean_ratio);
    outcome(
        &failures,
        format!(
            "{} rows, tree <= phi everywhere; mean ratio {first:.4} at 15% rising to {last:.4} at 0.5%",
            rows.len()
        ),
    )
}

/// Ten-node network carrying a complete logical graph on eight nodes, which
/// has more spanning trees than the enumeration limit.
fn dense_instance() -> CrossLayerInstance {
    let base = random_instance(77, 10, 3.5, 8, 0.25).unwrap();
    let mut doc = base.to_doc();
    let names = doc.logical.nodes.clone();
    doc.logical.edges = names
        .iter()
        .enumerate()
        .flat_map(|(i, a)| names[i + 1..].iter().map(move |b| [a.clone(), b.clone()]))
        .collect();
    CrossLayerInstance::from_doc(&doc).unwrap()
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut cases: Vec<(String, CrossLayerInstance, LinkMapping)> = Vec::new();
    for (seed, inst) in family(50, 8, 2e5) {
        let m = max_survivable_prob(&inst, &AllSimple).unwrap().best_mapping;
        cases.push((format!("best mapping, seed {seed}"), inst, m));
    }
    for (i, (inst, routes)) in random_pairs(200).into_iter().enumerate() {
        let refs: Vec<&Vec<usize>> = routes.iter().collect();
        let m = mapping_from(&inst, &refs);
        cases.push((format!("random mapping {i}"), inst, m));
    }
    let dense = dense_instance();
    let pools = candidate_pools(&dense, &KShortest(2)).unwrap();
    for variant in 0..2 {
        let routes = pools.iter().map(|p| p[variant.min(p.len() - 1)].clone()).collect();
        let m = LinkMapping::new(&dense, routes).unwrap();
        cases.push((format!("complete logical graph, variant {variant}"), dense.clone(), m));
    }
    let mut largest = 0;
    for (name, inst, m) in &cases {
        let p = inst.physical();
        let l = inst.logical();
        let set = base_set_extract(inst, m).unwrap();
        largest = largest.max(set.len());
        if set.len() > p.edge_count() {
            failures.push(format!("{name}: {} trees > {} links", set.len(), p.edge_count()));
        }
        let routes: Vec<Vec<usize>> = m.routes().iter().map(|r| r.edges().to_vec()).collect();
        let refs: Vec<&Vec<usize>> = routes.iter().collect();
        let critical = critical_by_deletion(inst, &refs);
        for t in set.trees() {
            let tau = t.branches();
            if tau.len() + 1 != l.node_count() || !connects(l.node_count(), tau.iter().map(|&k| l.edge(k))) {
                failures.push(format!("{name}: a member is not a spanning tree"));
            }
        }
        for e in 0..p.edge_count() {
            if critical.contains(&e) {
                continue;
            }
            let covered = set
                .trees()
                .iter()
                .any(|t| t.branches().iter().all(|&k| !routes[k].contains(&e)));
            if !covered {
                failures.push(format!("{name}: protected link {e} avoided by no tree"));
            }
        }
    }
    outcome(
        &failures,
        format!(
            "{} base sets, all within |E_P| (largest {largest}), every protected link covered",
            cases.len()
        ),
    )
}

type Criterion = (u8, &'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (1, "worked example tree probabilities", criterion_1, Some(Duration::from_secs(1))),
        (2, "unified failure identity", criterion_2, Some(Duration::from_secs(120))),
        (3, "Steiner cost equals max protecting tree", criterion_3, Some(Duration::from_secs(120))),
        (4, "critical links equal links shared by all trees", criterion_4, Some(Duration::from_secs(120))),
        (5, "MILP cross-validation", criterion_5, Some(Duration::from_secs(300))),
        (6, "max tree never beats phi, ratio trend", criterion_6, None),
        (7, "base set size and coverage", criterion_7, None),
    ];
    let mut failed = 0;
    for (id, name, f, budget) in criteria {
        let start = Instant::now();
        let mut o = f();
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > b {
                o.pass = false;
                o.detail = format!("over the {b:?} budget; {}", o.detail);
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id}: {name}: {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
