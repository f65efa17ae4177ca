//! Engine and Steiner results against brute-force oracles that share no code
//! with the library beyond instance access.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlayer_core::engine::{
    critical_links, is_survivable, k_min, lemma2_check, mapping_survivable_prob,
    max_survivable_prob,
};
use xlayer_core::gen::random_instance;
use xlayer_core::routing::{candidate_pools, AllSimple};
use xlayer_core::steiner::{
    edge_connectivity, max_protecting_tree, steiner_2approx, steiner_exact, SteinerInstance,
};
use xlayer_core::trees::enumerate_spanning_trees;
use xlayer_core::{CrossLayerInstance, FailureModel, LinkMapping, PhysicalPath};

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut q = VecDeque::from([0]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Per-link deletion: `e` is critical when the logical links avoiding it do
/// not connect the logical nodes.
fn oracle_critical(inst: &CrossLayerInstance, routes: &[&PhysicalPath]) -> BTreeSet<usize> {
    let l = inst.logical();
    (0..inst.physical().edge_count())
        .filter(|&e| {
            let alive: Vec<_> = (0..l.edge_count())
                .filter(|&k| !routes[k].edges().contains(&e))
                .map(|k| l.edge(k))
                .collect();
            !connected(l.node_count(), &alive)
        })
        .collect()
}

fn product(inst: &CrossLayerInstance, set: &BTreeSet<usize>) -> f64 {
    set.iter().map(|&e| 1.0 - inst.physical().rho(e)).product()
}

/// Best product over every combination of pool entries.
fn oracle_phi(inst: &CrossLayerInstance) -> (f64, usize) {
    let pools = candidate_pools(inst, &AllSimple).unwrap();
    let mut idx = vec![0usize; pools.len()];
    let mut best = (0.0f64, usize::MAX);
    loop {
        let routes: Vec<&PhysicalPath> = idx.iter().zip(&pools).map(|(&i, p)| &p[i]).collect();
        let crit = oracle_critical(inst, &routes);
        best.0 = best.0.max(product(inst, &crit));
        best.1 = best.1.min(crit.len());
        let mut d = 0;
        loop {
            if d == idx.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] < pools[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn pool_product(inst: &CrossLayerInstance) -> f64 {
    candidate_pools(inst, &AllSimple)
        .unwrap()
        .iter()
        .map(|p| p.len() as f64)
        .product()
}

fn random_mapping(inst: &CrossLayerInstance, rng: &mut ChaCha8Rng) -> LinkMapping {
    let pools = candidate_pools(inst, &AllSimple).unwrap();
    let routes = pools
        .iter()
        .map(|p| p[rng.random_range(0..p.len())].clone())
        .collect();
    LinkMapping::new(inst, routes).unwrap()
}

#[test]
fn critical_links_match_deletion_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..60 {
        let inst = random_instance(seed, 7, 3.0, 4, 0.2).unwrap();
        let m = random_mapping(&inst, &mut rng);
        let routes: Vec<&PhysicalPath> = m.routes().iter().collect();
        let expected = oracle_critical(&inst, &routes);
        let got: BTreeSet<usize> = critical_links(&inst, &m).edges.iter().collect();
        assert_eq!(got, expected, "seed {seed}");
        assert!((mapping_survivable_prob(&inst, &m) - product(&inst, &expected)).abs() < 1e-12);
    }
}

#[test]
fn branch_and_bound_matches_flat_enumeration() {
    let mut checked = 0;
    for seed in 0..80 {
        let inst = random_instance(seed, 6, 3.0, 4, 0.2).unwrap();
        if pool_product(&inst) > 1e6 {
            continue;
        }
        let (phi, fewest) = oracle_phi(&inst);
        let report = max_survivable_prob(&inst, &AllSimple).unwrap();
        assert!((report.phi - phi).abs() <= 1e-12 * phi.max(1.0), "seed {seed}: {} vs {phi}", report.phi);
        assert_eq!(k_min(&inst, &AllSimple).unwrap(), fewest, "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 40, "only {checked} instances small enough");
}

#[test]
fn identity_embedding_is_limited_by_bridges() {
    for seed in 0..30 {
        let base = random_instance(seed, 6, 2.2, 2, 0.0).unwrap();
        let p = base.physical().clone();
        let mut doc = base.to_doc();
        doc.logical.nodes = p.names().to_vec();
        doc.logical.edges = p
            .edges()
            .iter()
            .map(|e| [p.name(e.u).to_string(), p.name(e.v).to_string()])
            .collect();
        doc.node_map = p.names().iter().map(|n| (n.clone(), n.clone())).collect();
        for e in &mut doc.physical.edges {
            e.rho = 0.1;
        }
        let inst = CrossLayerInstance::from_doc(&doc).unwrap();
        let all: Vec<(usize, usize)> = p.edges().iter().map(|e| (e.u, e.v)).collect();
        let bridges = (0..all.len())
            .filter(|&i| {
                let rest: Vec<_> = all.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
                !connected(p.node_count(), &rest)
            })
            .count();
        let report = max_survivable_prob(&inst, &AllSimple).unwrap();
        assert!((report.phi - 0.9f64.powi(bridges as i32)).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn critical_links_are_shared_by_every_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..100 {
        let inst = random_instance(seed, 6, 3.0, 4, 0.2).unwrap();
        let m = random_mapping(&inst, &mut rng);
        assert!(lemma2_check(&inst, &m).unwrap(), "seed {seed}");
    }
}

#[test]
fn unified_identity_and_argmax_invariance() {
    for seed in 0..20 {
        let inst = random_instance(seed, 7, 3.0, 4, 0.2).unwrap();
        let k = k_min(&inst, &AllSimple).unwrap();
        let mut mappings = BTreeSet::new();
        for rho in [0.01, 0.05, 0.10, 0.15] {
            let u = inst.with_failure_model(&FailureModel::unified(rho).unwrap()).unwrap();
            let r = max_survivable_prob(&u, &AllSimple).unwrap();
            let expected = (1.0f64 - rho).powi(k as i32);
            assert!(((r.phi - expected) / expected).abs() < 1e-9);
            mappings.insert(r.best_mapping.clone());
        }
        assert_eq!(mappings.len(), 1, "seed {seed}");
    }
}

#[test]
fn lowering_a_probability_never_lowers_phi() {
    for seed in 0..20 {
        let inst = random_instance(seed, 6, 3.0, 4, 0.2).unwrap();
        let before = max_survivable_prob(&inst, &AllSimple).unwrap().phi;
        let mut rhos: Vec<f64> = inst.physical().edges().iter().map(|e| e.rho).collect();
        let e = seed as usize % rhos.len();
        rhos[e] /= 2.0;
        let lowered = inst.with_failure_model(&FailureModel::per_link(rhos).unwrap()).unwrap();
        let after = max_survivable_prob(&lowered, &AllSimple).unwrap().phi;
        assert!(after + 1e-12 >= before, "seed {seed}");
    }
}

#[test]
fn survivability_matches_phi_and_base_sets_cover() {
    for seed in 0..40 {
        let inst = random_instance(seed, 7, 3.5, 3, 0.2).unwrap();
        for inst in [inst.clone(), inst.augmented()] {
            let s = is_survivable(&inst, &AllSimple).unwrap();
            let r = max_survivable_prob(&inst, &AllSimple).unwrap();
            let fewest = k_min(&inst, &AllSimple).unwrap();
            assert_eq!(s.survivable, fewest == 0, "seed {seed}");
            if s.survivable {
                assert_eq!(r.phi, 1.0);
                assert!(critical_links(&inst, &s.witness.unwrap()).is_empty());
            }
            let base = &r.base_set;
            assert!(base.len() <= inst.physical().edge_count());
            assert_eq!(base.protected_edges(), r.critical.edges.complement());
            let best_single = base
                .trees()
                .iter()
                .map(|t| t.survivable_prob(inst.physical()))
                .fold(0.0, f64::max);
            assert!(base.survivable_prob(inst.physical()) + 1e-15 >= best_single);
        }
    }
}

/// Cheapest edge subset joining the terminals, over all subsets.
fn oracle_steiner(si: &SteinerInstance) -> f64 {
    let g = si.graph();
    let m = g.edge_count();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        let cost: f64 = (0..m).filter(|e| mask >> e & 1 == 1).map(|e| si.costs()[e]).sum();
        if cost >= best {
            continue;
        }
        let mut comp: Vec<usize> = (0..g.node_count()).collect();
        fn root(c: &mut Vec<usize>, x: usize) -> usize {
            if c[x] == x { x } else { let r = root(c, c[x]); c[x] = r; r }
        }
        for e in (0..m).filter(|e| mask >> e & 1 == 1) {
            let (a, b) = (root(&mut comp, g.edge(e).u), root(&mut comp, g.edge(e).v));
            comp[a] = b;
        }
        let t = si.terminals();
        let r0 = root(&mut comp, t[0]);
        if t.iter().all(|&x| root(&mut comp, x) == r0) {
            best = cost;
        }
    }
    best
}

#[test]
fn steiner_solvers_against_subset_oracle() {
    for seed in 0..40 {
        let inst = random_instance(seed, 7, 3.0, 2 + (seed as usize % 4), 0.3).unwrap();
        if inst.physical().edge_count() > 16 {
            continue;
        }
        let si = SteinerInstance::for_instance(&inst);
        let exact = steiner_exact(&si).unwrap();
        let approx = steiner_2approx(&si).unwrap();
        let oracle = oracle_steiner(&si);
        assert!((exact.cost() - oracle).abs() < 1e-9, "seed {seed}");
        assert!(exact.cost() <= approx.cost() + 1e-12);
        assert!(approx.cost() <= 2.0 * exact.cost() + 1e-12);
        assert!(exact.is_valid(&si) && approx.is_valid(&si));
    }
}

/// Most reliable routed spanning tree over every tree and every routing of
/// its branches.
fn oracle_max_tree(inst: &CrossLayerInstance) -> f64 {
    let pools = candidate_pools(inst, &AllSimple).unwrap();
    let mut best = 0.0f64;
    for tau in enumerate_spanning_trees(inst.logical(), 1_000_000).unwrap() {
        let mut idx = vec![0usize; tau.len()];
        'outer: loop {
            let used: BTreeSet<usize> = tau
                .iter()
                .zip(&idx)
                .flat_map(|(&k, &i)| pools[k][i].edges().iter().copied())
                .collect();
            best = best.max(product(inst, &used));
            let mut d = 0;
            loop {
                if d == idx.len() {
                    break 'outer;
                }
                idx[d] += 1;
                if idx[d] < pools[tau[d]].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
    best
}

#[test]
fn max_protecting_tree_matches_exhaustive_routing() {
    for seed in 0..25 {
        let inst = random_instance(seed, 7, 3.0, 4, 0.2).unwrap();
        let best = max_protecting_tree(&inst).unwrap();
        let expected = oracle_max_tree(&inst);
        let got = best.prob(inst.physical());
        assert!(((got - expected) / expected).abs() < 1e-9, "seed {seed}");
        assert!(((-best.steiner.cost()).exp() - got).abs() < 1e-12);
        let phi = max_survivable_prob(&inst, &AllSimple).unwrap().phi;
        assert!(got <= phi + 1e-12);
    }
}

#[test]
fn connectivity_through_first_node_is_the_pairwise_minimum() {
    for seed in 0..20 {
        let inst = random_instance(seed, 8, 3.5, 5, 0.1).unwrap();
        let p = inst.physical();
        let t = inst.node_map().terminals();
        let all_pairs = t
            .iter()
            .flat_map(|&a| t.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .map(|(a, b)| edge_connectivity(p, &[a, b]))
            .min()
            .unwrap();
        assert_eq!(edge_connectivity(p, &t), all_pairs);
    }
}
