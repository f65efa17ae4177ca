//! Seeded instance generation and failure-probability sweeps.
//!
//! Logical networks are a random spanning tree over a random sample of
//! physical nodes, thickened with Erdős–Rényi edges so the expected average
//! degree hits a target. Everything is a pure function of the seed.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::model::{
    CrossLayerInstance, FailureModel, InstanceDoc, LogicalDoc, PhysicalDoc, PhysicalEdgeDoc,
    PhysicalNetwork,
};

/// Where the physical network of a generated instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PhysicalSource {
    /// A bundled topology id, see [`fixtures::TOPOLOGIES`].
    Bundled(String),
    /// A physical network JSON file.
    File(PathBuf),
    /// A seeded random connected graph.
    Random { nodes: usize, degree: f64 },
}

/// Failure probabilities to sweep. Bounds are percentages, both inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbabilitySpec {
    Unified {
        start_pct: f64,
        stop_pct: f64,
        step_pct: f64,
    },
    /// Per-link draws from a normal law whose mean walks the range.
    /// `variance` is in probability units squared.
    Normal {
        mean_start_pct: f64,
        mean_stop_pct: f64,
        mean_step_pct: f64,
        variance: f64,
        #[serde(default = "one")]
        draws: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    pub physical: PhysicalSource,
    /// Share of physical nodes that host a logical node.
    pub logical_fraction: f64,
    /// Expected average logical degree.
    pub target_degree: f64,
    #[serde(default = "one")]
    pub instances: usize,
    pub probabilities: ProbabilitySpec,
}

impl GenSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GenSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Generation(m.to_string()));
        if !(self.logical_fraction > 0.0 && self.logical_fraction <= 1.0) {
            return bad("logical_fraction must lie in (0, 1]");
        }
        if !(self.target_degree.is_finite() && self.target_degree >= 0.0) {
            return bad("target_degree must be a nonnegative number");
        }
        if self.instances == 0 {
            return bad("instances must be positive");
        }
        let (start, stop, step) = match &self.probabilities {
            ProbabilitySpec::Unified {
                start_pct,
                stop_pct,
                step_pct,
            } => (*start_pct, *stop_pct, *step_pct),
            ProbabilitySpec::Normal {
                mean_start_pct,
                mean_stop_pct,
                mean_step_pct,
                variance,
                draws,
            } => {
                if !(variance.is_finite() && *variance >= 0.0) {
                    return bad("variance must be nonnegative");
                }
                if *draws == 0 {
                    return bad("draws must be positive");
                }
                (*mean_start_pct, *mean_stop_pct, *mean_step_pct)
            }
        };
        if step.is_nan() || step <= 0.0 {
            return bad("step must be positive");
        }
        if !(0.0 <= stop && stop <= start && start < 100.0) {
            return bad("sweep bounds must satisfy 0 <= stop <= start < 100");
        }
        Ok(())
    }

    pub fn physical_network(&self) -> Result<PhysicalNetwork> {
        match &self.physical {
            PhysicalSource::Bundled(id) => fixtures::topology(id).ok_or_else(|| {
                Error::UnknownStrategy {
                    kind: "bundled topology",
                    name: id.clone(),
                }
            }),
            PhysicalSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Generation(format!("{}: {e}", path.display())))?;
                let doc: PhysicalDoc = serde_json::from_str(&text)?;
                PhysicalNetwork::from_doc(&doc)
            }
            PhysicalSource::Random { nodes, degree } => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0, 0));
                random_physical(&mut rng, *nodes, *degree, 0.0)
            }
        }
    }

    /// Generated instances, in index order.
    pub fn instances(&self) -> Result<Vec<CrossLayerInstance>> {
        self.validate()?;
        let physical = self.physical_network()?;
        (0..self.instances)
            .map(|i| {
                gen_logical(
                    &physical,
                    self.logical_fraction,
                    self.target_degree,
                    derive_seed(self.seed, 1, i as u64),
                )
            })
            .collect()
    }

    /// Failure models to apply to instance `i`.
    pub fn failure_models(&self, i: usize, edge_count: usize) -> Vec<FailureModel> {
        gen_probabilities(
            &self.probabilities,
            edge_count,
            derive_seed(self.seed, 2, i as u64),
        )
    }
}

/// Splitmix64 over `(seed, tag, index)`, so sub-streams do not overlap.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Number of values in an inclusive descending sweep.
fn sweep_len(start: f64, stop: f64, step: f64) -> usize {
    ((start - stop) / step + 1e-9).floor() as usize + 1
}

/// The `i`-th value of a descending percentage sweep, as a probability.
pub fn sweep_value(start_pct: f64, step_pct: f64, i: usize) -> f64 {
    (start_pct - i as f64 * step_pct) / 100.0
}

/// Failure models of a sweep. Normal draws outside `[0, 1)` are redrawn.
pub fn gen_probabilities(spec: &ProbabilitySpec, edge_count: usize, seed: u64) -> Vec<FailureModel> {
    match *spec {
        ProbabilitySpec::Unified {
            start_pct,
            stop_pct,
            step_pct,
        } => (0..sweep_len(start_pct, stop_pct, step_pct))
            .map(|i| FailureModel::Unified(sweep_value(start_pct, step_pct, i)))
            .collect(),
        ProbabilitySpec::Normal {
            mean_start_pct,
            mean_stop_pct,
            mean_step_pct,
            variance,
            draws,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            for i in 0..sweep_len(mean_start_pct, mean_stop_pct, mean_step_pct) {
                let mean = sweep_value(mean_start_pct, mean_step_pct, i);
                for _ in 0..draws {
                    let rhos = if variance == 0.0 {
                        vec![mean; edge_count]
                    } else {
                        let law = Normal::new(mean, variance.sqrt()).expect("finite parameters");
                        (0..edge_count)
                            .map(|_| loop {
                                let x: f64 = law.sample(&mut rng);
                                if (0.0..1.0).contains(&x) {
                                    break x;
                                }
                            })
                            .collect()
                    };
                    out.push(FailureModel::PerLink(rhos));
                }
            }
            out
        }
    }
}

/// Random tree on `n` nodes plus independent extra edges with the probability
/// that makes the expected average degree `degree`.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, degree: f64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::Generation(format!("{n} nodes cannot form a network")));
    }
    if !(degree.is_finite() && degree >= 0.0) || degree > (n - 1) as f64 {
        return Err(Error::Generation(format!(
            "average degree {degree} is infeasible on {n} nodes"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (order[i], order[j]);
        edges.insert((a.min(b), a.max(b)));
    }
    let pairs = n * (n - 1) / 2;
    let free = pairs - (n - 1);
    let wanted = degree * n as f64 / 2.0 - (n - 1) as f64;
    let p = if free == 0 {
        0.0
    } else {
        (wanted / free as f64).clamp(0.0, 1.0)
    };
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&(a, b)) && rng.random::<f64>() < p {
                edges.insert((a, b));
            }
        }
    }
    Ok(edges.into_iter().collect())
}

fn label(prefix: char, i: usize, n: usize) -> String {
    let width = (n.max(2) - 1).to_string().len().max(2);
    format!("{prefix}{i:0width$}")
}

/// A random connected physical network with link probabilities drawn
/// uniformly from `[0, max_rho)` and rounded to four decimals.
pub fn random_physical(
    rng: &mut ChaCha8Rng,
    nodes: usize,
    degree: f64,
    max_rho: f64,
) -> Result<PhysicalNetwork> {
    let edges = random_graph(rng, nodes, degree)?;
    let doc = PhysicalDoc {
        nodes: (0..nodes).map(|i| label('p', i, nodes)).collect(),
        edges: edges
            .into_iter()
            .map(|(a, b)| PhysicalEdgeDoc {
                u: label('p', a, nodes),
                v: label('p', b, nodes),
                rho: (rng.random::<f64>() * max_rho * 1e4).floor() / 1e4,
            })
            .collect(),
    };
    PhysicalNetwork::from_doc(&doc)
}

/// Places a random logical network on `physical`.
pub fn gen_logical_nodes(
    physical: &PhysicalNetwork,
    n: usize,
    target_degree: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CrossLayerInstance> {
    if n > physical.node_count() {
        return Err(Error::Generation(format!(
            "{n} logical nodes need more than {} physical nodes",
            physical.node_count()
        )));
    }
    let edges = random_graph(rng, n, target_degree)?;
    let mut hosts: Vec<usize> = (0..physical.node_count()).collect();
    hosts.shuffle(rng);
    hosts.truncate(n);
    let names: Vec<String> = (0..n).map(|i| label('v', i, n)).collect();
    let doc = InstanceDoc {
        physical: physical.to_doc(),
        logical: LogicalDoc {
            nodes: names.clone(),
            edges: edges
                .into_iter()
                .map(|(a, b)| [names[a].clone(), names[b].clone()])
                .collect(),
        },
        node_map: names
            .iter()
            .zip(&hosts)
            .map(|(s, &i)| (s.clone(), physical.name(i).to_string()))
            .collect::<BTreeMap<_, _>>(),
    };
    CrossLayerInstance::from_doc(&doc)
}

/// Samples `round(fraction * |V_P|)` hosts and builds a logical network on
/// them with expected average degree `target_degree`.
pub fn gen_logical(
    physical: &PhysicalNetwork,
    fraction: f64,
    target_degree: f64,
    seed: u64,
) -> Result<CrossLayerInstance> {
    let n = (fraction * physical.node_count() as f64).round() as usize;
    if n < 2 {
        return Err(Error::Generation(format!(
            "fraction {fraction} selects fewer than two of {} physical nodes",
            physical.node_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_logical_nodes(physical, n, target_degree, &mut rng)
}

/// A small random instance for tests and benchmarks. The logical average
/// degree is 2.5 where the node count allows it.
pub fn random_instance(
    seed: u64,
    physical_nodes: usize,
    physical_degree: f64,
    logical_nodes: usize,
    max_rho: f64,
) -> Result<CrossLayerInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let physical = random_physical(&mut rng, physical_nodes, physical_degree, max_rho)?;
    let degree = (logical_nodes.saturating_sub(1) as f64).min(2.5);
    gen_logical_nodes(&physical, logical_nodes, degree, &mut rng)
}
