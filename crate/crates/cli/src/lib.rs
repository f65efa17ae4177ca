//! Library side of the `xlayer-surv` command.
//!
//! Each subcommand is a function from parsed inputs to a serializable
//! document, so tests can drive them without spawning the binary:
//!
//! | command   | function            | output                                  |
//! |-----------|---------------------|-----------------------------------------|
//! | `check`   | [`check`]           | [`CheckDoc`], exit 0 or 10              |
//! | `analyze` | [`analyze`]         | [`AnalyzeDoc`]                          |
//! | `export`  | [`export`]          | LP or MPS text                          |
//! | `gen`     | [`generate`]        | instance documents                      |
//! | `sweep`   | [`sweep::run`]      | [`sweep::SweepRow`] list, CSV or JSON   |

pub mod error;
pub mod sweep;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use xlayer_core::engine::{
    is_survivable, max_survivable_prob_with, search_strategy, SurvivabilityReportDoc,
};
use xlayer_core::gen::GenSpec;
use xlayer_core::routing::{default_policy, policy, AllSimple, LinkMappingDoc};
use xlayer_core::steiner::{max_protecting_tree, steiner_2approx, SteinerInstance};
use xlayer_core::trees::{edge_names, TreeReport};
use xlayer_core::{CrossLayerInstance, FailureModel, InstanceDoc, PoolPolicy};
use xlayer_milp::{formulation, solve_tiny, write_model, Format, Limits, Solution};

pub use error::{CliError, Result, EXIT_FAILURE, EXIT_INPUT, EXIT_NOT_SURVIVABLE, EXIT_OK};

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn load_instance(path: &Path) -> Result<CrossLayerInstance> {
    Ok(CrossLayerInstance::from_json(&read_file(path)?)?)
}

/// Pool selection shared by the commands that search mappings.
#[derive(Debug, Clone, Default)]
pub struct PoolChoice {
    /// A registered policy name; the size-based default when absent.
    pub name: Option<String>,
    /// Every simple path, whatever the network size.
    pub exhaustive: bool,
}

impl PoolChoice {
    pub fn resolve(&self, inst: &CrossLayerInstance) -> Result<Box<dyn PoolPolicy>> {
        match (&self.name, self.exhaustive) {
            (Some(_), true) => Err(CliError::Usage(
                "--pool and --exhaustive are mutually exclusive".into(),
            )),
            (Some(name), false) => Ok(policy(name)?),
            (None, true) => Ok(Box::new(AllSimple)),
            (None, false) => Ok(default_policy(inst.physical())),
        }
    }
}

/// Stderr notice for results computed on truncated pools.
pub fn truncation_notice(pool: &dyn PoolPolicy) -> Option<String> {
    (!pool.is_complete()).then(|| {
        format!(
            "note: candidate paths limited to `{}`; results are lower bounds, rerun with --exhaustive for every simple path",
            pool.name()
        )
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckDoc {
    /// Feasibility of the SUR-TEST model, absent when the solver gave up.
    pub milp_feasible: Option<bool>,
    pub agrees: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckDoc {
    pub survivable: bool,
    pub exhaustive: bool,
    pub pool: String,
    pub witness: Option<LinkMappingDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<CrossCheckDoc>,
}

impl CheckDoc {
    pub fn exit_code(&self) -> i32 {
        if self.survivable {
            EXIT_OK
        } else {
            EXIT_NOT_SURVIVABLE
        }
    }
}

pub fn check(inst: &CrossLayerInstance, pool: &PoolChoice, cross_check: bool) -> Result<CheckDoc> {
    let policy = pool.resolve(inst)?;
    let s = is_survivable(inst, policy.as_ref())?;
    let cross_check = if cross_check {
        let model = formulation("surtest")?.build(inst, &FailureModel::from_network(inst.physical()))?;
        let doc = match solve_tiny(&model, &Limits::feasibility()) {
            Ok(sol) => match sol {
                Solution::Infeasible => known(false, s.survivable),
                Solution::LimitExceeded { incumbent: None, nodes } => CrossCheckDoc {
                    milp_feasible: None,
                    agrees: None,
                    note: Some(format!("node limit reached after {nodes} nodes")),
                },
                _ => known(true, s.survivable),
            },
            Err(e) => CrossCheckDoc {
                milp_feasible: None,
                agrees: None,
                note: Some(e.to_string()),
            },
        };
        if doc.agrees == Some(false) {
            log::error!("SUR-TEST feasibility disagrees with the combinatorial check");
        }
        Some(doc)
    } else {
        None
    };
    Ok(CheckDoc {
        survivable: s.survivable,
        exhaustive: s.exhaustive,
        pool: policy.name(),
        witness: s.witness.map(|m| m.to_doc(inst)),
        cross_check,
    })
}

fn known(feasible: bool, survivable: bool) -> CrossCheckDoc {
    CrossCheckDoc {
        milp_feasible: Some(feasible),
        agrees: Some(feasible == survivable),
        note: None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxTreeDoc {
    pub prob: f64,
    /// False when the terminal count forced the approximate Steiner tree.
    pub exact: bool,
    pub tree: TreeReport,
    pub steiner_edges: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteinerCheckDoc {
    pub steiner_cost: f64,
    /// `exp(-steiner_cost)` equals the routed tree's probability.
    pub tree_matches_steiner: bool,
    pub approx_cost: f64,
    /// The 2-approximation stays within twice the exact cost.
    pub approx_within_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeDoc {
    #[serde(flatten)]
    pub survivability: SurvivabilityReportDoc,
    pub max_tree: MaxTreeDoc,
    /// `max_tree.prob / phi`.
    pub ratio: f64,
    pub steiner_check: SteinerCheckDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub pool: PoolChoice,
    /// Mapping search strategy name; branch-and-bound when absent.
    pub search: Option<String>,
    pub timing: bool,
}

pub fn analyze(inst: &CrossLayerInstance, opts: &AnalyzeOptions) -> Result<AnalyzeDoc> {
    let start = Instant::now();
    let policy = opts.pool.resolve(inst)?;
    let search = search_strategy(opts.search.as_deref().unwrap_or("branch-and-bound"))?;
    let report = max_survivable_prob_with(inst, policy.as_ref(), search.as_ref())?;
    let p = inst.physical();
    let mpt = max_protecting_tree(inst)?;
    let tree_prob = mpt.prob(p);
    let steiner_cost = mpt.steiner.cost();
    let approx = steiner_2approx(&SteinerInstance::for_instance(inst))?;
    let steiner_check = SteinerCheckDoc {
        steiner_cost,
        tree_matches_steiner: ((-steiner_cost).exp() - tree_prob).abs() <= 1e-12,
        approx_cost: approx.cost(),
        approx_within_bound: mpt
            .exact
            .then(|| approx.cost() <= 2.0 * steiner_cost + 1e-12),
    };
    let max_tree = MaxTreeDoc {
        prob: tree_prob,
        exact: mpt.exact,
        tree: mpt.tree.to_report(inst),
        steiner_edges: edge_names(p, &mpt.steiner.edge_set(p.edge_count())),
    };
    Ok(AnalyzeDoc {
        ratio: tree_prob / report.phi,
        survivability: report.to_doc(inst),
        max_tree,
        steiner_check,
        wall_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// LP or MPS text of a registered formulation. `rho` replaces the
/// instance's probabilities with one shared value.
pub fn export(
    inst: &CrossLayerInstance,
    formulation_id: &str,
    format: Format,
    rho: Option<f64>,
) -> Result<String> {
    let f = formulation(formulation_id)
        .map_err(|_| CliError::Usage(format!("unknown formulation `{formulation_id}`")))?;
    let failure = match rho {
        Some(r) => FailureModel::unified(r)?,
        None => FailureModel::from_network(inst.physical()),
    };
    Ok(write_model(&f.build(inst, &failure)?, format))
}

/// Instance documents of a generation spec, in index order.
pub fn generate(spec: &GenSpec) -> Result<Vec<InstanceDoc>> {
    Ok(spec.instances()?.iter().map(|i| i.to_doc()).collect())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}
