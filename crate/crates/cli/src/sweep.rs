//! Batch analysis over generated instances and failure models.
//!
//! Rows come out in (instance, model) order whatever the thread count, and
//! carry no timing unless asked, so two runs write the same bytes.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use xlayer_core::engine::{is_survivable, max_survivable_prob};
use xlayer_core::gen::{sweep_value, GenSpec, ProbabilitySpec};
use xlayer_core::steiner::max_protecting_tree;
use xlayer_core::{CrossLayerInstance, FailureModel};

use crate::error::{CliError, Result};
use crate::PoolChoice;

/// First line of every sweep CSV. Bump the version when columns change.
pub const CSV_HEADER_COMMENT: &str = "# xlayer-surv sweep v1";

const COLUMNS: [&str; 11] = [
    "instance",
    "model",
    "kind",
    "param",
    "draw",
    "max_tree_prob",
    "base_set_prob",
    "ratio",
    "survivable",
    "k_min",
    "error",
];

/// One failure model of a sweep with its descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCase {
    /// `unified` or `normal`.
    pub kind: &'static str,
    /// The shared probability, or the nominal mean of the normal law.
    pub param: f64,
    /// Draw index among models sharing `param`.
    pub draw: usize,
    pub model: FailureModel,
}

#[derive(Debug, Clone)]
pub struct SweepJob {
    pub id: String,
    pub inst: CrossLayerInstance,
    pub models: Vec<ModelCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub instance: String,
    pub model: usize,
    pub kind: String,
    pub param: f64,
    pub draw: usize,
    pub max_tree_prob: Option<f64>,
    /// Probability of the extracted base set, which is the survivable
    /// probability of the best mapping.
    pub base_set_prob: Option<f64>,
    pub ratio: Option<f64>,
    pub survivable: Option<bool>,
    pub k_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    /// Empty unless the row failed.
    pub error: String,
}

/// Models of a probability spec with their descriptors.
pub fn model_cases(spec: &ProbabilitySpec, models: Vec<FailureModel>) -> Vec<ModelCase> {
    models
        .into_iter()
        .enumerate()
        .map(|(j, model)| match *spec {
            ProbabilitySpec::Unified { .. } => {
                let param = model.rho(0).unwrap_or(0.0);
                ModelCase {
                    kind: "unified",
                    param,
                    draw: 0,
                    model,
                }
            }
            ProbabilitySpec::Normal {
                mean_start_pct,
                mean_step_pct,
                draws,
                ..
            } => ModelCase {
                kind: "normal",
                param: sweep_value(mean_start_pct, mean_step_pct, j / draws),
                draw: j % draws,
                model,
            },
        })
        .collect()
}

/// Unified cases for explicit probabilities.
pub fn unified_cases(rhos: &[f64]) -> Result<Vec<ModelCase>> {
    rhos.iter()
        .map(|&r| {
            Ok(ModelCase {
                kind: "unified",
                param: r,
                draw: 0,
                model: FailureModel::unified(r)?,
            })
        })
        .collect()
}

pub fn jobs_from_spec(spec: &GenSpec) -> Result<Vec<SweepJob>> {
    spec.instances()?
        .into_iter()
        .enumerate()
        .map(|(i, inst)| {
            let models = spec.failure_models(i, inst.physical().edge_count());
            Ok(SweepJob {
                id: format!("inst-{i:03}"),
                models: model_cases(&spec.probabilities, models),
                inst,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub pool: PoolChoice,
    /// Worker threads; 0 and 1 both run on the calling thread.
    pub parallel: usize,
    pub timing: bool,
}

fn evaluate(inst: &CrossLayerInstance, case: &ModelCase, pool: &PoolChoice) -> Result<SweepRow> {
    let applied = inst.with_failure_model(&case.model)?;
    let policy = pool.resolve(&applied)?;
    let report = max_survivable_prob(&applied, policy.as_ref())?;
    let p = applied.physical();
    let base = report.base_set.survivable_prob(p);
    let tree = max_protecting_tree(&applied)?.prob(p);
    let survivable = if report.critical.is_empty() {
        true
    } else if report.k_min.is_some() {
        // The unified search minimizes the critical count itself.
        false
    } else {
        is_survivable(&applied, policy.as_ref())?.survivable
    };
    Ok(SweepRow {
        instance: String::new(),
        model: 0,
        kind: case.kind.to_string(),
        param: case.param,
        draw: case.draw,
        max_tree_prob: Some(tree),
        base_set_prob: Some(base),
        ratio: Some(tree / base),
        survivable: Some(survivable),
        k_min: report.k_min,
        wall_ms: None,
        error: String::new(),
    })
}

fn row(job: &SweepJob, j: usize, opts: &SweepOptions) -> SweepRow {
    let case = &job.models[j];
    let start = Instant::now();
    let mut r = evaluate(&job.inst, case, &opts.pool).unwrap_or_else(|e| {
        log::warn!("{} model {j}: {e}", job.id);
        SweepRow {
            instance: String::new(),
            model: 0,
            kind: case.kind.to_string(),
            param: case.param,
            draw: case.draw,
            max_tree_prob: None,
            base_set_prob: None,
            ratio: None,
            survivable: None,
            k_min: None,
            wall_ms: None,
            error: e.to_string(),
        }
    });
    r.instance = job.id.clone();
    r.model = j;
    r.wall_ms = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    r
}

/// Analyzes every (instance, model) pair. A failing pair yields a row with
/// its error and the run continues.
pub fn run(jobs: &[SweepJob], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let pairs: Vec<(usize, usize)> = jobs
        .iter()
        .enumerate()
        .flat_map(|(i, job)| (0..job.models.len()).map(move |j| (i, j)))
        .collect();
    let one = |&(i, j): &(usize, usize)| row(&jobs[i], j, opts);
    if opts.parallel <= 1 {
        return Ok(pairs.iter().map(one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel)
        .build()
        .map_err(|e| CliError::Usage(format!("--parallel {}: {e}", opts.parallel)))?;
    Ok(pool.install(|| pairs.par_iter().map(one).collect()))
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

/// CSV with the versioned comment line. `wall_ms` is appended as a last
/// column only when `timing` is set.
pub fn write_csv<W: Write>(rows: &[SweepRow], timing: bool, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER_COMMENT}").map_err(|e| CliError::io("csv output", e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if timing {
        header.push("wall_ms");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.instance.clone(),
            r.model.to_string(),
            r.kind.clone(),
            r.param.to_string(),
            r.draw.to_string(),
            opt(&r.max_tree_prob),
            opt(&r.base_set_prob),
            opt(&r.ratio),
            opt(&r.survivable),
            opt(&r.k_min),
            r.error.clone(),
        ];
        if timing {
            rec.push(opt(&r.wall_ms));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io("csv output", e))?;
    Ok(())
}

/// Ratio statistics over all rows sharing a model index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model: usize,
    pub kind: String,
    pub param: f64,
    pub rows: usize,
    pub mean_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub models: Vec<ModelSummary>,
    pub failed_rows: usize,
    /// Rows with `max_tree_prob > base_set_prob`.
    pub ratio_violations: usize,
    /// Rows flagged survivable whose base set probability is not 1.
    pub survivable_violations: usize,
    /// Mean ratio never drops as `param` decreases.
    pub ratio_non_decreasing: bool,
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let mut models: Vec<ModelSummary> = Vec::new();
    let mut failed_rows = 0;
    let mut ratio_violations = 0;
    let mut survivable_violations = 0;
    for r in rows {
        let Some(ratio) = r.ratio else {
            failed_rows += 1;
            continue;
        };
        if ratio > 1.0 + 1e-12 {
            ratio_violations += 1;
        }
        if r.survivable == Some(true) && r.base_set_prob != Some(1.0) {
            survivable_violations += 1;
        }
        if models.len() <= r.model {
            models.resize_with(r.model + 1, || ModelSummary {
                model: 0,
                kind: String::new(),
                param: f64::NAN,
                rows: 0,
                mean_ratio: 0.0,
                max_ratio: f64::NEG_INFINITY,
            });
        }
        let m = &mut models[r.model];
        m.model = r.model;
        m.kind.clone_from(&r.kind);
        m.param = r.param;
        m.rows += 1;
        m.mean_ratio += ratio;
        m.max_ratio = m.max_ratio.max(ratio);
    }
    models.retain(|m| m.rows > 0);
    for m in &mut models {
        m.mean_ratio /= m.rows as f64;
    }
    let mut by_param: Vec<&ModelSummary> = models.iter().collect();
    by_param.sort_by(|a, b| b.param.total_cmp(&a.param).then(a.model.cmp(&b.model)));
    let ratio_non_decreasing = by_param
        .windows(2)
        .all(|w| w[1].param == w[0].param || w[1].mean_ratio >= w[0].mean_ratio - 1e-12);
    SweepSummary {
        models,
        failed_rows,
        ratio_violations,
        survivable_violations,
        ratio_non_decreasing,
    }
}
