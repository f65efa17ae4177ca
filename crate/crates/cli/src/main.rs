use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xlayer_cli::sweep::{self, SweepOptions};
use xlayer_cli::{
    analyze, check, export, generate, load_instance, read_file, to_json, truncation_notice,
    AnalyzeOptions, CliError, PoolChoice, Result, EXIT_OK,
};
use xlayer_core::gen::GenSpec;
use xlayer_milp::Format;

/// Survivable probability of logical networks over failing physical links.
#[derive(Debug, Parser)]
#[command(name = "xlayer-surv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide survivability; exit 0 if survivable, 10 if not.
    Check {
        instance: PathBuf,
        #[command(flatten)]
        pool: PoolArgs,
        /// Also solve the SUR-TEST model and compare.
        #[arg(long)]
        cross_check: bool,
    },
    /// Report the survivable probability, base set and max protecting tree.
    Analyze {
        instance: PathBuf,
        #[command(flatten)]
        pool: PoolArgs,
        /// Mapping search strategy: branch-and-bound or flat.
        #[arg(long)]
        search: Option<String>,
        /// Add wall-clock milliseconds to the report.
        #[arg(long)]
        timing: bool,
    },
    /// Write a mixed-integer model of the instance.
    Export {
        instance: PathBuf,
        /// max-tree, base-set or surtest.
        #[arg(long, default_value = "base-set")]
        formulation: String,
        #[arg(long, value_enum, default_value_t = ModelFormat::Lp)]
        format: ModelFormat,
        /// One failure probability for every link instead of the instance's.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate instances from a generation spec.
    Gen {
        spec: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write `inst-NNN.json` files here instead of a JSON array on stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Analyze every generated instance under every failure model.
    Sweep {
        spec: PathBuf,
        /// Output file, `-` for stdout.
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        pool: PoolArgs,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        /// Add a wall_ms column. Output is then no longer reproducible.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Debug, Args)]
struct PoolArgs {
    /// Candidate paths: all, k-shortest:K or hops:H.
    #[arg(long, conflicts_with = "exhaustive")]
    pool: Option<String>,
    /// Every simple path, even on large networks.
    #[arg(long)]
    exhaustive: bool,
}

impl PoolArgs {
    fn choice(&self) -> PoolChoice {
        PoolChoice {
            name: self.pool.clone(),
            exhaustive: self.exhaustive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelFormat {
    Lp,
    Mps,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::write(p, text).map_err(|e| CliError::io(p.display().to_string(), e))
        }
        _ => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("stdout", e)),
    }
}

fn load_spec(path: &Path, seed: Option<u64>) -> Result<GenSpec> {
    let mut spec = GenSpec::from_json(&read_file(path)?)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn notice(choice: &PoolChoice, inst: &xlayer_core::CrossLayerInstance) -> Result<()> {
    if let Some(n) = truncation_notice(choice.resolve(inst)?.as_ref()) {
        eprintln!("{n}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check {
            instance,
            pool,
            cross_check,
        } => {
            let inst = load_instance(&instance)?;
            notice(&pool.choice(), &inst)?;
            let doc = check(&inst, &pool.choice(), cross_check)?;
            write_out(None, &to_json(&doc))?;
            Ok(doc.exit_code())
        }
        Command::Analyze {
            instance,
            pool,
            search,
            timing,
        } => {
            let inst = load_instance(&instance)?;
            notice(&pool.choice(), &inst)?;
            let opts = AnalyzeOptions {
                pool: pool.choice(),
                search,
                timing,
            };
            write_out(None, &to_json(&analyze(&inst, &opts)?))?;
            Ok(EXIT_OK)
        }
        Command::Export {
            instance,
            formulation,
            format,
            rho,
            output,
        } => {
            let inst = load_instance(&instance)?;
            let format = match format {
                ModelFormat::Lp => Format::Lp,
                ModelFormat::Mps => Format::Mps,
            };
            write_out(output.as_deref(), &export(&inst, &formulation, format, rho)?)?;
            Ok(EXIT_OK)
        }
        Command::Gen {
            spec,
            seed,
            out_dir,
        } => {
            let docs = generate(&load_spec(&spec, seed)?)?;
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)
                        .map_err(|e| CliError::io(dir.display().to_string(), e))?;
                    for (i, d) in docs.iter().enumerate() {
                        write_out(Some(&dir.join(format!("inst-{i:03}.json"))), &to_json(d))?;
                    }
                }
                None => write_out(None, &to_json(&docs))?,
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            spec,
            output,
            seed,
            pool,
            parallel,
            format,
            timing,
        } => {
            let spec = load_spec(&spec, seed)?;
            let jobs = sweep::jobs_from_spec(&spec)?;
            if let Some(job) = jobs.first() {
                notice(&pool.choice(), &job.inst)?;
            }
            let opts = SweepOptions {
                pool: pool.choice(),
                parallel,
                timing,
            };
            let rows = sweep::run(&jobs, &opts)?;
            let text = match format {
                TableFormat::Csv => {
                    let mut buf = Vec::new();
                    sweep::write_csv(&rows, timing, &mut buf)?;
                    String::from_utf8(buf).expect("csv is UTF-8")
                }
                TableFormat::Json => to_json(&rows),
            };
            write_out(Some(&output), &text)?;
            let summary = sweep::summarize(&rows);
            eprintln!("# model,kind,param,rows,mean_ratio,max_ratio");
            for m in &summary.models {
                eprintln!(
                    "# {},{},{},{},{},{}",
                    m.model, m.kind, m.param, m.rows, m.mean_ratio, m.max_ratio
                );
            }
            eprintln!(
                "# rows={} failed={} ratio_violations={} survivable_violations={} ratio_non_decreasing={}",
                rows.len(),
                summary.failed_rows,
                summary.ratio_violations,
                summary.survivable_violations,
                summary.ratio_non_decreasing
            );
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("XLAYER_SURV_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
