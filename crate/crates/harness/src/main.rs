use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use apmc_core::models::BuiltinModel;
use apmc_harness::plan::{Algorithm, ExperimentPlan, GridValue};
use apmc_harness::posterior::export_exact_posterior;
use apmc_harness::results::{read_rows, RunStatus};
use apmc_harness::runner::{run_cell, run_plan, Reference};
use apmc_harness::summary::emit_summary;
use apmc_harness::{HarnessError, HarnessResult};
use clap::{Args, Parser, Subcommand};

/// Adaptive population Monte Carlo ABC and its competitors.
#[derive(Parser, Debug)]
#[command(name = "apmc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one algorithm with one configuration.
    Run {
        #[command(flatten)]
        single: SingleRun,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run every cell of a plan file.
    Sweep {
        plan: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Summarize result tables into summary.csv, scatter.svg and heatmap.svg.
    Summary {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Defaults to the directory of the first table.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the exact toy posterior on a histogram grid as CSV.
    Posterior {
        #[arg(long, default_value = "toy")]
        model: String,
        #[arg(long, default_value_t = 300)]
        bins: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the per-iteration records of one run as JSON lines.
    Trace {
        #[command(flatten)]
        single: SingleRun,
        #[arg(long, default_value_t = 0)]
        replicate: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct SingleRun {
    #[arg(long)]
    algorithm: String,
    #[arg(long, default_value = "toy")]
    model: String,
    /// Configuration value, e.g. `-p alpha=0.5` or `-p schedule=2,1,0.5`.
    #[arg(short = 'p', long = "param", value_parser = parse_param)]
    params: Vec<(String, GridValue)>,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent runs; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Maximum simulations per run.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Keep rows from a previous invocation and skip their runs.
    #[arg(long)]
    resume: bool,
}

fn parse_param(s: &str) -> Result<(String, GridValue), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let value = value.trim();
    let parsed = if value.contains(',') {
        GridValue::List(
            value
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{key}: {e}")))
                .collect::<Result<_, _>>()?,
        )
    } else if let Ok(x) = value.parse::<f64>() {
        GridValue::Number(x)
    } else {
        GridValue::Text(value.to_string())
    };
    Ok((key.trim().to_string(), parsed))
}

impl SingleRun {
    fn plan(&self) -> HarnessResult<ExperimentPlan> {
        let mut plan = ExperimentPlan::new(&self.model, Algorithm::by_name(&self.algorithm)?);
        for (k, v) in &self.params {
            plan.set(k, v.clone());
        }
        Ok(plan)
    }
}

impl Common {
    fn apply(&self, plan: &mut ExperimentPlan) {
        if let Some(s) = self.seed {
            plan.seed = s;
        }
        if let Some(w) = self.workers {
            plan.workers = w;
        }
        if let Some(b) = self.budget {
            plan.budget = b;
        }
        if let Some(d) = &self.out_dir {
            plan.out_dir = d.clone();
        }
    }
}

fn print_rows(rows: &[apmc_harness::ResultRow]) -> HarnessResult<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::csv("<stdout>", e))?;
    }
    w.flush().map_err(|e| HarnessError::io("<stdout>", e))
}

fn execute(cli: Cli) -> HarnessResult<ExitCode> {
    match cli.command {
        Command::Run {
            single,
            replicates,
            common,
        } => {
            let mut plan = single.plan()?;
            plan.replicates = replicates;
            common.apply(&mut plan);
            let report = run_plan(&plan, common.resume)?;
            print_rows(&report.rows)?;
            if report.budget_exhausted() > 0 {
                eprintln!("{} run(s) exhausted the simulation budget", report.budget_exhausted());
                return Ok(ExitCode::from(2));
            }
            if report.rows.iter().any(|r| r.status == RunStatus::Failed) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep { plan, common } => {
            let mut plan = ExperimentPlan::load(&plan)?;
            common.apply(&mut plan);
            let report = run_plan(&plan, common.resume)?;
            let failed = report.rows.iter().filter(|r| r.status != RunStatus::Ok).count();
            eprintln!(
                "{} runs ({} resumed, {} not finished) -> {}",
                report.rows.len(),
                report.resumed,
                failed,
                report.out_dir.display()
            );
        }
        Command::Summary { results, out_dir } => {
            let mut rows = Vec::new();
            for path in &results {
                rows.extend(read_rows(path)?);
            }
            let out_dir = out_dir.unwrap_or_else(|| {
                results[0]
                    .parent()
                    .map(|p| p.to_path_buf())
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let (summary, files) = emit_summary(&rows, &out_dir)?;
            eprintln!("{} groups -> {}", summary.len(), files.table.display());
            for f in [files.scatter, files.heatmap].into_iter().flatten() {
                eprintln!("chart -> {}", f.display());
            }
        }
        Command::Posterior { model, bins, output } => {
            let model = BuiltinModel::by_name(&model)?;
            let rows = export_exact_posterior(&model, bins)?;
            let sink: Box<dyn Write> = match &output {
                Some(p) => Box::new(std::fs::File::create(p).map_err(|e| HarnessError::io(p, e))?),
                None => Box::new(std::io::stdout()),
            };
            let name = output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
            let mut w = csv::Writer::from_writer(sink);
            for r in rows {
                w.serialize(r).map_err(|e| HarnessError::csv(&name, e))?;
            }
            w.flush().map_err(|e| HarnessError::io(&name, e))?;
        }
        Command::Trace {
            single,
            replicate,
            seed,
            budget,
        } => {
            let mut plan = single.plan()?;
            plan.seed = seed;
            plan.replicates = replicate + 1;
            if let Some(b) = budget {
                plan.budget = b;
            }
            plan.validate()?;
            let cells = plan.cells();
            if cells.len() != 1 {
                return Err(HarnessError::config("trace needs exactly one value per parameter"));
            }
            let model = BuiltinModel::by_name(&plan.model)?;
            let outcome = run_cell(&plan, &model, &Reference::None, 0, &cells[0], replicate)?;
            if let Some(e) = outcome.error {
                return Err(e.into());
            }
            let run = outcome.run.expect("finished run");
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for record in &run.trace.records {
                let line = serde_json::to_string(record)?;
                writeln!(out, "{line}").map_err(|e| HarnessError::io("<stdout>", e))?;
            }
            for w in &run.trace.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
