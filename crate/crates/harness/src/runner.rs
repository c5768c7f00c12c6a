//! Executes plans: every (cell, replicate) pair is an independent run seeded
//! from the plan seed and its run index.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use apmc_core::algorithms::{run_apmc, run_pmc, run_rejection, run_rsmc, run_smc, RejectionConfig, Run};
use apmc_core::metrics::{
    cell_averages, efficiency_criterion, l2_between, weighted_histogram, HistogramGrid, L2_SUBPOINTS,
};
use apmc_core::models::BuiltinModel;
use apmc_core::rng::derive_seed;
use apmc_core::StreamSeed;
use rayon::prelude::*;

use crate::error::{HarnessError, HarnessResult};
use crate::plan::{CellConfig, ExperimentPlan, SamplerConfig};
use crate::results::{
    read_rows, read_timings, write_table, AppendWriter, ResultRow, RunStatus, TimingRow, RESULTS_FILE,
    TIMINGS_FILE,
};

/// Index mixed into the plan seed for the rejection reference sample.
const REFERENCE_INDEX: u64 = u64::MAX;

/// Everything one run produced.
#[derive(Debug)]
pub struct CellOutcome {
    pub row: ResultRow,
    pub run: Option<Run>,
    pub wall_time: f64,
    pub error: Option<apmc_core::Error>,
}

#[derive(Debug)]
pub struct PlanReport {
    /// All rows of the plan, sorted by run.
    pub rows: Vec<ResultRow>,
    /// Runs skipped because a previous invocation had completed them.
    pub resumed: usize,
    pub out_dir: PathBuf,
}

impl PlanReport {
    pub fn budget_exhausted(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status == RunStatus::BudgetExhausted)
            .count()
    }
}

/// What L2 is measured against.
pub enum Reference {
    None,
    Grid(HistogramGrid),
}

impl Reference {
    pub fn for_plan(plan: &ExperimentPlan, model: &BuiltinModel) -> HarnessResult<Self> {
        let grid = model.grid();
        if let Some(post) = model.exact_posterior() {
            return Ok(Reference::Grid(cell_averages(&grid, |x| post.density(x[0]), L2_SUBPOINTS)));
        }
        let Some(spec) = &plan.reference else {
            return Ok(Reference::None);
        };
        let mut cfg = RejectionConfig::new(spec.particles, spec.epsilon);
        cfg.seed = StreamSeed::new(derive_seed(plan.seed, REFERENCE_INDEX), 0);
        cfg.budget = plan.budget;
        let run = run_rejection(&model.prior(), model, &cfg)?;
        Ok(Reference::Grid(weighted_histogram(&run.sample, &grid)?))
    }

    fn l2(&self, model: &BuiltinModel, run: &Run) -> apmc_core::Result<Option<f64>> {
        match self {
            Reference::None => Ok(None),
            Reference::Grid(reference) => {
                let h = weighted_histogram(&run.sample, &model.grid())?;
                Ok(Some(l2_between(&h, reference)?))
            }
        }
    }
}

/// Seed of replicate `replicate` of grid cell `cell`. Independent of the
/// replicate count, so adding replicates to a plan leaves earlier runs intact.
pub fn run_seed(plan_seed: u64, cell: usize, replicate: usize) -> StreamSeed {
    StreamSeed::new(derive_seed(derive_seed(plan_seed, cell as u64), replicate as u64), 0)
}

/// Runs one replicate of one cell. Sampler errors become a flagged row.
pub fn run_cell(
    plan: &ExperimentPlan,
    model: &BuiltinModel,
    reference: &Reference,
    cell_index: usize,
    cell: &CellConfig,
    replicate: usize,
) -> HarnessResult<CellOutcome> {
    let seed = run_seed(plan.seed, cell_index, replicate);
    let config = cell.build(plan.algorithm, seed, plan.budget)?;
    let prior = model.prior();
    let started = Instant::now();
    let result = match &config {
        SamplerConfig::Rejection(c) => run_rejection(&prior, model, c),
        SamplerConfig::Pmc(c) => run_pmc(&prior, model, c),
        SamplerConfig::Rsmc(c) => run_rsmc(&prior, model, c),
        SamplerConfig::Smc(c) => run_smc(&prior, model, c),
        SamplerConfig::Apmc(c) => run_apmc(&prior, model, c),
    };
    let result = result.and_then(|run| reference.l2(model, &run).map(|l2| (run, l2)));
    let wall_time = started.elapsed().as_secs_f64();
    let mut row = ResultRow {
        run_id: ResultRow::run_id(cell_index, replicate),
        algorithm: plan.algorithm.name().to_string(),
        model: model.name().to_string(),
        cell: cell_index,
        config: cell.label(),
        replicate,
        seed: seed.seed,
        ..ResultRow::default()
    };
    match result {
        Ok((run, l2)) => {
            let sims = run.simulations();
            row.status = RunStatus::Ok;
            row.n_sims = Some(sims);
            row.final_epsilon = Some(run.sample.epsilon);
            row.iterations = Some(run.trace.records.len());
            row.population = Some(run.sample.len());
            row.l2 = l2;
            row.criterion = l2.map(|l| efficiency_criterion(sims, l));
            Ok(CellOutcome {
                row,
                run: Some(run),
                wall_time,
                error: None,
            })
        }
        Err(e) => {
            row.status = match e {
                apmc_core::Error::BudgetExhausted { .. } => RunStatus::BudgetExhausted,
                _ => RunStatus::Failed,
            };
            log::warn!("run {} ({}) did not finish: {e}", row.run_id, row.config);
            Ok(CellOutcome {
                row,
                run: None,
                wall_time,
                error: Some(e),
            })
        }
    }
}

/// Writes a run's iteration records as JSON lines.
pub fn write_trace(path: &Path, run: &Run) -> HarnessResult<()> {
    let mut out = String::new();
    for record in &run.trace.records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| HarnessError::io(path, e))
}

/// Runs every pending (cell, replicate) pair of `plan`, appending each row to
/// `results.csv` as it completes, then rewrites the table in run order.
///
/// With `resume`, runs already present in an existing table are skipped.
pub fn run_plan(plan: &ExperimentPlan, resume: bool) -> HarnessResult<PlanReport> {
    plan.validate()?;
    let model = BuiltinModel::by_name(&plan.model)?;
    let out_dir = plan.out_dir.clone();
    fs::create_dir_all(&out_dir).map_err(|e| HarnessError::io(&out_dir, e))?;
    let trace_dir = out_dir.join("traces");
    if plan.traces {
        fs::create_dir_all(&trace_dir).map_err(|e| HarnessError::io(&trace_dir, e))?;
    }
    let results_path = out_dir.join(RESULTS_FILE);
    let timings_path = out_dir.join(TIMINGS_FILE);

    let mut previous = Vec::new();
    let mut previous_timings = Vec::new();
    if resume && results_path.exists() {
        previous = read_rows(&results_path)?;
        if timings_path.exists() {
            previous_timings = read_timings(&timings_path)?;
        }
    }
    let cells = plan.cells();
    let valid_keys: BTreeSet<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..plan.replicates).map(move |r| (c, r)))
        .collect();
    previous.retain(|r| {
        valid_keys.contains(&r.key())
            && r.config == cells[r.cell].label()
            && r.seed == run_seed(plan.seed, r.cell, r.replicate).seed
            && r.algorithm == plan.algorithm.name()
            && r.model == plan.model
    });
    let done: BTreeSet<(usize, usize)> = previous.iter().map(ResultRow::key).collect();
    let pending: Vec<(usize, usize)> = valid_keys.difference(&done).copied().collect();
    if resume {
        log::info!("resuming: {} runs done, {} pending", done.len(), pending.len());
    }

    let reference = Reference::for_plan(plan, &model)?;
    let results = Mutex::new(AppendWriter::open::<ResultRow>(&results_path, !resume)?);
    let timings = Mutex::new(AppendWriter::open::<TimingRow>(&timings_path, !resume)?);

    let workers = if plan.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        plan.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start {workers} workers: {e}")))?;
    let fresh: Vec<(ResultRow, f64)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&(c, r)| -> HarnessResult<(ResultRow, f64)> {
                let outcome = run_cell(plan, &model, &reference, c, &cells[c], r)?;
                if plan.traces {
                    if let Some(run) = &outcome.run {
                        write_trace(&trace_dir.join(format!("{}.jsonl", outcome.row.run_id)), run)?;
                    }
                }
                results.lock().expect("writer lock").append(&outcome.row)?;
                timings.lock().expect("writer lock").append(&TimingRow {
                    run_id: outcome.row.run_id.clone(),
                    wall_time_s: outcome.wall_time,
                })?;
                Ok((outcome.row, outcome.wall_time))
            })
            .collect::<HarnessResult<Vec<_>>>()
    })?;
    drop(results);
    drop(timings);

    let mut timing_rows: Vec<TimingRow> = previous_timings
        .into_iter()
        .filter(|t| done.iter().any(|&(c, r)| ResultRow::run_id(c, r) == t.run_id))
        .collect();
    timing_rows.extend(fresh.iter().map(|(row, t)| TimingRow {
        run_id: row.run_id.clone(),
        wall_time_s: *t,
    }));
    timing_rows.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    timing_rows.dedup_by(|a, b| a.run_id == b.run_id);

    let mut rows = previous;
    rows.extend(fresh.into_iter().map(|(row, _)| row));
    rows.sort_by_key(ResultRow::key);
    write_table(&results_path, &rows)?;
    write_table(&timings_path, &timing_rows)?;
    Ok(PlanReport {
        rows,
        resumed: done.len(),
        out_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{Algorithm, GridValue};

    fn small_plan(dir: &Path) -> ExperimentPlan {
        let mut plan = ExperimentPlan::new("toy", Algorithm::Apmc);
        plan.set("n", GridValue::Number(200.0))
            .set("alpha", GridValue::Number(0.5))
            .set("p_acc_min", GridValue::Number(0.1));
        plan.replicates = 2;
        plan.seed = 11;
        plan.out_dir = dir.to_path_buf();
        plan
    }

    #[test]
    fn one_cell_two_replicates() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_plan(&small_plan(dir.path()), false).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_ne!(report.rows[0].seed, report.rows[1].seed);
        assert!(report.rows.iter().all(|r| r.status == RunStatus::Ok));
        assert!(dir.path().join("traces/c0000-r0001.jsonl").exists());
        let again = run_plan(&small_plan(dir.path()), false).unwrap();
        assert_eq!(report.rows, again.rows);
    }

    #[test]
    fn resume_skips_finished_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = small_plan(dir.path());
        plan.replicates = 1;
        let first = run_plan(&plan, false).unwrap();
        plan.replicates = 3;
        let second = run_plan(&plan, true).unwrap();
        assert_eq!(second.resumed, 1);
        assert_eq!(second.rows.len(), 3);
        assert_eq!(second.rows[0], first.rows[0]);
        let third = run_plan(&plan, true).unwrap();
        assert_eq!(third.resumed, 3);
        assert_eq!(third.rows, second.rows);
    }

    #[test]
    fn budget_exhaustion_is_flagged_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = small_plan(dir.path());
        plan.budget = 300;
        let report = run_plan(&plan, false).unwrap();
        assert_eq!(report.budget_exhausted(), 2);
        assert!(report.rows.iter().all(|r| r.n_sims.is_none()));
    }
}
