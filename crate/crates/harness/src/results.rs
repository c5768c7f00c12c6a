//! Result tables.
//!
//! `results.csv` columns, in order: `run_id, algorithm, model, cell, config,
//! replicate, seed, status, n_sims, final_epsilon, iterations, population, l2,
//! criterion`. Numeric columns are empty for runs that did not finish. Wall
//! times live in the sidecar `timings.csv` (`run_id, wall_time_s`) so that the
//! results table is byte-identical across reruns.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    BudgetExhausted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub algorithm: String,
    pub model: String,
    pub cell: usize,
    pub config: String,
    pub replicate: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub n_sims: Option<u64>,
    pub final_epsilon: Option<f64>,
    pub iterations: Option<usize>,
    pub population: Option<usize>,
    pub l2: Option<f64>,
    pub criterion: Option<f64>,
}

impl ResultRow {
    pub fn run_id(cell: usize, replicate: usize) -> String {
        format!("c{cell:04}-r{replicate:04}")
    }

    pub fn key(&self) -> (usize, usize) {
        (self.cell, self.replicate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub run_id: String,
    pub wall_time_s: f64,
}

/// Reads a results table. Rows that fail to parse (for example a line cut short
/// by a crash) are skipped with a warning.
pub fn read_rows(path: &Path) -> HarnessResult<Vec<ResultRow>> {
    read_table(path)
}

pub fn read_timings(path: &Path) -> HarnessResult<Vec<TimingRow>> {
    read_table(path)
}

fn read_table<T: for<'de> Deserialize<'de>>(path: &Path) -> HarnessResult<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| HarnessError::csv(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize().enumerate() {
        match record {
            Ok(row) => rows.push(row),
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(HarnessError::csv(path, e)),
            Err(e) => log::warn!("{}: skipping unreadable row {}: {e}", path.display(), i + 1),
        }
    }
    Ok(rows)
}

/// Writes `rows` to `path` through a temporary file and a rename.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> HarnessResult<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut writer = csv::Writer::from_path(&tmp).map_err(|e| HarnessError::csv(&tmp, e))?;
        for row in rows {
            writer.serialize(row).map_err(|e| HarnessError::csv(&tmp, e))?;
        }
        writer.flush().map_err(|e| HarnessError::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// Appends rows one at a time, flushing after each so that completed runs
/// survive an abort.
pub struct AppendWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl AppendWriter {
    /// Opens `path` for appending; writes the header when the file is new or
    /// empty. With `truncate`, any previous content is discarded first.
    pub fn open<T: Serialize + Default>(path: &Path, truncate: bool) -> HarnessResult<Self> {
        let empty = truncate || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        if !truncate && !empty {
            ensure_trailing_newline(path)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(!truncate)
            .write(true)
            .truncate(truncate)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if empty {
            let header = header_of(&T::default()).map_err(|e| HarnessError::csv(path, e))?;
            writer.write_record(&header).map_err(|e| HarnessError::csv(path, e))?;
            writer.flush().map_err(|e| HarnessError::io(path, e))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn append<T: Serialize>(&mut self, row: &T) -> HarnessResult<()> {
        self.writer
            .serialize(row)
            .map_err(|e| HarnessError::csv(&self.path, e))?;
        self.writer.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

fn ensure_trailing_newline(path: &Path) -> HarnessResult<()> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    if bytes.last().is_some_and(|&b| b != b'\n') {
        let mut f = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        f.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(())
}

fn header_of<T: Serialize>(row: &T) -> Result<Vec<String>, csv::Error> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.serialize(row)?;
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    Ok(text
        .lines()
        .next()
        .unwrap_or_default()
        .split(',')
        .map(str::to_string)
        .collect())
}

impl Default for ResultRow {
    fn default() -> Self {
        Self {
            run_id: String::new(),
            algorithm: String::new(),
            model: String::new(),
            cell: 0,
            config: String::new(),
            replicate: 0,
            seed: 0,
            status: RunStatus::Ok,
            n_sims: None,
            final_epsilon: None,
            iterations: None,
            population: None,
            l2: None,
            criterion: None,
        }
    }
}

impl Default for TimingRow {
    fn default() -> Self {
        Self {
            run_id: String::new(),
            wall_time_s: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cell: usize, rep: usize) -> ResultRow {
        ResultRow {
            run_id: ResultRow::run_id(cell, rep),
            algorithm: "apmc".into(),
            model: "toy".into(),
            cell,
            config: "alpha=0.5;n=100".into(),
            replicate: rep,
            seed: 99,
            status: RunStatus::Ok,
            n_sims: Some(1234),
            final_epsilon: Some(0.0123),
            iterations: Some(7),
            population: Some(50),
            l2: Some(0.1),
            criterion: Some(12.34),
        }
    }

    #[test]
    fn header_order_is_fixed() {
        let h = header_of(&ResultRow::default()).unwrap();
        assert_eq!(
            h.join(","),
            "run_id,algorithm,model,cell,config,replicate,seed,status,n_sims,final_epsilon,iterations,population,l2,criterion"
        );
    }

    #[test]
    fn append_then_read_back_survives_torn_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RESULTS_FILE);
        {
            let mut w = AppendWriter::open::<ResultRow>(&path, true).unwrap();
            w.append(&row(0, 0)).unwrap();
            w.append(&row(0, 1)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"c0001-r0000,apmc,to").unwrap();
        drop(f);
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows, vec![row(0, 0), row(0, 1)]);
        {
            let mut w = AppendWriter::open::<ResultRow>(&path, false).unwrap();
            w.append(&row(1, 0)).unwrap();
        }
        assert_eq!(read_rows(&path).unwrap().len(), 3);
    }

    #[test]
    fn failed_rows_have_empty_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut failed = row(2, 0);
        failed.status = RunStatus::BudgetExhausted;
        failed.n_sims = None;
        failed.l2 = None;
        failed.criterion = None;
        write_table(&path, &[failed.clone()]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("budget_exhausted,,0.0123"), "{text}");
        assert_eq!(read_rows(&path).unwrap(), vec![failed]);
    }
}
