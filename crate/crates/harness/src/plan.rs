//! Experiment plans: one model, one algorithm, a grid of configuration values
//! and a replicate count. See `docs/plan-format.md` for the file schema.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use apmc_core::algorithms::{
    ApmcConfig, InitialDesign, PmcConfig, RejectionConfig, RsmcConfig, SmcConfig, DEFAULT_BUDGET,
};
use apmc_core::kernels::KernelVariant;
use apmc_core::StreamSeed;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rejection,
    Pmc,
    Rsmc,
    Smc,
    Apmc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Rejection,
        Algorithm::Pmc,
        Algorithm::Rsmc,
        Algorithm::Smc,
        Algorithm::Apmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rejection => "rejection",
            Algorithm::Pmc => "pmc",
            Algorithm::Rsmc => "rsmc",
            Algorithm::Smc => "smc",
            Algorithm::Apmc => "apmc",
        }
    }

    pub fn by_name(name: &str) -> HarnessResult<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| HarnessError::config(format!("unknown algorithm `{name}`")))
    }

    /// Grid keys this algorithm understands, and which of them must be given.
    fn keys(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Algorithm::Rejection => (&["n", "epsilon"], &["n", "epsilon"]),
            Algorithm::Pmc => (&["n", "schedule", "kernel"], &["n", "schedule"]),
            Algorithm::Rsmc => (
                &["n", "alpha", "epsilon_initial", "epsilon_target", "c", "initial_trials", "kernel"],
                &["n", "epsilon_target"],
            ),
            Algorithm::Smc => (
                &["n", "m", "alpha", "epsilon_target", "n_t", "kernel"],
                &["n", "epsilon_target"],
            ),
            Algorithm::Apmc => (
                &["n", "alpha", "p_acc_min", "init", "kernel"],
                &["n", "alpha", "p_acc_min"],
            ),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value of a grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl fmt::Display for GridValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridValue::Number(x) => write!(f, "{x}"),
            GridValue::List(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            GridValue::Text(s) => f.write_str(s),
        }
    }
}

/// Rejection-ABC reference used to score models without a closed-form
/// posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub epsilon: f64,
    pub particles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub model: String,
    pub algorithm: Algorithm,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Concurrent cells; 0 means one per available core.
    #[serde(default)]
    pub workers: usize,
    /// Write one JSON-lines trace per run under `out_dir/traces`.
    #[serde(default = "yes")]
    pub traces: bool,
    pub grid: BTreeMap<String, Vec<GridValue>>,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

impl ExperimentPlan {
    pub fn new(model: &str, algorithm: Algorithm) -> Self {
        Self {
            model: model.to_string(),
            algorithm,
            replicates: 1,
            seed: 0,
            out_dir: default_out_dir(),
            budget: DEFAULT_BUDGET,
            workers: 0,
            traces: true,
            grid: BTreeMap::new(),
            reference: None,
        }
    }

    pub fn from_toml(text: &str, path: &Path) -> HarnessResult<Self> {
        toml::from_str(text).map_err(|source| HarnessError::Plan {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    /// Sets a single-valued axis.
    pub fn set(&mut self, key: &str, value: GridValue) -> &mut Self {
        self.grid.insert(key.to_string(), vec![value]);
        self
    }

    /// Cartesian product of the grid axes, keys in lexical order, last key
    /// varying fastest.
    pub fn cells(&self) -> Vec<CellConfig> {
        let mut cells = vec![CellConfig::default()];
        for (key, values) in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut next = cell.clone();
                        next.values.push((key.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        cells
    }

    pub fn runs(&self) -> usize {
        self.cells().len() * self.replicates
    }

    /// Checks everything that can be checked without simulating.
    pub fn validate(&self) -> HarnessResult<()> {
        apmc_core::models::BuiltinModel::by_name(&self.model).map_err(|e| HarnessError::config(e.to_string()))?;
        if self.replicates < 1 {
            return Err(HarnessError::config("replicates must be at least 1"));
        }
        let (allowed, required) = self.algorithm.keys();
        for (key, values) in &self.grid {
            if !allowed.contains(&key.as_str()) {
                return Err(HarnessError::config(format!(
                    "grid key `{key}` is not used by {} (expected one of {allowed:?})",
                    self.algorithm
                )));
            }
            if values.is_empty() {
                return Err(HarnessError::config(format!("grid axis `{key}` is empty")));
            }
        }
        for key in required {
            if !self.grid.contains_key(*key) {
                return Err(HarnessError::config(format!(
                    "{} needs grid key `{key}`",
                    self.algorithm
                )));
            }
        }
        if let Some(r) = &self.reference {
            if !(r.epsilon > 0.0) || r.particles < 2 {
                return Err(HarnessError::config("reference needs epsilon > 0 and particles >= 2"));
            }
        }
        let probe = StreamSeed::default();
        for cell in self.cells() {
            cell.build(self.algorithm, probe, self.budget)?.validate()?;
        }
        Ok(())
    }
}

/// Configuration of a fully built sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerConfig {
    Rejection(RejectionConfig),
    Pmc(PmcConfig),
    Rsmc(RsmcConfig),
    Smc(SmcConfig),
    Apmc(ApmcConfig),
}

impl SamplerConfig {
    pub fn validate(&self) -> HarnessResult<()> {
        match self {
            SamplerConfig::Rejection(c) => c.validate(),
            SamplerConfig::Pmc(c) => c.validate(),
            SamplerConfig::Rsmc(c) => c.validate(),
            SamplerConfig::Smc(c) => c.validate(),
            SamplerConfig::Apmc(c) => c.validate(),
        }
        .map_err(|e| HarnessError::config(e.to_string()))
    }
}

/// One point of the grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellConfig {
    pub values: Vec<(String, GridValue)>,
}

impl CellConfig {
    pub fn get(&self, key: &str) -> Option<&GridValue> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// `key=value` pairs joined by `;`, in key order.
    pub fn label(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Parses a [`label`](Self::label) back into numbers where possible.
    pub fn parse_label(label: &str) -> BTreeMap<String, String> {
        label
            .split(';')
            .filter_map(|kv| kv.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn number(&self, key: &str) -> HarnessResult<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(GridValue::Number(x)) => Ok(Some(*x)),
            Some(other) => Err(HarnessError::config(format!("`{key}` must be a number, got `{other}`"))),
        }
    }

    fn real(&self, key: &str, default: f64) -> HarnessResult<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn count(&self, key: &str, default: usize) -> HarnessResult<usize> {
        match self.number(key)? {
            None => Ok(default),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(x as usize),
            Some(x) => Err(HarnessError::config(format!("`{key}` must be a whole number, got {x}"))),
        }
    }

    fn text(&self, key: &str) -> HarnessResult<Option<&str>> {
        match self.get(key) {
            None => Ok(None),
            Some(GridValue::Text(s)) => Ok(Some(s)),
            Some(other) => Err(HarnessError::config(format!("`{key}` must be a string, got `{other}`"))),
        }
    }

    fn kernel(&self) -> HarnessResult<KernelVariant> {
        match self.text("kernel")? {
            None | Some("full") => Ok(KernelVariant::Full),
            Some("diagonal") => Ok(KernelVariant::Diagonal),
            Some(other) => Err(HarnessError::config(format!(
                "kernel must be `full` or `diagonal`, got `{other}`"
            ))),
        }
    }

    pub fn build(&self, algorithm: Algorithm, seed: StreamSeed, budget: u64) -> HarnessResult<SamplerConfig> {
        let n = self.count("n", 1000)?;
        Ok(match algorithm {
            Algorithm::Rejection => {
                let mut c = RejectionConfig::new(n, self.real("epsilon", f64::NAN)?);
                c.seed = seed;
                c.budget = budget;
                SamplerConfig::Rejection(c)
            }
            Algorithm::Pmc => {
                let schedule = match self.get("schedule") {
                    Some(GridValue::List(xs)) => xs.clone(),
                    Some(GridValue::Number(x)) => vec![*x],
                    _ => return Err(HarnessError::config("`schedule` must be a list of tolerances")),
                };
                let mut c = PmcConfig::new(n, schedule);
                c.kernel = self.kernel()?;
                c.seed = seed;
                c.budget = budget;
                SamplerConfig::Pmc(c)
            }
            Algorithm::Rsmc => {
                let mut c = RsmcConfig::new(n, self.real("alpha", 0.5)?, self.real("epsilon_target", f64::NAN)?);
                c.epsilon_initial = self.real("epsilon_initial", f64::INFINITY)?;
                c.c = self.real("c", c.c)?;
                c.initial_trials = self.count("initial_trials", c.initial_trials as usize)? as u64;
                c.kernel = self.kernel()?;
                c.seed = seed;
                c.budget = budget;
                SamplerConfig::Rsmc(c)
            }
            Algorithm::Smc => {
                let mut c = SmcConfig::new(
                    n,
                    self.count("m", 1)?,
                    self.real("alpha", 0.95)?,
                    self.real("epsilon_target", f64::NAN)?,
                );
                if self.get("n_t").is_some() {
                    c.resample_threshold = Some(self.count("n_t", 0)?);
                }
                c.kernel = self.kernel()?;
                c.seed = seed;
                c.budget = budget;
                SamplerConfig::Smc(c)
            }
            Algorithm::Apmc => {
                let mut c = ApmcConfig::new(n, self.real("alpha", f64::NAN)?, self.real("p_acc_min", f64::NAN)?);
                c.init = match self.text("init")? {
                    None | Some("auto") => InitialDesign::Auto,
                    Some("iid") => InitialDesign::Iid,
                    Some("lhs") => InitialDesign::LatinHypercube,
                    Some(other) => {
                        return Err(HarnessError::config(format!(
                            "init must be `auto`, `iid` or `lhs`, got `{other}`"
                        )))
                    }
                };
                c.kernel = self.kernel()?;
                c.seed = seed;
                c.budget = budget;
                SamplerConfig::Apmc(c)
            }
        })
    }
}
