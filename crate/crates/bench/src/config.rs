use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use glasses::glasses::{GlassesConfig, HorizonMode, Strategy};
use glasses::test_functions::{lookup, TestFunction};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Exploration weight of GP-LCB.
pub const LCB_BETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mpi,
    GpLcb,
    /// Myopic expected loss.
    El,
    /// Expected loss with a fixed k-step horizon.
    ElK(usize),
    /// Expected loss over all remaining evaluations.
    Glasses,
}

impl Method {
    /// The methods compared in the standard table, in column order.
    pub fn standard() -> Vec<Method> {
        vec![
            Method::Mpi,
            Method::GpLcb,
            Method::El,
            Method::ElK(2),
            Method::ElK(3),
            Method::ElK(5),
            Method::ElK(10),
            Method::Glasses,
        ]
    }

    pub fn strategy(&self) -> Strategy {
        match *self {
            Method::Mpi => Strategy::Mpi,
            Method::GpLcb => Strategy::GpLcb { beta: LCB_BETA },
            Method::El => Strategy::Lookahead(HorizonMode::Fixed(1)),
            Method::ElK(k) => Strategy::Lookahead(HorizonMode::Fixed(k)),
            Method::Glasses => Strategy::Lookahead(HorizonMode::FullRemaining),
        }
    }

    /// Position in the standard column order; EL-k with other k sort by k.
    pub fn rank(&self) -> (usize, usize) {
        match *self {
            Method::Mpi => (0, 0),
            Method::GpLcb => (1, 0),
            Method::El => (2, 0),
            Method::ElK(k) => (3, k),
            Method::Glasses => (4, 0),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mpi => f.write_str("MPI"),
            Method::GpLcb => f.write_str("GP-LCB"),
            Method::El => f.write_str("EL"),
            Method::ElK(k) => write!(f, "EL-{k}"),
            Method::Glasses => f.write_str("GLASSES"),
        }
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        match upper.as_str() {
            "MPI" => Ok(Method::Mpi),
            "GP-LCB" => Ok(Method::GpLcb),
            "EL" => Ok(Method::El),
            "GLASSES" => Ok(Method::Glasses),
            _ => match upper.strip_prefix("EL-").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(Method::ElK(k)),
                _ => Err(BenchError::config(format!("unknown method {s:?}"))),
            },
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One method name or a list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Methods {
    One(Method),
    Many(Vec<Method>),
}

/// Keys accepted in a config file; the same names as the CLI flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub function: Option<String>,
    method: Option<Methods>,
    pub replicates: Option<usize>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub init_points: Option<usize>,
    pub acq_budget: Option<usize>,
    pub inner_budget: Option<usize>,
    pub workers: Option<usize>,
    pub timing: Option<bool>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Ok(toml::from_str(&text)?)
    }

    pub fn set_methods(&mut self, methods: Vec<Method>) {
        self.method = Some(Methods::Many(methods));
    }

    pub fn methods(&self) -> Option<Vec<Method>> {
        self.method.clone().map(|m| match m {
            Methods::One(m) => vec![m],
            Methods::Many(ms) => ms,
        })
    }
}

/// A batch of runs: every method on the same initial designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub function: String,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub init_points: usize,
    /// Evaluations after the initial design; `None` means 10·q.
    pub budget: Option<usize>,
    /// Replicate r uses seed + r.
    pub seed: u64,
    pub acquisition_budget: Option<usize>,
    pub inner_budget: Option<usize>,
    /// Concurrent runs.
    pub workers: usize,
    /// Record wall-clock times; off keeps outputs byte-reproducible.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(function: impl Into<String>, methods: Vec<Method>) -> Self {
        ExperimentConfig {
            function: function.into(),
            methods,
            replicates: 5,
            init_points: 5,
            budget: None,
            seed: 0,
            acquisition_budget: None,
            inner_budget: None,
            workers: 1,
            record_timing: false,
        }
    }

    /// Build from a config file, with every `Some` in `overrides` winning.
    pub fn from_file_and_overrides(file: FileConfig, overrides: FileConfig) -> Result<Self> {
        let function = overrides
            .function
            .clone()
            .or(file.function.clone())
            .ok_or_else(|| BenchError::config("no function given"))?;
        let methods = overrides
            .methods()
            .or(file.methods())
            .ok_or_else(|| BenchError::config("no method given"))?;
        let mut cfg = ExperimentConfig::new(function, methods);
        cfg.replicates = overrides.replicates.or(file.replicates).unwrap_or(cfg.replicates);
        cfg.init_points = overrides.init_points.or(file.init_points).unwrap_or(cfg.init_points);
        cfg.budget = overrides.budget.or(file.budget);
        cfg.seed = overrides.seed.or(file.seed).unwrap_or(cfg.seed);
        cfg.acquisition_budget = overrides.acq_budget.or(file.acq_budget);
        cfg.inner_budget = overrides.inner_budget.or(file.inner_budget);
        cfg.workers = overrides.workers.or(file.workers).unwrap_or(cfg.workers);
        cfg.record_timing = overrides.timing.or(file.timing).unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.test_function()?;
        if self.methods.is_empty() {
            return Err(BenchError::config("at least one method is required"));
        }
        if let Some(m) = self.methods.iter().enumerate().find_map(|(i, m)| self.methods[..i].contains(m).then_some(m)) {
            return Err(BenchError::config(format!("method {m} listed twice")));
        }
        if self.replicates == 0 {
            return Err(BenchError::config("replicates must be at least 1"));
        }
        if self.init_points == 0 {
            return Err(BenchError::config("init_points must be at least 1"));
        }
        if self.budget == Some(0) {
            return Err(BenchError::config("budget must be at least 1"));
        }
        if self.acquisition_budget == Some(0) || self.inner_budget == Some(0) {
            return Err(BenchError::config("optimiser budgets must be positive"));
        }
        if self.workers == 0 {
            return Err(BenchError::config("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn test_function(&self) -> Result<TestFunction> {
        lookup(&self.function).map_err(|e| BenchError::config(e.to_string()))
    }

    pub fn resolved_budget(&self, dim: usize) -> usize {
        self.budget.unwrap_or(10 * dim)
    }

    pub fn glasses_config(&self, method: Method) -> GlassesConfig {
        GlassesConfig {
            acquisition_optimizer_budget: self.acquisition_budget,
            inner_budget: self.inner_budget,
            record_timing: self.record_timing,
            ..GlassesConfig::with_strategy(method.strategy())
        }
    }
}
