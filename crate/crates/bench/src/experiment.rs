use std::time::Instant;

use glasses::glasses::{run, RunHistory};
use glasses::gp::Dataset;
use glasses::test_functions::TestFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::error::{BenchError, Result};

/// Fraction of the possible improvement achieved, clamped to [0, 1].
pub fn gap(y_first: f64, y_best: f64, y_opt: f64) -> Result<f64> {
    if y_first == y_opt {
        return Err(BenchError::Degenerate(y_opt));
    }
    Ok(((y_first - y_best) / (y_first - y_opt)).clamp(0.0, 1.0))
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub function: String,
    pub method: String,
    pub seed: u64,
    pub gap: f64,
    pub y_first: f64,
    pub y_best: f64,
    pub y_opt: f64,
    pub budget: usize,
    pub wall_time_s: f64,
}

/// A full run as written to the JSON file; (function, method, seed) matches
/// the run's CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function: String,
    pub method: String,
    pub seed: u64,
    /// FNV-1a of the initial design, equal across methods for one seed.
    pub init_hash: String,
    pub history: RunHistory,
}

/// Anything worth reporting that is not a gap: failed runs, degenerate
/// gaps and events flagged inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub function: String,
    pub method: String,
    pub seed: u64,
    pub iteration: Option<usize>,
    /// Whether the run produced no gap record.
    pub failed: bool,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<GapRecord>,
    pub runs: Vec<RunRecord>,
    pub diagnostics: Vec<DiagnosticRow>,
}

impl ExperimentOutput {
    pub fn has_failures(&self) -> bool {
        self.diagnostics.iter().any(|d| d.failed)
    }
}

/// `init_points` uniform points in the domain, seeded by `seed`.
pub fn initial_design(function: &TestFunction, init_points: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = function.domain();
    let xs: Vec<Vec<f64>> = (0..init_points)
        .map(|_| {
            let u: Vec<f64> = (0..dom.dim()).map(|_| rng.random()).collect();
            dom.from_unit(&u)
        })
        .collect();
    let ys = xs.iter().map(|x| function.evaluate(x)).collect::<glasses::Result<Vec<f64>>>()?;
    Ok(Dataset::new(xs, ys)?)
}

fn design_hash(design: &Dataset) -> String {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0100_0000_01b3;
    let words = design.points().flatten().chain(design.outputs()).map(|v| v.to_bits());
    let hash = words
        .flat_map(u64::to_le_bytes)
        .fold(OFFSET, |h, byte| (h ^ byte as u64).wrapping_mul(PRIME));
    format!("{hash:016x}")
}

struct Job {
    method: Method,
    seed: u64,
}

enum Outcome {
    Done {
        record: Option<GapRecord>,
        run: Box<RunRecord>,
        diagnostics: Vec<DiagnosticRow>,
    },
    Failed(DiagnosticRow),
}

fn run_one(cfg: &ExperimentConfig, function: &TestFunction, job: &Job) -> Outcome {
    let budget = cfg.resolved_budget(function.dim());
    let method = job.method.to_string();
    let row = |iteration: Option<usize>, failed: bool, message: String| DiagnosticRow {
        function: function.name().to_string(),
        method: method.clone(),
        seed: job.seed,
        iteration,
        failed,
        message,
    };
    let design = match initial_design(function, cfg.init_points, job.seed) {
        Ok(d) => d,
        Err(e) => return Outcome::Failed(row(None, true, e.to_string())),
    };
    let started = Instant::now();
    let history = match run(
        |x: &[f64]| function.evaluate(x),
        &design,
        budget,
        function.domain(),
        &cfg.glasses_config(job.method),
        job.seed,
    ) {
        Ok(h) => h,
        Err(glasses::Error::Objective { iteration, message, .. }) => {
            return Outcome::Failed(row(Some(iteration), true, message))
        }
        Err(e) => return Outcome::Failed(row(None, true, e.to_string())),
    };
    let wall_time_s = if cfg.record_timing {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let mut diagnostics: Vec<DiagnosticRow> = history
        .diagnostics
        .iter()
        .map(|d| row(Some(d.iteration), false, d.message.clone()))
        .collect();
    let y_first = history.first_best();
    let y_opt = function.optimum_value();
    let record = match gap(y_first, history.best_y, y_opt) {
        Ok(g) => Some(GapRecord {
            function: function.name().to_string(),
            method: method.clone(),
            seed: job.seed,
            gap: g,
            y_first,
            y_best: history.best_y,
            y_opt,
            budget,
            wall_time_s,
        }),
        Err(e) => {
            diagnostics.push(row(None, true, e.to_string()));
            None
        }
    };
    Outcome::Done {
        record,
        run: Box::new(RunRecord {
            function: function.name().to_string(),
            method,
            seed: job.seed,
            init_hash: design_hash(&design),
            history,
        }),
        diagnostics,
    }
}

/// Every configured method on every replicate. Replicate r draws its initial
/// design from seed + r, shared by all methods; outputs are sorted by
/// (function, method, seed) whatever order the runs finish in.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let function = cfg.test_function()?;
    let jobs: Vec<Job> = (0..cfg.replicates as u64)
        .flat_map(|r| {
            cfg.methods.iter().map(move |&method| Job {
                method,
                seed: cfg.seed.wrapping_add(r),
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| BenchError::config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let outcomes: Vec<(Method, Outcome)> =
        pool.install(|| jobs.par_iter().map(|job| (job.method, run_one(cfg, &function, job))).collect());

    let mut out = ExperimentOutput::default();
    let mut ranked: Vec<(Method, Outcome)> = outcomes;
    ranked.sort_by_key(|(m, outcome)| {
        let seed = match outcome {
            Outcome::Done { run, .. } => run.seed,
            Outcome::Failed(row) => row.seed,
        };
        (m.rank(), seed)
    });
    for (_, outcome) in ranked {
        match outcome {
            Outcome::Done {
                record,
                run,
                diagnostics,
            } => {
                out.records.extend(record);
                out.runs.push(*run);
                out.diagnostics.extend(diagnostics);
            }
            Outcome::Failed(row) => out.diagnostics.push(row),
        }
    }
    Ok(out)
}
