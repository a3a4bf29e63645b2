//! The lookahead acquisition (expected minimum over a predicted batch of
//! future evaluations) and the sequential optimisation loop around it.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{expected_loss_1_unchecked, AcquisitionContext};
use crate::ep::{expected_min, EpOptions};
use crate::error::{Error, Result};
use crate::gp::{fit, Dataset, FitOptions, GpModel};
use crate::optim::{direct_minimize_with, BoxDomain, DirectOptions};
use crate::steps_ahead::{PlanOptions, StepsPredictor};

/// How many future evaluations the lookahead loss accounts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonMode {
    /// All evaluations left in the budget.
    FullRemaining,
    /// At most this many (≥ 1).
    Fixed(usize),
}

impl HorizonMode {
    /// Lookahead at iteration `j` of a run with `budget` evaluations.
    pub fn steps(&self, budget: usize, j: usize) -> usize {
        let remaining = budget - j;
        match *self {
            HorizonMode::FullRemaining => remaining,
            HorizonMode::Fixed(k) => k.min(remaining),
        }
    }
}

/// Criterion minimised to choose each evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Lookahead(HorizonMode),
    /// Maximum probability of improvement.
    Mpi,
    /// Lower confidence bound μ − β·σ.
    GpLcb { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlassesConfig {
    pub strategy: Strategy,
    /// DIRECT evaluations for choosing each point; `None` means 1000·q.
    pub acquisition_optimizer_budget: Option<usize>,
    /// DIRECT evaluations per predicted future location; `None` means 500·q.
    pub inner_budget: Option<usize>,
    pub memoize_plans: bool,
    pub fit: FitOptions,
    pub ep: EpOptions,
    /// Record wall-clock times; off keeps histories byte-reproducible.
    pub record_timing: bool,
    /// Evaluate each DIRECT round's candidates on the rayon pool.
    pub parallel: bool,
}

impl Default for GlassesConfig {
    fn default() -> Self {
        GlassesConfig {
            strategy: Strategy::Lookahead(HorizonMode::FullRemaining),
            acquisition_optimizer_budget: None,
            inner_budget: None,
            memoize_plans: true,
            fit: FitOptions::default(),
            ep: EpOptions::default(),
            record_timing: false,
            parallel: false,
        }
    }
}

impl GlassesConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        GlassesConfig {
            strategy,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.strategy {
            Strategy::Lookahead(HorizonMode::Fixed(0)) => {
                Err(Error::invalid("a fixed horizon needs at least one step"))
            }
            Strategy::GpLcb { beta } if !(beta >= 0.0) => Err(Error::invalid("beta must be nonnegative")),
            _ if self.acquisition_optimizer_budget == Some(0) || self.inner_budget == Some(0) => {
                Err(Error::invalid("optimiser budgets must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn outer_budget(&self, dim: usize) -> usize {
        self.acquisition_optimizer_budget.unwrap_or(1000 * dim)
    }
}

const PREDICTIVE_JITTER: f64 = 1e-10;

/// The lookahead loss against one fitted model; plans and one-step losses
/// are cached across calls.
#[derive(Debug)]
pub struct GlassesAcquisition<'m> {
    predictor: StepsPredictor<'m>,
    eta: f64,
    ep: EpOptions,
    nonconverged: AtomicUsize,
}

impl<'m> GlassesAcquisition<'m> {
    pub fn new(model: &'m GpModel, eta: f64, domain: &BoxDomain, plan: &PlanOptions, ep: &EpOptions) -> Result<Self> {
        if !eta.is_finite() {
            return Err(Error::invalid("incumbent must be finite"));
        }
        Ok(GlassesAcquisition {
            predictor: StepsPredictor::new(model, domain, plan)?,
            eta,
            ep: ep.clone(),
            nonconverged: AtomicUsize::new(0),
        })
    }

    pub fn predictor(&self) -> &StepsPredictor<'m> {
        &self.predictor
    }

    /// Calls whose expectation-propagation pass did not converge.
    pub fn nonconverged_count(&self) -> usize {
        self.nonconverged.load(Ordering::Relaxed)
    }

    /// Expected min(y(x*), y₂, …, yₙ, η) over the predicted plan from x*.
    pub fn value(&self, x_star: &[f64], n: usize) -> Result<f64> {
        let model = self.predictor.model();
        if n == 1 {
            self.predictor.domain().check_point(x_star, "x*")?;
            let (mean, var) = model.predict_point(x_star);
            return Ok(expected_loss_1_unchecked(mean, var, self.eta));
        }
        let plan = self.predictor.plan(x_star, n)?;
        let mut pred = model.predict(&plan.points)?;
        // Round-off in the posterior covariance scales with the prior variance.
        let floor = PREDICTIVE_JITTER * model.kernel().prior_variance();
        for i in 0..pred.covariance.nrows() {
            pred.covariance[(i, i)] += floor;
        }
        let result = expected_min(&pred.mean, &pred.covariance, self.eta, &self.ep)?;
        if !result.converged {
            self.nonconverged.fetch_add(1, Ordering::Relaxed);
        }
        Ok(result.value)
    }
}

/// Λₙ(x*) with default plan and EP options.
pub fn glasses_acquisition(model: &GpModel, x_star: &[f64], n: usize, eta: f64, domain: &BoxDomain) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("lookahead needs at least one step"));
    }
    let opts = PlanOptions {
        memoize: false,
        ..Default::default()
    };
    GlassesAcquisition::new(model, eta, domain, &opts, &EpOptions::default())?.value(x_star, n)
}

/// A chosen point, its criterion value and any events worth recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub point: Vec<f64>,
    pub value: f64,
    pub notes: Vec<String>,
}

fn minimise_over_domain<F>(objective: F, domain: &BoxDomain, budget: usize, parallel: bool) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let opts = DirectOptions {
        parallel,
        ..DirectOptions::new(budget)
    };
    let report = direct_minimize_with(objective, domain, &opts)?;
    if !report.best_value.is_finite() {
        return Err(Error::Optimizer(format!(
            "no finite criterion value in {} evaluations",
            report.evaluations_used
        )));
    }
    Ok((report.best_point, report.best_value))
}

/// Minimise the configured criterion over the domain with `n` lookahead steps.
pub fn select_next(model: &GpModel, n: usize, eta: f64, domain: &BoxDomain, cfg: &GlassesConfig) -> Result<Selection> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::invalid("lookahead needs at least one step"));
    }
    let budget = cfg.outer_budget(domain.dim());
    let mut notes = Vec::new();
    let (point, value) = match cfg.strategy {
        Strategy::Mpi => {
            let ctx = AcquisitionContext::new(model);
            minimise_over_domain(|x| -ctx.mpi(x), domain, budget, cfg.parallel)?
        }
        Strategy::GpLcb { beta } => {
            let ctx = AcquisitionContext::new(model);
            minimise_over_domain(|x| ctx.gp_lcb(x, beta).unwrap_or(f64::INFINITY), domain, budget, cfg.parallel)?
        }
        Strategy::Lookahead(_) => {
            let plan = PlanOptions {
                inner_budget: cfg.inner_budget,
                seed: 0,
                memoize: cfg.memoize_plans,
            };
            let acq = GlassesAcquisition::new(model, eta, domain, &plan, &cfg.ep)?;
            let failures = AtomicUsize::new(0);
            let first_failure = std::sync::Mutex::new(None::<String>);
            let objective = |x: &[f64]| match acq.value(x, n) {
                Ok(v) => v,
                Err(e) => {
                    if failures.fetch_add(1, Ordering::Relaxed) == 0 {
                        *first_failure.lock().expect("not poisoned") = Some(e.to_string());
                    }
                    f64::INFINITY
                }
            };
            let best = minimise_over_domain(objective, domain, budget, cfg.parallel)?;
            let failed = failures.load(Ordering::Relaxed);
            if failed > 0 {
                let first = first_failure.into_inner().expect("not poisoned").unwrap_or_default();
                notes.push(format!("{failed} candidate evaluations failed (first: {first})"));
            }
            let nonconverged = acq.nonconverged_count();
            if nonconverged > 0 {
                notes.push(format!("{nonconverged} candidate evaluations used non-converged EP"));
            }
            best
        }
    };
    Ok(Selection { point, value, notes })
}

/// One evaluation of the objective within a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub y: f64,
    /// Criterion value at the chosen point.
    pub acq: f64,
    /// Steps of lookahead used to choose this point.
    pub lookahead: usize,
    /// Incumbent when the point was chosen.
    pub eta: f64,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub iteration: usize,
    pub message: String,
}

/// Everything a run did, serialisable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub seed: u64,
    pub config: GlassesConfig,
    pub budget: usize,
    pub initial_x: Vec<Vec<f64>>,
    pub initial_y: Vec<f64>,
    pub evaluations: Vec<Evaluation>,
    /// Minimiser of the final posterior mean.
    pub recommendation: Vec<f64>,
    pub recommendation_mean: f64,
    /// Best evaluated point over the initial design and the run.
    pub best_x: Vec<f64>,
    pub best_y: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl RunHistory {
    /// Smallest initial output.
    pub fn first_best(&self) -> f64 {
        self.initial_y.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// SplitMix64 step, used to derive independent per-iteration seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fit_at(data: &Dataset, domain: &BoxDomain, cfg: &GlassesConfig, seed: u64, stream: u64) -> Result<GpModel> {
    let opts = FitOptions {
        seed: derive_seed(seed, stream),
        ..cfg.fit.clone()
    };
    fit(data, domain, &opts)
}

/// Sequential optimisation: refit, choose, evaluate, repeat `budget` times,
/// then recommend the minimiser of the final posterior mean.
pub fn run<F, E>(
    mut objective: F,
    initial: &Dataset,
    budget: usize,
    domain: &BoxDomain,
    cfg: &GlassesConfig,
    seed: u64,
) -> Result<RunHistory>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, E>,
    E: std::fmt::Display,
{
    cfg.validate()?;
    initial.check_domain(domain)?;
    let mut history = RunHistory {
        seed,
        config: cfg.clone(),
        budget,
        initial_x: initial.points().map(|p| p.to_vec()).collect(),
        initial_y: initial.outputs().to_vec(),
        evaluations: Vec::with_capacity(budget),
        recommendation: Vec::new(),
        recommendation_mean: f64::NAN,
        best_x: initial.point(initial.best_index()).to_vec(),
        best_y: initial.best_output(),
        diagnostics: Vec::new(),
    };
    let mut data = initial.clone();
    for j in 0..budget {
        let started = Instant::now();
        let model = fit_at(&data, domain, cfg, seed, j as u64)?;
        let eta = data.best_output();
        let lookahead = match cfg.strategy {
            Strategy::Lookahead(mode) => mode.steps(budget, j),
            Strategy::Mpi | Strategy::GpLcb { .. } => 1,
        };
        let selection = select_next(&model, lookahead, eta, domain, cfg)?;
        for message in selection.notes {
            history.diagnostics.push(Diagnostic { iteration: j, message });
        }
        let x = domain.clamp(&selection.point);
        let y = match objective(&x) {
            Ok(y) if y.is_finite() => y,
            Ok(y) => {
                return Err(Error::Objective {
                    iteration: j,
                    message: format!("objective returned {y}"),
                    history: Box::new(history),
                })
            }
            Err(e) => {
                return Err(Error::Objective {
                    iteration: j,
                    message: e.to_string(),
                    history: Box::new(history),
                })
            }
        };
        if y < history.best_y {
            history.best_y = y;
            history.best_x = x.clone();
        }
        data = data.with_observation(&x, y)?;
        history.evaluations.push(Evaluation {
            x,
            y,
            acq: selection.value,
            lookahead,
            eta,
            time_s: if cfg.record_timing {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
    }
    let model = fit_at(&data, domain, cfg, seed, budget as u64)?;
    let (point, mean) = minimise_over_domain(
        |x| model.predict_mean(x),
        domain,
        cfg.outer_budget(domain.dim()),
        cfg.parallel,
    )?;
    history.recommendation = point;
    history.recommendation_mean = mean;
    Ok(history)
}
