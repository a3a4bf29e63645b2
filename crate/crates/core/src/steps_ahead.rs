//! Greedy prediction of where the next evaluations will land, given the
//! first one: each further location maximises the soft-plus of the negated
//! one-step loss, damped near earlier locations by local penalisers built
//! from a Lipschitz exclusion ball.

use std::sync::Arc;

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::expected_loss_1_unchecked;
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::normal;
use crate::optim::{direct_minimize, lbfgsb_minimize, BoxDomain};

/// Penalizer variances are floored here so interpolated centers stay finite.
const MIN_CENTER_VAR: f64 = 1e-10;
/// Plans keyed on the first point rounded to this fraction of each side.
const PLAN_KEY_RESOLUTION: f64 = 1e-6;
const PLAN_CACHE_CAPACITY: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenalizerParams {
    /// Lipschitz constant L of the objective.
    pub lipschitz: f64,
    /// Estimate M of the global minimum.
    pub global_min_estimate: f64,
}

/// Smallest Lipschitz constant ever returned: 1e-7·(output range)/diagonal,
/// with a unit range when all outputs coincide.
pub fn lipschitz_floor(model: &GpModel, domain: &BoxDomain) -> f64 {
    let y = model.dataset().outputs();
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let range = if hi > lo { hi - lo } else { 1.0 };
    1e-7 * range / domain.diagonal()
}

fn gradient_norm(model: &GpModel, x: &[f64]) -> f64 {
    model.mean_gradient(x).iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Largest posterior-mean gradient norm over 200·q uniform samples, polished
/// from the best five by bounded quasi-Newton ascent.
pub fn estimate_lipschitz(model: &GpModel, domain: &BoxDomain, seed: u64) -> Result<f64> {
    if domain.dim() != model.dim() {
        return Err(Error::invalid("domain and model dimensions differ"));
    }
    let q = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<(f64, Vec<f64>)> = (0..200 * q)
        .map(|_| {
            let u: Vec<f64> = (0..q).map(|_| rng.random::<f64>()).collect();
            let x = domain.from_unit(&u);
            (gradient_norm(model, &x), x)
        })
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = samples.first().map_or(0.0, |s| s.0);
    for (_, start) in samples.iter().take(5) {
        let neg_sq_norm = |x: &[f64]| {
            let g = model.mean_gradient(x);
            let h = model.mean_hessian(x);
            let value = -g.iter().map(|v| v * v).sum::<f64>();
            let grad = (0..q)
                .map(|i| -2.0 * (0..q).map(|j| h[i * q + j] * g[j]).sum::<f64>())
                .collect();
            (value, grad)
        };
        if let Ok(report) = lbfgsb_minimize(neg_sq_norm, domain, start, 200) {
            best = best.max((-report.best_value).max(0.0).sqrt());
        }
    }
    Ok(best.max(lipschitz_floor(model, domain)))
}

/// Lipschitz estimate plus M = smallest observed output.
pub fn penalizer_params(model: &GpModel, domain: &BoxDomain, seed: u64) -> Result<PenalizerParams> {
    Ok(PenalizerParams {
        lipschitz: estimate_lipschitz(model, domain, seed)?,
        global_min_estimate: model.dataset().best_output(),
    })
}

/// Probability that `x` lies outside the exclusion ball around `center`,
/// whose radius is (f(center) − M)/L with f(center) ~ N(mean_c, var_c).
pub fn local_penalizer(
    x: &[f64],
    center: &[f64],
    mean_c: f64,
    var_c: f64,
    params: &PenalizerParams,
) -> Result<f64> {
    if !(var_c > 0.0) {
        return Err(Error::invalid(format!("penalizer variance must be positive, got {var_c}")));
    }
    if x.len() != center.len() {
        return Err(Error::invalid("penalizer arguments differ in dimension"));
    }
    Ok(Penalizer::new(center.to_vec(), mean_c, var_c, params).eval(x))
}

/// A penalizer with its affine map `z = slope·‖x − center‖ + shift` precomputed.
#[derive(Debug, Clone)]
struct Penalizer {
    center: Vec<f64>,
    slope: f64,
    shift: f64,
}

impl Penalizer {
    fn new(center: Vec<f64>, mean_c: f64, var_c: f64, params: &PenalizerParams) -> Self {
        let scale = (2.0 * var_c.max(MIN_CENTER_VAR)).sqrt();
        Penalizer {
            center,
            slope: params.lipschitz / scale,
            shift: (params.global_min_estimate - mean_c) / scale,
        }
    }

    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        let dist = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        0.5 * normal::erfc(-(self.slope * dist + self.shift))
    }
}

/// Predicted evaluation locations; the first row is the putative point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepsPlan {
    pub points: Vec<Vec<f64>>,
}

impl StepsPlan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    /// DIRECT evaluations per predicted location; `None` means 500·q.
    pub inner_budget: Option<usize>,
    /// Seed of the Lipschitz sampling.
    pub seed: u64,
    /// Reuse plans across calls with the same rounded first point.
    pub memoize: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            inner_budget: None,
            seed: 0,
            memoize: true,
        }
    }
}

/// Plans against one fitted model. Safe to share across threads; the plan
/// cache only holds values that a fresh computation would reproduce exactly.
#[derive(Debug)]
pub struct StepsPredictor<'m> {
    model: &'m GpModel,
    domain: BoxDomain,
    params: PenalizerParams,
    incumbent: f64,
    inner_budget: usize,
    memoize: bool,
    min_separation: f64,
    /// Rows after the first, keyed on the rounded first point.
    plan_cache: DashMap<Vec<i64>, Arc<Vec<Vec<f64>>>>,
}

impl<'m> StepsPredictor<'m> {
    pub fn new(model: &'m GpModel, domain: &BoxDomain, opts: &PlanOptions) -> Result<Self> {
        if domain.dim() != model.dim() {
            return Err(Error::invalid("domain and model dimensions differ"));
        }
        let inner_budget = opts.inner_budget.unwrap_or(500 * domain.dim());
        if inner_budget == 0 {
            return Err(Error::invalid("inner optimiser budget must be positive"));
        }
        Ok(StepsPredictor {
            model,
            domain: domain.clone(),
            params: penalizer_params(model, domain, opts.seed)?,
            incumbent: model.dataset().best_output(),
            inner_budget,
            memoize: opts.memoize,
            min_separation: 1e-9 * domain.diagonal(),
            plan_cache: DashMap::new(),
        })
    }

    pub fn params(&self) -> &PenalizerParams {
        &self.params
    }

    pub fn model(&self) -> &'m GpModel {
        self.model
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// softplus(−Λ₁(x)), the unpenalised transformed one-step loss.
    pub fn transformed_loss(&self, x: &[f64]) -> f64 {
        let (mean, var) = self.model.predict_point(x);
        normal::softplus(-expected_loss_1_unchecked(mean, var, self.incumbent))
    }

    fn penalizer_at(&self, center: &[f64]) -> Penalizer {
        let (mean, var) = self.model.predict_point(center);
        Penalizer::new(center.to_vec(), mean, var, &self.params)
    }

    fn plan_key(&self, x_star: &[f64]) -> (Vec<i64>, Vec<f64>) {
        let unit = self.domain.to_unit(x_star);
        let key: Vec<i64> = unit.iter().map(|u| (u / PLAN_KEY_RESOLUTION).round() as i64).collect();
        let rounded: Vec<f64> = key.iter().map(|k| *k as f64 * PLAN_KEY_RESOLUTION).collect();
        (key, self.domain.clamp(&self.domain.from_unit(&rounded)))
    }

    /// The next greedy location given the penalizers of all earlier rows.
    fn next_row(&self, rows: &[Vec<f64>], penalizers: &[Penalizer]) -> Result<Vec<f64>> {
        let sep2 = self.min_separation * self.min_separation;
        let objective = |x: &[f64]| {
            let collapsed = rows.iter().any(|r| {
                r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < sep2
            });
            if collapsed {
                return 0.0;
            }
            let mut value = self.transformed_loss(x);
            for p in penalizers {
                value *= p.eval(x);
            }
            -value
        };
        let report = direct_minimize(objective, &self.domain, self.inner_budget)?;
        Ok(report.best_point)
    }

    /// Extend `rows` (starting with the first point) greedily to `n` rows.
    fn extend(&self, anchor: &[f64], rows: &mut Vec<Vec<f64>>, n: usize) -> Result<()> {
        let mut penalizers: Vec<Penalizer> = std::iter::once(anchor)
            .chain(rows.iter().skip(1).map(|r| r.as_slice()))
            .map(|c| self.penalizer_at(c))
            .collect();
        while rows.len() < n {
            let next = self.next_row(rows, &penalizers)?;
            penalizers.push(self.penalizer_at(&next));
            rows.push(next);
        }
        Ok(())
    }

    /// The n-row plan starting at `x_star`. Plans for the same start are
    /// nested: the k-row plan is a prefix of every longer one.
    pub fn plan(&self, x_star: &[f64], n: usize) -> Result<StepsPlan> {
        if n == 0 {
            return Err(Error::invalid("a plan needs at least one step"));
        }
        self.domain.check_point(x_star, "first plan point")?;
        if n == 1 {
            return Ok(StepsPlan {
                points: vec![x_star.to_vec()],
            });
        }
        let (key, anchor) = self.plan_key(x_star);
        let cached = if self.memoize {
            self.plan_cache.get(&key).map(|v| Arc::clone(&v))
        } else {
            None
        };
        let mut rows = vec![x_star.to_vec()];
        if let Some(tail) = &cached {
            rows.extend(tail.iter().take(n - 1).cloned());
        }
        if rows.len() < n {
            self.extend(&anchor, &mut rows, n)?;
            if self.memoize && self.plan_cache.len() < PLAN_CACHE_CAPACITY {
                self.plan_cache.insert(key, Arc::new(rows[1..].to_vec()));
            }
        }
        let sep2 = self.min_separation * self.min_separation;
        for i in 0..rows.len() {
            for j in 0..i {
                let d2: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < sep2 {
                    return Err(Error::DegeneratePlan { first: j, second: i });
                }
            }
        }
        Ok(StepsPlan { points: rows })
    }
}

/// One-off plan with default options (no reuse across calls).
pub fn predict_steps(model: &GpModel, x_star: &[f64], n: usize, domain: &BoxDomain) -> Result<StepsPlan> {
    let opts = PlanOptions {
        memoize: false,
        ..Default::default()
    };
    StepsPredictor::new(model, domain, &opts)?.plan(x_star, n)
}
