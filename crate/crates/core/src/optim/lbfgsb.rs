//! Box-constrained limited-memory quasi-Newton descent.
//!
//! Variables sitting on a bound with the gradient pushing outward are frozen
//! for the iteration; the two-loop recursion runs on the remaining free
//! variables and the step is projected back onto the box, with Armijo
//! backtracking along the projected path.

use std::collections::VecDeque;

use super::{BoxDomain, OptimizeReport, Termination};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LbfgsbOptions {
    pub max_iters: usize,
    /// Number of curvature pairs kept.
    pub memory: usize,
    /// Stop once the infinity norm of the projected gradient drops below this.
    pub pg_tol: f64,
}

impl LbfgsbOptions {
    pub fn new(max_iters: usize) -> Self {
        LbfgsbOptions {
            max_iters,
            memory: 10,
            pg_tol: 1e-8,
        }
    }
}

pub fn lbfgsb_minimize<F>(
    objective: F,
    domain: &BoxDomain,
    start: &[f64],
    max_iters: usize,
) -> Result<OptimizeReport>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    lbfgsb_minimize_with(objective, domain, start, &LbfgsbOptions::new(max_iters))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], domain: &BoxDomain) -> f64 {
    (0..x.len())
        .map(|i| {
            let moved = (x[i] - g[i]).clamp(domain.lower()[i], domain.upper()[i]);
            (moved - x[i]).abs()
        })
        .fold(0.0, f64::max)
}

pub fn lbfgsb_minimize_with<F>(
    mut objective: F,
    domain: &BoxDomain,
    start: &[f64],
    opts: &LbfgsbOptions,
) -> Result<OptimizeReport>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = domain.dim();
    if start.len() != n {
        return Err(Error::invalid(format!(
            "start has dimension {}, domain has {n}",
            start.len()
        )));
    }
    let lower = domain.lower();
    let upper = domain.upper();
    let mut x = domain.clamp(start);
    let (mut f, mut g) = objective(&x);
    let mut evals = 1;
    if !f.is_finite() {
        return Err(Error::Optimizer(format!(
            "objective is not finite at the start point ({f})"
        )));
    }
    if g.len() != n {
        return Err(Error::invalid("gradient has the wrong dimension"));
    }

    let report = |x: Vec<f64>, f: f64, evals: usize, iters: usize, t: Termination| OptimizeReport {
        best_point: x,
        best_value: f,
        evaluations_used: evals,
        trace: None,
        nonfinite_evaluations: 0,
        iterations: iters,
        termination: t,
    };

    if g.iter().any(|v| !v.is_finite()) {
        return Ok(report(x, f, evals, 0, Termination::NonFiniteGradient));
    }

    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iter = 0;
    while iter < opts.max_iters {
        if projected_gradient_norm(&x, &g, domain) < opts.pg_tol {
            return Ok(report(x, f, evals, iter, Termination::Converged));
        }
        iter += 1;

        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let mask = |v: &mut [f64]| {
            for (vi, &fr) in v.iter_mut().zip(&free) {
                if !fr {
                    *vi = 0.0;
                }
            }
        };

        let mut direction = {
            let mut q = g.clone();
            mask(&mut q);
            let mut alphas = Vec::with_capacity(pairs.len());
            for (s, y, rho) in pairs.iter().rev() {
                let a = rho * dot(s, &q);
                for (qi, yi) in q.iter_mut().zip(y) {
                    *qi -= a * yi;
                }
                alphas.push(a);
            }
            if let Some((s, y, _)) = pairs.back() {
                let gamma = dot(s, y) / dot(y, y);
                for qi in q.iter_mut() {
                    *qi *= gamma;
                }
            }
            for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &q);
                for (qi, si) in q.iter_mut().zip(s) {
                    *qi += si * (a - b);
                }
            }
            mask(&mut q);
            q.iter().map(|v| -v).collect::<Vec<f64>>()
        };

        if dot(&g, &direction) >= 0.0 || direction.iter().any(|v| !v.is_finite()) {
            pairs.clear();
            direction = g.iter().map(|v| -v).collect();
            mask(&mut direction);
        }

        // Armijo backtracking along the projected path.
        let mut accepted = None;
        for attempt in 0..2 {
            let mut step = if pairs.is_empty() {
                let dmax = direction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if dmax > 0.0 {
                    (1.0f64).min(1.0 / dmax)
                } else {
                    1.0
                }
            } else {
                1.0
            };
            for _ in 0..60 {
                let trial: Vec<f64> = (0..n)
                    .map(|i| (x[i] + step * direction[i]).clamp(lower[i], upper[i]))
                    .collect();
                if trial == x {
                    break;
                }
                let (ft, gt) = objective(&trial);
                evals += 1;
                let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
                if ft.is_finite() && ft <= f + 1e-4 * decrease {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() || attempt == 1 || pairs.is_empty() {
                break;
            }
            // Retry once with plain steepest descent.
            pairs.clear();
            direction = g.iter().map(|v| -v).collect();
            mask(&mut direction);
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            return Ok(report(x, f, evals, iter, Termination::LineSearchFailed));
        };
        if g_new.iter().any(|v| !v.is_finite()) {
            let (bx, bf) = if f_new < f { (x_new, f_new) } else { (x, f) };
            return Ok(report(bx, bf, evals, iter, Termination::NonFiniteGradient));
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    let t = if projected_gradient_norm(&x, &g, domain) < opts.pg_tol {
        Termination::Converged
    } else {
        Termination::BudgetExhausted
    };
    Ok(report(x, f, evals, iter, t))
}

/// Central finite-difference gradient with step `1e-6·side`, switching to a
/// one-sided difference where a central step would leave the box.
pub fn fd_gradient<F>(f: &F, x: &[f64], domain: &BoxDomain) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * domain.side(i);
            let up = (x[i] + h).min(domain.upper()[i]);
            let down = (x[i] - h).max(domain.lower()[i]);
            probe[i] = up;
            let fu = f(&probe);
            probe[i] = down;
            let fd = f(&probe);
            probe[i] = x[i];
            (fu - fd) / (up - down)
        })
        .collect()
}
