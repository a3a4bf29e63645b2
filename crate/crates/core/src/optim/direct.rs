//! DIRECT (DIviding RECTangles) global search.
//!
//! The box is normalised to the unit cube. Every rectangle is a hypercube
//! cell whose side along axis `i` is `3^-level[i]`; rectangles are grouped by
//! their half-diagonal and, inside a group, ordered by `(value, insertion
//! index)`. Each round selects the potentially-optimal rectangles on the
//! lower-right convex hull of (size, value) and trisects them along their
//! longest sides.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{BoxDomain, OptimizeReport, Termination};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DirectOptions {
    pub max_evals: usize,
    /// Balance parameter of the potential-optimality test.
    pub epsilon: f64,
    /// Evaluate the samples of one round concurrently.
    pub parallel: bool,
    pub record_trace: bool,
}

impl DirectOptions {
    pub fn new(max_evals: usize) -> Self {
        DirectOptions {
            max_evals,
            epsilon: 1e-4,
            parallel: false,
            record_trace: false,
        }
    }
}

/// Minimise `objective` over `domain` with at most `max_evals` evaluations.
pub fn direct_minimize<F>(objective: F, domain: &BoxDomain, max_evals: usize) -> Result<OptimizeReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    direct_minimize_with(objective, domain, &DirectOptions::new(max_evals))
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    value: f64,
    index: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.index.cmp(&other.index))
    }
}

struct Rect {
    center: Vec<f64>,
    levels: Vec<u32>,
    value: f64,
}

/// Half-diagonal of a cell; levels are summed in sorted order so that cells
/// with the same multiset of levels get bit-identical sizes.
fn half_diagonal(levels: &[u32]) -> f64 {
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    0.5 * sorted
        .iter()
        .map(|&l| 9f64.powi(-(l as i32)))
        .sum::<f64>()
        .sqrt()
}

struct State<'a, F> {
    objective: &'a F,
    domain: &'a BoxDomain,
    rects: Vec<Rect>,
    // size bits -> rectangles of that size ordered by (value, index)
    groups: BTreeMap<u64, BTreeSet<Entry>>,
    evals: usize,
    nonfinite: usize,
    best_value: f64,
    best_point: Vec<f64>,
    trace: Option<Vec<(Vec<f64>, f64)>>,
}

impl<F> State<'_, F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn sanitize(&mut self, v: f64) -> f64 {
        if v.is_finite() {
            v
        } else {
            self.nonfinite += 1;
            f64::INFINITY
        }
    }

    fn record(&mut self, x: Vec<f64>, raw: f64) -> f64 {
        let v = self.sanitize(raw);
        self.evals += 1;
        if v < self.best_value || self.best_point.is_empty() {
            self.best_value = v;
            self.best_point = x.clone();
        }
        if let Some(trace) = self.trace.as_mut() {
            trace.push((x, v));
        }
        v
    }

    fn insert(&mut self, rect: Rect) {
        let index = self.rects.len();
        let key = half_diagonal(&rect.levels).to_bits();
        self.groups.entry(key).or_default().insert(Entry {
            value: rect.value,
            index,
        });
        self.rects.push(rect);
    }

    fn remove_from_group(&mut self, index: usize) {
        let rect = &self.rects[index];
        let key = half_diagonal(&rect.levels).to_bits();
        let entry = Entry {
            value: rect.value,
            index,
        };
        if let Some(set) = self.groups.get_mut(&key) {
            set.remove(&entry);
            if set.is_empty() {
                self.groups.remove(&key);
            }
        }
    }

    /// Indices of potentially-optimal rectangles, ordered by increasing size.
    fn potentially_optimal(&self, epsilon: f64) -> Vec<usize> {
        // One candidate per size group: lowest value, then lowest index.
        let candidates: Vec<(f64, f64, usize)> = self
            .groups
            .iter()
            .filter_map(|(&bits, set)| {
                set.iter()
                    .next()
                    .map(|e| (f64::from_bits(bits), e.value, e.index))
            })
            .collect();
        if candidates.is_empty() {
            return Vec::new();
        }
        let finite: Vec<&(f64, f64, usize)> =
            candidates.iter().filter(|c| c.1.is_finite()).collect();
        if finite.is_empty() {
            return vec![candidates.last().unwrap().2];
        }

        let fmin = self.best_value;
        // Start of the hull: lowest value, and among equal values the largest.
        let mut start = 0;
        for (k, c) in finite.iter().enumerate() {
            if c.1 <= finite[start].1 {
                start = k;
            }
        }

        let mut hull = vec![start];
        let mut current = start;
        while current + 1 < finite.len() {
            let (d0, f0, _) = *finite[current];
            let mut next = current + 1;
            let mut best_slope = (finite[next].1 - f0) / (finite[next].0 - d0);
            for (k, c) in finite.iter().enumerate().skip(current + 2) {
                let slope = (c.1 - f0) / (c.0 - d0);
                if slope < best_slope {
                    best_slope = slope;
                    next = k;
                }
            }
            hull.push(next);
            current = next;
        }

        let threshold = fmin - epsilon * fmin.abs();
        let mut selected = Vec::with_capacity(hull.len());
        for (h, &k) in hull.iter().enumerate() {
            let (d, f, idx) = *finite[k];
            let accept = match hull.get(h + 1) {
                None => true,
                Some(&next) => {
                    let (dn, fnext, _) = *finite[next];
                    let slope = (fnext - f) / (dn - d);
                    f - slope * d <= threshold
                }
            };
            if accept {
                selected.push(idx);
            }
        }
        selected
    }
}

pub fn direct_minimize_with<F>(
    objective: F,
    domain: &BoxDomain,
    opts: &DirectOptions,
) -> Result<OptimizeReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if opts.max_evals == 0 {
        return Err(Error::invalid("DIRECT needs max_evals >= 1"));
    }
    let q = domain.dim();
    let mut state = State {
        objective: &objective,
        domain,
        rects: Vec::new(),
        groups: BTreeMap::new(),
        evals: 0,
        nonfinite: 0,
        best_value: f64::INFINITY,
        best_point: Vec::new(),
        trace: opts.record_trace.then(Vec::new),
    };

    let center = vec![0.5; q];
    let x0 = domain.from_unit(&center);
    let raw = (state.objective)(&x0);
    let v0 = state.record(x0, raw);
    state.insert(Rect {
        center,
        levels: vec![0; q],
        value: v0,
    });

    let mut rounds = 0;
    while state.evals < opts.max_evals {
        let selected = state.potentially_optimal(opts.epsilon);
        if selected.is_empty() {
            break;
        }
        rounds += 1;

        // Plan every division of this round, respecting the budget.
        struct Plan {
            rect: usize,
            dims: Vec<usize>,
            delta: f64,
        }
        let mut plans = Vec::new();
        let mut planned = state.evals;
        for &idx in &selected {
            let rect = &state.rects[idx];
            let min_level = *rect.levels.iter().min().unwrap();
            let dims: Vec<usize> = (0..q).filter(|&i| rect.levels[i] == min_level).collect();
            if planned + 2 * dims.len() > opts.max_evals {
                break;
            }
            planned += 2 * dims.len();
            plans.push(Plan {
                rect: idx,
                dims,
                delta: 3f64.powi(-(min_level as i32 + 1)),
            });
        }
        if plans.is_empty() {
            break;
        }

        let mut points: Vec<Vec<f64>> = Vec::with_capacity(planned - state.evals);
        for plan in &plans {
            let c = &state.rects[plan.rect].center;
            for &i in &plan.dims {
                let mut up = c.clone();
                up[i] += plan.delta;
                let mut down = c.clone();
                down[i] -= plan.delta;
                points.push(up);
                points.push(down);
            }
        }
        let xs: Vec<Vec<f64>> = points.iter().map(|u| state.domain.from_unit(u)).collect();
        let raws: Vec<f64> = if opts.parallel {
            xs.par_iter().map(|x| (state.objective)(x)).collect()
        } else {
            xs.iter().map(|x| (state.objective)(x)).collect()
        };
        let mut values = Vec::with_capacity(raws.len());
        for (x, raw) in xs.into_iter().zip(raws) {
            values.push(state.record(x, raw));
        }

        let mut cursor = 0;
        for plan in plans {
            let n = plan.dims.len();
            let mut order: Vec<(f64, usize, f64, f64)> = plan
                .dims
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let up = values[cursor + 2 * k];
                    let down = values[cursor + 2 * k + 1];
                    (up.min(down), i, up, down)
                })
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            state.remove_from_group(plan.rect);
            let mut levels = state.rects[plan.rect].levels.clone();
            let parent_center = state.rects[plan.rect].center.clone();
            for &(_, i, up, down) in &order {
                levels[i] += 1;
                for (sign, value) in [(1.0, up), (-1.0, down)] {
                    let mut c = parent_center.clone();
                    c[i] += sign * plan.delta;
                    state.insert(Rect {
                        center: c,
                        levels: levels.clone(),
                        value,
                    });
                }
            }
            state.rects[plan.rect].levels = levels;
            let parent = &state.rects[plan.rect];
            let key = half_diagonal(&parent.levels).to_bits();
            let entry = Entry {
                value: parent.value,
                index: plan.rect,
            };
            state.groups.entry(key).or_default().insert(entry);
            cursor += 2 * n;
        }

        if state.evals >= opts.max_evals {
            break;
        }
    }

    Ok(OptimizeReport {
        best_point: state.best_point,
        best_value: state.best_value,
        evaluations_used: state.evals,
        trace: state.trace,
        nonfinite_evaluations: state.nonfinite,
        iterations: rounds,
        termination: Termination::BudgetExhausted,
    })
}
