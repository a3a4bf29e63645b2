//! Global (DIRECT) and bounded local (projected L-BFGS) optimisers.

mod direct;
mod lbfgsb;

pub use direct::{direct_minimize, direct_minimize_with, DirectOptions};
pub use lbfgsb::{fd_gradient, lbfgsb_minimize, lbfgsb_minimize_with, LbfgsbOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]` in `q` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "box bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::invalid(format!(
                    "box side {i} is invalid: [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    /// The same interval `[lo, hi]` along every one of `dim` axes.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn sides(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.side(i)).collect()
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Like [`contains`](Self::contains) but forgives round-off of a few ulps
    /// relative to the side length.
    pub fn contains_approx(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|i| {
                let tol = 1e-12 * self.side(i);
                x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol
            })
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| v.clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    /// Map a point of the unit cube onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, t)| self.lower[i] + t * self.side(i))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| (v - self.lower[i]) / self.side(i))
            .collect()
    }

    pub(crate) fn check_point(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{what} has dimension {}, domain has {}",
                x.len(),
                self.dim()
            )));
        }
        if !self.contains_approx(x) {
            return Err(Error::invalid(format!("{what} {x:?} lies outside the domain")));
        }
        Ok(())
    }
}

/// Why a local optimisation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    BudgetExhausted,
    LineSearchFailed,
    NonFiniteGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations_used: usize,
    /// Every evaluated `(point, value)` in evaluation order, when requested.
    pub trace: Option<Vec<(Vec<f64>, f64)>>,
    /// Objective values that came back NaN or infinite (treated as +∞).
    pub nonfinite_evaluations: usize,
    pub iterations: usize,
    pub termination: Termination,
}
