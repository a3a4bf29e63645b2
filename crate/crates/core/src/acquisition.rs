//! One-step expected loss and the myopic baselines (probability of
//! improvement, lower confidence bound). All are minimised except MPI,
//! which is a probability and is negated by callers that minimise.

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::normal;

fn check_var(var: f64) -> Result<()> {
    if var >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("predictive variance must be nonnegative, got {var}")))
    }
}

/// E[min(y, η)] for y ~ N(μ, var).
pub fn expected_loss_1(mean: f64, var: f64, eta: f64) -> Result<f64> {
    check_var(var)?;
    Ok(expected_loss_1_unchecked(mean, var, eta))
}

#[inline]
pub(crate) fn expected_loss_1_unchecked(mean: f64, var: f64, eta: f64) -> f64 {
    if var == 0.0 {
        return mean.min(eta);
    }
    let sd = var.sqrt();
    let z = (eta - mean) / sd;
    eta + (mean - eta) * normal::cdf(z) - sd * normal::pdf(z)
}

/// Probability that y ~ N(μ, var) falls strictly below η.
pub fn mpi(mean: f64, var: f64, eta: f64) -> Result<f64> {
    check_var(var)?;
    if var == 0.0 {
        return Ok(if mean < eta { 1.0 } else { 0.0 });
    }
    Ok(normal::cdf((eta - mean) / var.sqrt()))
}

/// μ − β·σ.
pub fn gp_lcb(mean: f64, var: f64, beta: f64) -> Result<f64> {
    check_var(var)?;
    if !(beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
    }
    Ok(mean - beta * var.sqrt())
}

/// A model together with its incumbent η = min observed output.
#[derive(Debug, Clone, Copy)]
pub struct AcquisitionContext<'a> {
    model: &'a GpModel,
    incumbent: f64,
}

impl<'a> AcquisitionContext<'a> {
    pub fn new(model: &'a GpModel) -> Self {
        AcquisitionContext {
            model,
            incumbent: model.dataset().best_output(),
        }
    }

    pub fn model(&self) -> &'a GpModel {
        self.model
    }

    pub fn incumbent(&self) -> f64 {
        self.incumbent
    }

    pub fn expected_loss(&self, x: &[f64]) -> f64 {
        let (mean, var) = self.model.predict_point(x);
        expected_loss_1_unchecked(mean, var, self.incumbent)
    }

    pub fn mpi(&self, x: &[f64]) -> f64 {
        let (mean, var) = self.model.predict_point(x);
        mpi(mean, var, self.incumbent).expect("variance is clamped nonnegative")
    }

    pub fn gp_lcb(&self, x: &[f64], beta: f64) -> Result<f64> {
        let (mean, var) = self.model.predict_point(x);
        gp_lcb(mean, var, beta)
    }
}

/// ∇ₓ of the one-step expected loss: Φ(z)∇μ − φ(z)∇σ.
pub fn expected_loss_1_grad(model: &GpModel, x: &[f64], eta: f64) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::invalid("query point dimension does not match the model"));
    }
    let (mean, var, dmean, dvar) = model.predict_with_gradients(x);
    if var <= 0.0 {
        // Collapsed predictive: the loss is min(μ, η).
        let slope = if mean < eta { 1.0 } else { 0.0 };
        return Ok(dmean.iter().map(|g| slope * g).collect());
    }
    let sd = var.sqrt();
    let z = (eta - mean) / sd;
    let (cdf, pdf) = (normal::cdf(z), normal::pdf(z));
    Ok(dmean
        .iter()
        .zip(&dvar)
        .map(|(dm, dv)| cdf * dm - pdf * dv / (2.0 * sd))
        .collect())
}
