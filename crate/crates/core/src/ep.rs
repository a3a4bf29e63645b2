//! Expectation propagation for Gaussian measure restricted to polyhedra
//! (intersections of half-spaces), and the expected minimum of a Gaussian
//! vector capped at an incumbent.
//!
//! Each half-space contributes one univariate site acting on the projection
//! `s = cᵀy`, so all EP work happens in the m-dimensional space of
//! constraint projections and the result is mapped back to y at the end.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::acquisition::expected_loss_1;
use crate::error::{Error, Result};
use crate::normal;

/// Largest dimension accepted by [`ep_region_moments`] and [`expected_min`].
pub const MAX_DIM: usize = 64;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// The event `normal·y − offset ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let norm2: f64 = normal.iter().map(|v| v * v).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() || !offset.is_finite() {
            return Err(Error::invalid("half-space needs a finite nonzero normal and finite offset"));
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let proj: f64 = self.normal.iter().zip(y).map(|(a, b)| a * b).sum();
        proj - self.offset >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralRegion {
    dim: usize,
    constraints: Vec<HalfSpace>,
}

impl PolyhedralRegion {
    pub fn new(dim: usize, constraints: Vec<HalfSpace>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("region dimension must be positive"));
        }
        if constraints.iter().any(|c| c.normal.len() != dim) {
            return Err(Error::invalid("all constraints must share the region dimension"));
        }
        Ok(PolyhedralRegion { dim, constraints })
    }

    /// `{y : yᵢ ≥ η for all i}`.
    pub fn orthant_above(dim: usize, eta: f64) -> Result<Self> {
        let constraints = (0..dim)
            .map(|i| {
                let mut normal = vec![0.0; dim];
                normal[i] = 1.0;
                HalfSpace::new(normal, eta)
            })
            .collect::<Result<_>>()?;
        Self::new(dim, constraints)
    }

    /// `{y : y_j ≤ η, y_j ≤ yᵢ for all i ≠ j}`, with unit-norm difference normals.
    pub fn minimum_at(dim: usize, j: usize, eta: f64) -> Result<Self> {
        if j >= dim {
            return Err(Error::invalid("coordinate index out of range"));
        }
        let mut constraints = Vec::with_capacity(dim);
        let mut below = vec![0.0; dim];
        below[j] = -1.0;
        constraints.push(HalfSpace::new(below, -eta)?);
        for i in (0..dim).filter(|&i| i != j) {
            let mut normal = vec![0.0; dim];
            normal[i] = std::f64::consts::FRAC_1_SQRT_2;
            normal[j] = -std::f64::consts::FRAC_1_SQRT_2;
            constraints.push(HalfSpace::new(normal, 0.0)?);
        }
        Self::new(dim, constraints)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[HalfSpace] {
        &self.constraints
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.contains(y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpOptions {
    /// Weight of the freshly matched site in each update.
    pub damping: f64,
    pub max_iters: usize,
    /// Convergence threshold on `|Δ|/(1+|new|)` of the site natural parameters.
    pub tol: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        EpOptions {
            damping: 0.5,
            max_iters: 60,
            tol: 1e-6,
        }
    }
}

/// Gaussian approximation of a normal distribution restricted to a region.
#[derive(Debug, Clone, PartialEq)]
pub struct EpResult {
    pub log_mass: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Some single constraint already has mass below 1e-300; `log_mass` is
    /// that constraint's log mass (an upper bound) and EP was not run.
    pub underflow: bool,
}

impl EpResult {
    pub fn mass(&self) -> f64 {
        self.log_mass.exp()
    }
}

/// Moments of N(mean, var) truncated to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMoments {
    pub mass: f64,
    pub log_mass: f64,
    pub mean: f64,
    pub variance: f64,
    /// The mass fell below 1e-300 and is reported as 0; `log_mass`, `mean`
    /// and `variance` remain accurate.
    pub underflow: bool,
}

/// Standardised moments on `[a, b]` with `0 ≤ a < b ≤ ∞`, from scaled
/// complementary error functions so that deep tails keep full precision.
fn right_tail(a: f64, b: f64) -> (f64, f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (ratio, eb, b_ratio) = if b.is_infinite() {
        (0.0, 0.0, 0.0)
    } else {
        let r = (0.5 * (a - b) * (a + b)).exp();
        (r, normal::erfcx(b * s), b * r)
    };
    let d = normal::erfcx(a * s) - eb * ratio;
    let log_mass = -0.5 * a * a + (0.5 * d).ln();
    let mean = SQRT_2_OVER_PI * (1.0 - ratio) / d;
    let var = 1.0 + SQRT_2_OVER_PI * (a - b_ratio) / d - mean * mean;
    (log_mass, mean, var)
}

fn straddle(a: f64, b: f64) -> (f64, f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mass = 0.5 * (normal::erf(b * s) - normal::erf(a * s));
    let (pa, apa) = if a.is_finite() { (normal::pdf(a), a * normal::pdf(a)) } else { (0.0, 0.0) };
    let (pb, bpb) = if b.is_finite() { (normal::pdf(b), b * normal::pdf(b)) } else { (0.0, 0.0) };
    let mean = (pa - pb) / mass;
    let var = 1.0 + (apa - bpb) / mass - mean * mean;
    (mass.ln(), mean, var)
}

pub fn truncated_moments_1d(mean: f64, var: f64, lower: f64, upper: f64) -> Result<TruncatedMoments> {
    if !(var > 0.0) || !var.is_finite() || !mean.is_finite() {
        return Err(Error::invalid(format!("need finite mean and positive variance, got ({mean}, {var})")));
    }
    if !(lower < upper) || lower.is_nan() || upper.is_nan() {
        return Err(Error::invalid(format!("empty interval [{lower}, {upper}]")));
    }
    Ok(truncated_unchecked(mean, var, lower, upper))
}

fn truncated_unchecked(mean: f64, var: f64, lower: f64, upper: f64) -> TruncatedMoments {
    let sd = var.sqrt();
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    let (log_mass, m, v) = if a >= 0.0 {
        right_tail(a, b)
    } else if b <= 0.0 {
        let (l, m, v) = right_tail(-b, -a);
        (l, -m, v)
    } else {
        straddle(a, b)
    };
    let mass = log_mass.exp();
    let underflow = mass < 1e-300;
    TruncatedMoments {
        mass: if underflow { 0.0 } else { mass.min(1.0) },
        log_mass: log_mass.min(0.0),
        mean: mean + sd * m,
        variance: var * v.max(1e-16),
        underflow,
    }
}

struct SitePosterior {
    factor: DMatrix<f64>,
    sqrt_tau: DVector<f64>,
    log_det_b: f64,
    var: DVector<f64>,
    mean: DVector<f64>,
    w: DVector<f64>,
}

/// Posterior over projections given prior N(m0, s0) and sites (τ̃, ν̃):
/// B = I + S½ S0 S½, Σ = S0 − S0 S½ B⁻¹ S½ S0, w = ν̃ − S½ B⁻¹ S½ (S0 ν̃ + m0), m = S0 w + m0.
fn site_posterior(
    s0: &DMatrix<f64>,
    m0: &DVector<f64>,
    tau: &DVector<f64>,
    nu: &DVector<f64>,

) -> Option<SitePosterior> {
    let m = tau.len();
    let sqrt_tau = tau.map(|t| t.max(0.0).sqrt());
    let mut b = DMatrix::identity(m, m);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] += sqrt_tau[i] * s0[(i, j)] * sqrt_tau[j];
        }
    }
    let chol = Cholesky::new(b)?;
    let factor = chol.l();
    let log_det_b = 2.0 * factor.diagonal().iter().map(|d: &f64| d.ln()).sum::<f64>();

    let mut scaled = s0.clone();
    for i in 0..m {
        scaled.row_mut(i).scale_mut(sqrt_tau[i]);
    }
    let v = factor.solve_lower_triangular(&scaled)?;
    let var = DVector::from_fn(m, |k, _| s0[(k, k)] - v.column(k).norm_squared());

    let rhs = (s0 * nu + m0).component_mul(&sqrt_tau);
    let solved = chol.solve(&rhs);
    let w = nu - solved.component_mul(&sqrt_tau);
    let mean = s0 * &w + m0;
    Some(SitePosterior {
        factor,
        sqrt_tau,
        log_det_b,
        var,
        mean,
        w,
    })
}

fn validate_gaussian(mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = mu.len();
    if n == 0 || n > MAX_DIM {
        return Err(Error::invalid(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::invalid("covariance shape does not match the mean"));
    }
    if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("mean and covariance must be finite"));
    }
    let trace = sigma.trace();
    let jitter = 1e-10 * trace.max(0.0) / n as f64;
    let mut jittered = DMatrix::from_fn(n, n, |i, j| 0.5 * (sigma[(i, j)] + sigma[(j, i)]));
    for i in 0..n {
        jittered[(i, i)] += jitter;
    }
    if !(trace > 0.0) || Cholesky::new(jittered.clone()).is_none() {
        return Err(Error::invalid("covariance is not positive definite"));
    }
    Ok(jittered)
}

/// ln(1e-300): below this a region's mass is indistinguishable from zero.
const LOG_MASS_UNDERFLOW: f64 = -690.775_527_898_213_7;

/// The region lies beyond the far tail of one of its own constraints. Site
/// precisions would scale like z²/var there and swamp the posterior, so the
/// region is summarised by that constraint alone.
fn screen_underflow(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    sigma_ct: &DMatrix<f64>,
    s0: &DMatrix<f64>,
    m0: &DVector<f64>,
    offsets: &[f64],
) -> Option<EpResult> {
    let (k, log_mass) = (0..offsets.len())
        .map(|k| (k, normal::log_cdf((m0[k] - offsets[k]) / s0[(k, k)].sqrt())))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    if log_mass >= LOG_MASS_UNDERFLOW {
        return None;
    }
    let t = truncated_unchecked(m0[k], s0[(k, k)], offsets[k], f64::INFINITY);
    let gain = sigma_ct.column(k) / s0[(k, k)];
    let mean = mu + &gain * (t.mean - m0[k]);
    let shrink = s0[(k, k)] - t.variance;
    let mut covariance = sigma - &gain * gain.transpose() * shrink;
    for i in 0..mu.len() {
        for j in 0..i {
            let s = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
            covariance[(i, j)] = s;
            covariance[(j, i)] = s;
        }
    }
    Some(EpResult {
        log_mass,
        mean,
        covariance,
        converged: true,
        iterations: 0,
        underflow: true,
    })
}

/// Approximate mass, mean and covariance of N(μ, Σ) restricted to `region`.
pub fn ep_region_moments(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    region: &PolyhedralRegion,
    opts: &EpOptions,
) -> Result<EpResult> {
    if region.dim() != mu.len() {
        return Err(Error::invalid("region and Gaussian dimensions differ"));
    }
    let sigma = validate_gaussian(mu, sigma)?;
    Ok(ep_validated(mu, &sigma, region, opts))
}

fn ep_validated(mu: &DVector<f64>, sigma: &DMatrix<f64>, region: &PolyhedralRegion, opts: &EpOptions) -> EpResult {
    let n = mu.len();
    let m = region.constraints.len();
    if m == 0 {
        return EpResult {
            log_mass: 0.0,
            mean: mu.clone(),
            covariance: sigma.clone(),
            converged: true,
            iterations: 0,
            underflow: false,
        };
    }
    let c = DMatrix::from_fn(m, n, |k, i| region.constraints[k].normal[i]);
    let offsets: Vec<f64> = region.constraints.iter().map(|h| h.offset).collect();
    let sigma_ct = sigma * c.transpose();
    let s0 = &c * &sigma_ct;
    let m0 = &c * mu;

    if let Some(result) = screen_underflow(mu, sigma, &sigma_ct, &s0, &m0, &offsets) {
        return result;
    }

    let mut tau = DVector::zeros(m);
    let mut nu = DVector::zeros(m);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let Some(post) = site_posterior(&s0, &m0, &tau, &nu) else {
            break;
        };
        let mut change: f64 = 0.0;
        let mut next_tau = tau.clone();
        let mut next_nu = nu.clone();
        for k in 0..m {
            let tau_cav = 1.0 / post.var[k] - tau[k];
            let nu_cav = post.mean[k] / post.var[k] - nu[k];
            if !(tau_cav > 0.0) || !nu_cav.is_finite() {
                continue;
            }
            let tilted = truncated_unchecked(nu_cav / tau_cav, 1.0 / tau_cav, offsets[k], f64::INFINITY);
            let tau_new = (1.0 / tilted.variance - tau_cav).max(0.0);
            let nu_new = tilted.mean / tilted.variance - nu_cav;
            if !tau_new.is_finite() || !nu_new.is_finite() {
                continue;
            }
            let t = (1.0 - opts.damping) * tau[k] + opts.damping * tau_new;
            let v = (1.0 - opts.damping) * nu[k] + opts.damping * nu_new;
            change = change
                .max((t - tau[k]).abs() / (1.0 + t.abs()))
                .max((v - nu[k]).abs() / (1.0 + v.abs()));
            next_tau[k] = t;
            next_nu[k] = v;
        }
        tau = next_tau;
        nu = next_nu;
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    let post = match site_posterior(&s0, &m0, &tau, &nu) {
        Some(p) => p,
        None => {
            // Sites drove B out of numerical PD range; fall back to the prior.
            return EpResult {
                log_mass: f64::NEG_INFINITY,
                mean: mu.clone(),
                covariance: sigma.clone(),
                converged: false,
                iterations,
                underflow: false,
            };
        }
    };

    // log Z = log ∫N(s; m0, S0)·∏ exp(−½τ̃ₖsₖ² + ν̃ₖsₖ) ds plus the per-site
    // constants that make each site reproduce its tilted mass against the cavity.
    let mut log_z = -0.5 * post.log_det_b + 0.5 * (m0.dot(&post.w) + nu.dot(&post.mean));
    for k in 0..m {
        let mut tau_cav = 1.0 / post.var[k] - tau[k];
        if !(tau_cav > 0.0) {
            converged = false;
            tau_cav = 1e-10 / post.var[k];
        }
        let nu_cav = post.mean[k] / post.var[k] - nu[k];
        let cavity = truncated_unchecked(nu_cav / tau_cav, 1.0 / tau_cav, offsets[k], f64::INFINITY);
        let (t, v) = (tau[k], nu[k]);
        log_z += cavity.log_mass + 0.5 * (1.0 + t / tau_cav).ln();
        log_z += 0.5 * (nu_cav * nu_cav * t / tau_cav - 2.0 * nu_cav * v - v * v) / (tau_cav + t);
    }

    // Back to y: μ + ΣCᵀw and Σ − ΣCᵀ S½ B⁻¹ S½ CΣ.
    let mean = mu + &sigma_ct * &post.w;
    let mut scaled = sigma_ct.transpose();
    for k in 0..m {
        scaled.row_mut(k).scale_mut(post.sqrt_tau[k]);
    }
    let u = post
        .factor
        .solve_lower_triangular(&scaled)
        .expect("factor has a positive diagonal");
    let mut covariance = sigma - u.transpose() * &u;
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
            covariance[(i, j)] = s;
            covariance[(j, i)] = s;
        }
    }
    EpResult {
        log_mass: log_z.min(0.0),
        mean,
        covariance,
        converged,
        iterations,
        underflow: false,
    }
}

/// E[min(y₁…yₙ, η)] and the pieces it is assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedMin {
    pub value: f64,
    /// Mass of `{yᵢ > η for all i}`.
    pub orthant_mass: f64,
    /// Mass of the region where coordinate j is the minimum and below η.
    pub region_masses: Vec<f64>,
    /// Mean of y_j over that region.
    pub region_means: Vec<f64>,
    pub converged: bool,
}

impl ExpectedMin {
    pub fn total_mass(&self) -> f64 {
        self.orthant_mass + self.region_masses.iter().sum::<f64>()
    }
}

/// E[min(y, η)] for y ~ N(μ, Σ), as η·Z_h + Σⱼ Zⱼ·mⱼ over the orthant above
/// η and the n regions where each coordinate attains the minimum.
///
/// The region masses come from separate approximations and need not sum to
/// one; the combination is divided by their total so that the result is
/// equivariant under a common shift of μ and η and never exceeds η.
pub fn expected_min(mu: &DVector<f64>, sigma: &DMatrix<f64>, eta: f64, opts: &EpOptions) -> Result<ExpectedMin> {
    if !eta.is_finite() {
        return Err(Error::invalid("incumbent must be finite"));
    }
    if mu.len() == 1 {
        if sigma.shape() != (1, 1) || !mu[0].is_finite() || !sigma[(0, 0)].is_finite() {
            return Err(Error::invalid("covariance shape does not match the mean"));
        }
        let (mean, var) = (mu[0], sigma[(0, 0)]);
        let value = expected_loss_1(mean, var, eta)?;
        let (below, mean_below) = if var > 0.0 {
            let t = truncated_unchecked(mean, var, f64::NEG_INFINITY, eta);
            (normal::cdf((eta - mean) / var.sqrt()), t.mean)
        } else {
            (if mean < eta { 1.0 } else { 0.0 }, mean)
        };
        return Ok(ExpectedMin {
            value,
            orthant_mass: 1.0 - below,
            region_masses: vec![below],
            region_means: vec![mean_below],
            converged: true,
        });
    }
    let sigma = validate_gaussian(mu, sigma)?;
    let n = mu.len();
    let orthant = ep_validated(mu, &sigma, &PolyhedralRegion::orthant_above(n, eta)?, opts);
    let mut converged = orthant.converged;
    let orthant_mass = orthant.mass();
    let mut region_masses = Vec::with_capacity(n);
    let mut region_means = Vec::with_capacity(n);
    for j in 0..n {
        let r = ep_validated(mu, &sigma, &PolyhedralRegion::minimum_at(n, j, eta)?, opts);
        converged &= r.converged;
        region_masses.push(r.mass());
        region_means.push(r.mean[j].min(eta));
    }
    let total = orthant_mass + region_masses.iter().sum::<f64>();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Optimizer("EP region masses vanished".into()));
    }
    let weighted: f64 = region_masses
        .iter()
        .zip(&region_means)
        .map(|(z, m)| z * (m - eta))
        .sum();
    Ok(ExpectedMin {
        value: eta + weighted / total,
        orthant_mass,
        region_masses,
        region_means,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn half_line_moments() {
        let t = truncated_moments_1d(0.0, 1.0, 0.0, f64::INFINITY).unwrap();
        assert!((t.mass - 0.5).abs() < 1e-15);
        assert!((t.mean - 0.797_884_560_802_865_4).abs() < 1e-14);
        assert!((t.variance - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-14);
        let t = truncated_moments_1d(0.0, 1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!((t.mass, t.mean, t.variance), (1.0, 0.0, 1.0));
    }

    #[test]
    fn moments_match_quadrature() {
        for &(m, v, lo, hi) in &[
            (0.3f64, 2.0f64, -1.0f64, 0.5f64),
            (-1.0, 0.5, 0.2, 3.0),
            (2.0, 1.5, -4.0, -1.0),
            (0.0, 1.0, 1.0, 1.3),
        ] {
            let sd: f64 = v.sqrt();
            let dens = |x: f64| normal::pdf((x - m) / sd) / sd;
            let z = simpson(dens, lo, hi, 20_000);
            let mean = simpson(|x| x * dens(x), lo, hi, 20_000) / z;
            let var = simpson(|x| (x - mean).powi(2) * dens(x), lo, hi, 20_000) / z;
            let t = truncated_moments_1d(m, v, lo, hi).unwrap();
            assert!((t.mass - z).abs() < 1e-10 * z.max(1e-3), "{t:?} {z}");
            assert!((t.mean - mean).abs() < 1e-9);
            assert!((t.variance - var).abs() < 1e-8);
        }
    }

    #[test]
    fn deep_tail_interval() {
        // Quadrature in log space around the interval [10, 11].
        let t = truncated_moments_1d(0.0, 1.0, 10.0, 11.0).unwrap();
        let scaled = |x: f64| (-(x * x - 100.0) / 2.0).exp();
        let z = simpson(scaled, 10.0, 11.0, 20_000);
        let mean = simpson(|x| x * scaled(x), 10.0, 11.0, 20_000) / z;
        let log_mass = z.ln() - 50.0 - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((t.log_mass - log_mass).abs() < 1e-9);
        assert!((t.mass / 7.62e-24 - 1.0).abs() < 1e-2);
        assert!(t.mean > 10.0 && t.mean < 10.2);
        assert!((t.mean - mean).abs() < 1e-9);
    }

    #[test]
    fn underflow_is_flagged() {
        let t = truncated_moments_1d(0.0, 1.0, 50.0, f64::INFINITY).unwrap();
        assert!(t.underflow);
        assert_eq!(t.mass, 0.0);
        assert!(t.log_mass.is_finite() && t.log_mass < -1000.0);
        assert!(t.mean > 50.0 && t.mean < 50.05);
        let t = truncated_moments_1d(0.0, 1.0, f64::NEG_INFINITY, -50.0).unwrap();
        assert!(t.underflow && t.mean < -50.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(truncated_moments_1d(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(truncated_moments_1d(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(HalfSpace::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(PolyhedralRegion::new(2, vec![HalfSpace::new(vec![1.0], 0.0).unwrap()]).is_err());
        let mu = DVector::from_vec(vec![0.0, 0.0]);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = PolyhedralRegion::orthant_above(2, 0.0).unwrap();
        assert!(matches!(
            ep_region_moments(&mu, &bad, &r, &EpOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_constraint_is_exact() {
        let mu = DVector::from_vec(vec![0.4, -0.2]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8]);
        let normal = vec![0.6, 0.8];
        let region = PolyhedralRegion::new(2, vec![HalfSpace::new(normal.clone(), 0.7).unwrap()]).unwrap();
        let r = ep_region_moments(&mu, &sigma, &region, &EpOptions::default()).unwrap();
        let s_mean = 0.6 * 0.4 + 0.8 * -0.2;
        let s_var = 0.36 * 1.5 + 2.0 * 0.48 * 0.3 + 0.64 * 0.8;
        let exact = truncated_moments_1d(s_mean, s_var, 0.7, f64::INFINITY).unwrap();
        assert!(r.converged);
        assert!((r.log_mass - exact.log_mass).abs() < 1e-7, "{} {}", r.log_mass, exact.log_mass);
        let proj = 0.6 * r.mean[0] + 0.8 * r.mean[1];
        assert!((proj - exact.mean).abs() < 1e-6);
    }
}
