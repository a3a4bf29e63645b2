//! Gaussian-process surrogate: squared-exponential plus bias kernel, exact
//! inference through a jittered Cholesky factor, and type-II maximum
//! likelihood fitting with random restarts.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{lbfgsb_minimize, BoxDomain};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Observed inputs (one row per point) and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("a dataset needs at least one observation"));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let dim = inputs[0].len();
        if dim == 0 {
            return Err(Error::invalid("inputs must have at least one dimension"));
        }
        let mut flat = Vec::with_capacity(dim * inputs.len());
        for (i, row) in inputs.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "input row {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        if flat.iter().chain(&outputs).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset entries must be finite"));
        }
        Ok(Dataset {
            dim,
            inputs: flat,
            outputs,
        })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.inputs.chunks_exact(self.dim)
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Inputs as an N×q matrix.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.inputs)
    }

    /// Smallest observed output (η).
    pub fn best_output(&self) -> f64 {
        self.outputs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, &y) in self.outputs.iter().enumerate() {
            if y < self.outputs[best] {
                best = i;
            }
        }
        best
    }

    /// A new dataset with one more observation.
    pub fn with_observation(&self, x: &[f64], y: f64) -> Result<Dataset> {
        if x.len() != self.dim || !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation must be finite and match the dimension"));
        }
        let mut next = self.clone();
        next.inputs.extend_from_slice(x);
        next.outputs.push(y);
        Ok(next)
    }

    pub fn check_domain(&self, domain: &BoxDomain) -> Result<()> {
        if domain.dim() != self.dim {
            return Err(Error::invalid("dataset and domain dimensions differ"));
        }
        for (i, p) in self.points().enumerate() {
            if !domain.contains_approx(p) {
                return Err(Error::invalid(format!("input row {i} lies outside the domain")));
            }
        }
        Ok(())
    }
}

/// Squared-exponential plus constant (bias) covariance with Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub bias_variance: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn new(
        signal_variance: f64,
        lengthscales: Vec<f64>,
        bias_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let spec = KernelSpec {
            signal_variance,
            lengthscales,
            bias_variance,
            noise_variance,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let finite = self.signal_variance.is_finite()
            && self.bias_variance.is_finite()
            && self.noise_variance.is_finite()
            && self.lengthscales.iter().all(|l| l.is_finite());
        if !finite
            || self.signal_variance <= 0.0
            || self.bias_variance < 0.0
            || self.noise_variance < 0.0
            || self.lengthscales.is_empty()
            || self.lengthscales.iter().any(|&l| l <= 0.0)
        {
            return Err(Error::invalid(format!("invalid kernel hyperparameters {self:?}")));
        }
        Ok(())
    }

    pub fn is_isotropic(&self) -> bool {
        self.lengthscales.len() == 1
    }

    /// Lengthscale along axis `i`; a single lengthscale is shared by all axes.
    #[inline]
    pub fn lengthscale(&self, i: usize) -> f64 {
        if self.lengthscales.len() == 1 {
            self.lengthscales[0]
        } else {
            self.lengthscales[i]
        }
    }

    fn check_dim(&self, q: usize) -> Result<()> {
        if self.lengthscales.len() == 1 || self.lengthscales.len() == q {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "kernel has {} lengthscales but points have dimension {q}",
                self.lengthscales.len()
            )))
        }
    }

    /// k(x1, x2) = s·exp(-½ Σ ((x1ᵢ-x2ᵢ)/ℓᵢ)²) + b
    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        if x1.len() != x2.len() {
            return Err(Error::invalid("kernel arguments differ in dimension"));
        }
        self.check_dim(x1.len())?;
        Ok(self.k(x1, x2))
    }

    /// Squared-exponential part only.
    #[inline]
    pub(crate) fn se(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for i in 0..x1.len() {
            let d = (x1[i] - x2[i]) / self.lengthscale(i);
            r2 += d * d;
        }
        self.signal_variance * (-0.5 * r2).exp()
    }

    #[inline]
    pub(crate) fn k(&self, x1: &[f64], x2: &[f64]) -> f64 {
        self.se(x1, x2) + self.bias_variance
    }

    pub fn prior_variance(&self) -> f64 {
        self.signal_variance + self.bias_variance
    }
}

/// Joint posterior of the latent function at a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// A GP conditioned on a dataset. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    dataset: Dataset,
    kernel: KernelSpec,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    /// Row-major copy of the lower factor for allocation-light solves.
    factor: Vec<f64>,
    alpha: DVector<f64>,
}

fn factorize(
    dataset: &Dataset,
    kernel: &KernelSpec,
) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let n = dataset.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.k(dataset.point(i), dataset.point(j));
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let mut jitter = 1e-8 * kernel.signal_variance;
    for _ in 0..4 {
        let mut system = gram.clone();
        for i in 0..n {
            system[(i, i)] += kernel.noise_variance + jitter;
        }
        if let Some(chol) = Cholesky::new(system) {
            if chol.l_dirty().diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
                return Some((chol, jitter));
            }
        }
        jitter *= 10.0;
    }
    None
}

impl GpModel {
    /// Condition the kernel on `dataset` (no hyperparameter search).
    pub fn new(dataset: Dataset, kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        kernel.check_dim(dataset.dim())?;
        let (chol, jitter) = factorize(&dataset, &kernel).ok_or_else(|| {
            Error::NotPositiveDefinite("kernel matrix could not be factorised".into())
        })?;
        let y = DVector::from_column_slice(dataset.outputs());
        let alpha = chol.solve(&y);
        let l = chol.l();
        let n = dataset.len();
        let mut factor = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                factor[i * n + j] = l[(i, j)];
            }
        }
        Ok(GpModel {
            dataset,
            kernel,
            jitter,
            chol,
            factor,
            alpha,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Negative log marginal likelihood of the outputs.
    pub fn nlml(&self) -> f64 {
        let y = DVector::from_column_slice(self.dataset.outputs());
        let logdet: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        0.5 * y.dot(&self.alpha) + logdet + 0.5 * self.dataset.len() as f64 * LN_2PI
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "query point has dimension {}, model has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Forward substitution `L v = k` on the cached factor.
    fn solve_lower(&self, k: &mut [f64]) {
        let n = k.len();
        for i in 0..n {
            let row = &self.factor[i * n..i * n + i];
            let mut s = k[i];
            for (lij, vj) in row.iter().zip(k.iter()) {
                s -= lij * vj;
            }
            k[i] = s / self.factor[i * n + i];
        }
    }

    /// Marginal posterior mean and variance at one point.
    pub fn predict_point(&self, x: &[f64]) -> (f64, f64) {
        let mut kx: Vec<f64> = self.dataset.points().map(|p| self.kernel.k(x, p)).collect();
        let mean: f64 = kx.iter().zip(self.alpha.iter()).map(|(a, b)| a * b).sum();
        self.solve_lower(&mut kx);
        let reduction: f64 = kx.iter().map(|v| v * v).sum();
        let var = (self.kernel.prior_variance() - reduction).max(0.0);
        (mean, var)
    }

    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.dataset
            .points()
            .zip(self.alpha.iter())
            .map(|(p, a)| a * self.kernel.k(x, p))
            .sum()
    }

    /// Joint posterior at `query` (full cross-covariance).
    pub fn predict(&self, query: &[Vec<f64>]) -> Result<Prediction> {
        for x in query {
            self.check_query(x)?;
        }
        let n = self.dataset.len();
        let m = query.len();
        let cross = DMatrix::from_fn(n, m, |i, j| self.kernel.k(self.dataset.point(i), &query[j]));
        let mean = cross.transpose() * &self.alpha;
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&cross)
            .ok_or_else(|| Error::NotPositiveDefinite("singular factor".into()))?;
        let mut covariance = DMatrix::from_fn(m, m, |i, j| self.kernel.k(&query[i], &query[j]));
        covariance -= v.transpose() * &v;
        // Exact symmetry, and no negative round-off on the diagonal.
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
                covariance[(i, j)] = s;
                covariance[(j, i)] = s;
            }
            covariance[(i, i)] = covariance[(i, i)].max(0.0);
        }
        Ok(Prediction { mean, covariance })
    }

    /// ∇μ(x).
    pub fn mean_gradient(&self, x: &[f64]) -> Vec<f64> {
        let q = self.dim();
        let mut g = vec![0.0; q];
        for (p, a) in self.dataset.points().zip(self.alpha.iter()) {
            let w = a * self.kernel.se(x, p);
            for i in 0..q {
                let l = self.kernel.lengthscale(i);
                g[i] -= w * (x[i] - p[i]) / (l * l);
            }
        }
        g
    }

    /// Hessian of μ at x, row-major q×q.
    pub fn mean_hessian(&self, x: &[f64]) -> Vec<f64> {
        let q = self.dim();
        let mut h = vec![0.0; q * q];
        for (p, a) in self.dataset.points().zip(self.alpha.iter()) {
            let w = a * self.kernel.se(x, p);
            for i in 0..q {
                let li2 = self.kernel.lengthscale(i).powi(2);
                let di = (x[i] - p[i]) / li2;
                for j in 0..q {
                    let lj2 = self.kernel.lengthscale(j).powi(2);
                    let dj = (x[j] - p[j]) / lj2;
                    let diag = if i == j { 1.0 / li2 } else { 0.0 };
                    h[i * q + j] += w * (di * dj - diag);
                }
            }
        }
        h
    }

    /// Posterior mean, variance and their gradients at x.
    pub fn predict_with_gradients(&self, x: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let q = self.dim();
        let n = self.dataset.len();
        let kx: Vec<f64> = self.dataset.points().map(|p| self.kernel.k(x, p)).collect();
        let mean: f64 = kx.iter().zip(self.alpha.iter()).map(|(a, b)| a * b).sum();
        let kinv_k = self.chol.solve(&DVector::from_column_slice(&kx));
        let var = (self.kernel.prior_variance() - kx.iter().zip(kinv_k.iter()).map(|(a, b)| a * b).sum::<f64>())
            .max(0.0);
        let mut dmean = vec![0.0; q];
        let mut dvar = vec![0.0; q];
        for i in 0..n {
            let p = self.dataset.point(i);
            let se = self.kernel.se(x, p);
            for d in 0..q {
                let l = self.kernel.lengthscale(d);
                let dk = -se * (x[d] - p[d]) / (l * l);
                dmean[d] += self.alpha[i] * dk;
                dvar[d] -= 2.0 * kinv_k[i] * dk;
            }
        }
        (mean, var, dmean, dvar)
    }
}

/// Options of the marginal-likelihood search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    /// Quasi-Newton iterations per restart.
    pub max_iters: usize,
    /// One lengthscale per input dimension instead of a shared one.
    pub ard: bool,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 5,
            max_iters: 1000,
            ard: false,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn with_restarts(restarts: usize) -> Self {
        FitOptions {
            restarts,
            ..Default::default()
        }
    }
}

/// Log-space box for the hyperparameters `[ln s, ln ℓ…, ln b, ln σ²]`.
#[derive(Debug, Clone)]
pub struct HyperBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    n_lengthscales: usize,
}

impl HyperBounds {
    pub fn new(dataset: &Dataset, domain: &BoxDomain, ard: bool) -> Self {
        let y = dataset.outputs();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        // Constant outputs carry no spread; fall back to their magnitude so the
        // bias term can still represent the offset.
        let scale = if var > 1e-12 * mean * mean && var > 0.0 {
            var
        } else {
            (mean * mean).max(1e-12)
        };
        let sides = domain.sides();
        let (l_lo, l_hi): (Vec<f64>, Vec<f64>) = if ard {
            sides.iter().map(|s| (1e-3 * s, 10.0 * s)).unzip()
        } else {
            let min = sides.iter().copied().fold(f64::INFINITY, f64::min);
            let max = sides.iter().copied().fold(0.0, f64::max);
            (vec![1e-3 * min], vec![10.0 * max])
        };
        let v_lo = (1e-6 * scale).ln();
        let v_hi = (1e3 * scale).ln();
        let mut lower = vec![v_lo];
        let mut upper = vec![v_hi];
        lower.extend(l_lo.iter().map(|v| v.ln()));
        upper.extend(l_hi.iter().map(|v| v.ln()));
        lower.extend([v_lo, v_lo]);
        upper.extend([v_hi, v_hi]);
        HyperBounds {
            lower,
            upper,
            n_lengthscales: l_lo.len(),
        }
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::new(self.lower.clone(), self.upper.clone()).expect("bounds are ordered")
    }

    pub fn decode(&self, theta: &[f64]) -> KernelSpec {
        let p = self.n_lengthscales;
        KernelSpec {
            signal_variance: theta[0].exp(),
            lengthscales: theta[1..1 + p].iter().map(|v| v.exp()).collect(),
            bias_variance: theta[1 + p].exp(),
            noise_variance: theta[2 + p].exp(),
        }
    }

    pub fn encode(&self, kernel: &KernelSpec) -> Vec<f64> {
        let mut theta = vec![kernel.signal_variance.ln()];
        theta.extend(kernel.lengthscales.iter().map(|l| l.ln()));
        theta.push(kernel.bias_variance.ln());
        theta.push(kernel.noise_variance.ln());
        theta
    }
}

/// Negative log marginal likelihood and its gradient w.r.t. the log
/// hyperparameters. Non-finite when the system cannot be factorised.
pub fn nlml_with_gradient(dataset: &Dataset, bounds: &HyperBounds, theta: &[f64]) -> (f64, Vec<f64>) {
    let kernel = bounds.decode(theta);
    let n = dataset.len();
    let q = dataset.dim();
    let p = bounds.n_lengthscales;
    let fail = (f64::INFINITY, vec![f64::NAN; theta.len()]);
    let Some((chol, _)) = factorize(dataset, &kernel) else {
        return fail;
    };
    let y = DVector::from_column_slice(dataset.outputs());
    let alpha = chol.solve(&y);
    let logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    let value = 0.5 * y.dot(&alpha) + logdet + 0.5 * n as f64 * LN_2PI;
    if !value.is_finite() {
        return fail;
    }
    // W = K⁻¹ - ααᵀ;  ∂NLML/∂θ = ½ tr(W ∂K/∂θ)
    let mut w = chol.inverse();
    w -= &alpha * alpha.transpose();

    let mut grad = vec![0.0; theta.len()];
    for i in 0..n {
        let xi = dataset.point(i);
        for j in 0..n {
            let wij = w[(i, j)];
            let xj = dataset.point(j);
            let se = kernel.se(xi, xj);
            grad[0] += wij * se;
            if p == 1 {
                let l2 = kernel.lengthscales[0].powi(2);
                let r2: f64 = (0..q).map(|d| (xi[d] - xj[d]).powi(2)).sum::<f64>() / l2;
                grad[1] += wij * se * r2;
            } else {
                for d in 0..q {
                    let r2 = (xi[d] - xj[d]).powi(2) / kernel.lengthscales[d].powi(2);
                    grad[1 + d] += wij * se * r2;
                }
            }
            grad[1 + p] += wij * kernel.bias_variance;
        }
        grad[2 + p] += w[(i, i)] * kernel.noise_variance;
    }
    for g in grad.iter_mut() {
        *g *= 0.5;
    }
    (value, grad)
}

/// Fit hyperparameters by minimising the negative log marginal likelihood
/// from `opts.restarts` log-uniform random starts; keeps the best.
pub fn fit(dataset: &Dataset, domain: &BoxDomain, opts: &FitOptions) -> Result<GpModel> {
    if opts.restarts == 0 {
        return Err(Error::invalid("fit needs at least one restart"));
    }
    dataset.check_domain(domain)?;
    let bounds = HyperBounds::new(dataset, domain, opts.ard && domain.dim() > 1);
    let box_theta = bounds.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut failures = Vec::new();
    for r in 0..opts.restarts {
        let start: Vec<f64> = bounds
            .lower
            .iter()
            .zip(&bounds.upper)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect();
        let outcome = lbfgsb_minimize(
            |theta: &[f64]| nlml_with_gradient(dataset, &bounds, theta),
            &box_theta,
            &start,
            opts.max_iters,
        );
        match outcome {
            Ok(report) if report.best_value.is_finite() => {
                if best.as_ref().is_none_or(|(v, _)| report.best_value < *v) {
                    best = Some((report.best_value, report.best_point));
                }
            }
            Ok(report) => failures.push(format!("restart {r}: value {}", report.best_value)),
            Err(e) => failures.push(format!("restart {r}: {e}")),
        }
    }
    let (_, theta) = best.ok_or_else(|| Error::FittingFailed {
        restarts: opts.restarts,
        diagnostics: failures.join("; "),
    })?;
    GpModel::new(dataset.clone(), bounds.decode(&theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(sv: f64, l: f64, bv: f64, nv: f64) -> KernelSpec {
        KernelSpec::new(sv, vec![l], bv, nv).unwrap()
    }

    #[test]
    fn kernel_values() {
        let k = kernel(2.0, 1.0, 0.5, 0.0);
        assert_eq!(k.eval(&[0.3], &[0.3]).unwrap(), 2.5);
        assert!((k.eval(&[0.0], &[1e6]).unwrap() - 0.5).abs() < 1e-15);
        let k = kernel(1.0, 1.0, 0.0, 0.0);
        assert!((k.eval(&[0.0], &[1.0]).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(k.eval(&[0.2, 1.0], &[1.0, 0.2]).unwrap(), k.eval(&[1.0, 0.2], &[0.2, 1.0]).unwrap());
    }

    #[test]
    fn kernel_dimension_mismatch() {
        let k = KernelSpec::new(1.0, vec![1.0, 2.0], 0.0, 0.0).unwrap();
        assert!(matches!(k.eval(&[0.0], &[1.0, 2.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(k.eval(&[0.0; 3], &[1.0; 3]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        assert!(KernelSpec::new(0.0, vec![1.0], 0.0, 0.0).is_err());
        assert!(KernelSpec::new(1.0, vec![-1.0], 0.0, 0.0).is_err());
        assert!(KernelSpec::new(1.0, vec![1.0], -0.1, 0.0).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![0.0]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![1.0]).is_err());
        assert!(Dataset::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0, 2.0]).is_err());
        let d = Dataset::new(vec![vec![0.0], vec![2.0]], vec![1.0, -1.0]).unwrap();
        let dom = BoxDomain::cube(0.0, 1.0, 1).unwrap();
        assert!(d.check_domain(&dom).is_err());
        assert_eq!(d.best_output(), -1.0);
    }

    #[test]
    fn noiseless_interpolation() {
        let d = Dataset::new(vec![vec![0.1], vec![0.5], vec![0.9]], vec![1.0, -2.0, 0.5]).unwrap();
        let m = GpModel::new(d, kernel(1.0, 0.3, 0.0, 0.0)).unwrap();
        for (x, y) in [(0.1, 1.0), (0.5, -2.0), (0.9, 0.5)] {
            let (mu, _) = m.predict_point(&[x]);
            assert!((mu - y).abs() < 1e-6, "{mu} vs {y}");
        }
    }

    #[test]
    fn prior_reversion_far_from_data() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0]], vec![3.0, 4.0]).unwrap();
        let m = GpModel::new(d, kernel(1.5, 0.2, 0.25, 1e-3)).unwrap();
        let (mu, var) = m.predict_point(&[1e3]);
        // bias correlates with the data: mean reverts to the bias projection,
        // which is 0 only without bias.
        assert!(var <= 1.75 + 1e-8);
        let m = GpModel::new(m.dataset().clone(), kernel(1.5, 0.2, 0.0, 1e-3)).unwrap();
        let (mu2, var2) = m.predict_point(&[1e3]);
        assert!(mu2.abs() < 1e-6);
        assert!((var2 - 1.5).abs() < 1e-6);
        assert!(mu.is_finite());
    }

    #[test]
    fn matches_dense_solve_oracle() {
        let x = [vec![0.2], vec![0.7]];
        let y = [0.4, -1.1];
        let k = kernel(1.3, 0.4, 0.2, 0.05);
        let m = GpModel::new(Dataset::new(x.to_vec(), y.to_vec()).unwrap(), k.clone()).unwrap();
        // Dense oracle: explicit inverse of the 2x2 system.
        let jit = m.jitter();
        let kxx = |a: &[f64], b: &[f64]| k.eval(a, b).unwrap();
        let a = kxx(&x[0], &x[0]) + 0.05 + jit;
        let b = kxx(&x[0], &x[1]);
        let d = kxx(&x[1], &x[1]) + 0.05 + jit;
        let det = a * d - b * b;
        let inv = [[d / det, -b / det], [-b / det, a / det]];
        let q = [vec![0.1], vec![0.45], vec![1.3]];
        let pred = m.predict(&q).unwrap();
        for i in 0..3 {
            let ki = [kxx(&x[0], &q[i]), kxx(&x[1], &q[i])];
            let w = [inv[0][0] * y[0] + inv[0][1] * y[1], inv[1][0] * y[0] + inv[1][1] * y[1]];
            let mean = ki[0] * w[0] + ki[1] * w[1];
            assert!((pred.mean[i] - mean).abs() < 1e-10);
            for j in 0..3 {
                let kj = [kxx(&x[0], &q[j]), kxx(&x[1], &q[j])];
                let quad = ki[0] * (inv[0][0] * kj[0] + inv[0][1] * kj[1])
                    + ki[1] * (inv[1][0] * kj[0] + inv[1][1] * kj[1]);
                let cov = kxx(&q[i], &q[j]) - quad;
                assert!((pred.covariance[(i, j)] - cov).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_of_nlml_matches_finite_differences() {
        let d = Dataset::new(
            vec![vec![0.1, 0.2], vec![0.5, 0.9], vec![0.8, 0.4], vec![0.3, 0.6]],
            vec![1.0, -0.3, 0.7, 0.2],
        )
        .unwrap();
        let dom = BoxDomain::cube(0.0, 1.0, 2).unwrap();
        for ard in [false, true] {
            let b = HyperBounds::new(&d, &dom, ard);
            let theta: Vec<f64> = b.lower.iter().zip(&b.upper).map(|(l, u)| 0.4 * l + 0.6 * u).collect();
            let (_, g) = nlml_with_gradient(&d, &b, &theta);
            for k in 0..theta.len() {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += 1e-6;
                tm[k] -= 1e-6;
                let fd = (nlml_with_gradient(&d, &b, &tp).0 - nlml_with_gradient(&d, &b, &tm).0) / 2e-6;
                assert!((fd - g[k]).abs() < 1e-4 * fd.abs().max(1.0), "k={k} fd={fd} an={}", g[k]);
            }
        }
    }

    #[test]
    fn zero_restarts_rejected() {
        let d = Dataset::new(vec![vec![0.5]], vec![1.0]).unwrap();
        let dom = BoxDomain::cube(0.0, 1.0, 1).unwrap();
        assert!(fit(&d, &dom, &FitOptions::with_restarts(0)).is_err());
    }
}
