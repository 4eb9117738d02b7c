//! Nonparametric regression: tricube-weighted local polynomial smoothing
//! (LOESS) for a single predictor and backfitting of additive models for
//! several predictors.
//!
//! Every fit is expressed as an intercept (the response mean) plus centered
//! component functions, so residuals always average to zero.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("predictor {column} takes a single value")]
    DegenerateX { column: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid smoother configuration: {0}")]
    InvalidConfig(String),
}

/// Settings shared by the local polynomial and backfitting smoothers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmootherConfig {
    /// Fraction of the sample inside each local window.
    pub span: f64,
    /// Local polynomial degree for single-predictor fits.
    pub degree: usize,
    /// Local polynomial degree for backfitting components.
    pub backfit_degree: usize,
    pub backfit_max_iter: usize,
    /// Stop when the largest change of the fitted values, relative to their
    /// spread, drops below this.
    pub backfit_tol: f64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig { span: 0.5, degree: 2, backfit_degree: 2, backfit_max_iter: 20, backfit_tol: 1e-6 }
    }
}

impl SmootherConfig {
    fn validate(&self) -> Result<(), SmoothError> {
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(SmoothError::InvalidConfig(format!("span {} not in (0, 1]", self.span)));
        }
        for degree in [self.degree, self.backfit_degree] {
            if !(1..=2).contains(&degree) {
                return Err(SmoothError::InvalidConfig(format!("degree {degree} not in {{1, 2}}")));
            }
        }
        if self.backfit_tol.is_nan() || self.backfit_tol <= 0.0 || self.backfit_max_iter == 0 {
            return Err(SmoothError::InvalidConfig("backfit tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmootherKind {
    LocalPoly,
    AdditiveBackfit,
}

/// Minimum sample size for any fit.
pub const MIN_POINTS: usize = 10;

const RIDGE: f64 = 1e-10;

/// Equivalent-kernel weights of one local fit: the fitted value (and slope)
/// at the target equal the dot product of these weights with the responses
/// `targets[start..start + value.len()]`.
#[derive(Debug, Clone)]
struct LocalWeights {
    start: usize,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl LocalWeights {
    fn value_at(&self, targets: &[f64]) -> f64 {
        dot(&self.value, &targets[self.start..])
    }

    fn slope_at(&self, targets: &[f64]) -> f64 {
        dot(&self.slope, &targets[self.start..])
    }
}

fn dot(w: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Window of the `k` sorted abscissae nearest to `x0`.
fn nearest_window(xs: &[f64], x0: f64, k: usize) -> (usize, usize) {
    let n = xs.len();
    let mut lo = xs.partition_point(|&v| v < x0);
    let mut hi = lo;
    while hi - lo < k {
        let take_left = match (lo > 0, hi < n) {
            (true, true) => x0 - xs[lo - 1] <= xs[hi] - x0,
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        if take_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

fn tricube(u: f64) -> f64 {
    let a = u.abs();
    if a >= 1.0 {
        0.0
    } else {
        let t = 1.0 - a * a * a;
        t * t * t
    }
}

/// Solves `m x = e_j` for j = 0, 1 with a Cholesky factorization, adding a
/// small relative ridge when a pivot is (nearly) zero.
fn solve_unit_rhs(m: &[[f64; 3]; 3], size: usize) -> ([f64; 3], [f64; 3]) {
    let scale = (0..size).map(|i| m[i][i]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let factor = |ridge: f64| -> Option<[[f64; 3]; 3]> {
        let mut l = [[0.0; 3]; 3];
        for i in 0..size {
            for j in 0..=i {
                let mut s = m[i][j] + if i == j { ridge } else { 0.0 };
                for p in 0..j {
                    s -= l[i][p] * l[j][p];
                }
                if i == j {
                    if s <= RIDGE * scale {
                        return None;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        Some(l)
    };
    let l = factor(0.0)
        .or_else(|| factor(RIDGE * scale * 10.0))
        .or_else(|| factor(scale))
        .expect("ridge-regularized normal matrix is positive definite");
    let solve = |rhs: [f64; 3]| {
        let mut z = [0.0; 3];
        for i in 0..size {
            let mut s = rhs[i];
            for p in 0..i {
                s -= l[i][p] * z[p];
            }
            z[i] = s / l[i][i];
        }
        let mut x = [0.0; 3];
        for i in (0..size).rev() {
            let mut s = z[i];
            for p in i + 1..size {
                s -= l[p][i] * x[p];
            }
            x[i] = s / l[i][i];
        }
        x
    };
    (solve([1.0, 0.0, 0.0]), solve([0.0, 1.0, 0.0]))
}

/// Local polynomial fit weights at `x0` over sorted abscissae.
fn local_weights(xs: &[f64], x0: f64, k: usize, degree: usize) -> LocalWeights {
    let (lo, hi) = nearest_window(xs, x0, k);
    let window = &xs[lo..hi];
    let reach = (x0 - window[0]).max(window[window.len() - 1] - x0);
    // Local coordinates u = (x - x0) / h keep the normal matrix well scaled.
    let (h, kernel): (f64, Vec<f64>) = if reach > 0.0 {
        let h = reach * (1.0 + 1e-10);
        (h, window.iter().map(|&x| tricube((x - x0) / h)).collect())
    } else {
        (1.0, vec![1.0; window.len()])
    };
    let size = degree + 1;
    let mut m = [[0.0; 3]; 3];
    for (&x, &w) in window.iter().zip(&kernel) {
        let u = (x - x0) / h;
        let z = [1.0, u, u * u];
        for i in 0..size {
            for j in 0..=i {
                m[i][j] += w * z[i] * z[j];
            }
        }
    }
    for i in 0..size {
        for j in 0..i {
            m[j][i] = m[i][j];
        }
    }
    let (a, b) = solve_unit_rhs(&m, size);
    let mut value = Vec::with_capacity(window.len());
    let mut slope = Vec::with_capacity(window.len());
    for (&x, &w) in window.iter().zip(&kernel) {
        let u = (x - x0) / h;
        let z = [1.0, u, u * u];
        let za: f64 = (0..size).map(|i| a[i] * z[i]).sum();
        let zb: f64 = (0..size).map(|i| b[i] * z[i]).sum();
        value.push(w * za);
        slope.push(w * zb / h);
    }
    LocalWeights { start: lo, value, slope }
}

/// One univariate smooth term `g(x) - center` of a fitted model.
#[derive(Debug, Clone)]
struct Component {
    /// Training abscissae, sorted ascending.
    xs: Vec<f64>,
    /// Responses smoothed by this component, aligned with `xs`.
    targets: Vec<f64>,
    k: usize,
    degree: usize,
    center: f64,
    /// (value, slope) of the local fit at the smallest and largest abscissa.
    lower: (f64, f64),
    upper: (f64, f64),
}

impl Component {
    fn raw(&self, x: f64) -> f64 {
        let (x_min, x_max) = (self.xs[0], self.xs[self.xs.len() - 1]);
        if x < x_min {
            self.lower.0 + self.lower.1 * (x - x_min)
        } else if x > x_max {
            self.upper.0 + self.upper.1 * (x - x_max)
        } else {
            local_weights(&self.xs, x, self.k, self.degree).value_at(&self.targets)
        }
    }

    fn predict(&self, x: f64) -> f64 {
        self.raw(x) - self.center
    }
}

/// Smoother for one predictor with all training-point weights precomputed,
/// so repeated smoothing of different responses (as in backfitting) is a
/// sequence of dot products.
struct TrainedBasis {
    xs: Vec<f64>,
    /// `order[i]` is the original row of the `i`-th smallest abscissa.
    order: Vec<usize>,
    k: usize,
    degree: usize,
    /// Weights at each original row.
    hat: Vec<LocalWeights>,
}

impl TrainedBasis {
    fn new(x: &[f64], span: f64, degree: usize, column: usize) -> Result<Self, SmoothError> {
        let n = x.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        if xs[0] == xs[n - 1] {
            return Err(SmoothError::DegenerateX { column });
        }
        let k = ((span * n as f64).ceil() as usize).clamp((degree + 2).min(n), n);
        let hat = x.iter().map(|&x0| local_weights(&xs, x0, k, degree)).collect();
        Ok(TrainedBasis { xs, order, k, degree, hat })
    }

    /// Smooths `y` (original row order); returns the raw fitted values and
    /// the component able to evaluate the same smooth anywhere.
    fn smooth(&self, y: &[f64]) -> (Vec<f64>, Component) {
        let targets: Vec<f64> = self.order.iter().map(|&i| y[i]).collect();
        let raw: Vec<f64> = self.hat.iter().map(|w| w.value_at(&targets)).collect();
        let center = mean(&raw);
        let n = self.xs.len();
        let edge = |x0: f64| {
            let w = local_weights(&self.xs, x0, self.k, self.degree);
            (w.value_at(&targets), w.slope_at(&targets))
        };
        let component = Component {
            lower: edge(self.xs[0]),
            upper: edge(self.xs[n - 1]),
            xs: self.xs.clone(),
            targets,
            k: self.k,
            degree: self.degree,
            center,
        };
        let fitted = raw.iter().map(|r| r - center).collect();
        (fitted, component)
    }
}

/// A fitted regression surface `intercept + sum_j g_j(x_j)`.
#[derive(Debug, Clone)]
pub struct FittedSmoother {
    kind: SmootherKind,
    config: SmootherConfig,
    intercept: f64,
    components: Vec<Component>,
    fitted: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl FittedSmoother {
    pub fn kind(&self) -> SmootherKind {
        self.kind
    }

    pub fn config(&self) -> &SmootherConfig {
        &self.config
    }

    /// Mean of the training response.
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn predictors(&self) -> usize {
        self.components.len()
    }

    /// Fitted values at the training rows.
    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Centered value of component `j` at `x`.
    pub fn component(&self, j: usize, x: f64) -> f64 {
        self.components[j].predict(x)
    }

    /// Prediction at one point given as one value per predictor.
    pub fn predict_point(&self, point: &[f64]) -> f64 {
        self.intercept + self.components.iter().zip(point).map(|(c, &x)| c.predict(x)).sum::<f64>()
    }

    /// Predictions for predictor columns `x` (each of the same length).
    pub fn predict(&self, x: &[&[f64]]) -> Result<Vec<f64>, SmoothError> {
        let n = check_columns(x, self.predictors())?;
        let mut point = vec![0.0; x.len()];
        Ok((0..n)
            .map(|i| {
                for (p, col) in point.iter_mut().zip(x) {
                    *p = col[i];
                }
                self.predict_point(&point)
            })
            .collect())
    }
}

fn check_columns(x: &[&[f64]], expected: usize) -> Result<usize, SmoothError> {
    if x.len() != expected {
        return Err(SmoothError::ShapeMismatch(format!("{} predictor columns, fit has {expected}", x.len())));
    }
    let n = x.first().map_or(0, |c| c.len());
    if x.iter().any(|c| c.len() != n) {
        return Err(SmoothError::ShapeMismatch("predictor columns differ in length".into()));
    }
    Ok(n)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Tricube-weighted local polynomial regression of `y` on `x`.
pub fn fit_local_poly(x: &[f64], y: &[f64], config: &SmootherConfig) -> Result<FittedSmoother, SmoothError> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(SmoothError::ShapeMismatch(format!("x has {} rows, y has {}", x.len(), y.len())));
    }
    if x.len() < MIN_POINTS {
        return Err(SmoothError::TooFewPoints { needed: MIN_POINTS, got: x.len() });
    }
    let basis = TrainedBasis::new(x, config.span, config.degree, 0)?;
    let intercept = mean(y);
    let (component_fit, component) = basis.smooth(y);
    let fitted = component_fit.iter().map(|g| intercept + g).collect();
    Ok(FittedSmoother {
        kind: SmootherKind::LocalPoly,
        config: *config,
        intercept,
        components: vec![component],
        fitted,
        iterations: 1,
        converged: true,
    })
}

/// Additive model `y ~ a + sum_j g_j(x_j)` fitted by backfitting with
/// local polynomial component smoothers. One predictor delegates to
/// [`fit_local_poly`].
pub fn fit_additive(x: &[&[f64]], y: &[f64], config: &SmootherConfig) -> Result<FittedSmoother, SmoothError> {
    config.validate()?;
    let p = x.len();
    if p == 0 {
        return Err(SmoothError::ShapeMismatch("no predictors".into()));
    }
    if p == 1 {
        return fit_local_poly(x[0], y, config);
    }
    let n = check_columns(x, p)?;
    if n != y.len() {
        return Err(SmoothError::ShapeMismatch(format!("predictors have {n} rows, y has {}", y.len())));
    }
    let needed = MIN_POINTS * p;
    if n < needed {
        return Err(SmoothError::TooFewPoints { needed, got: n });
    }
    let bases = x
        .iter()
        .enumerate()
        .map(|(j, col)| TrainedBasis::new(col, config.span, config.backfit_degree, j))
        .collect::<Result<Vec<_>, _>>()?;

    let intercept = mean(y);
    let mut parts: Vec<Vec<f64>> = vec![vec![0.0; n]; p];
    let mut components: Vec<Option<Component>> = vec![None; p];
    let mut partial = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.backfit_max_iter {
        iterations += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            for i in 0..n {
                let others: f64 = (0..p).filter(|&l| l != j).map(|l| parts[l][i]).sum();
                partial[i] = y[i] - intercept - others;
            }
            let (fresh, component) = bases[j].smooth(&partial);
            for (old, new) in parts[j].iter().zip(&fresh) {
                max_change = max_change.max((new - old).abs());
            }
            parts[j] = fresh;
            components[j] = Some(component);
        }
        let spread = (0..n).map(|i| parts.iter().map(|g| g[i]).sum::<f64>().abs()).fold(0.0, f64::max);
        if max_change <= config.backfit_tol * spread {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("backfitting stopped after {iterations} iterations without converging");
    }
    let components: Vec<Component> = components.into_iter().map(|c| c.expect("every component fitted")).collect();
    let fitted = (0..n).map(|i| intercept + parts.iter().map(|g| g[i]).sum::<f64>()).collect();
    Ok(FittedSmoother {
        kind: SmootherKind::AdditiveBackfit,
        config: *config,
        intercept,
        components,
        fitted,
        iterations,
        converged,
    })
}

/// `y - predict(x)`.
pub fn residuals(fit: &FittedSmoother, x: &[&[f64]], y: &[f64]) -> Result<Vec<f64>, SmoothError> {
    let predicted = fit.predict(x)?;
    if predicted.len() != y.len() {
        return Err(SmoothError::ShapeMismatch(format!("{} predictor rows, y has {}", predicted.len(), y.len())));
    }
    Ok(y.iter().zip(&predicted).map(|(a, b)| a - b).collect())
}
