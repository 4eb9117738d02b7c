//! Synthetic additive-noise data: the cubic two-variable model with
//! power-transformed noise, random smooth edge functions built from Wiener
//! paths, and ANM sampling over arbitrary DAGs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::graph::Dag;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no random path reached nonlinearity {target} after {attempts} attempts")]
    TargetUnreachable { target: f64, attempts: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Number of abscissae of an [`EdgeFunction`] on `[-1, 1]`.
pub const GRID_POINTS: usize = 1000;
/// Resolution of the nonlinearity measure.
pub const NONLINEARITY_GRID: usize = 1001;
/// Path resamples before [`SimError::TargetUnreachable`].
pub const MAX_PATH_ATTEMPTS: usize = 50;
/// Second-difference penalty used to smooth Wiener paths.
pub const PATH_SMOOTHING: f64 = 1e7;

/// Deterministic RNG for one seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with stream indices into an independent seed
/// (splitmix64 finalizer applied per component).
pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    stream.iter().fold(mix(master), |acc, &s| mix(acc ^ mix(s)))
}

fn standard_normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn check_q(q: f64) -> Result<(), SimError> {
    if !(0.5..=2.0).contains(&q) {
        return Err(SimError::InvalidParameter(format!("exponent q={q} outside [0.5, 2]")));
    }
    Ok(())
}

/// `sgn(v) * |v|^q` elementwise.
pub fn transform_noise(nu: &[f64], q: f64) -> Vec<f64> {
    if q == 1.0 {
        return nu.to_vec();
    }
    nu.iter().map(|&v| v.signum() * v.abs().powf(q)).collect()
}

/// `X1 = e1`, `X2 = X1 + b X1^3 + e2` with power-transformed normal noise.
pub fn gen_cubic(n: usize, b: f64, q: f64, seed: u64) -> Result<Dataset, SimError> {
    if n < 10 {
        return Err(SimError::InvalidParameter(format!("n={n} below 10")));
    }
    if !(-1.0..=1.0).contains(&b) {
        return Err(SimError::InvalidParameter(format!("b={b} outside [-1, 1]")));
    }
    check_q(q)?;
    let mut rng = rng_from_seed(seed);
    let x1 = transform_noise(&standard_normals(&mut rng, n), q);
    let e2 = transform_noise(&standard_normals(&mut rng, n), q);
    let x2 = x1.iter().zip(&e2).map(|(&x, &e)| x + b * x * x * x + e).collect();
    Ok(Dataset::from_columns(vec![x1, x2], format!("cubic(b={b}, q={q}, n={n}, seed={seed})"))?)
}

fn uniform_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect()
}

/// Least-squares line through `(xs, ys)`: returns (slope, intercept).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Normalized distance of `f` from its best affine approximation on
/// `[-1, 1]`: the RMS residual of the discrete least-squares line over the
/// RMS deviation of `f` from its mean, both on a 1001-point grid. Ratios
/// below 1e-12 are reported as 0.
pub fn nonlinearity<F: Fn(f64) -> f64>(f: F) -> f64 {
    let xs = uniform_grid(NONLINEARITY_GRID);
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let (a, b) = linear_fit(&xs, &ys);
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let spread = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
    if spread < 1e-12 {
        return 0.0;
    }
    let misfit = (xs.iter().zip(&ys).map(|(x, y)| (y - a * x - b).powi(2)).sum::<f64>() / n).sqrt();
    let ratio = misfit / spread;
    // Affine inputs leave only rounding error in the residual.
    if ratio < 1e-12 {
        0.0
    } else {
        ratio
    }
}

/// Natural cubic spline second derivatives for equally spaced ordinates.
fn natural_spline_curvature(ys: &[f64], step: f64) -> Vec<f64> {
    let n = ys.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on m[i-1] + 4 m[i] + m[i+1] = rhs[i], i = 1..n-1.
    let inner = n - 2;
    let mut c = vec![0.0; inner];
    let mut d = vec![0.0; inner];
    for i in 0..inner {
        let rhs = 6.0 / (step * step) * (ys[i + 2] - 2.0 * ys[i + 1] + ys[i]);
        let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
        c[i] = 1.0 / denom;
        d[i] = (rhs - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..inner).rev() {
        let next = if i + 1 < inner { m[i + 2] } else { 0.0 };
        m[i + 1] = d[i] - c[i] * next;
    }
    m
}

/// Whittaker smoother: solves `(I + lambda D'D) z = y` with `D` the second
/// difference operator, via a banded Cholesky factorization.
fn whittaker_smooth(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    if n < 3 {
        return y.to_vec();
    }
    // Bands of D'D: main, first and second super-diagonal.
    let mut a0 = vec![6.0; n];
    let mut a1 = vec![-4.0; n - 1];
    let a2 = vec![1.0; n - 2];
    a0[0] = 1.0;
    a0[n - 1] = 1.0;
    a0[1] = 5.0;
    a0[n - 2] = 5.0;
    a1[0] = -2.0;
    a1[n - 2] = -2.0;
    if n == 3 {
        a0[1] = 4.0;
    }
    // Lower Cholesky factor with bands l0 (diagonal), l1, l2.
    let mut l0 = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for i in 0..n {
        if i >= 2 {
            l2[i] = lambda * a2[i - 2] / l0[i - 2];
        }
        if i >= 1 {
            let mut s = lambda * a1[i - 1];
            if i >= 2 {
                s -= l2[i] * l1[i - 1];
            }
            l1[i] = s / l0[i - 1];
        }
        let s = 1.0 + lambda * a0[i] - l1[i] * l1[i] - l2[i] * l2[i];
        l0[i] = s.sqrt();
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = y[i];
        if i >= 1 {
            s -= l1[i] * z[i - 1];
        }
        if i >= 2 {
            s -= l2[i] * z[i - 2];
        }
        z[i] = s / l0[i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        if i + 1 < n {
            s -= l1[i + 1] * z[i + 1];
        }
        if i + 2 < n {
            s -= l2[i + 2] * z[i + 2];
        }
        z[i] = s / l0[i];
    }
    z
}

/// A univariate function given by a natural cubic spline through ordinates
/// on a uniform grid over `[-1, 1]`, continued linearly outside with the
/// boundary value and slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeFunction {
    grid: Vec<f64>,
    ordinates: Vec<f64>,
    #[serde(skip)]
    curvature: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
    nonlinearity: f64,
}

impl EdgeFunction {
    pub fn identity() -> Self {
        let grid = uniform_grid(GRID_POINTS);
        EdgeFunction {
            ordinates: grid.clone(),
            curvature: vec![0.0; GRID_POINTS],
            grid,
            left_slope: 1.0,
            right_slope: 1.0,
            nonlinearity: 0.0,
        }
    }

    /// Spline through `f` sampled on the grid.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F) -> Self {
        let grid = uniform_grid(GRID_POINTS);
        let ordinates = grid.iter().map(|&x| f(x)).collect();
        Self::from_ordinates(ordinates)
    }

    fn from_ordinates(ordinates: Vec<f64>) -> Self {
        let grid = uniform_grid(GRID_POINTS);
        let step = 2.0 / (GRID_POINTS - 1) as f64;
        let curvature = natural_spline_curvature(&ordinates, step);
        let mut f = EdgeFunction { grid, ordinates, curvature, left_slope: 0.0, right_slope: 0.0, nonlinearity: 0.0 };
        f.set_boundary_slopes();
        f.nonlinearity = nonlinearity(|x| f.eval(x));
        f
    }

    fn set_boundary_slopes(&mut self) {
        let (y, m) = (&self.ordinates, &self.curvature);
        let last = y.len() - 1;
        let step = self.step();
        self.left_slope = (y[1] - y[0]) / step - step / 6.0 * (2.0 * m[0] + m[1]);
        self.right_slope = (y[last] - y[last - 1]) / step + step / 6.0 * (m[last - 1] + 2.0 * m[last]);
    }

    fn step(&self) -> f64 {
        2.0 / (self.grid.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.ordinates.len() - 1;
        if x < -1.0 {
            return self.ordinates[0] + self.left_slope * (x + 1.0);
        }
        if x > 1.0 {
            return self.ordinates[last] + self.right_slope * (x - 1.0);
        }
        let step = self.step();
        let i = (((x + 1.0) / step).floor() as usize).min(last - 1);
        let t = (x - self.grid[i]) / step;
        let s = 1.0 - t;
        let (y, m) = (&self.ordinates, &self.curvature);
        s * y[i] + t * y[i + 1] + step * step / 6.0 * ((s * s * s - s) * m[i] + (t * t * t - t) * m[i + 1])
    }

    /// Nonlinearity recorded at construction.
    pub fn nonlinearity(&self) -> f64 {
        self.nonlinearity
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    /// Slopes of the linear continuation below -1 and above 1.
    pub fn boundary_slopes(&self) -> (f64, f64) {
        (self.left_slope, self.right_slope)
    }

    /// `c f` with `c > 0` chosen so the ordinates span an interval of length 2.
    fn with_unit_range(mut self) -> EdgeFunction {
        let (lo, hi) =
            self.ordinates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let c = 2.0 / (hi - lo);
        if c == 1.0 || !c.is_finite() {
            return self;
        }
        self.ordinates.iter_mut().for_each(|y| *y *= c);
        self.curvature.iter_mut().for_each(|m| *m *= c);
        self.left_slope *= c;
        self.right_slope *= c;
        self.nonlinearity = nonlinearity(|x| self.eval(x));
        self
    }

    /// `(1 - lambda) x + lambda f(x)`.
    fn blend_with_identity(&self, lambda: f64) -> EdgeFunction {
        let ordinates = self.grid.iter().zip(&self.ordinates).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect();
        let curvature = self.curvature.iter().map(|m| lambda * m).collect();
        let mut f = EdgeFunction {
            grid: self.grid.clone(),
            ordinates,
            curvature,
            left_slope: 0.0,
            right_slope: 0.0,
            nonlinearity: 0.0,
        };
        f.set_boundary_slopes();
        f.nonlinearity = nonlinearity(|x| f.eval(x));
        f
    }
}

/// Smoothed Wiener path on the grid, rescaled to an ordinate range of 2.
fn wiener_path(rng: &mut impl Rng) -> EdgeFunction {
    let step = 2.0 / (GRID_POINTS - 1) as f64;
    let sd = step.sqrt();
    let mut path = Vec::with_capacity(GRID_POINTS);
    let mut level = 0.0;
    for _ in 0..GRID_POINTS {
        level += sd * rng.sample::<f64, _>(StandardNormal);
        path.push(level);
    }
    let (lo, hi) = path.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let scaled: Vec<f64> = path.iter().map(|v| 2.0 * (v - lo) / (hi - lo) - 1.0).collect();
    EdgeFunction::from_ordinates(whittaker_smooth(&scaled, PATH_SMOOTHING))
}

/// Random smooth edge function with nonlinearity `target_nl ± tol`.
pub fn gen_wiener_function(seed: u64, target_nl: f64, tol: f64) -> Result<EdgeFunction, SimError> {
    wiener_function(&mut rng_from_seed(seed), target_nl, tol)
}

/// Draws a Wiener-path function and blends it with the identity, choosing
/// the blend weight by bisection so the nonlinearity hits the target, then
/// rescales the result to an ordinate range of 2 on `[-1, 1]`.
pub fn wiener_function(rng: &mut impl Rng, target_nl: f64, tol: f64) -> Result<EdgeFunction, SimError> {
    if !(0.0..1.0).contains(&target_nl) || tol.is_nan() || tol <= 0.0 {
        return Err(SimError::InvalidParameter(format!("target nonlinearity {target_nl} with tolerance {tol}")));
    }
    if target_nl == 0.0 {
        return Ok(EdgeFunction::identity());
    }
    for _ in 0..MAX_PATH_ATTEMPTS {
        let path = wiener_path(rng);
        let (slope, _) = linear_fit(&path.grid, &path.ordinates);
        // With a negative trend the blend loses its linear part (and is
        // maximally nonlinear) at lambda = 1 / (1 - slope).
        let mut hi = if slope < 0.0 { 1.0 / (1.0 - slope) } else { 1.0 };
        let top = path.blend_with_identity(hi);
        if top.nonlinearity() < target_nl - tol {
            continue;
        }
        let mut lo = 0.0;
        let mut candidate = top;
        for _ in 0..200 {
            if (candidate.nonlinearity() - target_nl).abs() <= tol {
                return Ok(candidate.with_unit_range());
            }
            let mid = 0.5 * (lo + hi);
            candidate = path.blend_with_identity(mid);
            if candidate.nonlinearity() < target_nl {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Err(SimError::TargetUnreachable { target: target_nl, attempts: MAX_PATH_ATTEMPTS })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { sd: f64 },
    PowerTransformed { q: f64 },
}

impl NoiseSpec {
    fn validate(&self) -> Result<(), SimError> {
        match *self {
            NoiseSpec::Gaussian { sd } if !(sd > 0.0 && sd.is_finite()) => {
                Err(SimError::InvalidParameter(format!("noise sd {sd} must be positive")))
            }
            NoiseSpec::PowerTransformed { q } => check_q(q),
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let nu = standard_normals(rng, n);
        match *self {
            NoiseSpec::Gaussian { sd: 1.0 } => nu,
            NoiseSpec::Gaussian { sd } => nu.iter().map(|v| sd * v).collect(),
            NoiseSpec::PowerTransformed { q } => transform_noise(&nu, q),
        }
    }
}

/// Additive noise model: each node is the sum of one edge function per
/// parent plus independent noise.
#[derive(Debug, Clone, Serialize)]
pub struct AnmSpec {
    dag: Dag,
    /// Per node, (parent, function) pairs in increasing parent order.
    functions: Vec<Vec<(usize, EdgeFunction)>>,
    noise: Vec<NoiseSpec>,
}

impl AnmSpec {
    pub fn new(dag: Dag, functions: Vec<Vec<(usize, EdgeFunction)>>, noise: Vec<NoiseSpec>) -> Result<Self, SimError> {
        let d = dag.d();
        if functions.len() != d || noise.len() != d {
            return Err(SimError::InvalidParameter(format!(
                "{} function lists and {} noise specs for {d} nodes",
                functions.len(),
                noise.len()
            )));
        }
        for (node, fs) in functions.iter().enumerate() {
            let mut given: Vec<usize> = fs.iter().map(|(p, _)| *p).collect();
            given.sort_unstable();
            if given != dag.parents(node) {
                return Err(SimError::InvalidParameter(format!(
                    "node {node}: functions for {given:?}, parents are {:?}",
                    dag.parents(node)
                )));
            }
        }
        for spec in &noise {
            spec.validate()?;
        }
        Ok(AnmSpec { dag, functions, noise })
    }

    /// Random Wiener-path edge functions for every edge of `dag`, each with
    /// nonlinearity drawn uniformly from `[nl_lo, nl_hi]`.
    pub fn random(dag: Dag, nl_lo: f64, nl_hi: f64, noise: NoiseSpec, rng: &mut impl Rng) -> Result<Self, SimError> {
        let tol = random_function_tolerance(nl_lo, nl_hi)?;
        let functions = (0..dag.d())
            .map(|node| {
                dag.parents(node)
                    .into_iter()
                    .map(|p| {
                        let target = rng.random_range(nl_lo + tol..=nl_hi - tol);
                        wiener_function(rng, target, tol).map(|f| (p, f))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        AnmSpec::new(dag, functions, vec![noise; dag.d()])
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn functions(&self, node: usize) -> &[(usize, EdgeFunction)] {
        &self.functions[node]
    }
}

/// Bisection tolerance that keeps targets drawn from `[lo + tol, hi - tol]`
/// inside `[lo, hi]`.
fn random_function_tolerance(lo: f64, hi: f64) -> Result<f64, SimError> {
    if !(0.0 <= lo && lo <= hi && hi < 1.0) {
        return Err(SimError::InvalidParameter(format!("nonlinearity range [{lo}, {hi}]")));
    }
    Ok(((hi - lo) / 4.0).clamp(1e-6, 1e-3))
}

/// Draws `n` samples from the model, visiting nodes in topological order.
pub fn sample_anm(spec: &AnmSpec, n: usize, seed: u64) -> Result<Dataset, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter("n must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut columns: Vec<Vec<f64>> = spec.noise.iter().map(|s| s.draw(&mut rng, n)).collect();
    let order = spec.dag.topological_order().expect("validated DAG");
    for node in order {
        for (parent, f) in &spec.functions[node] {
            let contribution: Vec<f64> = columns[*parent].iter().map(|&x| f.eval(x)).collect();
            for (v, c) in columns[node].iter_mut().zip(contribution) {
                *v += c;
            }
        }
    }
    Ok(Dataset::from_columns(columns, format!("anm(d={}, n={n}, seed={seed})", spec.dag.d()))?)
}
