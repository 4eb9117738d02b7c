//! Penalized log-likelihood scores of candidate DAGs.
//!
//! For each node the response is regressed on its parents, a density is
//! estimated from the residuals, and the node contributes the mean
//! log-density of its residuals. A DAG scores the sum over nodes minus
//! `edge_count * a_n`. Node contributions depend only on the node and its
//! parent set, so a [`Scorer`] caches them and reuses them across DAGs.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::density::{fit_density, DensityConfig, DensityError, DensityModel};
use crate::graph::Dag;
use crate::smooth::{fit_additive, fit_local_poly, SmoothError, SmootherConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("node {node} with parents {parents:?}: {source}")]
    Smooth { node: usize, parents: Vec<usize>, source: SmoothError },
    #[error("node {node} with parents {parents:?}: {source}")]
    Density { node: usize, parents: Vec<usize>, source: DensityError },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("graph has {dag} nodes but data has {data} columns")]
    DimensionMismatch { dag: usize, data: usize },
}

/// Rule for the per-edge penalty `a_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyRule {
    /// `1 / ln n`
    InvLogN,
    /// `1 / sqrt(n)`
    InvSqrtN,
    Fixed(f64),
    None,
}

impl PenaltyRule {
    pub fn rate(&self, n: f64) -> f64 {
        match *self {
            PenaltyRule::InvLogN => 1.0 / n.ln(),
            PenaltyRule::InvSqrtN => 1.0 / n.sqrt(),
            PenaltyRule::Fixed(a) => a,
            PenaltyRule::None => 0.0,
        }
    }
}

impl fmt::Display for PenaltyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyRule::InvLogN => write!(f, "logn"),
            PenaltyRule::InvSqrtN => write!(f, "sqrtn"),
            PenaltyRule::Fixed(a) => write!(f, "{a}"),
            PenaltyRule::None => write!(f, "none"),
        }
    }
}

impl std::str::FromStr for PenaltyRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logn" => Ok(PenaltyRule::InvLogN),
            "sqrtn" => Ok(PenaltyRule::InvSqrtN),
            "none" => Ok(PenaltyRule::None),
            other => match other.parse::<f64>() {
                Ok(a) if a >= 0.0 && a.is_finite() => Ok(PenaltyRule::Fixed(a)),
                _ => Err(format!("unknown penalty '{s}' (expected sqrtn, logn, none or a nonnegative number)")),
            },
        }
    }
}

impl Serialize for PenaltyRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PenaltyRule::Fixed(a) => serializer.serialize_f64(*a),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

/// Penalty term `edges * a_n`.
pub fn penalty(n: f64, edges: usize, rule: PenaltyRule) -> f64 {
    if edges == 0 {
        return 0.0;
    }
    edges as f64 * rule.rate(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreConfig {
    pub smoother: SmootherConfig,
    pub density: DensityConfig,
    pub penalty: PenaltyRule,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            smoother: SmootherConfig::default(),
            density: DensityConfig::default(),
            penalty: PenaltyRule::InvSqrtN,
        }
    }
}

/// Fitted contribution of one node given its parents.
#[derive(Debug, Clone)]
pub struct FamilyFit {
    pub node: usize,
    pub parents: Vec<usize>,
    pub residuals: Vec<f64>,
    pub density: DensityModel,
    /// Mean log-density of the residuals.
    pub loglik: f64,
}

/// Penalized score of one DAG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub loglik: f64,
    pub penalty: f64,
    pub total: f64,
    pub edges: usize,
}

type Slot = Arc<OnceLock<Result<Arc<FamilyFit>, ScoreError>>>;

/// Family fits keyed by (node, parent bitmask). Each key is fitted at most
/// once, even under concurrent requests.
#[derive(Default)]
pub struct FamilyCache {
    slots: Mutex<HashMap<(usize, u64), Slot>>,
    fits: AtomicUsize,
}

impl FamilyCache {
    /// Number of family fits actually computed.
    pub fn fit_count(&self) -> usize {
        self.fits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.slots.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scoring session bound to one dataset and one configuration.
pub struct Scorer<'a> {
    data: &'a Dataset,
    config: ScoreConfig,
    cache: FamilyCache,
}

impl<'a> Scorer<'a> {
    pub fn new(data: &'a Dataset, config: ScoreConfig) -> Self {
        Scorer { data, config, cache: FamilyCache::default() }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.config
    }

    pub fn cache(&self) -> &FamilyCache {
        &self.cache
    }

    /// Fit for `node` given the parent set `parent_mask` (bit `u` = parent `u`).
    pub fn family_score(&self, node: usize, parent_mask: u64) -> Result<Arc<FamilyFit>, ScoreError> {
        let d = self.data.d();
        if node >= d || parent_mask >> d != 0 || parent_mask & (1 << node) != 0 {
            return Err(ScoreError::InvalidFamily(format!("node {node}, parent mask {parent_mask:#b} on {d} columns")));
        }
        let slot = {
            let mut slots = self.cache.slots.lock().expect("cache lock");
            Arc::clone(slots.entry((node, parent_mask)).or_default())
        };
        slot.get_or_init(|| {
            self.cache.fits.fetch_add(1, Ordering::Relaxed);
            fit_family(self.data, node, parent_mask, &self.config).map(Arc::new)
        })
        .clone()
    }

    pub fn score_dag(&self, dag: &Dag) -> Result<Score, ScoreError> {
        if dag.d() != self.data.d() {
            return Err(ScoreError::DimensionMismatch { dag: dag.d(), data: self.data.d() });
        }
        let mut loglik = 0.0;
        for node in 0..dag.d() {
            loglik += self.family_score(node, dag.parent_mask(node))?.loglik;
        }
        let edges = dag.edge_count();
        let penalty = penalty(self.data.n() as f64, edges, self.config.penalty);
        Ok(Score { loglik, penalty, total: loglik - penalty, edges })
    }
}

fn fit_family(data: &Dataset, node: usize, parent_mask: u64, config: &ScoreConfig) -> Result<FamilyFit, ScoreError> {
    let parents: Vec<usize> = (0..data.d()).filter(|&u| parent_mask & (1 << u) != 0).collect();
    let y = data.column(node);
    let residuals = match parents.as_slice() {
        [] => y.to_vec(),
        [p] => {
            let fit = fit_local_poly(data.column(*p), y, &config.smoother);
            let fit = fit.map_err(|source| ScoreError::Smooth { node, parents: parents.clone(), source })?;
            y.iter().zip(fit.fitted()).map(|(a, b)| a - b).collect()
        }
        many => {
            let columns: Vec<&[f64]> = many.iter().map(|&p| data.column(p)).collect();
            let fit = fit_additive(&columns, y, &config.smoother);
            let fit = fit.map_err(|source| ScoreError::Smooth { node, parents: parents.clone(), source })?;
            y.iter().zip(fit.fitted()).map(|(a, b)| a - b).collect()
        }
    };
    let density = fit_density(&residuals, &config.density).map_err(|source| ScoreError::Density {
        node,
        parents: parents.clone(),
        source,
    })?;
    let loglik = density.log_density(&residuals, true).iter().sum::<f64>() / residuals.len() as f64;
    Ok(FamilyFit { node, parents, residuals, density, loglik })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::enumerate_dags;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_columns(seed: u64, n: usize, d: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..d).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        Dataset::from_columns(cols, "test").unwrap()
    }

    #[test]
    fn penalty_examples() {
        assert!((penalty(300.0, 2, PenaltyRule::InvSqrtN) - 0.11547).abs() < 1e-5);
        assert_eq!(penalty(300.0, 2, PenaltyRule::InvSqrtN), 2.0 / 300f64.sqrt());
        for rule in [PenaltyRule::InvLogN, PenaltyRule::InvSqrtN, PenaltyRule::Fixed(3.0), PenaltyRule::None] {
            assert_eq!(penalty(57.0, 0, rule), 0.0);
        }
        assert_eq!(penalty(2f64.exp(), 1, PenaltyRule::InvLogN), 0.5);
    }

    #[test]
    fn penalty_parsing() {
        assert_eq!("sqrtn".parse::<PenaltyRule>().unwrap(), PenaltyRule::InvSqrtN);
        assert_eq!("logn".parse::<PenaltyRule>().unwrap(), PenaltyRule::InvLogN);
        assert_eq!("none".parse::<PenaltyRule>().unwrap(), PenaltyRule::None);
        assert_eq!("0.25".parse::<PenaltyRule>().unwrap(), PenaltyRule::Fixed(0.25));
        assert!("-1".parse::<PenaltyRule>().is_err());
        assert!("fast".parse::<PenaltyRule>().is_err());
    }

    #[test]
    fn empty_parent_set_scores_marginal_entropy() {
        let data = gaussian_columns(21, 1000, 1);
        let scorer = Scorer::new(&data, ScoreConfig::default());
        let fit = scorer.family_score(0, 0).unwrap();
        assert_eq!(fit.residuals, data.column(0));
        let entropy = -0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((fit.loglik - entropy).abs() < 0.08, "{}", fit.loglik);
    }

    #[test]
    fn informative_parent_raises_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x1: Vec<f64> = (0..300).map(|_| rng.sample(StandardNormal)).collect();
        let x2: Vec<f64> = x1.iter().map(|v| v * v * v + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
        let data = Dataset::from_columns(vec![x1, x2], "cubic").unwrap();
        let scorer = Scorer::new(&data, ScoreConfig::default());
        let with_parent = scorer.family_score(1, 0b01).unwrap().loglik;
        let alone = scorer.family_score(1, 0).unwrap().loglik;
        assert!(with_parent > alone + 1.0, "{with_parent} vs {alone}");
    }

    #[test]
    fn cache_reuses_fits() {
        let data = gaussian_columns(1, 100, 2);
        let scorer = Scorer::new(&data, ScoreConfig::default());
        let a = scorer.family_score(1, 0b01).unwrap();
        let b = scorer.family_score(1, 0b01).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(scorer.cache().fit_count(), 1);
    }

    #[test]
    fn invalid_families_rejected() {
        let data = gaussian_columns(1, 50, 2);
        let scorer = Scorer::new(&data, ScoreConfig::default());
        assert!(scorer.family_score(2, 0).is_err());
        assert!(scorer.family_score(0, 0b01).is_err());
        assert!(scorer.family_score(0, 0b100).is_err());
        let dag = Dag::empty(3).unwrap();
        assert!(matches!(scorer.score_dag(&dag), Err(ScoreError::DimensionMismatch { .. })));
    }

    #[test]
    fn score_is_decomposable_and_cached() {
        let data = gaussian_columns(5, 150, 3);
        let cfg = ScoreConfig::default();
        let scorer = Scorer::new(&data, cfg);
        for dag in enumerate_dags(3).unwrap() {
            let s = scorer.score_dag(&dag).unwrap();
            let fresh = Scorer::new(&data, cfg);
            let mut sum = 0.0;
            for k in 0..3 {
                sum += fresh.family_score(k, dag.parent_mask(k)).unwrap().loglik;
            }
            assert_eq!(s.loglik.to_bits(), sum.to_bits());
            assert_eq!(s.total.to_bits(), (sum - penalty(150.0, dag.edge_count(), cfg.penalty)).to_bits());
        }
        assert_eq!(scorer.cache().fit_count(), 12);
    }

    #[test]
    fn small_family_failure_is_annotated() {
        let data = Dataset::from_columns(vec![vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 0.0]], "tiny").unwrap();
        let scorer = Scorer::new(&data, ScoreConfig::default());
        match scorer.family_score(1, 0b01) {
            Err(ScoreError::Smooth { node: 1, parents, .. }) => assert_eq!(parents, vec![0]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
