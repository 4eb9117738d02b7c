use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use super::{ExperimentReport, HarnessError, TrialRecord};
use crate::dataset::Dataset;
use crate::graph::{shd, Dag};
use crate::par;
use crate::score::ScoreConfig;
use crate::search::{decide, exhaustive_search, SearchError};
use crate::simgen::{
    derive_seed, gen_cubic, rng_from_seed, sample_anm, wiener_function, AnmSpec, EdgeFunction, NoiseSpec, SimError,
};

/// Bisection tolerance for random edge functions with a fixed target.
const FUNCTION_TOLERANCE: f64 = 1e-3;

fn forward() -> Dag {
    Dag::new(2, &[(0, 1)]).expect("valid")
}

fn backward() -> Dag {
    Dag::new(2, &[(1, 0)]).expect("valid")
}

/// True when the reversed model `X2 -> X1` outscores the true `X1 -> X2`.
fn backward_wins(data: &Dataset, config: &ScoreConfig) -> Result<bool, SearchError> {
    let ranking = exhaustive_search(data, config)?;
    let fwd = ranking.score_of(&forward()).expect("two-node ranking covers X1 -> X2");
    let back = ranking.score_of(&backward()).expect("two-node ranking covers X2 -> X1");
    Ok(back.total > fwd.total)
}

fn search_err(context: String) -> impl FnOnce(SearchError) -> HarnessError {
    move |source| HarnessError::Search { context, source }
}

fn sim_err(context: String) -> impl FnOnce(SimError) -> HarnessError {
    move |source| HarnessError::Sim { context, source }
}

fn check_counts(counts: &[(&str, usize)]) -> Result<(), HarnessError> {
    if counts.iter().any(|(_, c)| *c == 0) {
        return Err(HarnessError::EmptyExperiment);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub b: f64,
    pub q: f64,
    pub trials: usize,
    pub wrong: usize,
    pub false_rate: f64,
}

/// False-decision rates of the cubic model over a (b, q) grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub b_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub config: ScoreConfig,
    /// Cells with `b` varying slowest.
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn cell(&self, b: f64, q: f64) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.b == b && c.q == q)
    }

    /// `b,q,trials,false_rate` rows under a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("b,q,trials,false_rate\n");
        for c in &self.cells {
            writeln!(out, "{},{},{},{}", c.b, c.q, c.trials, c.false_rate).unwrap();
        }
        out
    }
}

/// For every (b, q) cell, draws `trials` cubic datasets and counts how often
/// the backward model outranks the forward one. Trial seeds depend only on
/// (seed, b, q, trial).
pub fn run_bq_grid(
    b_values: &[f64],
    q_values: &[f64],
    n: usize,
    trials: usize,
    config: &ScoreConfig,
    seed: u64,
) -> Result<GridResult, HarnessError> {
    check_counts(&[("b values", b_values.len()), ("q values", q_values.len()), ("trials", trials)])?;
    if let Some(b) = b_values.iter().find(|b| !(-1.0..=1.0).contains(*b)) {
        return Err(HarnessError::InvalidParameter(format!("b={b} outside [-1, 1]")));
    }
    if let Some(q) = q_values.iter().find(|q| !(0.5..=2.0).contains(*q)) {
        return Err(HarnessError::InvalidParameter(format!("q={q} outside [0.5, 2]")));
    }
    let cells: Vec<(f64, f64)> = b_values.iter().flat_map(|&b| q_values.iter().map(move |&q| (b, q))).collect();
    let outcomes = par::map_range(cells.len() * trials, |i| {
        let (b, q) = cells[i / trials];
        let trial = i % trials;
        let trial_seed = derive_seed(seed, &[b.to_bits(), q.to_bits(), trial as u64]);
        let context = format!("cell (b={b}, q={q}), trial {trial}");
        let data = gen_cubic(n, b, q, trial_seed).map_err(sim_err(context.clone()))?;
        backward_wins(&data, config).map_err(search_err(context))
    });
    let mut result_cells = Vec::with_capacity(cells.len());
    for (k, &(b, q)) in cells.iter().enumerate() {
        let mut wrong = 0;
        for outcome in &outcomes[k * trials..(k + 1) * trials] {
            wrong += usize::from(outcome.clone()?);
        }
        result_cells.push(GridCell { b, q, trials, wrong, false_rate: wrong as f64 / trials as f64 });
    }
    Ok(GridResult {
        b_values: b_values.to_vec(),
        q_values: q_values.to_vec(),
        n,
        trials,
        seed,
        config: *config,
        cells: result_cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearityCell {
    pub nonlinearity: f64,
    pub functions: usize,
    /// Datasets per cell (functions x trials per function).
    pub trials: usize,
    pub wrong: usize,
    pub false_rate: f64,
}

/// False-decision rate as a function of edge-function nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearityCurve {
    pub n: usize,
    pub functions: usize,
    pub trials_per_function: usize,
    pub seed: u64,
    pub config: ScoreConfig,
    pub cells: Vec<NonlinearityCell>,
}

impl NonlinearityCurve {
    pub fn cell(&self, nonlinearity: f64) -> Option<&NonlinearityCell> {
        self.cells.iter().find(|c| c.nonlinearity == nonlinearity)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("nonlinearity,functions,trials,false_rate\n");
        for c in &self.cells {
            writeln!(out, "{},{},{},{}", c.nonlinearity, c.functions, c.trials, c.false_rate).unwrap();
        }
        out
    }
}

fn chain_spec(f: EdgeFunction) -> Result<AnmSpec, SimError> {
    AnmSpec::new(forward(), vec![vec![], vec![(0, f)]], vec![NoiseSpec::Gaussian { sd: 1.0 }; 2])
}

/// For each target nonlinearity, draws `functions` random edge functions and
/// `trials` datasets `X2 = f(X1) + N(0, 1)` per function, counting backward
/// wins.
pub fn run_nonlinearity_curve(
    nl_values: &[f64],
    functions: usize,
    trials: usize,
    n: usize,
    config: &ScoreConfig,
    seed: u64,
) -> Result<NonlinearityCurve, HarnessError> {
    check_counts(&[("nonlinearity values", nl_values.len()), ("functions", functions), ("trials", trials)])?;
    let units: Vec<(f64, usize)> = nl_values.iter().flat_map(|&nl| (0..functions).map(move |j| (nl, j))).collect();
    let specs = par::map(&units, |&(nl, j)| {
        let mut rng = rng_from_seed(derive_seed(seed, &[nl.to_bits(), j as u64, 0]));
        let context = format!("nonlinearity {nl}, function {j}");
        wiener_function(&mut rng, nl, FUNCTION_TOLERANCE).and_then(chain_spec).map_err(sim_err(context))
    });
    let specs = specs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let outcomes = par::map_range(units.len() * trials, |i| {
        let (nl, j) = units[i / trials];
        let t = i % trials;
        let context = format!("nonlinearity {nl}, function {j}, trial {t}");
        let data_seed = derive_seed(seed, &[nl.to_bits(), j as u64, 1 + t as u64]);
        let data = sample_anm(&specs[i / trials], n, data_seed).map_err(sim_err(context.clone()))?;
        backward_wins(&data, config).map_err(search_err(context))
    });
    let per_cell = functions * trials;
    let mut cells = Vec::with_capacity(nl_values.len());
    for (k, &nl) in nl_values.iter().enumerate() {
        let mut wrong = 0;
        for outcome in &outcomes[k * per_cell..(k + 1) * per_cell] {
            wrong += usize::from(outcome.clone()?);
        }
        cells.push(NonlinearityCell {
            nonlinearity: nl,
            functions,
            trials: per_cell,
            wrong,
            false_rate: wrong as f64 / per_cell as f64,
        });
    }
    Ok(NonlinearityCurve { n, functions, trials_per_function: trials, seed, config: *config, cells })
}

/// The complete DAG `X1 -> X2, X1 -> X3, X2 -> X3`.
pub fn full_three_node() -> Dag {
    Dag::new(3, &[(0, 1), (0, 2), (1, 2)]).expect("valid")
}

/// Three-node study: random nonlinear edge functions on the complete DAG,
/// exhaustive search over all 25 DAGs, thresholded decision, SHD to truth.
pub fn run_three_node(
    function_sets: usize,
    datasets_per_set: usize,
    n: usize,
    nl_range: (f64, f64),
    t: f64,
    config: &ScoreConfig,
    seed: u64,
) -> Result<ExperimentReport, HarnessError> {
    check_counts(&[("function sets", function_sets), ("datasets per set", datasets_per_set)])?;
    if t.is_nan() || t < 0.0 {
        return Err(HarnessError::InvalidParameter(format!("threshold {t} must be nonnegative")));
    }
    let truth = full_three_node();
    let (lo, hi) = nl_range;
    let specs = par::map_range(function_sets, |set| {
        let mut rng = rng_from_seed(derive_seed(seed, &[set as u64, 0]));
        AnmSpec::random(truth, lo, hi, NoiseSpec::Gaussian { sd: 1.0 }, &mut rng)
            .map_err(sim_err(format!("function set {set}")))
    });
    let specs = specs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let records = par::map_range(function_sets * datasets_per_set, |i| {
        let (set, trial) = (i / datasets_per_set, i % datasets_per_set);
        let context = format!("function set {set}, dataset {trial}");
        let data_seed = derive_seed(seed, &[set as u64, 1 + trial as u64]);
        let data = sample_anm(&specs[set], n, data_seed).map_err(sim_err(context.clone()))?;
        let ranking = exhaustive_search(&data, config).map_err(search_err(context))?;
        debug_assert!(ranking.score_of(&truth).is_some());
        let decision = decide(&ranking, t);
        let chosen = decision.selected().copied();
        let distance = chosen.map(|g| shd(&g, &truth).expect("same dimension"));
        Ok(TrialRecord {
            group: set,
            trial,
            seed: data_seed,
            label: None,
            n,
            chosen,
            truth: Some(truth),
            shd: distance,
            correct: distance == Some(0),
            abstained: decision.abstained(),
        })
    });
    let records = records.into_iter().collect::<Result<Vec<_>, HarnessError>>()?;
    let labels = (0..function_sets).map(|s| format!("set {s}")).collect();
    let echo = json!({
        "function_sets": function_sets,
        "datasets_per_set": datasets_per_set,
        "n": n,
        "nl_range": [lo, hi],
        "t": t,
        "score": config,
    });
    Ok(ExperimentReport::new("three_node", seed, echo, records, labels))
}

/// Ground truth and data generator for consistency curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeneratorSpec {
    /// `X2 = X1 + b X1^3 + e` with power-transformed noise.
    Cubic { b: f64, q: f64 },
    /// `X2 = f(X1) + N(0, 1)` with a fresh random function per trial.
    RandomFunction { nl_lo: f64, nl_hi: f64 },
    /// `d` independent standard normal columns.
    Independent { d: usize },
}

impl GeneratorSpec {
    pub fn truth(&self) -> Result<Dag, HarnessError> {
        match *self {
            GeneratorSpec::Cubic { .. } | GeneratorSpec::RandomFunction { .. } => Ok(forward()),
            GeneratorSpec::Independent { d } => {
                Dag::empty(d).map_err(|e| HarnessError::InvalidParameter(e.to_string()))
            }
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset, SimError> {
        match *self {
            GeneratorSpec::Cubic { b, q } => gen_cubic(n, b, q, seed),
            GeneratorSpec::RandomFunction { nl_lo, nl_hi } => {
                let mut rng = rng_from_seed(seed);
                let spec = AnmSpec::random(forward(), nl_lo, nl_hi, NoiseSpec::Gaussian { sd: 1.0 }, &mut rng)?;
                sample_anm(&spec, n, derive_seed(seed, &[1]))
            }
            GeneratorSpec::Independent { d } => {
                let dag = Dag::empty(d).map_err(|e| SimError::InvalidParameter(e.to_string()))?;
                let spec = AnmSpec::new(dag, vec![vec![]; d], vec![NoiseSpec::Gaussian { sd: 1.0 }; d])?;
                sample_anm(&spec, n, seed)
            }
        }
    }
}

/// Fraction of trials whose top-ranked DAG is the true one, for each sample
/// size. Trial `k` uses the same seed at every sample size.
pub fn run_consistency_curve(
    n_values: &[usize],
    trials: usize,
    generator: &GeneratorSpec,
    config: &ScoreConfig,
    seed: u64,
) -> Result<ExperimentReport, HarnessError> {
    check_counts(&[("sample sizes", n_values.len()), ("trials", trials)])?;
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::InvalidParameter("sample sizes must be increasing".into()));
    }
    let truth = generator.truth()?;
    let records = par::map_range(n_values.len() * trials, |i| {
        let (group, trial) = (i / trials, i % trials);
        let n = n_values[group];
        let context = format!("n={n}, trial {trial}");
        let trial_seed = derive_seed(seed, &[trial as u64]);
        let data = generator.generate(n, trial_seed).map_err(sim_err(context.clone()))?;
        let ranking = exhaustive_search(&data, config).map_err(search_err(context))?;
        let best = ranking.best().dag;
        let distance = shd(&best, &truth).expect("same dimension");
        Ok(TrialRecord {
            group,
            trial,
            seed: trial_seed,
            label: None,
            n,
            chosen: Some(best),
            truth: Some(truth),
            shd: Some(distance),
            correct: best == truth,
            abstained: false,
        })
    });
    let records = records.into_iter().collect::<Result<Vec<_>, HarnessError>>()?;
    let labels = n_values.iter().map(|n| format!("n={n}")).collect();
    let echo = json!({ "n_values": n_values, "trials": trials, "generator": generator, "score": config });
    Ok(ExperimentReport::new("consistency", seed, echo, records, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_grid_is_reproducible() {
        let cfg = ScoreConfig::default();
        let a = run_bq_grid(&[0.5], &[1.0], 100, 1, &cfg, 42).unwrap();
        let b = run_bq_grid(&[0.5], &[1.0], 100, 1, &cfg, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.cells[0].false_rate == 0.0 || a.cells[0].false_rate == 1.0);
        assert_eq!(a.to_csv().lines().count(), 2);
    }

    #[test]
    fn duplicate_cells_agree() {
        let cfg = ScoreConfig::default();
        let g = run_bq_grid(&[0.0, 0.0], &[1.0], 80, 4, &cfg, 3).unwrap();
        assert_eq!(g.cells[0], g.cells[1]);
    }

    #[test]
    fn invalid_grid_inputs() {
        let cfg = ScoreConfig::default();
        assert_eq!(run_bq_grid(&[0.0], &[1.0], 50, 0, &cfg, 1), Err(HarnessError::EmptyExperiment));
        assert!(matches!(run_bq_grid(&[2.0], &[1.0], 50, 1, &cfg, 1), Err(HarnessError::InvalidParameter(_))));
        assert!(matches!(run_bq_grid(&[0.0], &[0.1], 50, 1, &cfg, 1), Err(HarnessError::InvalidParameter(_))));
    }

    #[test]
    fn consistency_rejects_empty_and_unsorted() {
        let cfg = ScoreConfig::default();
        let generator = GeneratorSpec::Cubic { b: 1.0, q: 1.0 };
        assert_eq!(run_consistency_curve(&[100], 0, &generator, &cfg, 1), Err(HarnessError::EmptyExperiment));
        assert!(matches!(
            run_consistency_curve(&[300, 100], 2, &generator, &cfg, 1),
            Err(HarnessError::InvalidParameter(_))
        ));
    }

    #[test]
    fn three_node_without_threshold_always_decides() {
        let cfg = ScoreConfig::default();
        let r = run_three_node(2, 2, 120, (0.39, 0.4), 0.0, &cfg, 5).unwrap();
        assert_eq!(r.overall.trials, 4);
        assert_eq!(r.overall.abstained, 0);
        assert_eq!(r.overall.decision_rate, 1.0);
        assert!(r.aggregates_consistent());
        assert_eq!(r.records, run_three_node(2, 2, 120, (0.39, 0.4), 0.0, &cfg, 5).unwrap().records);
    }

    #[test]
    fn generators_produce_truth_dimension() {
        for g in [
            GeneratorSpec::Cubic { b: 0.5, q: 1.0 },
            GeneratorSpec::RandomFunction { nl_lo: 0.3, nl_hi: 0.4 },
            GeneratorSpec::Independent { d: 3 },
        ] {
            let data = g.generate(50, 9).unwrap();
            assert_eq!(data.d(), g.truth().unwrap().d());
            assert_eq!(data, g.generate(50, 9).unwrap());
        }
    }
}
