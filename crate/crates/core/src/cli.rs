//! Command-line front end. `dispatch` parses arguments, runs the requested
//! command and maps failures to exit codes: 1 for usage errors, 2 for data
//! or computation errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::density::DensityKind;
use crate::graph::{Dag, GraphError};
use crate::harness::{self, ExperimentReport, GeneratorSpec, HarnessError};
use crate::par;
use crate::score::{PenaltyRule, ScoreConfig};
use crate::search::{decide, exhaustive_search, greedy_search, SearchError};
use crate::simgen::{derive_seed, gen_cubic, rng_from_seed, sample_anm, AnmSpec, NoiseSpec, SimError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "anm", version, about = "Causal structure discovery with additive noise models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank DAGs for a data file and decide on a structure.
    Discover(DiscoverArgs),
    /// Generate data or run identifiability simulations.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Run the multi-node studies.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Evaluate cause-effect pairs against their metadata.
    Pairs(PairsArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// One dataset from X2 = X1 + b X1^3 + e.
    Cubic(CubicArgs),
    /// False-decision rates of the cubic model over a (b, q) grid.
    Grid(GridArgs),
    /// False-decision rate against edge-function nonlinearity.
    RandomFuncs(RandomFuncsArgs),
    /// One dataset from random edge functions on a given DAG.
    Anm(AnmArgs),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Complete three-node DAG, exhaustive search, thresholded decisions.
    ThreeNode(ThreeNodeArgs),
    /// Accuracy of the top-ranked DAG as the sample size grows.
    Consistency(ConsistencyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchArg {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityArg {
    Kde,
    KdeLoo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorArg {
    Cubic,
    Random,
    Independent,
}

/// Flags shared by every command that scores DAGs.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    /// Edge penalty: logn, sqrtn, none, or a fixed number.
    #[arg(long, default_value = "sqrtn")]
    pub penalty: PenaltyRule,
    /// Residual density estimator.
    #[arg(long, value_enum, default_value = "kde")]
    pub density: DensityArg,
    /// Fraction of the sample in each local regression window.
    #[arg(long, default_value_t = 0.5, value_parser = parse_span)]
    pub span: f64,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, env = "ANM_JOBS", default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
}

impl ScoreArgs {
    fn config(&self) -> ScoreConfig {
        let mut cfg = ScoreConfig { penalty: self.penalty, ..ScoreConfig::default() };
        cfg.smoother.span = self.span;
        cfg.density.kind = match self.density {
            DensityArg::Kde => DensityKind::Kde,
            DensityArg::KdeLoo => DensityKind::KdeLoo,
        };
        cfg
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiscoverArgs {
    /// Numeric data file, one column per variable.
    #[arg(long)]
    pub data: PathBuf,
    /// Rank every DAG, or hill-climb from the empty graph.
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub search: SearchArg,
    /// Abstain when (best - second) / (best - worst) falls below this.
    #[arg(long, default_value_t = 0.0, value_parser = parse_nonnegative)]
    pub threshold: f64,
    /// Recorded in the output; discovery itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result file; `.json` or `.csv`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CubicArgs {
    /// Sample size of each dataset.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Cubic coefficient in [-1, 1].
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    /// Noise exponent in [0.5, 2].
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset file; `.json` or `.csv`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Values of b as `lo:hi:count` or a comma list.
    #[arg(long, default_value = "-1:1:9", allow_hyphen_values = true, value_parser = parse_values)]
    pub b: Values,
    /// Values of q as `lo:hi:count` or a comma list.
    #[arg(long, default_value = "0.5:2:7", value_parser = parse_values)]
    pub q: Values,
    /// Sample size of each dataset.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Datasets per grid cell.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result file; `.json` or `.csv`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RandomFuncsArgs {
    /// Target nonlinearities as `lo:hi:count` or a comma list.
    #[arg(long, default_value = "0:0.4:9", value_parser = parse_values)]
    pub nl: Values,
    /// Random functions per nonlinearity value.
    #[arg(long, default_value_t = 100)]
    pub functions: usize,
    /// Datasets per function.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Sample size of each dataset.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result file; `.json` or `.csv`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnmArgs {
    /// Number of variables.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Edges as 1-indexed pairs, e.g. `1-2,1-3,2-3`. Empty for none.
    #[arg(long, default_value = "1-2,1-3,2-3", value_parser = parse_edges)]
    pub edges: EdgeList,
    /// Nonlinearity range of the edge functions as `lo:hi`.
    #[arg(long, default_value = "0.39:0.4", value_parser = parse_interval)]
    pub nl: Interval,
    /// Standard deviation of the Gaussian noise.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Sample size of each dataset.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset file; `.json` (with functions) or `.csv`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThreeNodeArgs {
    /// Random edge-function sets.
    #[arg(long, default_value_t = 20)]
    pub sets: usize,
    /// Datasets per function set.
    #[arg(long, default_value_t = 20)]
    pub datasets: usize,
    /// Sample size of each dataset.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Nonlinearity range of the edge functions as `lo:hi`.
    #[arg(long, default_value = "0.39:0.4", value_parser = parse_interval)]
    pub nl: Interval,
    /// Abstention threshold.
    #[arg(long, default_value_t = 0.0, value_parser = parse_nonnegative)]
    pub threshold: f64,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result file; `.json` (full records) or `.csv` (aggregates).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConsistencyArgs {
    /// Sample sizes as a comma list.
    #[arg(long, default_value = "100,300,1000", value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Datasets per sample size.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Data generator with a known true DAG.
    #[arg(long, value_enum, default_value = "random")]
    pub generator: GeneratorArg,
    /// Cubic generator: coefficient b.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub b: f64,
    /// Cubic generator: noise exponent q.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Random generator: nonlinearity range as `lo:hi`.
    #[arg(long, default_value = "0.3:0.4", value_parser = parse_interval)]
    pub nl: Interval,
    /// Independent generator: number of variables.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result file; `.json` (full records) or `.csv` (aggregates).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PairsArgs {
    /// Directory holding the pair data files.
    #[arg(long)]
    pub dir: PathBuf,
    /// Metadata file, one `id cause effect` line per pair.
    #[arg(long)]
    pub meta: PathBuf,
    /// Pairs longer than this are subsampled to this size.
    #[arg(long, default_value_t = 500)]
    pub cap: usize,
    /// Subsamples per long pair.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result file; `.json` (full records) or `.csv` (aggregates).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreArgs,
}

/// Evenly spaced or listed parameter values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Values(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EdgeList(pub Vec<(usize, usize)>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is negative"))
    }
}

fn parse_span(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("span {v} must lie in (0, 1]"))
    }
}

/// `lo:hi:count` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_values(s: &str) -> Result<Values, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (parse_number(lo)?, parse_number(hi)?);
            let count: usize = count.trim().parse().map_err(|_| format!("{count:?} is not a count"))?;
            match count {
                0 => return Err("count must be at least 1".into()),
                1 => vec![lo],
                _ => (0..count)
                    .map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
                    .collect(),
            }
        }
        [list] => list.split(',').map(parse_number).collect::<Result<_, _>>()?,
        _ => return Err(format!("{s:?} is neither lo:hi:count nor a comma list")),
    };
    Ok(Values(values))
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("{s:?} is not lo:hi"))?;
    let (lo, hi) = (parse_number(lo)?, parse_number(hi)?);
    if lo > hi {
        return Err(format!("interval {lo}:{hi} is reversed"));
    }
    Ok(Interval { lo, hi })
}

fn parse_edges(s: &str) -> Result<EdgeList, String> {
    let mut edges = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (u, v) = item.split_once('-').ok_or_else(|| format!("edge {item:?} is not u-v"))?;
        let parse = |t: &str| t.trim().trim_start_matches('>').parse::<usize>().ok().filter(|&k| k >= 1);
        match (parse(u), parse(v)) {
            (Some(u), Some(v)) => edges.push((u - 1, v - 1)),
            _ => return Err(format!("edge {item:?} needs 1-indexed vertices")),
        }
    }
    Ok(EdgeList(edges))
}

enum Format {
    Json,
    Csv,
}

fn output_format(out: &Option<PathBuf>) -> Result<Option<(PathBuf, Format)>, CliError> {
    let Some(path) = out else { return Ok(None) };
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let format = match ext.as_deref() {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => return Err(CliError::Usage(format!("--out {}: extension must be .json or .csv", path.display()))),
    };
    Ok(Some((path.clone(), format)))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes either the JSON document or the CSV text, whichever the extension
/// asks for.
fn emit(
    out: &Option<(PathBuf, Format)>,
    json: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
) -> Result<(), CliError> {
    match out {
        None => Ok(()),
        Some((path, Format::Json)) => write_file(path, &json()),
        Some((path, Format::Csv)) => write_file(path, &csv()),
    }
}

fn print_config(command: &str, args: &impl Serialize) {
    println!("{command} {}", serde_json::to_string(args).expect("serializable"));
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Discover(a) => jobs(a.score.jobs, || discover(&a)),
        Command::Simulate(SimulateCommand::Cubic(a)) => cubic(&a),
        Command::Simulate(SimulateCommand::Grid(a)) => jobs(a.score.jobs, || grid(&a)),
        Command::Simulate(SimulateCommand::RandomFuncs(a)) => jobs(a.score.jobs, || random_funcs(&a)),
        Command::Simulate(SimulateCommand::Anm(a)) => anm(&a),
        Command::Bench(BenchCommand::ThreeNode(a)) => jobs(a.score.jobs, || three_node(&a)),
        Command::Bench(BenchCommand::Consistency(a)) => jobs(a.score.jobs, || consistency(&a)),
        Command::Pairs(a) => jobs(a.score.jobs, || pairs(&a)),
    }
}

fn jobs(n: usize, f: impl FnOnce() -> Result<(), CliError> + Send) -> Result<(), CliError> {
    par::with_jobs(n, f)
}

fn discover(a: &DiscoverArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let config = a.score.config();
    let loaded = harness::load_dataset(&a.data)?;
    let data = &loaded.data;
    let ranking = match a.search {
        SearchArg::Exhaustive => exhaustive_search(data, &config)?,
        SearchArg::Greedy => greedy_search(data, &config)?,
    };
    let decision = decide(&ranking, a.threshold);
    print_config("discover", a);
    println!("n={} d={} rejected_rows={} candidates={}", data.n(), data.d(), loaded.rejected_rows, ranking.len());
    for (rank, e) in ranking.entries().iter().take(5).enumerate() {
        println!("{:>3}. {:<40} total={:.6}", rank + 1, e.dag.display_one_based(), e.score.total);
    }
    match decision.selected() {
        Some(dag) => println!("selected: {} (ratio {:.4})", dag.display_one_based(), decision.ratio),
        None => println!("abstained: ratio {:.4} < t={}", decision.ratio, decision.t),
    }
    emit(
        &out,
        || {
            to_json(&json!({
                "command": "discover",
                "args": a,
                "config": config,
                "n": data.n(),
                "d": data.d(),
                "names": data.names(),
                "rejected_rows": loaded.rejected_rows,
                "ranking": ranking,
                "decision": decision,
            }))
        },
        || {
            let mut s = String::from("rank,dag,edges,loglik,penalty,total\n");
            for (rank, e) in ranking.entries().iter().enumerate() {
                s.push_str(&format!(
                    "{},\"{}\",{},{},{},{}\n",
                    rank + 1,
                    e.dag.display_one_based(),
                    e.score.edges,
                    e.score.loglik,
                    e.score.penalty,
                    e.score.total
                ));
            }
            s
        },
    )
}

fn dataset_json(command: &str, args: &impl Serialize, data: &Dataset, extra: serde_json::Value) -> String {
    to_json(&json!({
        "command": command,
        "args": args,
        "names": data.names(),
        "columns": data.columns(),
        "extra": extra,
    }))
}

fn cubic(a: &CubicArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let data = gen_cubic(a.n, a.b, a.q, a.seed)?;
    print_config("simulate cubic", a);
    println!("generated {} rows of X2 = X1 + {} X1^3 + e (q={})", data.n(), a.b, a.q);
    emit(&out, || dataset_json("simulate cubic", a, &data, serde_json::Value::Null), || data.to_csv())
}

fn grid(a: &GridArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let config = a.score.config();
    let result = harness::run_bq_grid(&a.b.0, &a.q.0, a.n, a.trials, &config, a.seed)?;
    print_config("simulate grid", a);
    println!("{:>8} {:>8} {:>10}", "b", "q", "false");
    for c in &result.cells {
        println!("{:>8.3} {:>8.3} {:>10.3}", c.b, c.q, c.false_rate);
    }
    emit(&out, || to_json(&json!({ "command": "simulate grid", "args": a, "result": result })), || result.to_csv())
}

fn random_funcs(a: &RandomFuncsArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let config = a.score.config();
    let curve = harness::run_nonlinearity_curve(&a.nl.0, a.functions, a.trials, a.n, &config, a.seed)?;
    print_config("simulate random-funcs", a);
    for c in &curve.cells {
        println!(
            "nonlinearity {:.3}: false-decision rate {:.3} over {} datasets",
            c.nonlinearity, c.false_rate, c.trials
        );
    }
    emit(
        &out,
        || to_json(&json!({ "command": "simulate random-funcs", "args": a, "result": curve })),
        || curve.to_csv(),
    )
}

fn anm(a: &AnmArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let dag = Dag::new(a.d, &a.edges.0)?;
    let mut rng = rng_from_seed(derive_seed(a.seed, &[0]));
    let spec = AnmSpec::random(dag, a.nl.lo, a.nl.hi, NoiseSpec::Gaussian { sd: a.noise_sd }, &mut rng)?;
    let data = sample_anm(&spec, a.n, derive_seed(a.seed, &[1]))?;
    print_config("simulate anm", a);
    println!("generated {} rows on {}", data.n(), dag.display_one_based());
    emit(&out, || dataset_json("simulate anm", a, &data, json!({ "dag": dag, "spec": spec })), || data.to_csv())
}

fn print_report(report: &ExperimentReport) {
    for g in &report.groups {
        let a = &g.aggregate;
        println!(
            "{:<12} trials={:<5} accuracy={:.3} wrong={:.3} abstained={:.3}",
            g.label, a.trials, a.accuracy, a.wrong_rate, a.abstention_rate
        );
    }
    let o = &report.overall;
    println!(
        "{:<12} trials={:<5} accuracy={:.3} wrong={:.3} abstained={:.3}",
        "all", o.trials, o.accuracy, o.wrong_rate, o.abstention_rate
    );
}

fn emit_report(out: &Option<(PathBuf, Format)>, report: &ExperimentReport) -> Result<(), CliError> {
    emit(out, || report.to_json(), || report.to_csv())
}

fn three_node(a: &ThreeNodeArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let config = a.score.config();
    let report = harness::run_three_node(a.sets, a.datasets, a.n, (a.nl.lo, a.nl.hi), a.threshold, &config, a.seed)?;
    print_config("bench three-node", a);
    let o = &report.overall;
    println!(
        "{} datasets: wrong {:.3}, abstained {:.3}, mean SHD {}",
        o.trials,
        o.wrong_rate,
        o.abstention_rate,
        o.mean_shd.map_or("n/a".into(), |s| format!("{s:.3}"))
    );
    emit_report(&out, &report)
}

fn consistency(a: &ConsistencyArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let config = a.score.config();
    let generator = match a.generator {
        GeneratorArg::Cubic => GeneratorSpec::Cubic { b: a.b, q: a.q },
        GeneratorArg::Random => GeneratorSpec::RandomFunction { nl_lo: a.nl.lo, nl_hi: a.nl.hi },
        GeneratorArg::Independent => GeneratorSpec::Independent { d: a.d },
    };
    let report = harness::run_consistency_curve(&a.sizes, a.trials, &generator, &config, a.seed)?;
    print_config("bench consistency", a);
    print_report(&report);
    emit_report(&out, &report)
}

fn pairs(a: &PairsArgs) -> Result<(), CliError> {
    let out = output_format(&a.out)?;
    let config = a.score.config();
    let report = harness::eval_pairs(&a.dir, &a.meta, a.cap, a.reps, &config, a.seed)?;
    print_config("pairs", a);
    print_report(&report);
    if !report.skipped.is_empty() {
        println!("skipped {} pairs", report.skipped.len());
    }
    emit_report(&out, &report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_ranges() {
        assert_eq!(parse_values("-1:1:9").unwrap().0, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_values("0.5:2:7").unwrap().0.len(), 7);
        assert_eq!(parse_values("3:5:1").unwrap().0, vec![3.0]);
        assert_eq!(parse_values("0.1,0.2").unwrap().0, vec![0.1, 0.2]);
        assert!(parse_values("0:1:0").is_err());
        assert!(parse_values("a:1:3").is_err());
        assert!(parse_values("0:1").is_err());
    }

    #[test]
    fn edges_and_intervals() {
        assert_eq!(parse_edges("1-2, 2->3").unwrap().0, vec![(0, 1), (1, 2)]);
        assert_eq!(parse_edges("").unwrap().0, vec![]);
        assert!(parse_edges("0-1").is_err());
        assert_eq!(parse_interval("0.3:0.4").unwrap(), Interval { lo: 0.3, hi: 0.4 });
        assert!(parse_interval("0.4:0.3").is_err());
    }

    #[test]
    fn jobs_are_not_echoed() {
        let cli = Cli::try_parse_from(["anm", "pairs", "--dir", "d", "--meta", "m", "--jobs", "3"]).unwrap();
        let Command::Pairs(a) = cli.command else { panic!() };
        let v = serde_json::to_value(&a).unwrap();
        assert!(v.get("jobs").is_none());
        assert_eq!(v["penalty"], "sqrtn");
    }
}
