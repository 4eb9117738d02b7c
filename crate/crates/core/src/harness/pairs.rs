//! Cause-effect pair corpora: a directory of two-column data files and a
//! metadata file naming, per pair, which column is the cause.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use serde::Serialize;
use serde_json::json;

use super::io::load_dataset;
use super::{ExperimentReport, HarnessError, TrialRecord};
use crate::dataset::{format_g17, Dataset};
use crate::graph::{shd, Dag};
use crate::par;
use crate::score::{ScoreConfig, Scorer};
use crate::simgen::{derive_seed, rng_from_seed, sample_anm, wiener_function, AnmSpec, NoiseSpec};

/// Pairs with fewer usable rows than this are skipped.
const MIN_PAIR_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// Column 1 causes column 2.
    #[serde(rename = "1->2")]
    Forward,
    #[serde(rename = "2->1")]
    Backward,
}

impl Direction {
    pub fn dag(self) -> Dag {
        match self {
            Direction::Forward => Dag::new(2, &[(0, 1)]).expect("valid"),
            Direction::Backward => Dag::new(2, &[(1, 0)]).expect("valid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPair {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEntry {
    pub id: String,
    pub path: PathBuf,
    pub data: Dataset,
    pub truth: Direction,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairsCorpus {
    pub pairs: Vec<PairEntry>,
    pub skipped: Vec<SkippedPair>,
}

enum MetaLine {
    Pair { id: String, truth: Direction },
    Skip(SkippedPair),
}

fn parse_index(token: &str, path: &str, line: usize) -> Result<usize, HarnessError> {
    token.parse::<f64>().ok().filter(|v| v.fract() == 0.0 && *v >= 1.0).map(|v| v as usize).ok_or_else(|| {
        HarnessError::Parse { path: path.to_string(), line, message: format!("expected a column index, got {token:?}") }
    })
}

/// Accepts `id cause effect` or the six-column layout
/// `id cause_first cause_last effect_first effect_last weight`.
fn parse_meta_line(fields: &[&str], path: &str, line: usize) -> Result<MetaLine, HarnessError> {
    let id = fields[0].to_string();
    let (cause, effect) = match fields.len() {
        3 => (parse_index(fields[1], path, line)?, parse_index(fields[2], path, line)?),
        6 => {
            let idx: Vec<usize> = fields[1..5].iter().map(|t| parse_index(t, path, line)).collect::<Result<_, _>>()?;
            if idx[0] != idx[1] || idx[2] != idx[3] {
                let reason = "multivariate cause or effect".to_string();
                return Ok(MetaLine::Skip(SkippedPair { id, reason }));
            }
            (idx[0], idx[2])
        }
        k => {
            return Err(HarnessError::Parse {
                path: path.to_string(),
                line,
                message: format!("expected 3 or 6 fields, got {k}"),
            })
        }
    };
    let truth = match (cause, effect) {
        (1, 2) => Direction::Forward,
        (2, 1) => Direction::Backward,
        _ => {
            let reason = format!("cause column {cause} and effect column {effect} do not describe a pair");
            return Ok(MetaLine::Skip(SkippedPair { id, reason }));
        }
    };
    Ok(MetaLine::Pair { id, truth })
}

fn locate(dir: &Path, id: &str) -> Option<PathBuf> {
    [dir.join(id), dir.join(format!("{id}.txt")), dir.join(format!("pair{id}.txt"))].into_iter().find(|p| p.is_file())
}

/// Reads the metadata file and every pair it lists. Pairs that cannot be
/// used (missing file, unparsable, not bivariate, too short) are recorded in
/// `skipped` rather than failing the whole corpus.
pub fn load_pairs_corpus(dir: impl AsRef<Path>, meta: impl AsRef<Path>) -> Result<PairsCorpus, HarnessError> {
    let (dir, meta) = (dir.as_ref(), meta.as_ref());
    let shown = meta.display().to_string();
    if !meta.is_file() {
        return Err(HarnessError::MissingMetadata(shown));
    }
    let text =
        std::fs::read_to_string(meta).map_err(|e| HarnessError::Io { path: shown.clone(), message: e.to_string() })?;
    let mut corpus = PairsCorpus::default();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let (id, truth) = match parse_meta_line(&fields, &shown, index + 1)? {
            MetaLine::Pair { id, truth } => (id, truth),
            MetaLine::Skip(s) => {
                log::info!("skipping pair {}: {}", s.id, s.reason);
                corpus.skipped.push(s);
                continue;
            }
        };
        let mut skip = |reason: String| {
            log::info!("skipping pair {id}: {reason}");
            corpus.skipped.push(SkippedPair { id: id.clone(), reason });
        };
        let Some(path) = locate(dir, &id) else {
            skip("data file not found".into());
            continue;
        };
        let loaded = match load_dataset(&path) {
            Ok(l) => l,
            Err(e) => {
                skip(e.to_string());
                continue;
            }
        };
        if loaded.data.d() != 2 {
            skip(format!("{} columns, expected 2", loaded.data.d()));
            continue;
        }
        if loaded.data.n() < MIN_PAIR_ROWS {
            skip(format!("{} rows, need at least {MIN_PAIR_ROWS}", loaded.data.n()));
            continue;
        }
        if loaded.rejected_rows > 0 {
            log::warn!("pair {id}: dropped {} non-finite rows", loaded.rejected_rows);
        }
        corpus.pairs.push(PairEntry { id, path, data: loaded.data, truth });
    }
    Ok(corpus)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Mean penalized scores of `X1 -> X2` and `X2 -> X1`, over `reps` random
/// subsamples of size `cap` when the pair is longer than `cap`.
fn pair_scores(data: &Dataset, cap: usize, reps: usize, config: &ScoreConfig, seed: u64) -> Result<(f64, f64), String> {
    let (fwd, back) = (Direction::Forward.dag(), Direction::Backward.dag());
    let runs = if data.n() > cap { reps } else { 1 };
    let mut rng = rng_from_seed(seed);
    let (mut s12, mut s21) = (0.0, 0.0);
    for _ in 0..runs {
        let subset;
        let view = if data.n() > cap {
            let mut rows = sample(&mut rng, data.n(), cap).into_vec();
            rows.sort_unstable();
            subset = data.select_rows(&rows);
            &subset
        } else {
            data
        };
        let scorer = Scorer::new(view, *config);
        s12 += scorer.score_dag(&fwd).map_err(|e| e.to_string())?.total;
        s21 += scorer.score_dag(&back).map_err(|e| e.to_string())?.total;
    }
    Ok((s12 / runs as f64, s21 / runs as f64))
}

/// Scores both orientations of every usable pair and reports how often the
/// higher-scoring one matches the metadata. Exact ties abstain.
pub fn eval_pairs(
    dir: impl AsRef<Path>,
    meta: impl AsRef<Path>,
    cap: usize,
    reps: usize,
    config: &ScoreConfig,
    seed: u64,
) -> Result<ExperimentReport, HarnessError> {
    if cap < MIN_PAIR_ROWS || reps == 0 {
        return Err(HarnessError::InvalidParameter(format!(
            "need cap >= {MIN_PAIR_ROWS} and reps >= 1, got cap={cap}, reps={reps}"
        )));
    }
    let mut corpus = load_pairs_corpus(&dir, &meta)?;
    let scored = par::map(&corpus.pairs, |p| {
        let pair_seed = derive_seed(seed, &[fnv1a(&p.id)]);
        (pair_seed, pair_scores(&p.data, cap, reps, config, pair_seed))
    });
    let mut records = Vec::new();
    for (entry, (pair_seed, result)) in corpus.pairs.iter().zip(scored) {
        let (s12, s21) = match result {
            Ok(s) => s,
            Err(reason) => {
                log::info!("skipping pair {}: {reason}", entry.id);
                corpus.skipped.push(SkippedPair { id: entry.id.clone(), reason });
                continue;
            }
        };
        let chosen = if s12 > s21 {
            Some(Direction::Forward)
        } else if s21 > s12 {
            Some(Direction::Backward)
        } else {
            None
        };
        let truth = entry.truth.dag();
        let chosen_dag = chosen.map(Direction::dag);
        records.push(TrialRecord {
            group: 0,
            trial: records.len(),
            seed: pair_seed,
            label: Some(entry.id.clone()),
            n: entry.data.n(),
            chosen: chosen_dag,
            truth: Some(truth),
            shd: chosen_dag.map(|g| shd(&g, &truth).expect("same dimension")),
            correct: chosen == Some(entry.truth),
            abstained: chosen.is_none(),
        });
    }
    if records.is_empty() {
        return Err(HarnessError::EmptyExperiment);
    }
    let echo = json!({
        "dir": dir.as_ref().display().to_string(),
        "meta": meta.as_ref().display().to_string(),
        "cap": cap,
        "reps": reps,
        "score": config,
    });
    let mut report = ExperimentReport::new("pairs", seed, echo, records, vec!["all pairs".into()]);
    report.skipped = corpus.skipped;
    Ok(report)
}

/// Writes `count` synthetic nonlinear pairs `pairNNNN.txt` plus a `pairmeta.txt`
/// into `dir`, with random orientation, and returns the metadata path.
pub fn write_synthetic_pairs(
    dir: impl AsRef<Path>,
    count: usize,
    n: usize,
    nl_range: (f64, f64),
    seed: u64,
) -> Result<PathBuf, HarnessError> {
    let dir = dir.as_ref();
    let io_err = |p: &Path| {
        let path = p.display().to_string();
        move |e: std::io::Error| HarnessError::Io { path, message: e.to_string() }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let chain = Direction::Forward.dag();
    let mut meta = String::new();
    for k in 0..count {
        let id = format!("{:04}", k + 1);
        let context = format!("synthetic pair {id}");
        let sim = |e| HarnessError::Sim { context: context.clone(), source: e };
        let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
        let target = nl_range.0 + (nl_range.1 - nl_range.0) * rand::Rng::random::<f64>(&mut rng);
        let f = wiener_function(&mut rng, target, 1e-3).map_err(sim)?;
        let spec =
            AnmSpec::new(chain, vec![vec![], vec![(0, f)]], vec![NoiseSpec::Gaussian { sd: 1.0 }; 2]).map_err(sim)?;
        let data = sample_anm(&spec, n, derive_seed(seed, &[k as u64, 1])).map_err(sim)?;
        let flip = rand::Rng::random::<bool>(&mut rng);
        let (a, b) = if flip { (data.column(1), data.column(0)) } else { (data.column(0), data.column(1)) };
        let mut body = String::new();
        for i in 0..n {
            writeln!(body, "{} {}", format_g17(a[i]), format_g17(b[i])).unwrap();
        }
        let path = dir.join(format!("pair{id}.txt"));
        std::fs::write(&path, body).map_err(io_err(&path))?;
        writeln!(meta, "{id} {}", if flip { "2 1" } else { "1 2" }).unwrap();
    }
    let meta_path = dir.join("pairmeta.txt");
    std::fs::write(&meta_path, meta).map_err(io_err(&meta_path))?;
    Ok(meta_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    fn linear_pair(n: usize) -> String {
        (0..n).map(|i| format!("{} {}\n", i, 2.0 * i as f64 + ((i * 7919) % 13) as f64 * 0.1)).collect()
    }

    #[test]
    fn missing_meta_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_pairs_corpus(dir.path(), dir.path().join("nope.txt")).unwrap_err();
        assert!(matches!(err, HarnessError::MissingMetadata(_)));
    }

    #[test]
    fn both_meta_layouts_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "pair0001.txt", &linear_pair(40));
        write(dir.path(), "0002.txt", &linear_pair(40));
        write(dir.path(), "pair0003.txt", "1 2 3\n4 5 6\n");
        write(dir.path(), "pair0005.txt", &linear_pair(5));
        write(
            dir.path(),
            "meta.txt",
            "# id cause effect\n0001 1 1 2 2 1\n0002 2 1\n0003 1 2\n0004 1 2\n0005 1 2\n0006 1 2 3 3 1\n",
        );
        let corpus = load_pairs_corpus(dir.path(), dir.path().join("meta.txt")).unwrap();
        let ids: Vec<_> = corpus.pairs.iter().map(|p| (p.id.as_str(), p.truth)).collect();
        assert_eq!(ids, [("0001", Direction::Forward), ("0002", Direction::Backward)]);
        let skipped: Vec<_> = corpus.skipped.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(skipped, ["0003", "0004", "0005", "0006"]);
    }

    #[test]
    fn bad_meta_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "meta.txt", "0001 1 2\n0002 x 2\n");
        let err = load_pairs_corpus(dir.path(), dir.path().join("meta.txt")).unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn synthetic_corpus_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let meta = write_synthetic_pairs(dir.path(), 4, 150, (0.3, 0.5), 11).unwrap();
        let cfg = ScoreConfig::default();
        let report = eval_pairs(dir.path(), &meta, 100, 2, &cfg, 1).unwrap();
        assert_eq!(report.overall.trials, 4);
        assert!(report.skipped.is_empty());
        assert!(report.aggregates_consistent());
        assert_eq!(report.records, eval_pairs(dir.path(), &meta, 100, 2, &cfg, 1).unwrap().records);
    }
}
