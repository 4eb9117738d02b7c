//! DAG selection: exhaustive ranking of every DAG, greedy hill climbing,
//! and the thresholded abstention rule.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::graph::{enumerate_dags, Dag, GraphError};
use crate::par;
use crate::score::{Score, ScoreConfig, ScoreError, Scorer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedDag {
    pub dag: Dag,
    /// Enumeration index (exhaustive) or visit order (greedy).
    pub order: usize,
    pub score: Score,
}

impl Serialize for RankedDag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row<'a> {
            dag: &'a Dag,
            loglik: f64,
            penalty: f64,
            total: f64,
        }
        Row { dag: &self.dag, loglik: self.score.loglik, penalty: self.score.penalty, total: self.score.total }
            .serialize(serializer)
    }
}

/// Scored DAGs, best first. Ties go to fewer edges, then smaller `order`.
#[derive(Debug, Clone)]
pub struct Ranking {
    entries: Vec<RankedDag>,
    n: usize,
    config: ScoreConfig,
    kind: SearchKind,
    accepted_moves: usize,
    family_fits: usize,
}

impl Ranking {
    fn new(mut entries: Vec<RankedDag>, n: usize, config: ScoreConfig, kind: SearchKind) -> Self {
        entries.sort_by(|a, b| {
            b.score.total.total_cmp(&a.score.total).then(a.score.edges.cmp(&b.score.edges)).then(a.order.cmp(&b.order))
        });
        Ranking { entries, n, config, kind, accepted_moves: 0, family_fits: 0 }
    }

    pub fn entries(&self) -> &[RankedDag] {
        &self.entries
    }

    pub fn best(&self) -> &RankedDag {
        &self.entries[0]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.config
    }

    pub fn kind(&self) -> SearchKind {
        self.kind
    }

    /// Number of accepted greedy moves (0 for exhaustive search).
    pub fn accepted_moves(&self) -> usize {
        self.accepted_moves
    }

    /// Distinct node families fitted while building the ranking.
    pub fn family_fits(&self) -> usize {
        self.family_fits
    }

    /// Score of `dag` if it appears in the ranking.
    pub fn score_of(&self, dag: &Dag) -> Option<&Score> {
        self.entries.iter().find(|e| e.dag == *dag).map(|e| &e.score)
    }
}

impl Serialize for Ranking {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for e in &self.entries {
            seq.serialize_element(e)?;
        }
        seq.end()
    }
}

/// Scores every DAG on `data.d()` nodes.
pub fn exhaustive_search(data: &Dataset, config: &ScoreConfig) -> Result<Ranking, SearchError> {
    let dags = enumerate_dags(data.d())?;
    let scorer = Scorer::new(data, *config);
    let scores = par::map(&dags, |dag| scorer.score_dag(dag));
    let entries = dags
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(order, (&dag, score))| Ok(RankedDag { dag, order, score: score? }))
        .collect::<Result<Vec<_>, ScoreError>>()?;
    let mut ranking = Ranking::new(entries, data.n(), *config, SearchKind::Exhaustive);
    ranking.family_fits = scorer.cache().fit_count();
    Ok(ranking)
}

/// Single-edge additions, deletions and reversals of `dag` that stay acyclic,
/// in that order (each group row-major by edge).
pub fn neighbors(dag: &Dag) -> Vec<Dag> {
    let d = dag.d();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|u| (0..d).map(move |v| (u, v))).filter(|(u, v)| u != v).collect();
    let additions = pairs.iter().filter_map(|&(u, v)| dag.with_edge(u, v));
    let deletions = pairs.iter().filter_map(|&(u, v)| dag.without_edge(u, v));
    let reversals = pairs.iter().filter_map(|&(u, v)| if dag.has_edge(u, v) { dag.with_reversed(u, v) } else { None });
    additions.chain(deletions).chain(reversals).collect()
}

/// Best-improvement hill climbing from the empty DAG. The ranking holds
/// every accepted state.
pub fn greedy_search(data: &Dataset, config: &ScoreConfig) -> Result<Ranking, SearchError> {
    let scorer = Scorer::new(data, *config);
    let mut current = Dag::empty(data.d())?;
    let mut current_score = scorer.score_dag(&current)?;
    let mut visited = vec![RankedDag { dag: current, order: 0, score: current_score }];
    loop {
        let candidates = neighbors(&current);
        let scores = par::map(&candidates, |dag| scorer.score_dag(dag));
        let mut best: Option<(Dag, Score)> = None;
        for (dag, score) in candidates.into_iter().zip(scores) {
            let score = score?;
            let better = match &best {
                None => true,
                Some((b, s)) => score.total > s.total || (score.total == s.total && dag.edge_count() < b.edge_count()),
            };
            if better {
                best = Some((dag, score));
            }
        }
        match best {
            Some((dag, score)) if score.total > current_score.total => {
                current = dag;
                current_score = score;
                visited.push(RankedDag { dag, order: visited.len(), score });
            }
            _ => break,
        }
    }
    let moves = visited.len() - 1;
    let mut ranking = Ranking::new(visited, data.n(), *config, SearchKind::Greedy);
    ranking.accepted_moves = moves;
    ranking.family_fits = scorer.cache().fit_count();
    Ok(ranking)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Selected(Dag),
    Abstained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub outcome: Outcome,
    /// Best minus second-best total.
    pub delta1: f64,
    /// Best minus worst total.
    pub delta2: f64,
    pub ratio: f64,
    pub t: f64,
}

impl Decision {
    pub fn selected(&self) -> Option<&Dag> {
        match &self.outcome {
            Outcome::Selected(d) => Some(d),
            Outcome::Abstained => None,
        }
    }

    pub fn abstained(&self) -> bool {
        matches!(self.outcome, Outcome::Abstained)
    }
}

/// Selects the best DAG unless its lead over the runner-up is smaller than
/// `t` times the spread between best and worst.
pub fn decide(ranking: &Ranking, t: f64) -> Decision {
    decide_entries(ranking.entries(), t)
}

fn decide_entries(entries: &[RankedDag], t: f64) -> Decision {
    let best = &entries[0];
    let delta1 = entries.get(1).map_or(0.0, |e| best.score.total - e.score.total);
    let delta2 = best.score.total - entries[entries.len() - 1].score.total;
    let ratio = if delta2 > 0.0 { delta1 / delta2 } else { 0.0 };
    let outcome = if delta2 > 0.0 && ratio < t { Outcome::Abstained } else { Outcome::Selected(best.dag) };
    Decision { outcome, delta1, delta2, ratio, t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn fake_ranking(totals: &[f64]) -> Vec<RankedDag> {
        let dags = enumerate_dags(3).unwrap();
        totals
            .iter()
            .enumerate()
            .map(|(i, &total)| RankedDag {
                dag: dags[i],
                order: i,
                score: Score { loglik: total, penalty: 0.0, total, edges: dags[i].edge_count() },
            })
            .collect()
    }

    fn ranked(totals: &[f64]) -> Ranking {
        Ranking::new(fake_ranking(totals), 100, ScoreConfig::default(), SearchKind::Exhaustive)
    }

    #[test]
    fn decide_examples() {
        let r = ranked(&[10.0, 9.99, 5.0]);
        let zero = decide(&r, 0.0);
        assert_eq!(zero.selected(), Some(&r.best().dag));
        let d = decide(&r, 0.01);
        assert!(d.abstained());
        assert!((d.ratio - 0.002).abs() < 1e-9);
        assert!((d.delta1 - 0.01).abs() < 1e-9 && d.delta2 == 5.0);
        let flat = ranked(&[1.0, 1.0, 1.0]);
        let d = decide(&flat, 0.5);
        assert_eq!(d.delta2, 0.0);
        assert_eq!(d.selected(), Some(&enumerate_dags(3).unwrap()[0]));
        let single = ranked(&[2.0]);
        assert_eq!(decide(&single, 0.3).delta1, 0.0);
    }

    #[test]
    fn ties_prefer_fewer_edges() {
        let dags = enumerate_dags(3).unwrap();
        // Entry 1 has one edge; entry 0 is the empty graph.
        let r = ranked(&[3.0, 3.0]);
        assert_eq!(r.best().dag, dags[0]);
        let mut rows = fake_ranking(&[3.0, 3.0]);
        rows.reverse();
        let r = Ranking::new(rows, 10, ScoreConfig::default(), SearchKind::Exhaustive);
        assert_eq!(r.best().dag, dags[0]);
    }

    #[test]
    fn decide_is_monotone_in_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let totals: Vec<f64> = (0..25).map(|_| rng.random_range(-3.0..0.0)).collect();
            let r = ranked(&totals);
            let mut was_abstained = false;
            for k in 0..50 {
                let t = k as f64 * 0.02;
                let now = decide(&r, t).abstained();
                assert!(!was_abstained || now);
                was_abstained = now;
            }
        }
    }

    #[test]
    fn neighbor_moves() {
        let empty = Dag::empty(2).unwrap();
        let n = neighbors(&empty);
        assert_eq!(n.len(), 2);
        assert!(n.iter().all(|g| g.edge_count() == 1));
        let chain = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let n = neighbors(&chain);
        assert!(n.iter().all(|g| g.is_acyclic()));
        // one addition (0->2), two deletions, two reversals
        assert_eq!(n.len(), 5);
    }

    #[test]
    fn two_node_exhaustive_has_three_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols = (0..2).map(|_| (0..120).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let data = Dataset::from_columns(cols, "t").unwrap();
        let r = exhaustive_search(&data, &ScoreConfig::default()).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.family_fits(), 4);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json.as_array().unwrap().len(), 3);
        assert!(json[0].get("total").is_some() && json[0].get("dag").is_some());
    }

    #[test]
    fn decision_json() {
        let r = ranked(&[10.0, 9.99, 5.0]);
        let v = serde_json::to_value(decide(&r, 0.01)).unwrap();
        assert_eq!(v["outcome"], "abstained");
        let v = serde_json::to_value(decide(&r, 0.0)).unwrap();
        assert!(v["outcome"]["selected"]["edges"].is_array());
        assert_eq!(v["t"], 0.0);
    }
}
