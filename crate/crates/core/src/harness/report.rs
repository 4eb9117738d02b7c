use std::fmt::Write as _;

use serde::Serialize;

use crate::graph::Dag;

/// Outcome of one simulated dataset or one real pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    /// Grouping key (function set, sample-size index, ...).
    pub group: usize,
    pub trial: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n: usize,
    pub chosen: Option<Dag>,
    pub truth: Option<Dag>,
    pub shd: Option<usize>,
    pub correct: bool,
    pub abstained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub decided: usize,
    pub abstained: usize,
    pub correct: usize,
    pub wrong: usize,
    pub decision_rate: f64,
    pub abstention_rate: f64,
    /// Correct decisions over decided trials.
    pub accuracy: f64,
    /// Wrong decisions over all trials.
    pub wrong_rate: f64,
    /// Mean SHD over decided trials with a known truth.
    pub mean_shd: Option<f64>,
}

impl Aggregate {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> Aggregate {
        let (mut trials, mut abstained, mut correct, mut wrong) = (0, 0, 0, 0);
        let (mut shd_sum, mut shd_count) = (0usize, 0usize);
        for r in records {
            trials += 1;
            if r.abstained {
                abstained += 1;
                continue;
            }
            if r.correct {
                correct += 1;
            } else {
                wrong += 1;
            }
            if let Some(s) = r.shd {
                shd_sum += s;
                shd_count += 1;
            }
        }
        let decided = trials - abstained;
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Aggregate {
            trials,
            decided,
            abstained,
            correct,
            wrong,
            decision_rate: ratio(decided, trials),
            abstention_rate: ratio(abstained, trials),
            accuracy: ratio(correct, decided),
            wrong_rate: ratio(wrong, trials),
            mean_shd: (shd_count > 0).then(|| shd_sum as f64 / shd_count as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: usize,
    pub label: String,
    #[serde(flatten)]
    pub aggregate: Aggregate,
}

/// Per-trial records plus aggregates recomputed from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub overall: Aggregate,
    pub groups: Vec<GroupSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<super::SkippedPair>,
    pub records: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub(crate) fn new(
        experiment: &str,
        seed: u64,
        config: serde_json::Value,
        records: Vec<TrialRecord>,
        group_labels: Vec<String>,
    ) -> Self {
        let groups = group_labels
            .into_iter()
            .enumerate()
            .map(|(group, label)| GroupSummary {
                group,
                label,
                aggregate: Aggregate::from_records(records.iter().filter(|r| r.group == group)),
            })
            .collect();
        ExperimentReport {
            experiment: experiment.to_string(),
            seed,
            config,
            overall: Aggregate::from_records(&records),
            groups,
            skipped: Vec::new(),
            records,
        }
    }

    /// True when the stored aggregates equal a fresh recomputation.
    pub fn aggregates_consistent(&self) -> bool {
        self.overall == Aggregate::from_records(&self.records)
            && self
                .groups
                .iter()
                .all(|g| g.aggregate == Aggregate::from_records(self.records.iter().filter(|r| r.group == g.group)))
    }

    pub fn group(&self, label: &str) -> Option<&Aggregate> {
        self.groups.iter().find(|g| g.label == label).map(|g| &g.aggregate)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Aggregates as CSV: one row per group and a final `all` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "group,label,trials,decided,abstained,correct,wrong,decision_rate,abstention_rate,accuracy,wrong_rate,mean_shd\n",
        );
        let rows = self
            .groups
            .iter()
            .map(|g| (g.group.to_string(), g.label.as_str(), &g.aggregate))
            .chain(std::iter::once(("all".to_string(), "all", &self.overall)));
        for (group, label, a) in rows {
            let shd = a.mean_shd.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{group},{label},{},{},{},{},{},{},{},{},{},{shd}",
                a.trials,
                a.decided,
                a.abstained,
                a.correct,
                a.wrong,
                a.decision_rate,
                a.abstention_rate,
                a.accuracy,
                a.wrong_rate
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(group: usize, correct: bool, abstained: bool, shd: Option<usize>) -> TrialRecord {
        TrialRecord { group, trial: 0, seed: 0, label: None, n: 10, chosen: None, truth: None, shd, correct, abstained }
    }

    #[test]
    fn aggregates() {
        let records = vec![
            record(0, true, false, Some(0)),
            record(0, false, false, Some(2)),
            record(1, false, true, None),
            record(1, true, false, Some(0)),
        ];
        let a = Aggregate::from_records(&records);
        assert_eq!((a.trials, a.decided, a.abstained, a.correct, a.wrong), (4, 3, 1, 2, 1));
        assert_eq!(a.wrong_rate, 0.25);
        assert_eq!(a.mean_shd, Some(2.0 / 3.0));
        let report = ExperimentReport::new("t", 1, serde_json::Value::Null, records, vec!["a".into(), "b".into()]);
        assert!(report.aggregates_consistent());
        assert_eq!(report.group("b").unwrap().abstained, 1);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().last().unwrap().starts_with("all,all,4,3,1,2,1,"));
    }

    #[test]
    fn empty_aggregate() {
        let a = Aggregate::from_records(&[]);
        assert_eq!(a.trials, 0);
        assert_eq!(a.accuracy, 0.0);
        assert_eq!(a.mean_shd, None);
    }
}
