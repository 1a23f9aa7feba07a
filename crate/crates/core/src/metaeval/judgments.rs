use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{mqm_score, SeverityWeights, Subset, SubsetKey};
use crate::metrics::MetricScore;

/// Mean MQM penalty per rated `(system_id, seg_id)`, in one pass over the
/// ratings.
pub fn mean_penalties(
    subset: &Subset,
    weights: &SeverityWeights,
) -> BTreeMap<(String, String), f64> {
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for r in subset.ratings() {
        let e = sums
            .entry((r.system_id.clone(), r.seg_id.clone()))
            .or_insert((0.0, 0));
        e.0 += mqm_score(r, weights);
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// mean MQM penalty across annotators; lower is better
    pub human_penalty: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
}

/// Human and metric scores for every machine translation of one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentTable {
    pub key: SubsetKey,
    pub metric_ids: Vec<String>,
    /// keyed by (system_id, seg_id)
    pub cells: BTreeMap<(String, String), Cell>,
}

impl JudgmentTable {
    /// Scores for systems that are human in `subset` or absent from it are
    /// ignored.
    pub fn build(
        key: &SubsetKey,
        subset: &Subset,
        weights: &SeverityWeights,
        scores: &[MetricScore],
    ) -> Self {
        let penalties = mean_penalties(subset, weights);
        let mut cells: BTreeMap<(String, String), Cell> = subset
            .translations()
            .filter(|t| !t.is_human)
            .map(|t| {
                let k = (t.system_id.clone(), t.seg_id.clone());
                let human_penalty = penalties.get(&k).copied();
                (
                    k,
                    Cell {
                        human_penalty,
                        metrics: BTreeMap::new(),
                    },
                )
            })
            .collect();
        let mut metric_ids = BTreeSet::new();
        for s in scores
            .iter()
            .filter(|s| s.lang_pair == key.lang_pair && s.domain == key.domain)
        {
            metric_ids.insert(s.metric_id.clone());
            if let Some(cell) = cells.get_mut(&(s.system_id.clone(), s.seg_id.clone())) {
                cell.metrics.insert(s.metric_id.clone(), s.value);
            }
        }
        JudgmentTable {
            key: key.clone(),
            metric_ids: metric_ids.into_iter().collect(),
            cells,
        }
    }

    /// A cell is complete when it has a human score and every metric's score.
    pub fn is_complete(&self, cell: &Cell) -> bool {
        cell.human_penalty.is_some() && self.metric_ids.iter().all(|m| cell.metrics.contains_key(m))
    }

    pub fn complete_cells(&self) -> impl Iterator<Item = (&(String, String), &Cell)> {
        self.cells.iter().filter(|(_, c)| self.is_complete(c))
    }

    pub fn missing_count(&self) -> usize {
        self.cells.len() - self.complete_cells().count()
    }

    /// Aligned `(metric scores, human penalties)` over complete cells.
    pub fn segment_vectors(&self, metric_id: &str) -> (Vec<f64>, Vec<f64>) {
        self.complete_cells()
            .map(|(_, c)| (c.metrics[metric_id], c.human_penalty.unwrap_or_default()))
            .unzip()
    }

    /// Per-system means over complete cells: `(systems, metric, human goodness)`,
    /// where human goodness is the negated mean penalty.
    pub fn system_vectors(&self, metric_id: &str) -> (Vec<String>, Vec<f64>, Vec<f64>) {
        let mut acc: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
        for ((system, _), c) in self.complete_cells() {
            let e = acc.entry(system).or_insert((0.0, 0.0, 0));
            e.0 += c.metrics[metric_id];
            e.1 += c.human_penalty.unwrap_or_default();
            e.2 += 1;
        }
        let mut systems = Vec::new();
        let mut metric = Vec::new();
        let mut human = Vec::new();
        for (s, (m, h, n)) in acc {
            systems.push(s.to_string());
            metric.push(m / n as f64);
            human.push(-(h / n as f64));
        }
        (systems, metric, human)
    }
}
