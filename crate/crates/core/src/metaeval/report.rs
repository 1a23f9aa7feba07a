use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::{pairwise_accuracy_from_deltas, segment_tau};
use super::judgments::{mean_penalties, JudgmentTable};
use super::references::{comparable_subset, ReferenceSampler};
use super::significance::{perm_both_test, DEFAULT_ALPHA, DEFAULT_RESAMPLES};
use super::{relative_change, StatError};
use crate::corpus::{EvaluationSet, LangPair, SeverityWeights, Subset, SubsetKey};
use crate::metrics::{Metric, MetricScore};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Segment,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefCondition {
    RefStd,
    RefMt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceOptions {
    pub n_resamples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl SignificanceOptions {
    pub fn new(seed: u64) -> Self {
        SignificanceOptions {
            n_resamples: DEFAULT_RESAMPLES,
            alpha: DEFAULT_ALPHA,
            seed,
        }
    }
}

/// Outcome of one perm-both comparison. `p_value` is `None` when either
/// correlation is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub lang_pair: LangPair,
    pub domain: String,
    pub level: Level,
    pub condition: RefCondition,
    pub metric_a: String,
    pub metric_b: String,
    pub units: usize,
    pub corr_a: Option<f64>,
    pub corr_b: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: Option<bool>,
}

/// Aligned per-unit vectors feeding one correlation statistic.
struct Units {
    level: Level,
    /// per metric, aligned with `human`
    metric: Vec<Vec<f64>>,
    /// penalties at segment level, deltas of goodness at system level
    human: Vec<f64>,
}

impl Units {
    fn correlation(level: Level, metric: &[f64], human: &[f64]) -> Result<f64, StatError> {
        match level {
            Level::Segment => segment_tau(metric, human),
            Level::System => {
                pairwise_accuracy_from_deltas(metric.iter().copied().zip(human.iter().copied()))
            }
        }
    }

    fn value(&self, m: usize) -> Option<f64> {
        Self::correlation(self.level, &self.metric[m], &self.human).ok()
    }
}

fn significance_rows(
    key: &SubsetKey,
    condition: RefCondition,
    units: &Units,
    metric_ids: &[String],
    options: &SignificanceOptions,
) -> Result<Vec<SignificanceRow>, StatError> {
    let pairs: Vec<(usize, usize)> = (0..metric_ids.len())
        .flat_map(|i| (i + 1..metric_ids.len()).map(move |j| (i, j)))
        .collect();
    let level_tag = format!("{:?}", units.level);
    let condition_tag = format!("{condition:?}");
    let key_tag = key.to_string();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&metric_ids[i], &metric_ids[j]);
            let mut row = SignificanceRow {
                lang_pair: key.lang_pair.clone(),
                domain: key.domain.clone(),
                level: units.level,
                condition,
                metric_a: a.clone(),
                metric_b: b.clone(),
                units: units.human.len(),
                corr_a: units.value(i),
                corr_b: units.value(j),
                p_value: None,
                significant: None,
            };
            if row.corr_a.is_none() || row.corr_b.is_none() {
                return Ok(row);
            }
            let stream = seed::derive_seed(
                options.seed,
                &["perm", &key_tag, &level_tag, &condition_tag, a, b],
            );
            let level = units.level;
            let test = perm_both_test(
                &units.metric[i],
                &units.metric[j],
                &units.human,
                |m, h| Units::correlation(level, m, h),
                options.n_resamples,
                stream,
            )?;
            row.p_value = Some(test.p_value);
            row.significant = Some(test.significant(options.alpha));
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub lang_pair: LangPair,
    pub domain: String,
    pub metric: String,
    /// pooled over complete cells; `None` when undefined
    pub segment_tau: Option<f64>,
    pub system_accuracy: Option<f64>,
    pub cells: usize,
    pub systems: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub seed: u64,
    pub n_resamples: usize,
    pub alpha: f64,
    pub rows: Vec<CorrelationRow>,
    /// machine translations lacking a human score or some metric's score
    pub missing_cells: BTreeMap<String, usize>,
    pub significance: Vec<SignificanceRow>,
}

fn system_pair_units(
    systems: &[String],
    metric: &[Vec<f64>],
    human: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = systems.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let deltas = metric
        .iter()
        .map(|m| pairs.iter().map(|&(i, j)| m[i] - m[j]).collect())
        .collect();
    (
        deltas,
        pairs.iter().map(|&(i, j)| human[i] - human[j]).collect(),
    )
}

/// Correlations of precomputed metric scores with MQM judgments, with
/// pairwise significance tests between metrics.
pub fn correlation_report(
    set: &EvaluationSet,
    scores: &[MetricScore],
    weights: &SeverityWeights,
    options: &SignificanceOptions,
) -> Result<CorrelationReport, StatError> {
    let mut rows = Vec::new();
    let mut significance = Vec::new();
    let mut missing_cells = BTreeMap::new();
    for (key, subset) in set.subsets() {
        let table = JudgmentTable::build(key, subset, weights, scores);
        missing_cells.insert(key.to_string(), table.missing_count());
        let ids = table.metric_ids.clone();
        if ids.is_empty() {
            continue;
        }
        let human_penalty = table.segment_vectors(&ids[0]).1;
        let seg_units = Units {
            level: Level::Segment,
            metric: ids.iter().map(|m| table.segment_vectors(m).0).collect(),
            human: human_penalty,
        };
        let (systems, _, human_sys) = table.system_vectors(&ids[0]);
        let metric_sys: Vec<Vec<f64>> = ids.iter().map(|m| table.system_vectors(m).1).collect();
        let (deltas, human_deltas) = system_pair_units(&systems, &metric_sys, &human_sys);
        let sys_units = Units {
            level: Level::System,
            metric: deltas,
            human: human_deltas,
        };
        for (m, id) in ids.iter().enumerate() {
            rows.push(CorrelationRow {
                lang_pair: key.lang_pair.clone(),
                domain: key.domain.clone(),
                metric: id.clone(),
                segment_tau: seg_units.value(m),
                system_accuracy: sys_units.value(m),
                cells: seg_units.human.len(),
                systems: systems.len(),
            });
        }
        significance.extend(significance_rows(
            key,
            RefCondition::RefStd,
            &seg_units,
            &ids,
            options,
        )?);
        significance.extend(significance_rows(
            key,
            RefCondition::RefStd,
            &sys_units,
            &ids,
            options,
        )?);
    }
    Ok(CorrelationReport {
        seed: options.seed,
        n_resamples: options.n_resamples,
        alpha: options.alpha,
        rows,
        missing_cells,
        significance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessOptions {
    pub weights: SeverityWeights,
    pub seed: u64,
    pub n_resamples: usize,
    pub alpha: f64,
    pub segment_level: bool,
    pub system_level: bool,
}

impl RobustnessOptions {
    pub fn new(seed: u64) -> Self {
        RobustnessOptions {
            weights: SeverityWeights::default(),
            seed,
            n_resamples: DEFAULT_RESAMPLES,
            alpha: DEFAULT_ALPHA,
            segment_level: true,
            system_level: true,
        }
    }
}

/// One statistic under both reference conditions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionPair {
    pub ref_std: Option<f64>,
    pub ref_mt: Option<f64>,
    /// percent, one decimal
    pub relative_change: Option<f64>,
}

impl ConditionPair {
    fn new(ref_std: Option<f64>, ref_mt: Option<f64>) -> Self {
        let relative_change = match (ref_std, ref_mt) {
            (Some(s), Some(m)) => relative_change(s, m),
            _ => None,
        };
        ConditionPair {
            ref_std,
            ref_mt,
            relative_change,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub metric: String,
    pub lang_pair: LangPair,
    pub domain: String,
    pub segment_tau: ConditionPair,
    pub system_accuracy: ConditionPair,
}

/// Mean over the language pairs of one domain; a gap in any pair leaves a gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessAverage {
    pub metric: String,
    pub domain: String,
    pub lang_pairs: usize,
    pub segment_tau: ConditionPair,
    pub system_accuracy: ConditionPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub lang_pair: LangPair,
    pub domain: String,
    pub segments: usize,
    pub machine_systems: usize,
    /// (system, segment) cells scored under both conditions
    pub segment_level_cells: usize,
    /// (system, segment) combinations dropped for lack of a machine reference
    pub segment_level_skipped: usize,
    pub system_pairs: usize,
    /// pairs without any comparable, commonly rated segment
    pub system_pairs_skipped: usize,
    /// segment-pair combinations dropped for lack of a machine reference
    pub system_level_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub seed: u64,
    pub n_resamples: usize,
    pub alpha: f64,
    pub metrics: Vec<String>,
    pub rows: Vec<RobustnessRow>,
    pub averages: Vec<RobustnessAverage>,
    pub coverage: Vec<Coverage>,
    pub significance: Vec<SignificanceRow>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum RefSource<'a> {
    Std,
    Mt(&'a str),
}

type ScoreKey<'a> = (&'a str, &'a str, RefSource<'a>);

/// (system a, system b, [(segment, MT reference system)])
type PairPlan<'a> = (&'a str, &'a str, Vec<(&'a str, &'a str)>);

struct SubsetPlan<'a> {
    /// (system, seg, machine reference system) per segment-level cell
    segment_cells: Vec<(&'a str, &'a str, &'a str)>,
    segment_skipped: usize,
    /// per system pair: the comparable segments and their machine references
    pairs: Vec<PairPlan<'a>>,
    pairs_skipped: usize,
    system_skipped: usize,
}

fn plan<'a>(
    subset: &'a Subset,
    sampler: &ReferenceSampler<'a>,
    penalties: &BTreeMap<(String, String), f64>,
    options: &RobustnessOptions,
) -> Result<SubsetPlan<'a>, StatError> {
    let systems: Vec<&str> = subset.machine_systems().into_iter().collect();
    let intern = |id: &str| -> &'a str {
        systems
            .iter()
            .copied()
            .find(|s| *s == id)
            .expect("sampled from a machine system")
    };
    let rated = |sys: &str, seg: &str| penalties.contains_key(&(sys.to_string(), seg.to_string()));
    let segments = subset.segments().count();
    let mut out = SubsetPlan {
        segment_cells: Vec::new(),
        segment_skipped: 0,
        pairs: Vec::new(),
        pairs_skipped: 0,
        system_skipped: 0,
    };

    if options.segment_level {
        for &sys in &systems {
            let assignment = sampler.segment_level(sys, options.seed);
            let comparable = comparable_subset(subset, &assignment)?;
            out.segment_skipped += segments - comparable.len();
            for seg in subset.segments().map(|s| s.seg_id.as_str()) {
                if comparable.contains(seg)
                    && subset.translation(sys, seg).is_some()
                    && rated(sys, seg)
                {
                    out.segment_cells
                        .push((sys, seg, intern(&assignment.chosen[seg].system_id)));
                }
            }
        }
    }

    if options.system_level {
        for (i, &a) in systems.iter().enumerate() {
            for &b in &systems[i + 1..] {
                let assignment = sampler.system_pair(a, b, options.seed);
                let comparable = comparable_subset(subset, &assignment)?;
                out.system_skipped += segments - comparable.len();
                let mut segs = Vec::new();
                for seg in subset.segments().map(|s| s.seg_id.as_str()) {
                    let both = [a, b]
                        .iter()
                        .all(|s| subset.translation(s, seg).is_some() && rated(s, seg));
                    if comparable.contains(seg) && both {
                        segs.push((seg, intern(&assignment.chosen[seg].system_id)));
                    }
                }
                if segs.is_empty() {
                    out.pairs_skipped += 1;
                } else {
                    out.pairs.push((a, b, segs));
                }
            }
        }
    }
    Ok(out)
}

fn score_jobs<'a>(
    subset: &'a Subset,
    metrics: &[&dyn Metric],
    jobs: BTreeSet<ScoreKey<'a>>,
) -> HashMap<(usize, ScoreKey<'a>), f64> {
    let jobs: Vec<ScoreKey<'a>> = jobs.into_iter().collect();
    let scored: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(sys, seg, source)| {
            let hyp = &subset
                .translation(sys, seg)
                .expect("planned translation")
                .text;
            let reference = match source {
                RefSource::Std => {
                    &subset
                        .standard_reference(seg)
                        .expect("comparable segment")
                        .text
                }
                RefSource::Mt(r) => &subset.translation(r, seg).expect("sampled reference").text,
            };
            metrics.iter().map(|m| m.score(hyp, reference)).collect()
        })
        .collect();
    let mut out = HashMap::new();
    for (job, values) in jobs.into_iter().zip(scored) {
        for (m, v) in values.into_iter().enumerate() {
            out.insert((m, job), v);
        }
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn average(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let defined: Option<Vec<f64>> = values.iter().copied().collect();
    defined.map(|v| mean(v.into_iter()))
}

/// Segment- and system-level correlations under the standard human reference
/// and under sampled error-free machine references, evaluated on identical
/// segment sets.
pub fn robustness_report(
    set: &EvaluationSet,
    metrics: &[&dyn Metric],
    options: &RobustnessOptions,
) -> Result<RobustnessReport, StatError> {
    if metrics.is_empty() {
        return Err(StatError::InvalidArgument("no metrics given".into()));
    }
    let metric_ids: Vec<String> = metrics.iter().map(|m| m.id().to_string()).collect();
    let unique: BTreeSet<&String> = metric_ids.iter().collect();
    if unique.len() != metric_ids.len() {
        return Err(StatError::InvalidArgument(
            "metric ids must be distinct".into(),
        ));
    }
    let sig_options = SignificanceOptions {
        n_resamples: options.n_resamples,
        alpha: options.alpha,
        seed: options.seed,
    };

    let mut rows = Vec::new();
    let mut coverage = Vec::new();
    let mut significance = Vec::new();
    for (key, subset) in set.subsets() {
        let penalties = mean_penalties(subset, &options.weights);
        let sampler = ReferenceSampler::new(subset);
        let plan = plan(subset, &sampler, &penalties, options)?;

        let mut jobs = BTreeSet::new();
        for &(sys, seg, mt) in &plan.segment_cells {
            jobs.insert((sys, seg, RefSource::Std));
            jobs.insert((sys, seg, RefSource::Mt(mt)));
        }
        for (a, b, segs) in &plan.pairs {
            for &(seg, mt) in segs {
                for sys in [*a, *b] {
                    jobs.insert((sys, seg, RefSource::Std));
                    jobs.insert((sys, seg, RefSource::Mt(mt)));
                }
            }
        }
        let scores = score_jobs(subset, metrics, jobs);
        let penalty = |sys: &str, seg: &str| penalties[&(sys.to_string(), seg.to_string())];

        let seg_human: Vec<f64> = plan
            .segment_cells
            .iter()
            .map(|&(s, g, _)| penalty(s, g))
            .collect();
        let seg_units = |condition: RefCondition| Units {
            level: Level::Segment,
            metric: (0..metrics.len())
                .map(|m| {
                    plan.segment_cells
                        .iter()
                        .map(|&(s, g, mt)| {
                            let source = match condition {
                                RefCondition::RefStd => RefSource::Std,
                                RefCondition::RefMt => RefSource::Mt(mt),
                            };
                            scores[&(m, (s, g, source))]
                        })
                        .collect()
                })
                .collect(),
            human: seg_human.clone(),
        };

        let sys_human: Vec<f64> = plan
            .pairs
            .iter()
            .map(|(a, b, segs)| {
                let goodness = |s: &str| -mean(segs.iter().map(|&(g, _)| penalty(s, g)));
                goodness(a) - goodness(b)
            })
            .collect();
        let sys_units = |condition: RefCondition| Units {
            level: Level::System,
            metric: (0..metrics.len())
                .map(|m| {
                    plan.pairs
                        .iter()
                        .map(|(a, b, segs)| {
                            let system = |s: &str| {
                                mean(segs.iter().map(|&(g, mt)| {
                                    let source = match condition {
                                        RefCondition::RefStd => RefSource::Std,
                                        RefCondition::RefMt => RefSource::Mt(mt),
                                    };
                                    scores[&(m, (s, g, source))]
                                }))
                            };
                            system(a) - system(b)
                        })
                        .collect()
                })
                .collect(),
            human: sys_human.clone(),
        };

        let levels: Vec<(Level, bool)> = vec![
            (Level::Segment, options.segment_level),
            (Level::System, options.system_level),
        ];
        let mut values: BTreeMap<(Level, RefCondition), Vec<Option<f64>>> = BTreeMap::new();
        for (level, enabled) in levels {
            for condition in [RefCondition::RefStd, RefCondition::RefMt] {
                if !enabled {
                    values.insert((level, condition), vec![None; metrics.len()]);
                    continue;
                }
                let units = match level {
                    Level::Segment => seg_units(condition),
                    Level::System => sys_units(condition),
                };
                values.insert(
                    (level, condition),
                    (0..metrics.len()).map(|m| units.value(m)).collect(),
                );
                significance.extend(significance_rows(
                    key,
                    condition,
                    &units,
                    &metric_ids,
                    &sig_options,
                )?);
            }
        }

        for (m, id) in metric_ids.iter().enumerate() {
            let get = |level, condition| values[&(level, condition)][m];
            rows.push(RobustnessRow {
                metric: id.clone(),
                lang_pair: key.lang_pair.clone(),
                domain: key.domain.clone(),
                segment_tau: ConditionPair::new(
                    get(Level::Segment, RefCondition::RefStd),
                    get(Level::Segment, RefCondition::RefMt),
                ),
                system_accuracy: ConditionPair::new(
                    get(Level::System, RefCondition::RefStd),
                    get(Level::System, RefCondition::RefMt),
                ),
            });
        }
        let systems = subset.machine_systems().len();
        coverage.push(Coverage {
            lang_pair: key.lang_pair.clone(),
            domain: key.domain.clone(),
            segments: subset.segments().count(),
            machine_systems: systems,
            segment_level_cells: plan.segment_cells.len(),
            segment_level_skipped: plan.segment_skipped,
            system_pairs: plan.pairs.len(),
            system_pairs_skipped: plan.pairs_skipped,
            system_level_skipped: plan.system_skipped,
        });
    }

    let mut averages = Vec::new();
    let domains: BTreeSet<&str> = rows.iter().map(|r| r.domain.as_str()).collect();
    for domain in domains {
        for id in &metric_ids {
            let selected: Vec<&RobustnessRow> = rows
                .iter()
                .filter(|r| r.domain == domain && &r.metric == id)
                .collect();
            let avg = |f: &dyn Fn(&RobustnessRow) -> Option<f64>| {
                average(&selected.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            averages.push(RobustnessAverage {
                metric: id.clone(),
                domain: domain.to_string(),
                lang_pairs: selected.len(),
                segment_tau: ConditionPair::new(
                    avg(&|r| r.segment_tau.ref_std),
                    avg(&|r| r.segment_tau.ref_mt),
                ),
                system_accuracy: ConditionPair::new(
                    avg(&|r| r.system_accuracy.ref_std),
                    avg(&|r| r.system_accuracy.ref_mt),
                ),
            });
        }
    }

    Ok(RobustnessReport {
        seed: options.seed,
        n_resamples: options.n_resamples,
        alpha: options.alpha,
        metrics: metric_ids,
        rows,
        averages,
        coverage,
        significance,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:.1}", 100.0 * x))
}

fn change(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:+.1}%"))
}

fn render_table(out: &mut String, header: &[String], body: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(header).trim_end());
    let _ = writeln!(
        out,
        "{}",
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  ")
    );
    for row in body {
        let _ = writeln!(out, "{}", line(row).trim_end());
    }
}

type LevelView = (
    Level,
    &'static str,
    fn(&RobustnessRow) -> ConditionPair,
    fn(&RobustnessAverage) -> ConditionPair,
);

impl RobustnessReport {
    /// Plain-text tables, one per level and domain: `ref_std`, `ref_mt` and
    /// relative change per language pair, plus the cross-pair average.
    /// Correlations are scaled by 100.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let domains: BTreeSet<&str> = self.rows.iter().map(|r| r.domain.as_str()).collect();
        let levels: [LevelView; 2] = [
            (
                Level::Segment,
                "Segment-level Kendall tau",
                |r| r.segment_tau,
                |a| a.segment_tau,
            ),
            (
                Level::System,
                "System-level pairwise accuracy",
                |r| r.system_accuracy,
                |a| a.system_accuracy,
            ),
        ];
        for (level, title, of_row, of_avg) in levels {
            for &domain in &domains {
                let lps: Vec<&LangPair> = self
                    .rows
                    .iter()
                    .filter(|r| r.domain == domain)
                    .map(|r| &r.lang_pair)
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let _ = writeln!(out, "{title} (x100), domain {domain}");
                let mut header = vec!["metric".to_string()];
                for lp in lps.iter().map(|l| l.to_string()).chain(["avg".to_string()]) {
                    header.extend([
                        format!("{lp} ref_std"),
                        format!("{lp} ref_mt"),
                        format!("{lp} change"),
                    ]);
                }
                let mut body = Vec::new();
                for id in &self.metrics {
                    let mut row = vec![id.clone()];
                    for lp in &lps {
                        let pair = self
                            .rows
                            .iter()
                            .find(|r| r.domain == domain && &r.lang_pair == *lp && &r.metric == id)
                            .map(of_row)
                            .unwrap_or_default();
                        row.extend([
                            cell(pair.ref_std),
                            cell(pair.ref_mt),
                            change(pair.relative_change),
                        ]);
                    }
                    let avg = self
                        .averages
                        .iter()
                        .find(|a| a.domain == domain && &a.metric == id)
                        .map(of_avg)
                        .unwrap_or_default();
                    row.extend([
                        cell(avg.ref_std),
                        cell(avg.ref_mt),
                        change(avg.relative_change),
                    ]);
                    body.push(row);
                }
                render_table(&mut out, &header, &body);
                let notes: Vec<&SignificanceRow> = self
                    .significance
                    .iter()
                    .filter(|s| s.level == level && s.domain == domain && s.p_value.is_some())
                    .collect();
                if !notes.is_empty() {
                    let _ = writeln!(out, "perm-both tests (* = p < {}):", self.alpha);
                    for s in notes {
                        let p = s.p_value.unwrap_or(1.0);
                        let mark = if s.significant == Some(true) {
                            " *"
                        } else {
                            ""
                        };
                        let condition = match s.condition {
                            RefCondition::RefStd => "ref_std",
                            RefCondition::RefMt => "ref_mt",
                        };
                        let _ = writeln!(
                            out,
                            "  {} {}: {} vs {} p={p:.4}{mark}",
                            s.lang_pair, condition, s.metric_a, s.metric_b
                        );
                    }
                }
                out.push('\n');
            }
        }
        out.push_str("Coverage\n");
        let header: Vec<String> = [
            "subset",
            "segments",
            "systems",
            "seg cells",
            "seg skipped",
            "pairs",
            "pairs skipped",
            "pair-seg skipped",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let body: Vec<Vec<String>> = self
            .coverage
            .iter()
            .map(|c| {
                vec![
                    format!("{}/{}", c.lang_pair, c.domain),
                    c.segments.to_string(),
                    c.machine_systems.to_string(),
                    c.segment_level_cells.to_string(),
                    c.segment_level_skipped.to_string(),
                    c.system_pairs.to_string(),
                    c.system_pairs_skipped.to_string(),
                    c.system_level_skipped.to_string(),
                ]
            })
            .collect();
        render_table(&mut out, &header, &body);
        out
    }
}

impl CorrelationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = [
            "subset",
            "metric",
            "segment tau",
            "system acc",
            "cells",
            "systems",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    format!("{}/{}", r.lang_pair, r.domain),
                    r.metric.clone(),
                    r.segment_tau.map_or("n/a".into(), |v| format!("{v:.4}")),
                    r.system_accuracy
                        .map_or("n/a".into(), |v| format!("{v:.4}")),
                    r.cells.to_string(),
                    r.systems.to_string(),
                ]
            })
            .collect();
        render_table(&mut out, &header, &body);
        for s in self.significance.iter().filter(|s| s.p_value.is_some()) {
            let mark = if s.significant == Some(true) {
                " *"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "{}/{} {:?}: {} vs {} p={:.4}{mark}",
                s.lang_pair,
                s.domain,
                s.level,
                s.metric_a,
                s.metric_b,
                s.p_value.unwrap_or(1.0)
            );
        }
        out
    }
}
