//! Relative rankings derived from MQM ratings by intra-annotator pairing.
//!
//! Two translations of the same segment are paired only when the same
//! annotator rated both, and only when that annotator's penalties differ by
//! more than the threshold. Scores are never compared across annotators.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::{mqm_score, EvaluationSet, LangPair, SeverityWeights};
use crate::seed;
use crate::tsv::{self, TsvError};

pub const RANKINGS_HEADER: [&str; 8] = [
    "lang_pair",
    "seg_id",
    "annotator_id",
    "src",
    "ref",
    "sys_plus",
    "sys_minus",
    "score_delta",
];

pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_HOLDOUT: usize = 5000;

/// Penalty differences within this distance of the threshold are treated as
/// equal to it, so that `1.1 - 1.0` does not clear a 0.1 threshold through
/// floating-point rounding.
pub const THRESHOLD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum RankingError {
    #[error(transparent)]
    Tsv(#[from] TsvError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeRanking {
    pub lang_pair: LangPair,
    pub annotator_id: String,
    pub seg_id: String,
    pub src: String,
    #[serde(rename = "ref")]
    pub reference: String,
    pub sys_plus: String,
    pub sys_minus: String,
    /// penalty(sys_minus) - penalty(sys_plus), always above the threshold
    pub score_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeriveOptions {
    pub threshold: f64,
    pub exclude_human: bool,
    pub weights: SeverityWeights,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        DeriveOptions {
            threshold: DEFAULT_THRESHOLD,
            exclude_human: false,
            weights: SeverityWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeriveDiagnostics {
    /// Rated segments skipped because they have no standard reference.
    pub segments_without_reference: usize,
    /// (annotator, segment) groups that produced at least one ranking.
    pub groups_used: usize,
    /// Pairs dropped because their penalty difference did not exceed the threshold.
    pub pairs_below_threshold: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DerivedRankings {
    pub rankings: Vec<RelativeRanking>,
    pub diagnostics: DeriveDiagnostics,
}

type SortKey = (String, String, String, String, String, String);

/// Converts the corpus's MQM ratings into relative rankings.
///
/// Output is sorted by language pair, segment, annotator and then by the
/// pair of system ids.
pub fn derive_rankings(set: &EvaluationSet, options: &DeriveOptions) -> DerivedRankings {
    let mut keyed: Vec<(SortKey, RelativeRanking)> = Vec::new();
    let mut diagnostics = DeriveDiagnostics::default();

    for (key, subset) in set.subsets() {
        // (seg, annotator) -> [(system, penalty)], systems sorted
        let mut groups: BTreeMap<(&str, &str), Vec<(&str, f64)>> = BTreeMap::new();
        for rating in subset.ratings() {
            if options.exclude_human && subset.is_human_system(&rating.system_id) {
                continue;
            }
            groups
                .entry((rating.seg_id.as_str(), rating.annotator_id.as_str()))
                .or_default()
                .push((
                    rating.system_id.as_str(),
                    mqm_score(rating, &options.weights),
                ));
        }

        let mut last_skipped: Option<&str> = None;
        for ((seg_id, annotator_id), mut rated) in groups {
            let Some(reference) = subset.standard_reference(seg_id) else {
                if last_skipped != Some(seg_id) {
                    diagnostics.segments_without_reference += 1;
                    last_skipped = Some(seg_id);
                }
                continue;
            };
            let segment = subset
                .segment(seg_id)
                .expect("ratings reference known segments");
            rated.sort_by(|a, b| a.0.cmp(b.0));
            let mut used = false;
            for (i, &(sys_i, pen_i)) in rated.iter().enumerate() {
                for &(sys_j, pen_j) in &rated[i + 1..] {
                    let delta = (pen_i - pen_j).abs();
                    if delta - options.threshold <= THRESHOLD_TOLERANCE {
                        diagnostics.pairs_below_threshold += 1;
                        continue;
                    }
                    let (plus, minus) = if pen_i < pen_j {
                        (sys_i, sys_j)
                    } else {
                        (sys_j, sys_i)
                    };
                    let text = |sys: &str| {
                        subset
                            .translation(sys, seg_id)
                            .expect("ratings reference known translations")
                            .text
                            .clone()
                    };
                    used = true;
                    keyed.push((
                        (
                            key.lang_pair.to_string(),
                            seg_id.to_string(),
                            annotator_id.to_string(),
                            key.domain.clone(),
                            sys_i.to_string(),
                            sys_j.to_string(),
                        ),
                        RelativeRanking {
                            lang_pair: key.lang_pair.clone(),
                            annotator_id: annotator_id.to_string(),
                            seg_id: seg_id.to_string(),
                            src: segment.source_text.clone(),
                            reference: reference.text.clone(),
                            sys_plus: text(plus),
                            sys_minus: text(minus),
                            score_delta: delta,
                        },
                    ));
                }
            }
            if used {
                diagnostics.groups_used += 1;
            }
        }
    }

    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    DerivedRankings {
        rankings: keyed.into_iter().map(|(_, r)| r).collect(),
        diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitProvenance {
    pub seed: u64,
    pub holdout_requested: usize,
    /// True when the holdout exceeded the data and was clamped to all of it.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    pub train: Vec<RelativeRanking>,
    pub validation: Vec<RelativeRanking>,
    pub provenance: SplitProvenance,
}

/// Holds out a uniformly random, seed-determined validation split.
///
/// Both splits keep the input order. A holdout larger than the input is
/// clamped to the whole input and logged as a warning.
pub fn split_holdout(
    rankings: Vec<RelativeRanking>,
    holdout_size: usize,
    seed: u64,
) -> RankingDataset {
    let n = rankings.len();
    let clamped = holdout_size > n;
    if clamped {
        log::warn!(
            "holdout of {holdout_size} exceeds {n} rankings; using all rankings for validation"
        );
    }
    let k = holdout_size.min(n);
    let mut rng = seed::stream(seed, &["holdout"]);
    let mut in_validation = vec![false; n];
    for i in index::sample(&mut rng, n, k) {
        in_validation[i] = true;
    }
    let (validation, train): (Vec<_>, Vec<_>) = rankings
        .into_iter()
        .zip(in_validation)
        .partition(|(_, v)| *v);
    RankingDataset {
        train: train.into_iter().map(|(r, _)| r).collect(),
        validation: validation.into_iter().map(|(r, _)| r).collect(),
        provenance: SplitProvenance {
            seed,
            holdout_requested: holdout_size,
            clamped,
        },
    }
}

/// Splits each language pair separately, with a per-pair seed stream.
pub fn split_by_lang_pair(
    rankings: Vec<RelativeRanking>,
    holdout_size: usize,
    seed: u64,
) -> BTreeMap<LangPair, RankingDataset> {
    let mut grouped: BTreeMap<LangPair, Vec<RelativeRanking>> = BTreeMap::new();
    for r in rankings {
        grouped.entry(r.lang_pair.clone()).or_default().push(r);
    }
    grouped
        .into_iter()
        .map(|(lp, rs)| {
            let pair_seed = seed::derive_seed(seed, &["split", &lp.to_string()]);
            let mut ds = split_holdout(rs, holdout_size, pair_seed);
            ds.provenance.seed = seed;
            (lp, ds)
        })
        .collect()
}

pub fn write_rankings(path: &Path, rankings: &[RelativeRanking]) -> Result<(), RankingError> {
    let io = |source| RankingError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let rows = rankings.iter().map(|r| {
        vec![
            r.lang_pair.to_string(),
            r.seg_id.clone(),
            r.annotator_id.clone(),
            r.src.clone(),
            r.reference.clone(),
            r.sys_plus.clone(),
            r.sys_minus.clone(),
            tsv::fmt_f64(r.score_delta),
        ]
    });
    tsv::write_rows(std::io::BufWriter::new(file), &RANKINGS_HEADER, rows).map_err(io)
}

pub fn parse_rankings(file: &str, content: &str) -> Result<Vec<RelativeRanking>, RankingError> {
    tsv::read_rows(file, content, &RANKINGS_HEADER)?
        .into_iter()
        .map(|row| {
            let lang_pair = row
                .get(0)
                .parse()
                .map_err(|e: crate::corpus::CorpusError| {
                    TsvError::new(file, row.line, e.to_string())
                })?;
            let score_delta: f64 = row
                .get(7)
                .parse()
                .ok()
                .filter(|d: &f64| d.is_finite() && *d > 0.0)
                .ok_or_else(|| {
                    TsvError::new(
                        file,
                        row.line,
                        format!("invalid score_delta `{}`", row.get(7)),
                    )
                })?;
            Ok(RelativeRanking {
                lang_pair,
                seg_id: row.get(1).to_string(),
                annotator_id: row.get(2).to_string(),
                src: row.get(3).to_string(),
                reference: row.get(4).to_string(),
                sys_plus: row.get(5).to_string(),
                sys_minus: row.get(6).to_string(),
                score_delta,
            })
        })
        .collect()
}

pub fn read_rankings(path: &Path) -> Result<Vec<RelativeRanking>, RankingError> {
    let content = std::fs::read_to_string(path).map_err(|source| RankingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rankings(&path.display().to_string(), &content)
}
