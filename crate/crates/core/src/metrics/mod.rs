//! Reference-based metrics behind a single [`Metric`] interface.
//!
//! Every metric here reports "higher is better". Sequence scores are base-2
//! log-probabilities, so `2^S` is the per-token geometric-mean probability.

mod bleu;
mod chrf;
mod sequence;
mod toy;

use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{CorpusError, LangPair};
use crate::tsv::{self, TsvError};

pub use bleu::{
    bleu, corpus_bleu, sentence_bleu, BleuLevel, BleuMetric, NgramStats, BLEU_MAX_ORDER,
};
pub use chrf::{chrf, ChrfMetric, CHRF_BETA, CHRF_MAX_ORDER};
pub use sequence::{prism_score, sequence_score, PrismMetric, SequenceScorer, UniformScorer};
pub use toy::{ToyScorer, ToyScorerError, EOS, FEATURE_COUNT, FEATURE_NAMES, UNK};

pub const METRIC_SCORES_HEADER: [&str; 6] = [
    "metric_id",
    "lang_pair",
    "domain",
    "system_id",
    "seg_id",
    "value",
];

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("empty input")]
    Empty,
    #[error("hypothesis and reference lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Tsv(#[from] TsvError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Whitespace tokenizer over NFC-normalized text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let text: String = text.nfc().collect();
        text.split_whitespace()
            .map(|t| {
                if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_string()
                }
            })
            .collect()
    }
}

pub fn as_strs(tokens: &[String]) -> Vec<&str> {
    tokens.iter().map(String::as_str).collect()
}

/// A segment-level, reference-based metric. Higher is better.
pub trait Metric: Sync {
    fn id(&self) -> &str;
    fn score(&self, hypothesis: &str, reference: &str) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric_id: String,
    pub lang_pair: LangPair,
    pub domain: String,
    pub system_id: String,
    pub seg_id: String,
    pub value: f64,
}

/// Mean of segment scores.
pub fn system_score(segment_scores: &[f64]) -> Result<f64, MetricError> {
    if segment_scores.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(&bad) = segment_scores.iter().find(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite(bad));
    }
    Ok(segment_scores.iter().sum::<f64>() / segment_scores.len() as f64)
}

/// Mean of `2^S` over segments: sequence scores mapped back to probability space.
pub fn score_magnitude(segment_scores: &[f64]) -> Result<f64, MetricError> {
    if segment_scores.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(segment_scores.iter().map(|s| s.exp2()).sum::<f64>() / segment_scores.len() as f64)
}

pub fn write_metric_scores(path: &Path, scores: &[MetricScore]) -> Result<(), MetricError> {
    let io = |source| MetricError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let rows = scores.iter().map(|s| {
        vec![
            s.metric_id.clone(),
            s.lang_pair.to_string(),
            s.domain.clone(),
            s.system_id.clone(),
            s.seg_id.clone(),
            tsv::fmt_f64(s.value),
        ]
    });
    tsv::write_rows(std::io::BufWriter::new(file), &METRIC_SCORES_HEADER, rows).map_err(io)
}

pub fn read_metric_scores(path: &Path) -> Result<Vec<MetricScore>, MetricError> {
    let name = path.display().to_string();
    let content = std::fs::read_to_string(path).map_err(|source| MetricError::Io {
        path: name.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for row in tsv::read_rows(&name, &content, &METRIC_SCORES_HEADER)? {
        let lang_pair = row
            .get(1)
            .parse()
            .map_err(|e: CorpusError| TsvError::new(&name, row.line, e.to_string()))?;
        let value: f64 = row
            .get(5)
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                TsvError::new(&name, row.line, format!("invalid value `{}`", row.get(5)))
            })?;
        out.push(MetricScore {
            metric_id: row.get(0).to_string(),
            lang_pair,
            domain: row.get(2).to_string(),
            system_id: row.get(3).to_string(),
            seg_id: row.get(4).to_string(),
            value,
        });
    }
    Ok(out)
}
