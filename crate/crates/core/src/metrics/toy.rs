//! A small log-linear conditional language model standing in for a large
//! multilingual translation model.
//!
//! The next-token distribution is a softmax over the whole vocabulary of
//! `θ · f(v)` with three features per candidate `v`:
//!
//! * `copy`: 1 if `v` occurs in the conditioning sequence `x`
//! * `unigram_log2`: `log2` of the add-one smoothed unigram probability of `v`
//! * `bigram_seen`: 1 if `(previous token, v)` occurred in the fitted text
//!
//! The end token doubles as the start-of-sequence context, so the first
//! token's bigram feature is read from `(</s>, v)`.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::LN_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SequenceScorer;

pub const UNK: &str = "<unk>";
pub const EOS: &str = "</s>";
pub const FEATURE_COUNT: usize = 3;
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["copy", "unigram_log2", "bigram_seen"];

const UNK_ID: u32 = 0;
const EOS_ID: u32 = 1;
const FORMAT_NAME: &str = "mtmeval-toy-scorer";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ToyScorerError {
    #[error("invalid scorer file: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct ScorerFile {
    format: String,
    version: u32,
    features: Vec<String>,
    theta: Vec<f64>,
    vocabulary: Vec<String>,
    unigram_counts: Vec<u64>,
    bigrams: Vec<[u32; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyScorer {
    theta: [f64; FEATURE_COUNT],
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    unigram_counts: Vec<u64>,
    bigrams: BTreeSet<(u32, u32)>,
    unigram_feature: Vec<f64>,
    /// sorted successor ids per previous-token id
    successors: Vec<Vec<u32>>,
}

impl ToyScorer {
    /// Initial weights: the unigram weight `ln 2` makes the unigram term alone
    /// reproduce the smoothed unigram distribution exactly.
    pub const DEFAULT_THETA: [f64; FEATURE_COUNT] = [1.0, LN_2, 1.0];

    /// Builds the vocabulary and counts from tokenized sentences.
    pub fn fit<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = Vec<S>>,
        S: AsRef<str>,
    {
        let sentences: Vec<Vec<S>> = sentences.into_iter().collect();
        let words: BTreeSet<&str> = sentences
            .iter()
            .flat_map(|s| s.iter().map(AsRef::as_ref))
            .filter(|w| *w != UNK && *w != EOS)
            .collect();
        let mut vocab = vec![UNK.to_string(), EOS.to_string()];
        vocab.extend(words.iter().map(|w| w.to_string()));
        let index: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();

        let mut unigram_counts = vec![0u64; vocab.len()];
        let mut bigrams = BTreeSet::new();
        for sentence in &sentences {
            let mut prev = EOS_ID;
            for w in sentence {
                let id = index[w.as_ref()];
                unigram_counts[id as usize] += 1;
                bigrams.insert((prev, id));
                prev = id;
            }
            unigram_counts[EOS_ID as usize] += 1;
            bigrams.insert((prev, EOS_ID));
        }
        Self::assemble(Self::DEFAULT_THETA, vocab, unigram_counts, bigrams)
    }

    fn assemble(
        theta: [f64; FEATURE_COUNT],
        vocab: Vec<String>,
        unigram_counts: Vec<u64>,
        bigrams: BTreeSet<(u32, u32)>,
    ) -> Self {
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let total: u64 = unigram_counts.iter().sum();
        let denom = (total + vocab.len() as u64) as f64;
        let unigram_feature = unigram_counts
            .iter()
            .map(|&c| ((c + 1) as f64 / denom).log2())
            .collect();
        let mut successors = vec![Vec::new(); vocab.len()];
        for &(a, b) in &bigrams {
            successors[a as usize].push(b);
        }
        ToyScorer {
            theta,
            vocab,
            index,
            unigram_counts,
            bigrams,
            unigram_feature,
            successors,
        }
    }

    pub fn theta(&self) -> [f64; FEATURE_COUNT] {
        self.theta
    }

    pub fn set_theta(&mut self, theta: [f64; FEATURE_COUNT]) {
        self.theta = theta;
    }

    pub fn with_theta(mut self, theta: [f64; FEATURE_COUNT]) -> Self {
        self.theta = theta;
        self
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    /// Maps tokens to ids; out-of-vocabulary tokens become `<unk>`.
    pub fn encode(&self, tokens: &[&str]) -> Vec<u32> {
        tokens
            .iter()
            .map(|t| self.index.get(*t).copied().unwrap_or(UNK_ID))
            .collect()
    }

    /// Feature vector of candidate `v` after `prev`, given the copy set of `x`.
    pub fn features(&self, v: u32, prev: u32, x: &[u32]) -> [f64; FEATURE_COUNT] {
        [
            if x.contains(&v) { 1.0 } else { 0.0 },
            self.unigram_feature[v as usize],
            if self.bigrams.contains(&(prev, v)) {
                1.0
            } else {
                0.0
            },
        ]
    }

    /// Next-token distribution (natural probabilities) after `prefix`.
    pub fn next_token_distribution(&self, prefix: &[u32], x: &[u32]) -> Vec<f64> {
        let prev = prefix.last().copied().unwrap_or(EOS_ID);
        let copy = self.copy_mask(x);
        let mut logits = self.base_logits(&copy);
        for &s in &self.successors[prev as usize] {
            logits[s as usize] += self.theta[2];
        }
        let log_z = log_sum_exp(&logits);
        logits.iter().map(|l| (l - log_z).exp()).collect()
    }

    fn copy_mask(&self, x: &[u32]) -> Vec<bool> {
        let mut copy = vec![false; self.vocab.len()];
        for &t in x {
            copy[t as usize] = true;
        }
        copy
    }

    fn base_logits(&self, copy: &[bool]) -> Vec<f64> {
        self.unigram_feature
            .iter()
            .zip(copy)
            .map(|(u, &c)| self.theta[1] * u + if c { self.theta[0] } else { 0.0 })
            .collect()
    }

    /// Per-token base-2 log-probabilities and, if requested, the gradient of
    /// their sum with respect to θ.
    fn score_ids(&self, y: &[u32], x: &[u32], want_grad: bool) -> (Vec<f64>, [f64; FEATURE_COUNT]) {
        let copy = self.copy_mask(x);
        let base = self.base_logits(&copy);
        let mut logits = base.clone();
        let mut logprobs = Vec::with_capacity(y.len() + 1);
        let mut grad = [0.0; FEATURE_COUNT];

        for t in 0..=y.len() {
            let prev = if t == 0 { EOS_ID } else { y[t - 1] };
            let target = if t < y.len() { y[t] } else { EOS_ID };
            let succ = &self.successors[prev as usize];
            logits.copy_from_slice(&base);
            for &s in succ {
                logits[s as usize] += self.theta[2];
            }
            let log_z = log_sum_exp(&logits);
            logprobs.push((logits[target as usize] - log_z) / LN_2);

            if want_grad {
                let mut expected = [0.0; FEATURE_COUNT];
                for (v, l) in logits.iter().enumerate() {
                    let p = (l - log_z).exp();
                    if copy[v] {
                        expected[0] += p;
                    }
                    expected[1] += p * self.unigram_feature[v];
                }
                for &s in succ {
                    expected[2] += (logits[s as usize] - log_z).exp();
                }
                let observed = [
                    if copy[target as usize] { 1.0 } else { 0.0 },
                    self.unigram_feature[target as usize],
                    if succ.binary_search(&target).is_ok() {
                        1.0
                    } else {
                        0.0
                    },
                ];
                for k in 0..FEATURE_COUNT {
                    grad[k] += (observed[k] - expected[k]) / LN_2;
                }
            }
        }
        (logprobs, grad)
    }

    pub fn token_logprobs_ids(&self, y: &[u32], x: &[u32]) -> Vec<f64> {
        self.score_ids(y, x, false).0
    }

    pub fn sequence_score_ids(&self, y: &[u32], x: &[u32]) -> f64 {
        let lp = self.token_logprobs_ids(y, x);
        lp.iter().sum::<f64>() / lp.len() as f64
    }

    /// `S(y|x)` and its exact gradient with respect to θ.
    pub fn sequence_score_with_grad(&self, y: &[u32], x: &[u32]) -> (f64, [f64; FEATURE_COUNT]) {
        let (lp, grad) = self.score_ids(y, x, true);
        let n = lp.len() as f64;
        (lp.iter().sum::<f64>() / n, grad.map(|g| g / n))
    }

    pub fn to_json(&self) -> String {
        let file = ScorerFile {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            theta: self.theta.to_vec(),
            vocabulary: self.vocab.clone(),
            unigram_counts: self.unigram_counts.clone(),
            bigrams: self.bigrams.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string_pretty(&file).expect("scorer serializes") + "\n"
    }

    pub fn from_json(json: &str) -> Result<Self, ToyScorerError> {
        let file: ScorerFile = serde_json::from_str(json)?;
        let invalid = |m: String| Err(ToyScorerError::Invalid(m));
        if file.format != FORMAT_NAME || file.version != FORMAT_VERSION {
            return invalid(format!(
                "unsupported format {} v{}",
                file.format, file.version
            ));
        }
        if file.features != FEATURE_NAMES {
            return invalid(format!("unexpected features {:?}", file.features));
        }
        let Ok(theta) = <[f64; FEATURE_COUNT]>::try_from(file.theta.as_slice()) else {
            return invalid(format!("expected {FEATURE_COUNT} weights"));
        };
        if theta.iter().any(|t| !t.is_finite()) {
            return invalid("non-finite weight".into());
        }
        if file.vocabulary.len() < 2 || file.vocabulary[0] != UNK || file.vocabulary[1] != EOS {
            return invalid(format!("vocabulary must start with {UNK} and {EOS}"));
        }
        if file.unigram_counts.len() != file.vocabulary.len() {
            return invalid("unigram_counts length differs from vocabulary".into());
        }
        let unique: BTreeSet<&String> = file.vocabulary.iter().collect();
        if unique.len() != file.vocabulary.len() {
            return invalid("duplicate vocabulary entry".into());
        }
        let v = file.vocabulary.len() as u32;
        if file.bigrams.iter().any(|[a, b]| *a >= v || *b >= v) {
            return invalid("bigram id out of range".into());
        }
        let bigrams = file.bigrams.iter().map(|&[a, b]| (a, b)).collect();
        Ok(Self::assemble(
            theta,
            file.vocabulary,
            file.unigram_counts,
            bigrams,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<(), ToyScorerError> {
        std::fs::write(path, self.to_json()).map_err(|source| ToyScorerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ToyScorerError> {
        let json = std::fs::read_to_string(path).map_err(|source| ToyScorerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&json)
    }
}

impl SequenceScorer for ToyScorer {
    fn token_logprobs(&self, y: &[&str], x: &[&str]) -> Vec<f64> {
        self.token_logprobs_ids(&self.encode(y), &self.encode(x))
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
