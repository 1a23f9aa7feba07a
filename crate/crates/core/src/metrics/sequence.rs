use super::{as_strs, Metric, Tokenizer};

/// A conditional sequence model exposing per-token log-probabilities.
pub trait SequenceScorer: Sync {
    /// Base-2 log-probabilities of every token of `y` given `x`, followed by
    /// the log-probability of the end-of-sequence token. The result therefore
    /// has `y.len() + 1` entries, each `<= 0`.
    fn token_logprobs(&self, y: &[&str], x: &[&str]) -> Vec<f64>;
}

/// Assigns every token the same probability `1 / vocab_size`.
#[derive(Debug, Clone, Copy)]
pub struct UniformScorer {
    pub vocab_size: usize,
}

impl SequenceScorer for UniformScorer {
    fn token_logprobs(&self, y: &[&str], _x: &[&str]) -> Vec<f64> {
        vec![-(self.vocab_size as f64).log2(); y.len() + 1]
    }
}

/// Mean token log-probability `S(y|x)`, end token included.
pub fn sequence_score<S: SequenceScorer + ?Sized>(scorer: &S, y: &[&str], x: &[&str]) -> f64 {
    let lp = scorer.token_logprobs(y, x);
    lp.iter().sum::<f64>() / lp.len() as f64
}

/// `½ S(sys|ref) + ½ S(ref|sys)`.
pub fn prism_score<S: SequenceScorer + ?Sized>(
    scorer: &S,
    sys: &[&str],
    reference: &[&str],
) -> f64 {
    0.5 * sequence_score(scorer, sys, reference) + 0.5 * sequence_score(scorer, reference, sys)
}

/// Bidirectional sequence-score metric over any scorer.
pub struct PrismMetric<S> {
    id: String,
    scorer: S,
    tokenizer: Tokenizer,
}

impl<S: SequenceScorer> PrismMetric<S> {
    pub fn new(id: impl Into<String>, scorer: S, tokenizer: Tokenizer) -> Self {
        PrismMetric {
            id: id.into(),
            scorer,
            tokenizer,
        }
    }

    pub fn scorer(&self) -> &S {
        &self.scorer
    }
}

impl<S: SequenceScorer> Metric for PrismMetric<S> {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, hypothesis: &str, reference: &str) -> f64 {
        let h = self.tokenizer.tokenize(hypothesis);
        let r = self.tokenizer.tokenize(reference);
        prism_score(&self.scorer, &as_strs(&h), &as_strs(&r))
    }
}
