use std::collections::HashMap;

use super::{as_strs, Metric, MetricError, Tokenizer};

pub const BLEU_MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BleuLevel {
    /// Unsmoothed BLEU over pooled corpus statistics.
    Corpus,
    /// Mean of add-one smoothed sentence BLEU.
    Segment,
}

/// Clipped n-gram matches and totals for orders `1..=4`, plus lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NgramStats {
    pub matches: [usize; BLEU_MAX_ORDER],
    pub totals: [usize; BLEU_MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl NgramStats {
    pub fn of(hyp: &[&str], reference: &[&str]) -> Self {
        let mut stats = NgramStats {
            hyp_len: hyp.len(),
            ref_len: reference.len(),
            ..Default::default()
        };
        for n in 1..=BLEU_MAX_ORDER {
            let ref_counts = count_ngrams(reference, n);
            let hyp_counts = count_ngrams(hyp, n);
            stats.totals[n - 1] = hyp.len().saturating_sub(n - 1);
            stats.matches[n - 1] = hyp_counts
                .iter()
                .map(|(g, c)| (*c).min(ref_counts.get(g).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    fn add(&mut self, other: &NgramStats) {
        for n in 0..BLEU_MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    fn brevity_penalty(&self) -> f64 {
        if self.hyp_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    /// BLEU in `[0, 100]`; `smooth` adds one to numerator and denominator for n >= 2.
    pub fn score(&self, smooth: bool) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..BLEU_MAX_ORDER {
            let (m, t) = if smooth && n > 0 {
                (self.matches[n] + 1, self.totals[n] + 1)
            } else {
                (self.matches[n], self.totals[n])
            };
            if m == 0 {
                return 0.0;
            }
            log_sum += (m as f64 / t as f64).ln();
        }
        100.0 * self.brevity_penalty() * (log_sum / BLEU_MAX_ORDER as f64).exp()
    }
}

fn count_ngrams<'a>(tokens: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU over tokenized hypothesis/reference pairs.
pub fn corpus_bleu(hypotheses: &[Vec<&str>], references: &[Vec<&str>]) -> Result<f64, MetricError> {
    check_lists(hypotheses.len(), references.len())?;
    let mut total = NgramStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        total.add(&NgramStats::of(h, r));
    }
    Ok(total.score(false))
}

/// Add-one smoothed sentence BLEU.
pub fn sentence_bleu(hypothesis: &[&str], reference: &[&str]) -> f64 {
    NgramStats::of(hypothesis, reference).score(true)
}

/// BLEU over raw strings with the default whitespace tokenizer.
pub fn bleu(
    hypotheses: &[&str],
    references: &[&str],
    level: BleuLevel,
) -> Result<f64, MetricError> {
    check_lists(hypotheses.len(), references.len())?;
    let tok = Tokenizer::default();
    let hyps: Vec<Vec<String>> = hypotheses.iter().map(|h| tok.tokenize(h)).collect();
    let refs: Vec<Vec<String>> = references.iter().map(|r| tok.tokenize(r)).collect();
    let hyps: Vec<Vec<&str>> = hyps.iter().map(|h| as_strs(h)).collect();
    let refs: Vec<Vec<&str>> = refs.iter().map(|r| as_strs(r)).collect();
    match level {
        BleuLevel::Corpus => corpus_bleu(&hyps, &refs),
        BleuLevel::Segment => {
            let sum: f64 = hyps
                .iter()
                .zip(&refs)
                .map(|(h, r)| sentence_bleu(h, r))
                .sum();
            Ok(sum / hyps.len() as f64)
        }
    }
}

fn check_lists(h: usize, r: usize) -> Result<(), MetricError> {
    if h != r {
        return Err(MetricError::LengthMismatch(h, r));
    }
    if h == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Segment-level (smoothed) BLEU as a [`Metric`].
#[derive(Debug, Clone, Default)]
pub struct BleuMetric {
    pub tokenizer: Tokenizer,
}

impl Metric for BleuMetric {
    fn id(&self) -> &str {
        "bleu"
    }

    fn score(&self, hypothesis: &str, reference: &str) -> f64 {
        let h = self.tokenizer.tokenize(hypothesis);
        let r = self.tokenizer.tokenize(reference);
        sentence_bleu(&as_strs(&h), &as_strs(&r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_100() {
        let h = ["the cat sat on the mat", "a dog barked loudly today"];
        assert_eq!(bleu(&h, &h, BleuLevel::Corpus).unwrap(), 100.0);
        assert_eq!(bleu(&h, &h, BleuLevel::Segment).unwrap(), 100.0);
    }

    #[test]
    fn disjoint_is_0() {
        assert_eq!(
            bleu(&["x y z w"], &["a b c d"], BleuLevel::Corpus).unwrap(),
            0.0
        );
        assert_eq!(
            bleu(&["x y z w"], &["a b c d"], BleuLevel::Segment).unwrap(),
            0.0
        );
    }

    #[test]
    fn short_hypothesis() {
        let s = NgramStats::of(&["the", "cat", "sat"], &["the", "cat", "sat", "down"]);
        assert_eq!(s.matches, [3, 2, 1, 0]);
        assert_eq!(s.totals, [3, 2, 1, 0]);
        // no 4-gram in the hypothesis: unsmoothed corpus BLEU is 0
        assert_eq!(s.score(false), 0.0);
        let expected = 100.0 * (1.0f64 - 4.0 / 3.0).exp();
        assert!((s.score(true) - expected).abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        let s = NgramStats::of(&["the", "the", "the"], &["the", "cat"]);
        assert_eq!(s.matches[0], 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            bleu(&[], &[], BleuLevel::Corpus),
            Err(MetricError::Empty)
        ));
        assert!(matches!(
            bleu(&["a"], &["a", "b"], BleuLevel::Corpus),
            Err(MetricError::LengthMismatch(1, 2))
        ));
        assert_eq!(bleu(&[""], &["a b"], BleuLevel::Corpus).unwrap(), 0.0);
    }
}
