use std::collections::HashMap;

use super::Metric;

pub const CHRF_MAX_ORDER: usize = 6;
pub const CHRF_BETA: f64 = 2.0;

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Character n-gram F-score in `[0, 100]`.
///
/// Whitespace is removed before extracting n-grams. Precision and recall are
/// averaged over the orders `1..=6` for which the reference has at least one
/// n-gram, then combined with `β = 2`. Two strings without any non-whitespace
/// character score 100.
pub fn chrf(hypothesis: &str, reference: &str) -> f64 {
    let hyp: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let refc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if hyp.is_empty() && refc.is_empty() {
        return 100.0;
    }

    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut orders = 0usize;
    for n in 1..=CHRF_MAX_ORDER {
        let ref_total = refc.len().saturating_sub(n - 1);
        if refc.len() < n {
            continue;
        }
        let hyp_total = hyp.len().saturating_sub(n - 1);
        let matches: usize = if hyp.len() < n {
            0
        } else {
            let r = char_ngrams(&refc, n);
            char_ngrams(&hyp, n)
                .iter()
                .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
                .sum()
        };
        precision += if hyp.len() >= n {
            matches as f64 / hyp_total as f64
        } else {
            0.0
        };
        recall += matches as f64 / ref_total as f64;
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let p = precision / orders as f64;
    let r = recall / orders as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    let b2 = CHRF_BETA * CHRF_BETA;
    100.0 * (1.0 + b2) * p * r / (b2 * p + r)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ChrfMetric;

impl Metric for ChrfMetric {
    fn id(&self) -> &str {
        "chrf"
    }

    fn score(&self, hypothesis: &str, reference: &str) -> f64 {
        chrf(hypothesis, reference)
    }
}
