use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_gradient, EncodedRanking, LossTerms};
use super::{TrainingConfig, TrainingError};
use crate::corpus::LangPair;
use crate::metrics::{score_magnitude, Tokenizer, ToyScorer, FEATURE_COUNT};
use crate::rankings::RankingDataset;
use crate::seed;

/// One optimizer step's batch: example indices into one language pair's
/// training split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledBatch {
    pub pair: usize,
    pub indices: Vec<usize>,
    /// drawn with replacement after this pair's own data ran out
    pub resampled: bool,
}

/// Round-robin batch order for one epoch.
///
/// Each pair's examples are shuffled and chunked. Rounds visit every pair
/// once, in index order; once a pair has used all its chunks it contributes
/// batches drawn with replacement, until the pair with the most chunks is
/// exhausted. Pairs with no examples are left out.
pub fn round_robin_schedule(
    sizes: &[usize],
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Vec<ScheduledBatch> {
    let epoch_tag = epoch.to_string();
    let chunks: Vec<Vec<Vec<usize>>> = sizes
        .iter()
        .enumerate()
        .map(|(p, &n)| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut seed::stream(
                seed,
                &["shuffle", &epoch_tag, &p.to_string()],
            ));
            order.chunks(batch_size).map(<[usize]>::to_vec).collect()
        })
        .collect();
    let rounds = chunks.iter().map(Vec::len).max().unwrap_or(0);
    let mut resamplers: Vec<_> = (0..sizes.len())
        .map(|p| seed::stream(seed, &["resample", &epoch_tag, &p.to_string()]))
        .collect();

    let mut schedule = Vec::new();
    for round in 0..rounds {
        for (p, pair_chunks) in chunks.iter().enumerate() {
            if sizes[p] == 0 {
                continue;
            }
            if let Some(chunk) = pair_chunks.get(round) {
                schedule.push(ScheduledBatch {
                    pair: p,
                    indices: chunk.clone(),
                    resampled: false,
                });
            } else {
                let rng = &mut resamplers[p];
                schedule.push(ScheduledBatch {
                    pair: p,
                    indices: (0..batch_size)
                        .map(|_| rng.gen_range(0..sizes[p]))
                        .collect(),
                    resampled: true,
                });
            }
        }
    }
    schedule
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub lang_pair: LangPair,
    pub batch_len: usize,
    pub resampled: bool,
    pub total: f64,
    /// batch means of the unweighted terms, including disabled ones
    pub terms: LossTerms,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    /// fraction of pairs with `S(sys⁺|ref) > S(sys⁻|ref)`
    pub forward_accuracy: Option<f64>,
    /// fraction of pairs with `S(ref|sys⁺) > S(ref|sys⁻)`
    pub backward_accuracy: Option<f64>,
    pub pairs: usize,
}

/// Mean `2^S(ref|src)` over the validation rankings, before and after training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeMagnitude {
    pub initial: Option<f64>,
    #[serde(rename = "final")]
    pub final_: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub config: TrainingConfig,
    pub lang_pairs: Vec<LangPair>,
    pub train_sizes: Vec<usize>,
    pub validation_sizes: Vec<usize>,
    pub initial_theta: [f64; FEATURE_COUNT],
    pub final_theta: [f64; FEATURE_COUNT],
    pub steps: Vec<StepRecord>,
    pub initial_validation: ValidationRecord,
    /// one entry per epoch
    pub validation: Vec<ValidationRecord>,
    pub probe_magnitude: ProbeMagnitude,
}

/// Forward and backward ranking accuracy. Ties count as wrong.
pub fn validation_accuracy(scorer: &ToyScorer, examples: &[EncodedRanking]) -> ValidationRecord {
    if examples.is_empty() {
        return ValidationRecord::default();
    }
    let hits: Vec<(bool, bool)> = examples
        .par_iter()
        .map(|e| {
            let fwd = scorer.sequence_score_ids(&e.sys_plus, &e.reference)
                > scorer.sequence_score_ids(&e.sys_minus, &e.reference);
            let bwd = scorer.sequence_score_ids(&e.reference, &e.sys_plus)
                > scorer.sequence_score_ids(&e.reference, &e.sys_minus);
            (fwd, bwd)
        })
        .collect();
    let n = examples.len() as f64;
    ValidationRecord {
        forward_accuracy: Some(hits.iter().filter(|h| h.0).count() as f64 / n),
        backward_accuracy: Some(hits.iter().filter(|h| h.1).count() as f64 / n),
        pairs: examples.len(),
    }
}

fn probe(scorer: &ToyScorer, examples: &[EncodedRanking]) -> Option<f64> {
    let scores: Vec<f64> = examples
        .iter()
        .map(|e| scorer.sequence_score_ids(&e.reference, &e.src))
        .collect();
    score_magnitude(&scores).ok()
}

/// Plain mini-batch gradient descent over the per-language-pair datasets.
///
/// Batch gradients are the mean of per-example gradients, which are computed
/// in parallel and summed in batch order.
pub fn train(
    mut scorer: ToyScorer,
    datasets: &BTreeMap<LangPair, RankingDataset>,
    tokenizer: &Tokenizer,
    config: &TrainingConfig,
) -> Result<(ToyScorer, TrainingReport), TrainingError> {
    config.validate()?;
    let lang_pairs: Vec<LangPair> = datasets.keys().cloned().collect();
    let encode = |rs: &[crate::rankings::RelativeRanking]| -> Vec<EncodedRanking> {
        rs.iter()
            .map(|r| EncodedRanking::encode(&scorer, tokenizer, r))
            .collect()
    };
    let train_sets: Vec<Vec<EncodedRanking>> =
        datasets.values().map(|d| encode(&d.train)).collect();
    let validation: Vec<EncodedRanking> = datasets
        .values()
        .flat_map(|d| encode(&d.validation))
        .collect();
    let sizes: Vec<usize> = train_sets.iter().map(Vec::len).collect();
    if sizes.iter().all(|&n| n == 0) {
        return Err(TrainingError::EmptyTrainingData);
    }
    for (lp, n) in lang_pairs.iter().zip(&sizes) {
        if *n == 0 {
            log::warn!("{lp}: empty training split, skipped");
        }
    }

    let initial_theta = scorer.theta();
    let initial_validation = validation_accuracy(&scorer, &validation);
    let probe_initial = probe(&scorer, &validation);
    let mut steps = Vec::new();
    let mut per_epoch = Vec::new();

    for epoch in 0..config.epochs {
        for batch in round_robin_schedule(&sizes, config.batch_size, config.seed, epoch) {
            let examples = &train_sets[batch.pair];
            let current = &scorer;
            let results: Vec<(LossTerms, f64, [f64; FEATURE_COUNT])> = batch
                .indices
                .par_iter()
                .map(|&i| loss_and_gradient(current, &examples[i], config))
                .collect();

            let n = results.len() as f64;
            let mut grad = [0.0; FEATURE_COUNT];
            let mut terms = LossTerms::default();
            let mut total = 0.0;
            for (t, l, g) in &results {
                for k in 0..FEATURE_COUNT {
                    grad[k] += g[k];
                }
                terms.ce += t.ce;
                terms.forward += t.forward;
                terms.backward += t.backward;
                total += l;
            }
            let grad = grad.map(|g| g / n);
            let total = total / n;
            if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(TrainingError::NonFinite {
                    epoch,
                    step: steps.len(),
                    lang_pair: lang_pairs[batch.pair].to_string(),
                });
            }

            let mut theta = scorer.theta();
            for k in 0..FEATURE_COUNT {
                theta[k] -= config.learning_rate * grad[k];
            }
            scorer.set_theta(theta);

            steps.push(StepRecord {
                epoch,
                step: steps.len(),
                lang_pair: lang_pairs[batch.pair].clone(),
                batch_len: batch.indices.len(),
                resampled: batch.resampled,
                total,
                terms: LossTerms {
                    ce: terms.ce / n,
                    forward: terms.forward / n,
                    backward: terms.backward / n,
                },
            });
        }
        let record = validation_accuracy(&scorer, &validation);
        log::info!(
            "epoch {epoch}: {} steps, validation forward accuracy {:?}",
            steps.len(),
            record.forward_accuracy
        );
        per_epoch.push(record);
    }

    let report = TrainingReport {
        config: config.clone(),
        lang_pairs,
        train_sizes: sizes,
        validation_sizes: datasets.values().map(|d| d.validation.len()).collect(),
        initial_theta,
        final_theta: scorer.theta(),
        steps,
        initial_validation,
        validation: per_epoch,
        probe_magnitude: ProbeMagnitude {
            initial: probe_initial,
            final_: probe(&scorer, &validation),
        },
    };
    Ok((scorer, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_alternates_and_upsamples_smaller_pair() {
        let s = round_robin_schedule(&[10, 3], 2, 1, 0);
        // pair 0 has 5 chunks, so 5 rounds of two batches
        assert_eq!(s.len(), 10);
        for (i, b) in s.iter().enumerate() {
            assert_eq!(b.pair, i % 2);
        }
        let own: Vec<_> = s.iter().filter(|b| b.pair == 1 && !b.resampled).collect();
        assert_eq!(own.len(), 2);
        assert!(s.iter().filter(|b| b.pair == 0).all(|b| !b.resampled));
        let mut seen: Vec<usize> = s
            .iter()
            .filter(|b| b.pair == 0)
            .flat_map(|b| b.indices.clone())
            .collect();
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert!(s
            .iter()
            .filter(|b| b.pair == 1)
            .flat_map(|b| &b.indices)
            .all(|&i| i < 3));
    }

    #[test]
    fn schedule_skips_empty_pairs_and_is_deterministic() {
        let a = round_robin_schedule(&[4, 0, 4], 2, 9, 0);
        assert!(a.iter().all(|b| b.pair != 1));
        assert_eq!(a, round_robin_schedule(&[4, 0, 4], 2, 9, 0));
        assert_ne!(a, round_robin_schedule(&[4, 0, 4], 2, 9, 1));
    }
}
