use serde::{Deserialize, Serialize};

use super::TrainingConfig;
use crate::metrics::{
    as_strs, sequence_score, SequenceScorer, Tokenizer, ToyScorer, FEATURE_COUNT,
};
use crate::rankings::RelativeRanking;

/// Hinge `max(0, ε - (s_plus - s_minus))`.
pub fn margin_loss(s_plus: f64, s_minus: f64, epsilon: f64) -> f64 {
    (epsilon - (s_plus - s_minus)).max(0.0)
}

/// `-S(ref | src)`.
pub fn loss_ce<S: SequenceScorer + ?Sized>(scorer: &S, src: &[&str], reference: &[&str]) -> f64 {
    -sequence_score(scorer, reference, src)
}

/// Ranking loss conditioned on the reference.
pub fn loss_rank_forward<S: SequenceScorer + ?Sized>(
    scorer: &S,
    reference: &[&str],
    sys_plus: &[&str],
    sys_minus: &[&str],
    epsilon: f64,
) -> f64 {
    margin_loss(
        sequence_score(scorer, sys_plus, reference),
        sequence_score(scorer, sys_minus, reference),
        epsilon,
    )
}

/// Ranking loss for reconstructing the reference from each system output.
pub fn loss_rank_backward<S: SequenceScorer + ?Sized>(
    scorer: &S,
    reference: &[&str],
    sys_plus: &[&str],
    sys_minus: &[&str],
    epsilon: f64,
) -> f64 {
    margin_loss(
        sequence_score(scorer, reference, sys_plus),
        sequence_score(scorer, reference, sys_minus),
        epsilon,
    )
}

/// Unweighted values of the three loss terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub ce: f64,
    pub forward: f64,
    pub backward: f64,
}

/// Weighted sum of the enabled terms.
pub fn combine(terms: &LossTerms, config: &TrainingConfig) -> f64 {
    let ranking = match (config.enable_forward, config.enable_backward) {
        (true, true) => terms.forward + terms.backward,
        (true, false) => terms.forward,
        (false, true) => terms.backward,
        (false, false) => 0.0,
    };
    let ce = if config.enable_ce {
        config.alpha * terms.ce
    } else {
        0.0
    };
    ce + 0.5 * ranking
}

pub fn loss_combined<S: SequenceScorer + ?Sized>(
    scorer: &S,
    example: &RelativeRanking,
    tokenizer: &Tokenizer,
    config: &TrainingConfig,
) -> f64 {
    let src = tokenizer.tokenize(&example.src);
    let reference = tokenizer.tokenize(&example.reference);
    let plus = tokenizer.tokenize(&example.sys_plus);
    let minus = tokenizer.tokenize(&example.sys_minus);
    let (src, reference, plus, minus) = (
        as_strs(&src),
        as_strs(&reference),
        as_strs(&plus),
        as_strs(&minus),
    );
    let terms = LossTerms {
        ce: loss_ce(scorer, &src, &reference),
        forward: loss_rank_forward(scorer, &reference, &plus, &minus, config.epsilon),
        backward: loss_rank_backward(scorer, &reference, &plus, &minus, config.epsilon),
    };
    combine(&terms, config)
}

/// A ranking example mapped to the scorer's token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRanking {
    pub src: Vec<u32>,
    pub reference: Vec<u32>,
    pub sys_plus: Vec<u32>,
    pub sys_minus: Vec<u32>,
}

impl EncodedRanking {
    pub fn encode(scorer: &ToyScorer, tokenizer: &Tokenizer, r: &RelativeRanking) -> Self {
        let enc = |text: &str| scorer.encode(&as_strs(&tokenizer.tokenize(text)));
        EncodedRanking {
            src: enc(&r.src),
            reference: enc(&r.reference),
            sys_plus: enc(&r.sys_plus),
            sys_minus: enc(&r.sys_minus),
        }
    }
}

/// Loss terms, combined loss and its exact gradient with respect to θ.
///
/// The hinge uses subgradient 0 when the margin is met exactly. Terms that
/// are disabled are still evaluated (for reporting) but contribute neither
/// loss nor gradient.
pub fn loss_and_gradient(
    scorer: &ToyScorer,
    example: &EncodedRanking,
    config: &TrainingConfig,
) -> (LossTerms, f64, [f64; FEATURE_COUNT]) {
    let mut grad = [0.0; FEATURE_COUNT];
    let mut axpy = |scale: f64, g: &[f64; FEATURE_COUNT]| {
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += scale * gi;
        }
    };

    let (s_ref, g_ref) = scorer.sequence_score_with_grad(&example.reference, &example.src);
    if config.enable_ce {
        axpy(-config.alpha, &g_ref);
    }

    let (fp, gfp) = scorer.sequence_score_with_grad(&example.sys_plus, &example.reference);
    let (fm, gfm) = scorer.sequence_score_with_grad(&example.sys_minus, &example.reference);
    let forward = margin_loss(fp, fm, config.epsilon);
    if config.enable_forward && forward > 0.0 {
        axpy(-0.5, &gfp);
        axpy(0.5, &gfm);
    }

    let (bp, gbp) = scorer.sequence_score_with_grad(&example.reference, &example.sys_plus);
    let (bm, gbm) = scorer.sequence_score_with_grad(&example.reference, &example.sys_minus);
    let backward = margin_loss(bp, bm, config.epsilon);
    if config.enable_backward && backward > 0.0 {
        axpy(-0.5, &gbp);
        axpy(0.5, &gbm);
    }

    let terms = LossTerms {
        ce: -s_ref,
        forward,
        backward,
    };
    (terms, combine(&terms, config), grad)
}

pub fn gradient(
    scorer: &ToyScorer,
    example: &EncodedRanking,
    config: &TrainingConfig,
) -> [f64; FEATURE_COUNT] {
    loss_and_gradient(scorer, example, config).2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::UniformScorer;

    const TOL: f64 = 1e-12;

    #[test]
    fn forward_margin_examples() {
        assert_eq!(margin_loss(-1.0, -1.2, 0.1), 0.0);
        assert_eq!(margin_loss(-1.0, -1.0, 0.1), 0.1);
        assert!((margin_loss(-1.0, -0.95, 0.1) - 0.15).abs() < TOL);
    }

    #[test]
    fn backward_margin_examples() {
        // S(ref|sys+) - S(ref|sys-) = 0.2
        assert_eq!(margin_loss(-0.8, -1.0, 0.1), 0.0);
        assert!((margin_loss(-2.0, -2.0, 0.1) - 0.1).abs() < TOL);
        // 0.5 in the wrong direction
        assert_eq!(margin_loss(-1.5, -1.0, 0.1), 0.6);
    }

    #[test]
    fn combined_examples() {
        let terms = LossTerms {
            ce: 2.0,
            forward: 0.3,
            backward: 0.1,
        };
        let cfg = TrainingConfig::default();
        assert_eq!(combine(&terms, &cfg), 0.4);
        assert_eq!(combine(&LossTerms::default(), &cfg), 0.0);
        let no_ce = TrainingConfig {
            enable_ce: false,
            ..cfg
        };
        assert_eq!(combine(&terms, &no_ce), 0.2);
    }

    #[test]
    fn ce_under_uniform_scorer() {
        let s = UniformScorer { vocab_size: 4 };
        assert_eq!(loss_ce(&s, &["a"], &["b", "c"]), 2.0);
        // a one-word vocabulary gives every token probability 1
        let certain = UniformScorer { vocab_size: 1 };
        assert_eq!(loss_ce(&certain, &["a"], &["b"]), 0.0);
        // equal scores for both outputs: both margins are violated by exactly ε
        assert!((loss_rank_forward(&s, &["r"], &["p"], &["m"], 0.1) - 0.1).abs() < TOL);
        assert!((loss_rank_backward(&s, &["r"], &["p"], &["m"], 0.1) - 0.1).abs() < TOL);
    }

    #[test]
    fn zero_loss_example_has_zero_gradient() {
        let scorer =
            ToyScorer::fit(vec![vec!["a", "b", "c"], vec!["x", "y"]]).with_theta([5.0, 0.7, 1.0]);
        // sys+ copies the reference, sys- shares nothing with it
        let ex = EncodedRanking {
            src: scorer.encode(&["x"]),
            reference: scorer.encode(&["a", "b", "c"]),
            sys_plus: scorer.encode(&["a", "b", "c"]),
            sys_minus: scorer.encode(&["y", "x", "y"]),
        };
        let cfg = TrainingConfig {
            enable_ce: false,
            ..Default::default()
        };
        let (terms, total, grad) = loss_and_gradient(&scorer, &ex, &cfg);
        assert_eq!((terms.forward, terms.backward, total), (0.0, 0.0, 0.0));
        assert_eq!(grad, [0.0; FEATURE_COUNT]);
    }
}
