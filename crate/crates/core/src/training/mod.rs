//! Fine-tuning objective and optimizer for the toy sequence scorer.
//!
//! The objective combines a cross-entropy term on `(src, ref)` with margin
//! ranking terms in both paraphrasing directions:
//!
//! ```text
//! L = α · L_ce + ½ · L_forward + ½ · L_backward
//! L_ce       = -S(ref | src)
//! L_forward  = max(0, ε - S(sys⁺ | ref) + S(sys⁻ | ref))
//! L_backward = max(0, ε - S(ref | sys⁺) + S(ref | sys⁻))
//! ```
//!
//! Each term can be switched off for ablation runs.

mod loss;
mod train;

use serde::{Deserialize, Serialize};

pub use loss::{
    combine, gradient, loss_and_gradient, loss_ce, loss_combined, loss_rank_backward,
    loss_rank_forward, margin_loss, EncodedRanking, LossTerms,
};
pub use train::{
    round_robin_schedule, train, validation_accuracy, ProbeMagnitude, ScheduledBatch, StepRecord,
    TrainingReport, ValidationRecord,
};

#[derive(Debug, thiserror::Error)]
pub enum TrainingError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no training data")]
    EmptyTrainingData,
    #[error("non-finite loss at step {step} (epoch {epoch}, {lang_pair})")]
    NonFinite {
        epoch: usize,
        step: usize,
        lang_pair: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// ranking margin ε
    pub epsilon: f64,
    /// cross-entropy weight α
    pub alpha: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// ranking pairs per step
    pub batch_size: usize,
    pub seed: u64,
    pub enable_ce: bool,
    pub enable_forward: bool,
    pub enable_backward: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epsilon: 0.1,
            alpha: 0.1,
            learning_rate: 1e-4,
            epochs: 1,
            batch_size: 32,
            seed: 0,
            enable_ce: true,
            enable_forward: true,
            enable_backward: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: &str| Err(TrainingError::InvalidConfig(m.to_string()));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be a finite value >= 0");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be a finite value >= 0");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a finite value >= 0");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.enable_ce || self.enable_forward || self.enable_backward) {
            return bad("at least one loss term must be enabled");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrainingConfig::default();
        assert_eq!(
            (c.epsilon, c.alpha, c.learning_rate, c.epochs),
            (0.1, 0.1, 1e-4, 1)
        );
        c.validate().unwrap();
    }

    #[test]
    fn all_terms_disabled_is_invalid() {
        let c = TrainingConfig {
            enable_ce: false,
            enable_forward: false,
            enable_backward: false,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(TrainingError::InvalidConfig(_))));
    }

    #[test]
    fn negative_values_are_invalid() {
        for c in [
            TrainingConfig {
                epsilon: -0.1,
                ..Default::default()
            },
            TrainingConfig {
                alpha: -1.0,
                ..Default::default()
            },
            TrainingConfig {
                learning_rate: f64::NAN,
                ..Default::default()
            },
            TrainingConfig {
                batch_size: 0,
                ..Default::default()
            },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: TrainingConfig =
            serde_json::from_str(r#"{"learning_rate": 0.5, "enable_ce": false}"#).unwrap();
        assert_eq!(c.learning_rate, 0.5);
        assert!(!c.enable_ce);
        assert_eq!(c.batch_size, 32);
    }
}
