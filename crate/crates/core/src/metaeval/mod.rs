//! Meta-evaluation: how well metric scores agree with MQM judgments, and how
//! that agreement changes when the human reference is swapped for an
//! error-free machine translation.
//!
//! Segment level uses Kendall's tau-b pooled over every (system, segment)
//! cell; system level uses pairwise accuracy. Metric pairs are compared with
//! a paired permutation test.

mod correlation;
mod judgments;
mod references;
mod report;
mod significance;

pub use correlation::{
    kendall_tau, pairwise_accuracy, pairwise_accuracy_from_deltas, pairwise_accuracy_vec,
    segment_tau,
};
pub use judgments::{mean_penalties, Cell, JudgmentTable};
pub use references::{
    comparable_subset, sample_refs_segment_level, sample_refs_system_pair, ChosenReference,
    EvalContext, MtReferenceAssignment, ReferenceSampler,
};
pub use report::{
    correlation_report, robustness_report, ConditionPair, CorrelationReport, CorrelationRow,
    Coverage, Level, RefCondition, RobustnessAverage, RobustnessOptions, RobustnessReport,
    RobustnessRow, SignificanceOptions, SignificanceRow,
};
pub use significance::{perm_both_test, PermutationTest, DEFAULT_ALPHA, DEFAULT_RESAMPLES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatError {
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("undefined: {0}")]
    Undefined(&'static str),
    #[error("non-finite input")]
    NonFinite,
    #[error("metric and human scores cover different systems")]
    KeyMismatch,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("no comparable segments for context {0}")]
    EmptyComparableSubset(String),
    #[error("gave up after {attempts} resample draws ({accepted} usable)")]
    ResampleCap { attempts: usize, accepted: usize },
}

/// `100 · (mt − std) / std`, rounded to one decimal. `None` when `std` is 0.
pub fn relative_change(std: f64, mt: f64) -> Option<f64> {
    if std == 0.0 || !std.is_finite() || !mt.is_finite() {
        return None;
    }
    let pct = 100.0 * (mt - std) / std;
    Some((pct * 10.0).round() / 10.0 + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_change_examples() {
        assert_eq!(relative_change(24.9, 24.4), Some(-2.0));
        assert_eq!(relative_change(15.7, 12.6), Some(-19.7));
        assert_eq!(relative_change(0.3, 0.3), Some(0.0));
        assert_eq!(
            relative_change(-0.3, -0.3).map(f64::to_bits),
            Some(0.0f64.to_bits())
        );
        assert_eq!(relative_change(0.0, 1.0), None);
    }
}
