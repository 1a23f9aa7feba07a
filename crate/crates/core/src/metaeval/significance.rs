use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StatError;
use crate::seed;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub corr_a: f64,
    pub corr_b: f64,
    /// `|corr_a - corr_b|`
    pub statistic: f64,
    pub p_value: f64,
    pub resamples: usize,
    /// resamples thrown away because the correlation was undefined
    pub redraws: usize,
}

impl PermutationTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Paired permutation test for the difference between two metrics'
/// correlations with the same human scores.
///
/// Every resample swaps the two metrics' scores at each unit independently
/// with probability ½. Resamples on which `corr` is undefined are redrawn, up
/// to `10 · n_resamples` draws in total.
pub fn perm_both_test<F>(
    metric_a: &[f64],
    metric_b: &[f64],
    human: &[f64],
    corr: F,
    n_resamples: usize,
    seed: u64,
) -> Result<PermutationTest, StatError>
where
    F: Fn(&[f64], &[f64]) -> Result<f64, StatError>,
{
    if metric_a.len() != metric_b.len() {
        return Err(StatError::LengthMismatch(metric_a.len(), metric_b.len()));
    }
    if metric_a.len() != human.len() {
        return Err(StatError::LengthMismatch(metric_a.len(), human.len()));
    }
    if metric_a.is_empty() {
        return Err(StatError::TooFew { needed: 1, got: 0 });
    }
    if n_resamples == 0 {
        return Err(StatError::InvalidArgument(
            "n_resamples must be >= 1".into(),
        ));
    }

    let corr_a = corr(metric_a, human)?;
    let corr_b = corr(metric_b, human)?;
    let observed = (corr_a - corr_b).abs();

    let mut rng = seed::stream(seed, &["perm-both"]);
    let cap = n_resamples.saturating_mul(10);
    let n = metric_a.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut draws = 0usize;
    let mut accepted = 0usize;
    let mut at_least = 0usize;
    while accepted < n_resamples {
        if draws == cap {
            return Err(StatError::ResampleCap {
                attempts: cap,
                accepted,
            });
        }
        draws += 1;
        for i in 0..n {
            if rng.gen_bool(0.5) {
                a[i] = metric_b[i];
                b[i] = metric_a[i];
            } else {
                a[i] = metric_a[i];
                b[i] = metric_b[i];
            }
        }
        let stat = match (corr(&a, human), corr(&b, human)) {
            (Ok(x), Ok(y)) => (x - y).abs(),
            (Err(StatError::Undefined(_)), _) | (_, Err(StatError::Undefined(_))) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        accepted += 1;
        if stat >= observed {
            at_least += 1;
        }
    }

    Ok(PermutationTest {
        corr_a,
        corr_b,
        statistic: observed,
        p_value: (1 + at_least) as f64 / (1 + n_resamples) as f64,
        resamples: n_resamples,
        redraws: draws - accepted,
    })
}
