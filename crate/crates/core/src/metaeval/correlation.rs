use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::StatError;

fn check_aligned(a: &[f64], b: &[f64]) -> Result<(), StatError> {
    if a.len() != b.len() {
        return Err(StatError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatError::TooFew {
            needed: 2,
            got: a.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatError::NonFinite);
    }
    Ok(())
}

fn ties(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable merge sort that returns the number of strict inversions.
fn sort_counting_inversions(values: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_inversions(&mut values[..mid], buf);
    swaps += sort_counting_inversions(&mut values[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if values[j] < values[i] {
            buf.push(values[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(values[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&values[i..mid]);
    buf.extend_from_slice(&values[j..n]);
    values.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b between two aligned score vectors, in `O(n log n)`.
///
/// Both vectors must be oriented the same way (higher is better). Returns
/// [`StatError::Undefined`] when either side is constant.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64, StatError> {
    check_aligned(a, b)?;
    let n = a.len() as u64;
    // + 0.0 maps -0.0 to 0.0 so both zeros sort and tie together
    let mut pairs: Vec<(f64, f64)> = a.iter().zip(b).map(|(x, y)| (x + 0.0, y + 0.0)).collect();
    pairs.sort_by(|p, q| {
        p.0.partial_cmp(&q.0)
            .unwrap_or(Ordering::Equal)
            .then(p.1.partial_cmp(&q.1).unwrap_or(Ordering::Equal))
    });

    let mut tied_a = 0u64;
    let mut tied_both = 0u64;
    let mut start = 0;
    for end in 1..=pairs.len() {
        if end == pairs.len() || pairs[end].0 != pairs[start].0 {
            let run = (end - start) as u64;
            tied_a += run * (run - 1) / 2;
            let ys: Vec<f64> = pairs[start..end].iter().map(|p| p.1).collect();
            tied_both += ties(&ys);
            start = end;
        }
    }

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let discordant = sort_counting_inversions(&mut ys, &mut buf);
    let tied_b = ties(&ys);

    let total = n * (n - 1) / 2;
    if tied_a == total || tied_b == total {
        return Err(StatError::Undefined("kendall tau of a constant vector"));
    }
    let numerator =
        total as f64 - tied_a as f64 - tied_b as f64 + tied_both as f64 - 2.0 * discordant as f64;
    let denominator = ((total - tied_a) as f64 * (total - tied_b) as f64).sqrt();
    Ok(numerator / denominator)
}

/// Segment-level tau between metric scores (higher is better) and human MQM
/// penalties (lower is better); penalties are negated first.
pub fn segment_tau(metric: &[f64], human_penalty: &[f64]) -> Result<f64, StatError> {
    let goodness: Vec<f64> = human_penalty.iter().map(|p| -p).collect();
    kendall_tau(metric, &goodness)
}

/// Fraction of human-ordered pairs that the metric orders the same way.
///
/// Each item is `(metric difference, human difference)` for one system pair.
/// Human ties are left out; metric ties count as wrong.
pub fn pairwise_accuracy_from_deltas<I>(deltas: I) -> Result<f64, StatError>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut considered = 0usize;
    let mut correct = 0usize;
    for (metric, human) in deltas {
        if !(metric.is_finite() && human.is_finite()) {
            return Err(StatError::NonFinite);
        }
        if human == 0.0 {
            continue;
        }
        considered += 1;
        if metric != 0.0 && metric.signum() == human.signum() {
            correct += 1;
        }
    }
    if considered == 0 {
        return Err(StatError::Undefined(
            "pairwise accuracy without any human-ordered pair",
        ));
    }
    Ok(correct as f64 / considered as f64)
}

/// System-level pairwise accuracy. Both maps must cover the same systems and
/// be oriented higher-is-better.
pub fn pairwise_accuracy(
    metric_sys: &BTreeMap<String, f64>,
    human_sys: &BTreeMap<String, f64>,
) -> Result<f64, StatError> {
    if !metric_sys.keys().eq(human_sys.keys()) {
        return Err(StatError::KeyMismatch);
    }
    let metric: Vec<f64> = metric_sys.values().copied().collect();
    let human: Vec<f64> = human_sys.values().copied().collect();
    pairwise_accuracy_vec(&metric, &human)
}

/// [`pairwise_accuracy`] over aligned vectors, one entry per system.
pub fn pairwise_accuracy_vec(metric: &[f64], human: &[f64]) -> Result<f64, StatError> {
    if metric.len() != human.len() {
        return Err(StatError::LengthMismatch(metric.len(), human.len()));
    }
    if metric.len() < 2 {
        return Err(StatError::TooFew {
            needed: 2,
            got: metric.len(),
        });
    }
    let n = metric.len();
    pairwise_accuracy_from_deltas(
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (metric[i] - metric[j], human[i] - human[j])),
    )
}
