use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StatError;
use crate::corpus::{Subset, SystemTranslation};
use crate::seed;

/// What a machine-translated reference is sampled for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalContext {
    /// scoring one system's outputs
    SegmentLevel { system: String },
    /// comparing two systems; stored with `a < b`
    SystemPair { a: String, b: String },
}

impl EvalContext {
    pub fn segment_level(system: &str) -> Self {
        EvalContext::SegmentLevel {
            system: system.to_string(),
        }
    }

    pub fn system_pair(x: &str, y: &str) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        EvalContext::SystemPair {
            a: a.to_string(),
            b: b.to_string(),
        }
    }

    /// Systems whose translations may not serve as references.
    pub fn excluded(&self) -> Vec<&str> {
        match self {
            EvalContext::SegmentLevel { system } => vec![system],
            EvalContext::SystemPair { a, b } => vec![a, b],
        }
    }
}

impl fmt::Display for EvalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalContext::SegmentLevel { system } => write!(f, "segment:{system}"),
            EvalContext::SystemPair { a, b } => write!(f, "pair:{a}|{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenReference {
    pub system_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MtReferenceAssignment {
    pub context: EvalContext,
    pub seed: u64,
    /// keyed by seg_id
    pub chosen: BTreeMap<String, ChosenReference>,
    /// segments without any admissible candidate
    pub skipped: BTreeSet<String>,
}

/// Samples machine-translated references from one subset's error-free
/// translations. Candidates are computed once and reused across contexts.
pub struct ReferenceSampler<'a> {
    subset: &'a Subset,
    error_free: BTreeMap<&'a str, Vec<&'a SystemTranslation>>,
}

impl<'a> ReferenceSampler<'a> {
    pub fn new(subset: &'a Subset) -> Self {
        ReferenceSampler {
            subset,
            error_free: subset.error_free_translations(),
        }
    }

    /// Error-free candidates for a segment, ordered by system id.
    pub fn candidates(&self, seg_id: &str) -> &[&'a SystemTranslation] {
        self.error_free
            .get(seg_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Uniform choice per segment among candidates from systems outside the
    /// context. Each segment draws from its own stream keyed by
    /// `(seed, context, seg_id)`.
    pub fn sample(&self, context: EvalContext, seed: u64) -> MtReferenceAssignment {
        let excluded = context.excluded();
        let context_id = context.to_string();
        let mut chosen = BTreeMap::new();
        let mut skipped = BTreeSet::new();
        for segment in self.subset.segments() {
            let pool: Vec<&SystemTranslation> = self
                .candidates(&segment.seg_id)
                .iter()
                .copied()
                .filter(|t| !excluded.contains(&t.system_id.as_str()))
                .collect();
            if pool.is_empty() {
                skipped.insert(segment.seg_id.clone());
                continue;
            }
            let mut rng = seed::stream(seed, &["mt-ref", &context_id, &segment.seg_id]);
            let pick = pool[rng.gen_range(0..pool.len())];
            chosen.insert(
                segment.seg_id.clone(),
                ChosenReference {
                    system_id: pick.system_id.clone(),
                    text: pick.text.clone(),
                },
            );
        }
        MtReferenceAssignment {
            context,
            seed,
            chosen,
            skipped,
        }
    }

    pub fn segment_level(&self, evaluated_system: &str, seed: u64) -> MtReferenceAssignment {
        self.sample(EvalContext::segment_level(evaluated_system), seed)
    }

    pub fn system_pair(&self, system_a: &str, system_b: &str, seed: u64) -> MtReferenceAssignment {
        self.sample(EvalContext::system_pair(system_a, system_b), seed)
    }
}

pub fn sample_refs_segment_level(
    subset: &Subset,
    evaluated_system: &str,
    seed: u64,
) -> MtReferenceAssignment {
    ReferenceSampler::new(subset).segment_level(evaluated_system, seed)
}

pub fn sample_refs_system_pair(
    subset: &Subset,
    system_a: &str,
    system_b: &str,
    seed: u64,
) -> MtReferenceAssignment {
    ReferenceSampler::new(subset).system_pair(system_a, system_b, seed)
}

/// Segments evaluated under both reference conditions: those with a sampled
/// machine reference and a standard human reference.
pub fn comparable_subset(
    subset: &Subset,
    assignment: &MtReferenceAssignment,
) -> Result<BTreeSet<String>, StatError> {
    let segments: BTreeSet<String> = assignment
        .chosen
        .keys()
        .filter(|seg| subset.standard_reference(seg).is_some())
        .cloned()
        .collect();
    if segments.is_empty() {
        return Err(StatError::EmptyComparableSubset(
            assignment.context.to_string(),
        ));
    }
    Ok(segments)
}
