//! Evaluation corpus: segments, system outputs, references and MQM ratings.
//!
//! The corpus is loaded from four TSV files and partitioned by
//! `(lang_pair, domain)`. After loading it is immutable; every collection is
//! kept in sorted maps so iteration order is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tsv::{self, Row, TsvError};

pub const SEGMENTS_FILE: &str = "segments.tsv";
pub const SYSTEM_OUTPUTS_FILE: &str = "system_outputs.tsv";
pub const REFERENCES_FILE: &str = "references.tsv";
pub const MQM_RATINGS_FILE: &str = "mqm_ratings.tsv";

pub const SEGMENTS_HEADER: [&str; 5] = ["lang_pair", "domain", "doc_id", "seg_id", "source_text"];
pub const SYSTEM_OUTPUTS_HEADER: [&str; 6] = [
    "lang_pair",
    "domain",
    "system_id",
    "seg_id",
    "is_human",
    "text",
];
pub const REFERENCES_HEADER: [&str; 5] = ["lang_pair", "domain", "ref_id", "seg_id", "text"];
pub const MQM_RATINGS_HEADER: [&str; 9] = [
    "lang_pair",
    "domain",
    "system_id",
    "seg_id",
    "annotator_id",
    "category",
    "severity",
    "span_start",
    "span_end",
];

const NO_ERROR: &str = "no-error";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}:{line}: referential integrity: {message}")]
    Integrity {
        file: String,
        line: u64,
        message: String,
    },
    #[error("unknown severity label `{0}`")]
    UnknownSeverity(String),
    #[error("invalid language pair `{0}` (expected `src-tgt`)")]
    InvalidLangPair(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<TsvError> for CorpusError {
    fn from(e: TsvError) -> Self {
        CorpusError::Parse {
            file: e.file,
            line: e.line,
            message: e.message,
        }
    }
}

/// Ordered language pair, written `src-tgt`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LangPair {
    pub source: String,
    pub target: String,
}

impl FromStr for LangPair {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('-') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() && !b.contains('-') => Ok(LangPair {
                source: a.to_string(),
                target: b.to_string(),
            }),
            _ => Err(CorpusError::InvalidLangPair(s.to_string())),
        }
    }
}

impl TryFrom<String> for LangPair {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<LangPair> for String {
    fn from(lp: LangPair) -> String {
        lp.to_string()
    }
}

impl fmt::Display for LangPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

/// Partition key of an [`EvaluationSet`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubsetKey {
    pub lang_pair: LangPair,
    pub domain: String,
}

impl fmt::Display for SubsetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.lang_pair, self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lang_pair: LangPair,
    pub domain: String,
    pub doc_id: String,
    pub seg_id: String,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemTranslation {
    pub system_id: String,
    pub seg_id: String,
    pub text: String,
    pub is_human: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RefOrigin {
    Human,
    Machine { system_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTranslation {
    pub ref_id: String,
    pub seg_id: String,
    pub text: String,
    pub origin: RefOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Major,
    Minor,
}

impl FromStr for Severity {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "major" => Ok(Severity::Major),
            "minor" => Ok(Severity::Minor),
            other => Err(CorpusError::UnknownSeverity(other.to_string())),
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Major => "major",
            Severity::Minor => "minor",
        })
    }
}

/// Character range inside the rated translation, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MqmError {
    pub category: String,
    pub severity: Severity,
    pub span: Option<Span>,
}

impl MqmError {
    pub fn new(category: impl Into<String>, severity: Severity) -> Self {
        MqmError {
            category: category.into(),
            severity,
            span: None,
        }
    }
}

/// One annotator's judgment of one system translation. An empty error list
/// is a perfect rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MqmRating {
    pub annotator_id: String,
    pub system_id: String,
    pub seg_id: String,
    pub errors: Vec<MqmError>,
}

/// Per-error penalty weights. Lower total penalty means a better translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeverityWeights {
    pub major: f64,
    pub minor: f64,
    /// Applies to minor errors in the `fluency/punctuation` category.
    pub minor_punctuation: f64,
}

impl Default for SeverityWeights {
    fn default() -> Self {
        SeverityWeights {
            major: 5.0,
            minor: 1.0,
            minor_punctuation: 0.1,
        }
    }
}

impl SeverityWeights {
    pub fn weight(&self, error: &MqmError) -> f64 {
        match error.severity {
            Severity::Major => self.major,
            Severity::Minor if is_punctuation(&error.category) => self.minor_punctuation,
            Severity::Minor => self.minor,
        }
    }
}

fn is_punctuation(category: &str) -> bool {
    category.trim().eq_ignore_ascii_case("fluency/punctuation")
}

/// Total MQM penalty of a rating.
pub fn mqm_score(rating: &MqmRating, weights: &SeverityWeights) -> f64 {
    rating.errors.iter().map(|e| weights.weight(e)).sum()
}

/// All data for one `(lang_pair, domain)` partition.
#[derive(Debug, Clone, Default)]
pub struct Subset {
    segments: BTreeMap<String, Segment>,
    /// keyed by (system_id, seg_id)
    translations: BTreeMap<(String, String), SystemTranslation>,
    /// keyed by (seg_id, ref_id)
    references: BTreeMap<(String, String), ReferenceTranslation>,
    /// sorted by (seg_id, annotator_id, system_id)
    ratings: Vec<MqmRating>,
}

impl Subset {
    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.values()
    }

    pub fn segment(&self, seg_id: &str) -> Option<&Segment> {
        self.segments.get(seg_id)
    }

    pub fn translations(&self) -> impl Iterator<Item = &SystemTranslation> {
        self.translations.values()
    }

    pub fn translation(&self, system_id: &str, seg_id: &str) -> Option<&SystemTranslation> {
        self.translations
            .get(&(system_id.to_string(), seg_id.to_string()))
    }

    pub fn references(&self) -> impl Iterator<Item = &ReferenceTranslation> {
        self.references.values()
    }

    /// The standard reference of a segment: the human reference with the
    /// smallest `ref_id`.
    pub fn standard_reference(&self, seg_id: &str) -> Option<&ReferenceTranslation> {
        self.references
            .range((seg_id.to_string(), String::new())..)
            .take_while(|((s, _), _)| s == seg_id)
            .map(|(_, r)| r)
            .find(|r| r.origin == RefOrigin::Human)
    }

    pub fn ratings(&self) -> &[MqmRating] {
        &self.ratings
    }

    pub fn ratings_of<'a>(
        &'a self,
        system_id: &'a str,
        seg_id: &'a str,
    ) -> impl Iterator<Item = &'a MqmRating> + 'a {
        self.ratings
            .iter()
            .filter(move |r| r.system_id == system_id && r.seg_id == seg_id)
    }

    /// All system ids, including human ones.
    pub fn systems(&self) -> BTreeSet<&str> {
        self.translations.keys().map(|(s, _)| s.as_str()).collect()
    }

    /// System ids of machine (non-human) systems.
    pub fn machine_systems(&self) -> BTreeSet<&str> {
        self.translations
            .values()
            .filter(|t| !t.is_human)
            .map(|t| t.system_id.as_str())
            .collect()
    }

    pub fn is_human_system(&self, system_id: &str) -> bool {
        self.translations
            .values()
            .any(|t| t.system_id == system_id && t.is_human)
    }

    /// Mean MQM penalty over all annotators that rated the translation.
    pub fn mean_penalty(
        &self,
        system_id: &str,
        seg_id: &str,
        weights: &SeverityWeights,
    ) -> Option<f64> {
        let scores: Vec<f64> = self
            .ratings_of(system_id, seg_id)
            .map(|r| mqm_score(r, weights))
            .collect();
        if scores.is_empty() {
            None
        } else {
            Some(scores.iter().sum::<f64>() / scores.len() as f64)
        }
    }

    /// Machine translations that were rated at least once and received no
    /// error from any annotator, grouped by segment and sorted by system id.
    pub fn error_free_translations(&self) -> BTreeMap<&str, Vec<&SystemTranslation>> {
        // (system, seg) -> all ratings clean so far
        let mut clean: BTreeMap<(&str, &str), bool> = BTreeMap::new();
        for r in &self.ratings {
            let entry = clean
                .entry((r.system_id.as_str(), r.seg_id.as_str()))
                .or_insert(true);
            *entry &= r.errors.is_empty();
        }
        let mut out: BTreeMap<&str, Vec<&SystemTranslation>> = BTreeMap::new();
        for ((system, seg), ok) in clean {
            if !ok {
                continue;
            }
            let Some(t) = self.translation(system, seg) else {
                continue;
            };
            if t.is_human {
                continue;
            }
            out.entry(t.seg_id.as_str()).or_default().push(t);
        }
        out
    }

    /// Number of distinct segments with at least one rating.
    pub fn annotated_segment_count(&self) -> usize {
        self.ratings
            .iter()
            .map(|r| r.seg_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Number of distinct system translations with at least one rating.
    pub fn annotated_translation_count(&self) -> usize {
        self.ratings
            .iter()
            .map(|r| (r.system_id.as_str(), r.seg_id.as_str()))
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// Immutable, cross-linked evaluation corpus.
#[derive(Debug, Clone, Default)]
pub struct EvaluationSet {
    subsets: BTreeMap<SubsetKey, Subset>,
}

impl EvaluationSet {
    pub fn subsets(&self) -> impl Iterator<Item = (&SubsetKey, &Subset)> {
        self.subsets.iter()
    }

    pub fn subset(&self, key: &SubsetKey) -> Option<&Subset> {
        self.subsets.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &SubsetKey> {
        self.subsets.keys()
    }

    pub fn segment_count(&self) -> usize {
        self.subsets.values().map(|s| s.segments.len()).sum()
    }

    pub fn translation_count(&self) -> usize {
        self.subsets.values().map(|s| s.translations.len()).sum()
    }

    pub fn reference_count(&self) -> usize {
        self.subsets.values().map(|s| s.references.len()).sum()
    }

    pub fn rating_count(&self) -> usize {
        self.subsets.values().map(|s| s.ratings.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Keeps only the partitions whose language pair is in `keep`.
    pub fn restrict_lang_pairs(&self, keep: &[LangPair]) -> EvaluationSet {
        EvaluationSet {
            subsets: self
                .subsets
                .iter()
                .filter(|(k, _)| keep.contains(&k.lang_pair))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Error-free machine translations of every partition.
    pub fn error_free_translations(
        &self,
    ) -> BTreeMap<&SubsetKey, BTreeMap<&str, Vec<&SystemTranslation>>> {
        self.subsets
            .iter()
            .map(|(k, s)| (k, s.error_free_translations()))
            .collect()
    }

    /// Writes the corpus back out as the four TSV files.
    pub fn write_tsv(&self, dir: &Path) -> Result<(), CorpusError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;

        let mut segs = Vec::new();
        let mut outs = Vec::new();
        let mut refs = Vec::new();
        let mut rats = Vec::new();
        for (key, subset) in &self.subsets {
            let lp = key.lang_pair.to_string();
            let d = key.domain.clone();
            for s in subset.segments.values() {
                segs.push(vec![
                    lp.clone(),
                    d.clone(),
                    s.doc_id.clone(),
                    s.seg_id.clone(),
                    s.source_text.clone(),
                ]);
            }
            for t in subset.translations.values() {
                outs.push(vec![
                    lp.clone(),
                    d.clone(),
                    t.system_id.clone(),
                    t.seg_id.clone(),
                    if t.is_human { "1" } else { "0" }.to_string(),
                    t.text.clone(),
                ]);
            }
            for r in subset.references.values() {
                refs.push(vec![
                    lp.clone(),
                    d.clone(),
                    r.ref_id.clone(),
                    r.seg_id.clone(),
                    r.text.clone(),
                ]);
            }
            for r in &subset.ratings {
                let base = [
                    lp.clone(),
                    d.clone(),
                    r.system_id.clone(),
                    r.seg_id.clone(),
                    r.annotator_id.clone(),
                ];
                if r.errors.is_empty() {
                    let mut row = base.to_vec();
                    row.extend([
                        NO_ERROR.to_string(),
                        NO_ERROR.to_string(),
                        String::new(),
                        String::new(),
                    ]);
                    rats.push(row);
                }
                for e in &r.errors {
                    let mut row = base.to_vec();
                    let (a, b) = match e.span {
                        Some(sp) => (sp.start.to_string(), sp.end.to_string()),
                        None => (String::new(), String::new()),
                    };
                    row.extend([e.category.clone(), e.severity.to_string(), a, b]);
                    rats.push(row);
                }
            }
        }

        let write = |name: &str, header: &[&str], rows: Vec<Vec<String>>| {
            let path = dir.join(name);
            let file = std::fs::File::create(&path).map_err(io(&path))?;
            tsv::write_rows(std::io::BufWriter::new(file), header, rows).map_err(io(&path))
        };
        write(SEGMENTS_FILE, &SEGMENTS_HEADER, segs)?;
        write(SYSTEM_OUTPUTS_FILE, &SYSTEM_OUTPUTS_HEADER, outs)?;
        write(REFERENCES_FILE, &REFERENCES_HEADER, refs)?;
        write(MQM_RATINGS_FILE, &MQM_RATINGS_HEADER, rats)?;
        Ok(())
    }
}

/// Locations of the four corpus tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusPaths {
    pub segments: PathBuf,
    pub system_outputs: PathBuf,
    pub references: PathBuf,
    pub mqm_ratings: PathBuf,
}

impl CorpusPaths {
    /// The standard file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        CorpusPaths {
            segments: dir.join(SEGMENTS_FILE),
            system_outputs: dir.join(SYSTEM_OUTPUTS_FILE),
            references: dir.join(REFERENCES_FILE),
            mqm_ratings: dir.join(MQM_RATINGS_FILE),
        }
    }

    pub fn all(&self) -> [&Path; 4] {
        [
            &self.segments,
            &self.system_outputs,
            &self.references,
            &self.mqm_ratings,
        ]
    }
}

/// Loads and cross-links the four corpus tables.
pub fn load_corpus(paths: &CorpusPaths) -> Result<EvaluationSet, CorpusError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| CorpusError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let name = |p: &Path| p.display().to_string();
    parse_tables(
        (&name(&paths.segments), &read(&paths.segments)?),
        (&name(&paths.system_outputs), &read(&paths.system_outputs)?),
        (&name(&paths.references), &read(&paths.references)?),
        (&name(&paths.mqm_ratings), &read(&paths.mqm_ratings)?),
    )
}

/// Same as [`load_corpus`] but over in-memory table contents.
pub fn parse_corpus(
    segments: &str,
    system_outputs: &str,
    references: &str,
    mqm_ratings: &str,
) -> Result<EvaluationSet, CorpusError> {
    parse_tables(
        (SEGMENTS_FILE, segments),
        (SYSTEM_OUTPUTS_FILE, system_outputs),
        (REFERENCES_FILE, references),
        (MQM_RATINGS_FILE, mqm_ratings),
    )
}

fn key_of(file: &str, row: &Row) -> Result<SubsetKey, CorpusError> {
    let lang_pair = row
        .get(0)
        .parse()
        .map_err(|e: CorpusError| CorpusError::Parse {
            file: file.to_string(),
            line: row.line,
            message: e.to_string(),
        })?;
    Ok(SubsetKey {
        lang_pair,
        domain: row.get(1).to_string(),
    })
}

fn parse_err(file: &str, row: &Row, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        file: file.to_string(),
        line: row.line,
        message: message.into(),
    }
}

fn integrity_err(file: &str, row: &Row, message: impl Into<String>) -> CorpusError {
    CorpusError::Integrity {
        file: file.to_string(),
        line: row.line,
        message: message.into(),
    }
}

fn parse_tables(
    segments: (&str, &str),
    system_outputs: (&str, &str),
    references: (&str, &str),
    mqm_ratings: (&str, &str),
) -> Result<EvaluationSet, CorpusError> {
    let mut subsets: BTreeMap<SubsetKey, Subset> = BTreeMap::new();

    let (file, content) = segments;
    for row in tsv::read_rows(file, content, &SEGMENTS_HEADER)? {
        let key = key_of(file, &row)?;
        let seg_id = row.get(3).to_string();
        if seg_id.is_empty() {
            return Err(parse_err(file, &row, "empty seg_id"));
        }
        if row.get(4).is_empty() {
            return Err(parse_err(
                file,
                &row,
                format!("empty source_text for segment `{seg_id}`"),
            ));
        }
        let subset = subsets.entry(key.clone()).or_default();
        if subset.segments.contains_key(&seg_id) {
            return Err(parse_err(
                file,
                &row,
                format!("duplicate segment `{seg_id}` in {key}"),
            ));
        }
        subset.segments.insert(
            seg_id.clone(),
            Segment {
                lang_pair: key.lang_pair.clone(),
                domain: key.domain.clone(),
                doc_id: row.get(2).to_string(),
                seg_id,
                source_text: row.get(4).to_string(),
            },
        );
    }

    let (file, content) = system_outputs;
    let mut human_flags: BTreeMap<(SubsetKey, String), bool> = BTreeMap::new();
    for row in tsv::read_rows(file, content, &SYSTEM_OUTPUTS_HEADER)? {
        let key = key_of(file, &row)?;
        let system_id = row.get(2).to_string();
        let seg_id = row.get(3).to_string();
        if system_id.is_empty() {
            return Err(parse_err(file, &row, "empty system_id"));
        }
        let is_human = match row.get(4) {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    file,
                    &row,
                    format!("is_human must be 0 or 1, found `{other}`"),
                ))
            }
        };
        let subset = subsets
            .get_mut(&key)
            .filter(|s| s.segments.contains_key(&seg_id))
            .ok_or_else(|| {
                integrity_err(file, &row, format!("unknown segment `{seg_id}` in {key}"))
            })?;
        if let Some(prev) = human_flags.insert((key.clone(), system_id.clone()), is_human) {
            if prev != is_human {
                return Err(integrity_err(
                    file,
                    &row,
                    format!("system `{system_id}` has inconsistent is_human flags in {key}"),
                ));
            }
        }
        let k = (system_id.clone(), seg_id.clone());
        if subset.translations.contains_key(&k) {
            return Err(integrity_err(
                file,
                &row,
                format!("duplicate translation ({system_id}, {seg_id}) in {key}"),
            ));
        }
        subset.translations.insert(
            k,
            SystemTranslation {
                system_id,
                seg_id,
                text: row.get(5).to_string(),
                is_human,
            },
        );
    }

    let (file, content) = references;
    for row in tsv::read_rows(file, content, &REFERENCES_HEADER)? {
        let key = key_of(file, &row)?;
        let ref_id = row.get(2).to_string();
        let seg_id = row.get(3).to_string();
        let subset = subsets
            .get_mut(&key)
            .filter(|s| s.segments.contains_key(&seg_id))
            .ok_or_else(|| {
                integrity_err(file, &row, format!("unknown segment `{seg_id}` in {key}"))
            })?;
        let k = (seg_id.clone(), ref_id.clone());
        if subset.references.contains_key(&k) {
            return Err(integrity_err(
                file,
                &row,
                format!("duplicate reference ({ref_id}, {seg_id}) in {key}"),
            ));
        }
        subset.references.insert(
            k,
            ReferenceTranslation {
                ref_id,
                seg_id,
                text: row.get(4).to_string(),
                origin: RefOrigin::Human,
            },
        );
    }

    // (key, annotator, system, seg) -> (errors, saw no-error row)
    type RatingKey = (SubsetKey, String, String, String);
    let mut grouped: BTreeMap<RatingKey, (Vec<MqmError>, bool)> = BTreeMap::new();
    let (file, content) = mqm_ratings;
    for row in tsv::read_rows(file, content, &MQM_RATINGS_HEADER)? {
        let key = key_of(file, &row)?;
        let system_id = row.get(2).to_string();
        let seg_id = row.get(3).to_string();
        let annotator_id = row.get(4).to_string();
        if annotator_id.is_empty() {
            return Err(parse_err(file, &row, "empty annotator_id"));
        }
        let translation = subsets
            .get(&key)
            .and_then(|s| s.translation(&system_id, &seg_id))
            .ok_or_else(|| {
                integrity_err(
                    file,
                    &row,
                    format!("rating for unknown translation ({system_id}, {seg_id}) in {key}"),
                )
            })?;
        let text_len = translation.text.chars().count();

        let entry = grouped
            .entry((
                key.clone(),
                annotator_id.clone(),
                system_id.clone(),
                seg_id.clone(),
            ))
            .or_default();
        let severity = row.get(6);
        if severity == NO_ERROR {
            if entry.1 || !entry.0.is_empty() {
                return Err(integrity_err(
                    file,
                    &row,
                    format!("`no-error` row for ({annotator_id}, {system_id}, {seg_id}) must be the rating's only row"),
                ));
            }
            entry.1 = true;
            continue;
        }
        if entry.1 {
            return Err(integrity_err(
                file,
                &row,
                format!("rating ({annotator_id}, {system_id}, {seg_id}) already marked `no-error`"),
            ));
        }
        let severity: Severity = severity
            .parse()
            .map_err(|e: CorpusError| parse_err(file, &row, e.to_string()))?;
        let span = match (row.get(7), row.get(8)) {
            ("", "") => None,
            (a, b) => {
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(file, &row, format!("invalid span offset `{s}`")))
                };
                let (start, end) = (parse(a)?, parse(b)?);
                if start > end || end > text_len {
                    return Err(parse_err(
                        file,
                        &row,
                        format!("span {start}..{end} outside translation of {text_len} characters"),
                    ));
                }
                Some(Span { start, end })
            }
        };
        entry.0.push(MqmError {
            category: row.get(5).to_string(),
            severity,
            span,
        });
    }

    for ((key, annotator_id, system_id, seg_id), (errors, _)) in grouped {
        let subset = subsets.get_mut(&key).expect("checked above");
        subset.ratings.push(MqmRating {
            annotator_id,
            system_id,
            seg_id,
            errors,
        });
    }
    for subset in subsets.values_mut() {
        subset.ratings.sort_by(|a, b| {
            (&a.seg_id, &a.annotator_id, &a.system_id).cmp(&(
                &b.seg_id,
                &b.annotator_id,
                &b.system_id,
            ))
        });
    }

    Ok(EvaluationSet { subsets })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SEGS: &str = "lang_pair\tdomain\tdoc_id\tseg_id\tsource_text\n\
        en-de\tnews\td1\ts1\tHello world\n\
        en-de\tnews\td1\ts2\tGood morning\n\
        en-de\tnews\td2\ts3\tThank you\n";
    const OUTS: &str = "lang_pair\tdomain\tsystem_id\tseg_id\tis_human\ttext\n\
        en-de\tnews\tA\ts1\t0\tHallo Welt\n\
        en-de\tnews\tB\ts1\t0\tHallo Erde\n\
        en-de\tnews\tH\ts1\t1\tHallo, Welt\n\
        en-de\tnews\tA\ts2\t0\tGuten Morgen\n";
    const REFS: &str = "lang_pair\tdomain\tref_id\tseg_id\ttext\n\
        en-de\tnews\trefB\ts1\tHallo Welt!\n\
        en-de\tnews\trefA\ts1\tHallo Welt\n\
        en-de\tnews\trefA\ts2\tGuten Morgen\n";
    const RATINGS: &str = "lang_pair\tdomain\tsystem_id\tseg_id\tannotator_id\tcategory\tseverity\tspan_start\tspan_end\n\
        en-de\tnews\tA\ts1\tr1\tno-error\tno-error\t\t\n\
        en-de\tnews\tA\ts1\tr2\tno-error\tno-error\t\t\n\
        en-de\tnews\tB\ts1\tr1\tno-error\tno-error\t\t\n\
        en-de\tnews\tB\ts1\tr2\taccuracy/mistranslation\tminor\t6\t10\n\
        en-de\tnews\tH\ts1\tr1\tno-error\tno-error\t\t\n";

    fn fixture() -> EvaluationSet {
        parse_corpus(SEGS, OUTS, REFS, RATINGS).unwrap()
    }

    fn key() -> SubsetKey {
        SubsetKey {
            lang_pair: "en-de".parse().unwrap(),
            domain: "news".into(),
        }
    }

    #[test]
    fn loads_three_segments() {
        let set = fixture();
        assert_eq!(set.segment_count(), 3);
        assert_eq!(set.translation_count(), 4);
        assert_eq!(set.rating_count(), 5);
        let s = set.subset(&key()).unwrap();
        assert_eq!(s.systems().len(), 3);
        assert_eq!(s.machine_systems().len(), 2);
        assert!(s.is_human_system("H"));
    }

    #[test]
    fn standard_reference_is_smallest_ref_id() {
        let set = fixture();
        let s = set.subset(&key()).unwrap();
        assert_eq!(s.standard_reference("s1").unwrap().ref_id, "refA");
        assert!(s.standard_reference("s3").is_none());
    }

    #[test]
    fn unknown_segment_is_integrity_error() {
        let outs = format!("{OUTS}en-de\tnews\tA\ts9\t0\tx\n");
        let err = parse_corpus(SEGS, &outs, REFS, RATINGS).unwrap_err();
        assert!(
            matches!(err, CorpusError::Integrity { line: 6, .. }),
            "{err}"
        );
        assert!(err.to_string().contains("s9"));
    }

    #[test]
    fn rating_for_unknown_translation_rejected() {
        let r = format!("{RATINGS}en-de\tnews\tB\ts2\tr1\tno-error\tno-error\t\t\n");
        let err = parse_corpus(SEGS, OUTS, REFS, &r).unwrap_err();
        assert!(matches!(err, CorpusError::Integrity { .. }));
    }

    #[test]
    fn empty_ratings_file_is_valid() {
        let set = parse_corpus(SEGS, OUTS, REFS, "").unwrap();
        assert_eq!(set.rating_count(), 0);
        let header_only = MQM_RATINGS_HEADER.join("\t") + "\n";
        assert_eq!(
            parse_corpus(SEGS, OUTS, REFS, &header_only)
                .unwrap()
                .rating_count(),
            0
        );
    }

    #[test]
    fn malformed_rows_report_lines() {
        let bad = format!("{SEGS}en-de\tnews\td3\n");
        match parse_corpus(&bad, OUTS, REFS, RATINGS).unwrap_err() {
            CorpusError::Parse { line, .. } => assert_eq!(line, 5),
            e => panic!("{e}"),
        }
        let bad_sev = format!("{RATINGS}en-de\tnews\tA\ts2\tr1\tstyle\tcritical\t\t\n");
        let err = parse_corpus(SEGS, OUTS, REFS, &bad_sev).unwrap_err();
        assert!(err
            .to_string()
            .contains("unknown severity label `critical`"));
    }

    #[test]
    fn span_outside_text_rejected() {
        let r = format!("{RATINGS}en-de\tnews\tA\ts2\tr1\tstyle\tminor\t3\t99\n");
        assert!(parse_corpus(SEGS, OUTS, REFS, &r).is_err());
    }

    #[test]
    fn no_error_row_must_be_alone() {
        let r = format!("{RATINGS}en-de\tnews\tA\ts1\tr1\tstyle\tminor\t\t\n");
        assert!(matches!(
            parse_corpus(SEGS, OUTS, REFS, &r).unwrap_err(),
            CorpusError::Integrity { .. }
        ));
    }

    #[test]
    fn mqm_score_examples() {
        let w = SeverityWeights::default();
        let rating = |errors| MqmRating {
            annotator_id: "a".into(),
            system_id: "s".into(),
            seg_id: "1".into(),
            errors,
        };
        assert_eq!(mqm_score(&rating(vec![]), &w), 0.0);
        assert_eq!(
            mqm_score(
                &rating(vec![MqmError::new("accuracy/omission", Severity::Major)]),
                &w
            ),
            5.0
        );
        let mixed = rating(vec![
            MqmError::new("accuracy/omission", Severity::Major),
            MqmError::new("accuracy/mistranslation", Severity::Minor),
            MqmError::new("accuracy/addition", Severity::Minor),
            MqmError::new("Fluency/Punctuation", Severity::Minor),
        ]);
        assert!((mqm_score(&mixed, &w) - 7.1).abs() < 1e-12);
        // a major punctuation error is still major
        assert_eq!(
            mqm_score(
                &rating(vec![MqmError::new("fluency/punctuation", Severity::Major)]),
                &w
            ),
            5.0
        );
    }

    #[test]
    fn error_free_requires_every_annotator_clean() {
        let set = fixture();
        let s = set.subset(&key()).unwrap();
        let free = s.error_free_translations();
        let ids: Vec<_> = free["s1"].iter().map(|t| t.system_id.as_str()).collect();
        // B has one minor error from r2, H is human
        assert_eq!(ids, vec!["A"]);
        // A/s2 was never annotated
        assert!(!free.contains_key("s2"));
    }

    #[test]
    fn mean_penalty_averages_annotators() {
        let set = fixture();
        let s = set.subset(&key()).unwrap();
        let w = SeverityWeights::default();
        assert_eq!(s.mean_penalty("B", "s1", &w), Some(0.5));
        assert_eq!(s.mean_penalty("A", "s2", &w), None);
    }

    #[test]
    fn write_then_load_is_identical() {
        let set = fixture();
        let dir = tempfile::tempdir().unwrap();
        set.write_tsv(dir.path()).unwrap();
        let again = load_corpus(&CorpusPaths::in_dir(dir.path())).unwrap();
        let a = set.subset(&key()).unwrap();
        let b = again.subset(&key()).unwrap();
        assert_eq!(a.ratings(), b.ratings());
        assert_eq!(
            a.translations().collect::<Vec<_>>(),
            b.translations().collect::<Vec<_>>()
        );
        assert_eq!(
            a.references().collect::<Vec<_>>(),
            b.references().collect::<Vec<_>>()
        );
    }

    #[test]
    fn lang_pair_parsing() {
        let lp: LangPair = "zh-en".parse().unwrap();
        assert_eq!((lp.source.as_str(), lp.target.as_str()), ("zh", "en"));
        assert!("zhen".parse::<LangPair>().is_err());
        assert!("-en".parse::<LangPair>().is_err());
    }
}
