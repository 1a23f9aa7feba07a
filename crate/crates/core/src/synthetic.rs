//! Seeded generator for small MQM-annotated corpora.
//!
//! Each segment has a random target-language reference and a source built
//! from it by a fixed word mapping. A machine system of quality `q` keeps each
//! reference token with probability `q` (sometimes as an unpenalized synonym)
//! and otherwise substitutes a noise word; every substitution is annotated as one MQM error with a span over
//! the noise word. Annotators are perfect, so the human ranking of two
//! translations follows their substitution counts when all errors are major.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    parse_corpus, CorpusError, CorpusPaths, EvaluationSet, LangPair, MQM_RATINGS_FILE,
    MQM_RATINGS_HEADER, REFERENCES_FILE, REFERENCES_HEADER, SEGMENTS_FILE, SEGMENTS_HEADER,
    SYSTEM_OUTPUTS_FILE, SYSTEM_OUTPUTS_HEADER,
};
use crate::{seed, tsv};

pub const HUMAN_SYSTEM: &str = "human-B";
pub const STANDARD_REF_ID: &str = "ref-A";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub lang_pairs: Vec<LangPair>,
    pub domain: String,
    pub segments: usize,
    pub systems: usize,
    pub annotators: usize,
    /// quality of the best and the worst machine system
    pub max_quality: f64,
    pub min_quality: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub noise_vocab_size: usize,
    /// probability that an error is minor instead of major
    pub minor_rate: f64,
    /// probability that a kept token is written as its synonym (not an error)
    pub paraphrase_rate: f64,
    /// probability that a machine translation is rated at all
    pub rated_fraction: f64,
    /// probability that a segment gets a second annotator
    pub double_rated_fraction: f64,
    /// add a human system, rated error-free
    pub human_system: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            lang_pairs: vec![
                "en-de".parse().expect("valid"),
                "zh-en".parse().expect("valid"),
            ],
            domain: "news".to_string(),
            segments: 50,
            systems: 6,
            annotators: 3,
            max_quality: 0.97,
            min_quality: 0.6,
            min_len: 6,
            max_len: 12,
            vocab_size: 120,
            noise_vocab_size: 40,
            minor_rate: 0.3,
            paraphrase_rate: 0.15,
            rated_fraction: 1.0,
            double_rated_fraction: 0.2,
            human_system: true,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} must lie in [0, 1]"))
            }
        };
        unit("max_quality", self.max_quality)?;
        unit("min_quality", self.min_quality)?;
        unit("minor_rate", self.minor_rate)?;
        unit("paraphrase_rate", self.paraphrase_rate)?;
        unit("rated_fraction", self.rated_fraction)?;
        unit("double_rated_fraction", self.double_rated_fraction)?;
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err("need 1 <= min_len <= max_len".into());
        }
        if self.vocab_size == 0 || self.noise_vocab_size == 0 || self.annotators == 0 {
            return Err("vocab_size, noise_vocab_size and annotators must be >= 1".into());
        }
        if self.lang_pairs.is_empty() || self.domain.is_empty() {
            return Err("need at least one language pair and a domain".into());
        }
        Ok(())
    }
}

/// The four corpus tables as TSV text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub segments: String,
    pub system_outputs: String,
    pub references: String,
    pub mqm_ratings: String,
}

impl SyntheticCorpus {
    pub fn parse(&self) -> Result<EvaluationSet, CorpusError> {
        parse_corpus(
            &self.segments,
            &self.system_outputs,
            &self.references,
            &self.mqm_ratings,
        )
    }

    pub fn write(&self, dir: &Path) -> Result<CorpusPaths, CorpusError> {
        std::fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, content) in [
            (SEGMENTS_FILE, &self.segments),
            (SYSTEM_OUTPUTS_FILE, &self.system_outputs),
            (REFERENCES_FILE, &self.references),
            (MQM_RATINGS_FILE, &self.mqm_ratings),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|source| CorpusError::Io { path, source })?;
        }
        Ok(CorpusPaths::in_dir(dir))
    }
}

/// Machine system ids: `sys-A`, `sys-B`, ... in order of decreasing quality.
pub fn system_id(k: usize) -> String {
    let mut name = String::new();
    let mut n = k;
    loop {
        name.insert(0, (b'A' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    format!("sys-{name}")
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut buf = Vec::new();
    tsv::write_rows(&mut buf, header, rows).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 fields")
}

struct Tables {
    segments: Vec<Vec<String>>,
    outputs: Vec<Vec<String>>,
    references: Vec<Vec<String>>,
    ratings: Vec<Vec<String>>,
}

fn quality(config: &SyntheticConfig, k: usize) -> f64 {
    if config.systems <= 1 {
        return config.max_quality;
    }
    let step = (config.max_quality - config.min_quality) / (config.systems - 1) as f64;
    config.max_quality - step * k as f64
}

fn generate_pair(config: &SyntheticConfig, lp: &LangPair, rng: &mut ChaCha8Rng, out: &mut Tables) {
    let lp_s = lp.to_string();
    let base = |rest: Vec<String>| -> Vec<String> {
        let mut row = vec![lp_s.clone(), config.domain.clone()];
        row.extend(rest);
        row
    };
    for i in 0..config.segments {
        let seg_id = format!("s{i:04}");
        let len = rng.gen_range(config.min_len..=config.max_len);
        let words: Vec<usize> = (0..len)
            .map(|_| rng.gen_range(0..config.vocab_size))
            .collect();
        let reference: Vec<String> = words.iter().map(|w| format!("w{w}")).collect();
        let source: Vec<String> = words.iter().map(|w| format!("{}{w}", lp.source)).collect();
        out.segments.push(base(vec![
            format!("doc{}", i / 10),
            seg_id.clone(),
            source.join(" "),
        ]));
        out.references.push(base(vec![
            STANDARD_REF_ID.to_string(),
            seg_id.clone(),
            reference.join(" "),
        ]));

        let first = format!("rater{}", i % config.annotators.max(1));
        let mut annotators = vec![first];
        if config.annotators > 1 && rng.gen_bool(config.double_rated_fraction) {
            annotators.push(format!("rater{}", (i + 1) % config.annotators));
        }

        for k in 0..config.systems {
            let q = quality(config, k);
            let sys = system_id(k);
            let mut tokens = Vec::with_capacity(len);
            // (category, severity, token index)
            let mut errors = Vec::new();
            for (t, word) in reference.iter().enumerate() {
                if rng.gen_bool(q) {
                    if rng.gen_bool(config.paraphrase_rate) {
                        tokens.push(format!("v{}", &word[1..]));
                    } else {
                        tokens.push(word.clone());
                    }
                } else {
                    tokens.push(format!("x{}", rng.gen_range(0..config.noise_vocab_size)));
                    let minor = rng.gen_bool(config.minor_rate);
                    let (category, severity) = if minor {
                        ("Fluency/Grammar", "minor")
                    } else {
                        ("Accuracy/Mistranslation", "major")
                    };
                    errors.push((category, severity, t));
                }
            }
            out.outputs.push(base(vec![
                sys.clone(),
                seg_id.clone(),
                "0".into(),
                tokens.join(" "),
            ]));
            if !rng.gen_bool(config.rated_fraction) {
                continue;
            }
            let mut offsets = Vec::with_capacity(tokens.len());
            let mut pos = 0;
            for tok in &tokens {
                offsets.push((pos, pos + tok.chars().count()));
                pos += tok.chars().count() + 1;
            }
            for annotator in &annotators {
                let head = vec![sys.clone(), seg_id.clone(), annotator.clone()];
                if errors.is_empty() {
                    let mut row = head.clone();
                    row.extend([
                        "no-error".into(),
                        "no-error".into(),
                        String::new(),
                        String::new(),
                    ]);
                    out.ratings.push(base(row));
                }
                for &(category, severity, t) in &errors {
                    let mut row = head.clone();
                    let (a, b) = offsets[t];
                    row.extend([
                        category.to_string(),
                        severity.to_string(),
                        a.to_string(),
                        b.to_string(),
                    ]);
                    out.ratings.push(base(row));
                }
            }
        }

        if config.human_system {
            let mut tokens = reference.clone();
            tokens.reverse();
            out.outputs.push(base(vec![
                HUMAN_SYSTEM.into(),
                seg_id.clone(),
                "1".into(),
                tokens.join(" "),
            ]));
            for annotator in &annotators {
                out.ratings.push(base(vec![
                    HUMAN_SYSTEM.into(),
                    seg_id.clone(),
                    annotator.clone(),
                    "no-error".into(),
                    "no-error".into(),
                    String::new(),
                    String::new(),
                ]));
            }
        }
    }
}

/// Generates the corpus tables. Each language pair draws from its own stream,
/// so adding a pair does not change the others.
pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut tables = Tables {
        segments: Vec::new(),
        outputs: Vec::new(),
        references: Vec::new(),
        ratings: Vec::new(),
    };
    for lp in &config.lang_pairs {
        let mut rng = seed::stream(config.seed, &["synthetic", &lp.to_string()]);
        generate_pair(config, lp, &mut rng, &mut tables);
    }
    SyntheticCorpus {
        segments: table(&SEGMENTS_HEADER, tables.segments),
        system_outputs: table(&SYSTEM_OUTPUTS_HEADER, tables.outputs),
        references: table(&REFERENCES_HEADER, tables.references),
        mqm_ratings: table(&MQM_RATINGS_HEADER, tables.ratings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_ids() {
        assert_eq!(system_id(0), "sys-A");
        assert_eq!(system_id(25), "sys-Z");
        assert_eq!(system_id(26), "sys-AA");
    }

    #[test]
    fn default_corpus_parses_with_expected_counts() {
        let config = SyntheticConfig::default();
        let set = generate(&config).parse().unwrap();
        assert_eq!(set.segment_count(), 100);
        // 6 machine systems + 1 human system per segment
        assert_eq!(set.translation_count(), 700);
        assert_eq!(set.reference_count(), 100);
        for (_, subset) in set.subsets() {
            assert_eq!(subset.machine_systems().len(), 6);
            assert!(subset.is_human_system(HUMAN_SYSTEM));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let config = SyntheticConfig::default();
        assert_eq!(generate(&config), generate(&config));
        let other = SyntheticConfig {
            seed: 1,
            ..config.clone()
        };
        assert_ne!(generate(&config), generate(&other));
    }

    #[test]
    fn perfect_system_is_error_free() {
        let config = SyntheticConfig {
            systems: 2,
            max_quality: 1.0,
            min_quality: 0.0,
            lang_pairs: vec!["en-de".parse().unwrap()],
            segments: 5,
            ..Default::default()
        };
        let set = generate(&config).parse().unwrap();
        let (_, subset) = set.subsets().next().unwrap();
        let free = subset.error_free_translations();
        assert_eq!(free.len(), 5);
        assert!(free
            .values()
            .all(|v| v.len() == 1 && v[0].system_id == "sys-A"));
    }
}
