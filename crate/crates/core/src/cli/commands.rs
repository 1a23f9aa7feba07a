use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CliError, Command, RunConfig};
use crate::corpus::{load_corpus, CorpusPaths, EvaluationSet, LangPair, SeverityWeights};
use crate::metaeval::{
    correlation_report, robustness_report, RobustnessOptions, SignificanceOptions,
};
use crate::metrics::{
    read_metric_scores, write_metric_scores, BleuMetric, ChrfMetric, Metric, MetricScore,
    PrismMetric, Tokenizer, ToyScorer,
};
use crate::rankings::{
    derive_rankings, read_rankings, split_by_lang_pair, write_rankings, DeriveDiagnostics,
    DeriveOptions, RankingDataset, RelativeRanking, SplitProvenance,
};
use crate::synthetic;
use crate::training::train;

const CORPUS_DIR: &str = "corpus";
const RANKINGS_DIR: &str = "rankings";
const MODEL_DIR: &str = "model";
const SCORES_DIR: &str = "scores";
const CORRELATION_DIR: &str = "correlation";
const ROBUSTNESS_DIR: &str = "robustness";

const SUMMARY_FILE: &str = "summary.json";
const TRAIN_FILE: &str = "train.tsv";
const VALIDATION_FILE: &str = "validation.tsv";
const MANIFEST_FILE: &str = "manifest.json";
const SCORER_FILE: &str = "scorer.json";
const TRAINING_REPORT_FILE: &str = "training_report.json";
const SCORES_FILE: &str = "metric_scores.tsv";
const REPORT_JSON: &str = "report.json";
const REPORT_TEXT: &str = "report.txt";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Fails with a usage error naming `what` when `path` does not exist.
fn require(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "missing {what}: {}",
            path.display()
        )))
    }
}

fn upstream(
    explicit: Option<PathBuf>,
    config: &RunConfig,
    default: &[&str],
) -> Result<PathBuf, CliError> {
    match explicit {
        Some(p) => Ok(p),
        None => {
            let mut p = config.require_out()?.to_path_buf();
            for part in default {
                p.push(part);
            }
            Ok(p)
        }
    }
}

fn restrict(set: EvaluationSet, lang_pairs: &[LangPair]) -> Result<EvaluationSet, CliError> {
    if lang_pairs.is_empty() {
        return Ok(set);
    }
    for lp in lang_pairs {
        if !set.keys().any(|k| &k.lang_pair == lp) {
            return Err(CliError::usage(format!(
                "language pair {lp} is not in the corpus"
            )));
        }
    }
    Ok(set.restrict_lang_pairs(lang_pairs))
}

fn load_bundle(explicit: Option<PathBuf>, config: &RunConfig) -> Result<EvaluationSet, CliError> {
    let dir = upstream(explicit, config, &[CORPUS_DIR])?;
    let paths = CorpusPaths::in_dir(&dir);
    for p in paths.all() {
        require(p, "corpus table")?;
    }
    restrict(load_corpus(&paths)?, &config.lang_pairs)
}

pub(super) fn dispatch(mut config: RunConfig, command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth { segments, systems } => {
            if let Some(n) = segments {
                config.synthetic.segments = n;
            }
            if let Some(n) = systems {
                config.synthetic.systems = n;
            }
            cmd_synth(&config)
        }
        Command::Ingest { corpus_dir } => {
            if corpus_dir.is_some() {
                config.corpus_dir = corpus_dir;
            }
            cmd_ingest(&config)
        }
        Command::Rankings {
            corpus,
            threshold,
            holdout,
            include_human,
        } => {
            if let Some(t) = threshold {
                config.rankings.threshold = t;
            }
            if let Some(h) = holdout {
                config.rankings.holdout = h;
            }
            if include_human {
                config.rankings.exclude_human = false;
            }
            cmd_rankings(&config, corpus)
        }
        Command::Train {
            rankings,
            epochs,
            learning_rate,
            batch_size,
            alpha,
            epsilon,
            disable_ce,
            disable_forward,
            disable_backward,
        } => {
            let t = &mut config.training;
            if let Some(v) = epochs {
                t.epochs = v;
            }
            if let Some(v) = learning_rate {
                t.learning_rate = v;
            }
            if let Some(v) = batch_size {
                t.batch_size = v;
            }
            if let Some(v) = alpha {
                t.alpha = v;
            }
            if let Some(v) = epsilon {
                t.epsilon = v;
            }
            t.enable_ce &= !disable_ce;
            t.enable_forward &= !disable_forward;
            t.enable_backward &= !disable_backward;
            cmd_train(&config, rankings)
        }
        Command::Score {
            corpus,
            model,
            metrics,
        } => {
            if !metrics.is_empty() {
                config.metrics = metrics;
            }
            if model.is_some() {
                config.model = model;
            }
            cmd_score(&config, corpus)
        }
        Command::Correlate {
            corpus,
            scores,
            resamples,
            alpha,
        } => {
            if let Some(n) = resamples {
                config.significance.n_resamples = n;
            }
            if let Some(a) = alpha {
                config.significance.alpha = a;
            }
            cmd_correlate(&config, corpus, scores)
        }
        Command::Robustness {
            corpus,
            model,
            metrics,
            resamples,
            alpha,
        } => {
            if !metrics.is_empty() {
                config.metrics = metrics;
            }
            if model.is_some() {
                config.model = model;
            }
            if let Some(n) = resamples {
                config.significance.n_resamples = n;
            }
            if let Some(a) = alpha {
                config.significance.alpha = a;
            }
            cmd_robustness(&config, corpus)
        }
    }
}

fn cmd_synth(config: &RunConfig) -> Result<(), CliError> {
    let seed = config.require_seed("synth")?;
    let out = config.require_out()?;
    let mut synth = config.synthetic.clone();
    synth.seed = seed;
    if !config.lang_pairs.is_empty() {
        synth.lang_pairs = config.lang_pairs.clone();
    }
    synth.validate().map_err(CliError::usage)?;
    let corpus = synthetic::generate(&synth);
    corpus.write(out)?;
    println!("wrote synthetic corpus to {}", out.display());
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub lang_pair: LangPair,
    pub domain: String,
    pub segments: usize,
    /// machine systems
    pub systems: usize,
    pub human_systems: usize,
    pub annotated_segments: usize,
    pub annotated_system_translations: usize,
    pub ratings: usize,
    pub references: usize,
    pub error_free_translations: usize,
}

/// Corpus counts per subset; `totals` sums the per-subset rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub totals: SubsetTotals,
    pub subsets: Vec<SubsetSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetTotals {
    pub segments: usize,
    pub systems: usize,
    pub human_systems: usize,
    pub annotated_segments: usize,
    pub annotated_system_translations: usize,
    pub ratings: usize,
    pub references: usize,
    pub error_free_translations: usize,
}

impl IngestSummary {
    pub fn of(set: &EvaluationSet) -> Self {
        let mut totals = SubsetTotals::default();
        let mut subsets = Vec::new();
        for (key, subset) in set.subsets() {
            let machine = subset.machine_systems().len();
            let row = SubsetSummary {
                lang_pair: key.lang_pair.clone(),
                domain: key.domain.clone(),
                segments: subset.segments().count(),
                systems: machine,
                human_systems: subset.systems().len() - machine,
                annotated_segments: subset.annotated_segment_count(),
                annotated_system_translations: subset.annotated_translation_count(),
                ratings: subset.ratings().len(),
                references: subset.references().count(),
                error_free_translations: subset
                    .error_free_translations()
                    .values()
                    .map(Vec::len)
                    .sum(),
            };
            totals.segments += row.segments;
            totals.systems += row.systems;
            totals.human_systems += row.human_systems;
            totals.annotated_segments += row.annotated_segments;
            totals.annotated_system_translations += row.annotated_system_translations;
            totals.ratings += row.ratings;
            totals.references += row.references;
            totals.error_free_translations += row.error_free_translations;
            subsets.push(row);
        }
        IngestSummary { totals, subsets }
    }
}

fn cmd_ingest(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let out = config.require_out()?;
    let dir = config.corpus_dir.as_deref().ok_or_else(|| {
        CliError::usage("no corpus given (--corpus-dir or \"corpus_dir\" in the config)")
    })?;
    let paths = CorpusPaths::in_dir(dir);
    for p in paths.all() {
        require(p, "corpus table")?;
    }
    let set = restrict(load_corpus(&paths)?, &config.lang_pairs)?;
    if set.is_empty() {
        return Err(CliError::data(format!(
            "corpus in {} is empty",
            dir.display()
        )));
    }
    let bundle = out.join(CORPUS_DIR);
    set.write_tsv(&bundle)?;
    let summary = IngestSummary::of(&set);
    write_json(&bundle.join(SUMMARY_FILE), &summary)?;
    let t = &summary.totals;
    println!(
        "{} segments, {} systems, {} annotated system translations, {} ratings",
        t.segments, t.systems, t.annotated_system_translations, t.ratings
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangPairSplit {
    pub lang_pair: LangPair,
    pub train: usize,
    pub validation: usize,
    pub clamped: bool,
}

/// Provenance of a rankings directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingsManifest {
    pub seed: u64,
    pub threshold: f64,
    pub holdout: usize,
    pub exclude_human: bool,
    pub severity_weights: SeverityWeights,
    pub rankings: usize,
    pub diagnostics: DeriveDiagnostics,
    pub splits: Vec<LangPairSplit>,
}

fn cmd_rankings(config: &RunConfig, corpus: Option<PathBuf>) -> Result<(), CliError> {
    config.validate()?;
    let seed = config.require_seed("rankings")?;
    let out = config.require_out()?.join(RANKINGS_DIR);
    let set = load_bundle(corpus, config)?;
    if set.is_empty() {
        return Err(CliError::data("corpus is empty"));
    }
    let options = DeriveOptions {
        threshold: config.rankings.threshold,
        exclude_human: config.rankings.exclude_human,
        weights: config.severity_weights,
    };
    let derived = derive_rankings(&set, &options);
    if derived.rankings.is_empty() {
        log::warn!("no ranking pairs could be derived from the corpus");
    }
    let total = derived.rankings.len();
    let splits = split_by_lang_pair(derived.rankings, config.rankings.holdout, seed);

    create_dir(&out)?;
    let train: Vec<RelativeRanking> = splits
        .values()
        .flat_map(|d| d.train.iter().cloned())
        .collect();
    let validation: Vec<RelativeRanking> = splits
        .values()
        .flat_map(|d| d.validation.iter().cloned())
        .collect();
    write_rankings(&out.join(TRAIN_FILE), &train)?;
    write_rankings(&out.join(VALIDATION_FILE), &validation)?;
    let manifest = RankingsManifest {
        seed,
        threshold: options.threshold,
        holdout: config.rankings.holdout,
        exclude_human: options.exclude_human,
        severity_weights: options.weights,
        rankings: total,
        diagnostics: derived.diagnostics,
        splits: splits
            .iter()
            .map(|(lp, d)| LangPairSplit {
                lang_pair: lp.clone(),
                train: d.train.len(),
                validation: d.validation.len(),
                clamped: d.provenance.clamped,
            })
            .collect(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    println!(
        "{total} rankings ({} train, {} validation)",
        train.len(),
        validation.len()
    );
    Ok(())
}

fn cmd_train(config: &RunConfig, rankings: Option<PathBuf>) -> Result<(), CliError> {
    config.validate()?;
    let seed = config.require_seed("train")?;
    let out = config.require_out()?.join(MODEL_DIR);
    let mut training = config.training.clone();
    training.seed = seed;
    training.validate()?;

    let dir = upstream(rankings, config, &[RANKINGS_DIR])?;
    let (train_path, val_path, manifest_path) = (
        dir.join(TRAIN_FILE),
        dir.join(VALIDATION_FILE),
        dir.join(MANIFEST_FILE),
    );
    require(&train_path, "training rankings")?;
    require(&val_path, "validation rankings")?;
    require(&manifest_path, "rankings manifest")?;
    let manifest: RankingsManifest = read_json(&manifest_path)?;

    let keep = |r: &RelativeRanking| {
        config.lang_pairs.is_empty() || config.lang_pairs.contains(&r.lang_pair)
    };
    let mut datasets: BTreeMap<LangPair, RankingDataset> = BTreeMap::new();
    let dataset = |lp: &LangPair| -> RankingDataset {
        RankingDataset {
            train: Vec::new(),
            validation: Vec::new(),
            provenance: SplitProvenance {
                seed: manifest.seed,
                holdout_requested: manifest.holdout,
                clamped: manifest
                    .splits
                    .iter()
                    .any(|s| &s.lang_pair == lp && s.clamped),
            },
        }
    };
    for r in read_rankings(&train_path)?.into_iter().filter(keep) {
        let lp = r.lang_pair.clone();
        datasets
            .entry(lp.clone())
            .or_insert_with(|| dataset(&lp))
            .train
            .push(r);
    }
    for r in read_rankings(&val_path)?.into_iter().filter(keep) {
        let lp = r.lang_pair.clone();
        datasets
            .entry(lp.clone())
            .or_insert_with(|| dataset(&lp))
            .validation
            .push(r);
    }

    let tokenizer = Tokenizer::default();
    let sentences = datasets.values().flat_map(|d| &d.train).flat_map(|r| {
        [&r.src, &r.reference, &r.sys_plus, &r.sys_minus].map(|t| tokenizer.tokenize(t))
    });
    let scorer = ToyScorer::fit(sentences);
    let (scorer, report) = train(scorer, &datasets, &tokenizer, &training)?;

    create_dir(&out)?;
    write_file(&out.join(SCORER_FILE), &scorer.to_json())?;
    write_json(&out.join(TRAINING_REPORT_FILE), &report)?;
    let last = report.validation.last().copied().unwrap_or_default();
    println!(
        "{} steps; validation accuracy forward {} backward {}",
        report.steps.len(),
        last.forward_accuracy
            .map_or("n/a".into(), |v| format!("{v:.4}")),
        last.backward_accuracy
            .map_or("n/a".into(), |v| format!("{v:.4}")),
    );
    Ok(())
}

/// Scorer with default weights over every sentence in the corpus.
fn base_scorer(set: &EvaluationSet, tokenizer: &Tokenizer) -> ToyScorer {
    let mut sentences = Vec::new();
    for (_, subset) in set.subsets() {
        sentences.extend(
            subset
                .segments()
                .map(|s| tokenizer.tokenize(&s.source_text)),
        );
        sentences.extend(subset.references().map(|r| tokenizer.tokenize(&r.text)));
        sentences.extend(subset.translations().map(|t| tokenizer.tokenize(&t.text)));
    }
    ToyScorer::fit(sentences)
}

/// Instantiates metrics by name: `bleu`, `chrf`, `prism` (untrained scorer
/// fitted to the corpus) and `prism-ft` (the scorer stored at `model`).
pub fn build_metrics(
    names: &[String],
    set: &EvaluationSet,
    model: Option<&Path>,
) -> Result<Vec<Box<dyn Metric>>, CliError> {
    let tokenizer = Tokenizer::default();
    let mut metrics: Vec<Box<dyn Metric>> = Vec::new();
    for name in names {
        if metrics.iter().any(|m| m.id() == name) {
            return Err(CliError::usage(format!("metric `{name}` listed twice")));
        }
        let metric: Box<dyn Metric> = match name.as_str() {
            "bleu" => Box::new(BleuMetric { tokenizer }),
            "chrf" => Box::new(ChrfMetric),
            "prism" => Box::new(PrismMetric::new(
                "prism",
                base_scorer(set, &tokenizer),
                tokenizer,
            )),
            "prism-ft" => {
                let path = model
                    .ok_or_else(|| CliError::usage("`prism-ft` needs a trained model (--model)"))?;
                require(path, "trained model")?;
                Box::new(PrismMetric::new(
                    "prism-ft",
                    ToyScorer::load(path)?,
                    tokenizer,
                ))
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown metric `{other}` (expected bleu, chrf, prism or prism-ft)"
                )))
            }
        };
        metrics.push(metric);
    }
    Ok(metrics)
}

fn model_path(config: &RunConfig) -> Option<PathBuf> {
    config.model.clone().or_else(|| {
        config
            .out
            .as_ref()
            .map(|o| o.join(MODEL_DIR).join(SCORER_FILE))
    })
}

fn cmd_score(config: &RunConfig, corpus: Option<PathBuf>) -> Result<(), CliError> {
    config.validate()?;
    let out = config.require_out()?.join(SCORES_DIR);
    let set = load_bundle(corpus, config)?;
    let metrics = build_metrics(&config.metrics, &set, model_path(config).as_deref())?;

    let mut jobs = Vec::new();
    for (key, subset) in set.subsets() {
        for t in subset.translations().filter(|t| !t.is_human) {
            if let Some(r) = subset.standard_reference(&t.seg_id) {
                jobs.push((key, t, r));
            }
        }
    }
    let values: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|(_, t, r)| metrics.iter().map(|m| m.score(&t.text, &r.text)).collect())
        .collect();
    let mut scores = Vec::with_capacity(jobs.len() * metrics.len());
    for (m, metric) in metrics.iter().enumerate() {
        for ((key, t, _), v) in jobs.iter().zip(&values) {
            if !v[m].is_finite() {
                return Err(CliError::numeric(format!(
                    "{} produced {} for {}/{} in {key}",
                    metric.id(),
                    v[m],
                    t.system_id,
                    t.seg_id
                )));
            }
            scores.push(MetricScore {
                metric_id: metric.id().to_string(),
                lang_pair: key.lang_pair.clone(),
                domain: key.domain.clone(),
                system_id: t.system_id.clone(),
                seg_id: t.seg_id.clone(),
                value: v[m],
            });
        }
    }
    create_dir(&out)?;
    write_metric_scores(&out.join(SCORES_FILE), &scores)?;
    println!("{} scores for {} metrics", scores.len(), metrics.len());
    Ok(())
}

fn cmd_correlate(
    config: &RunConfig,
    corpus: Option<PathBuf>,
    scores: Option<PathBuf>,
) -> Result<(), CliError> {
    config.validate()?;
    let seed = config.require_seed("correlate")?;
    let out = config.require_out()?.join(CORRELATION_DIR);
    let set = load_bundle(corpus, config)?;
    let scores_path = upstream(scores, config, &[SCORES_DIR, SCORES_FILE])?;
    require(&scores_path, "metric scores")?;
    let scores = read_metric_scores(&scores_path)?;
    let options = SignificanceOptions {
        n_resamples: config.significance.n_resamples,
        alpha: config.significance.alpha,
        seed,
    };
    let report = correlation_report(&set, &scores, &config.severity_weights, &options)?;
    create_dir(&out)?;
    write_json(&out.join(REPORT_JSON), &report)?;
    let text = report.to_text();
    write_file(&out.join(REPORT_TEXT), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_robustness(config: &RunConfig, corpus: Option<PathBuf>) -> Result<(), CliError> {
    config.validate()?;
    let seed = config.require_seed("robustness")?;
    let out = config.require_out()?.join(ROBUSTNESS_DIR);
    let set = load_bundle(corpus, config)?;
    let metrics = build_metrics(&config.metrics, &set, model_path(config).as_deref())?;
    let refs: Vec<&dyn Metric> = metrics.iter().map(|m| m.as_ref()).collect();
    let options = RobustnessOptions {
        weights: config.severity_weights,
        seed,
        n_resamples: config.significance.n_resamples,
        alpha: config.significance.alpha,
        segment_level: true,
        system_level: true,
    };
    let report = robustness_report(&set, &refs, &options)?;
    create_dir(&out)?;
    write_json(&out.join(REPORT_JSON), &report)?;
    let text = report.to_text();
    write_file(&out.join(REPORT_TEXT), &text)?;
    print!("{text}");
    Ok(())
}
