use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::corpus::{LangPair, SeverityWeights};
use crate::metaeval::{DEFAULT_ALPHA, DEFAULT_RESAMPLES};
use crate::rankings::{DEFAULT_HOLDOUT, DEFAULT_THRESHOLD};
use crate::synthetic::SyntheticConfig;
use crate::training::TrainingConfig;

pub const DEFAULT_METRICS: [&str; 3] = ["bleu", "chrf", "prism"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankingsConfig {
    pub threshold: f64,
    pub holdout: usize,
    pub exclude_human: bool,
}

impl Default for RankingsConfig {
    fn default() -> Self {
        RankingsConfig {
            threshold: DEFAULT_THRESHOLD,
            holdout: DEFAULT_HOLDOUT,
            exclude_human: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignificanceConfig {
    pub n_resamples: usize,
    pub alpha: f64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig {
            n_resamples: DEFAULT_RESAMPLES,
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// Settings shared by all subcommands, read from `--config` and then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// directory holding the four raw corpus tables (for `ingest`)
    pub corpus_dir: Option<PathBuf>,
    /// empty means every language pair in the corpus
    pub lang_pairs: Vec<LangPair>,
    pub metrics: Vec<String>,
    pub training: TrainingConfig,
    pub rankings: RankingsConfig,
    pub significance: SignificanceConfig,
    pub severity_weights: SeverityWeights,
    pub synthetic: SyntheticConfig,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_dir: None,
            lang_pairs: Vec::new(),
            metrics: DEFAULT_METRICS.iter().map(|m| m.to_string()).collect(),
            training: TrainingConfig::default(),
            rankings: RankingsConfig::default(),
            significance: SignificanceConfig::default(),
            severity_weights: SeverityWeights::default(),
            synthetic: SyntheticConfig::default(),
            seed: None,
            out: None,
            model: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn require_seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::usage(format!(
                "`{command}` needs a seed (--seed or \"seed\" in the config)"
            ))
        })
    }

    pub fn require_out(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| {
            CliError::usage("an output directory is required (--out or \"out\" in the config)")
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let w = &self.severity_weights;
        if [w.major, w.minor, w.minor_punctuation]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(CliError::usage("severity weights must be finite and >= 0"));
        }
        if !(self.rankings.threshold.is_finite() && self.rankings.threshold >= 0.0) {
            return Err(CliError::usage(
                "rankings.threshold must be finite and >= 0",
            ));
        }
        if self.significance.n_resamples == 0 {
            return Err(CliError::usage("significance.n_resamples must be >= 1"));
        }
        if !(self.significance.alpha > 0.0 && self.significance.alpha < 1.0) {
            return Err(CliError::usage("significance.alpha must lie in (0, 1)"));
        }
        if self.metrics.is_empty() {
            return Err(CliError::usage("at least one metric is required"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(c.require_seed("train").is_err());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }

    #[test]
    fn nested_partial_sections() {
        let c: RunConfig = serde_json::from_str(
            r#"{"seed": 4, "rankings": {"holdout": 10}, "training": {"epochs": 2}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.rankings.holdout, 10);
        assert_eq!(c.rankings.threshold, DEFAULT_THRESHOLD);
        assert_eq!(c.training.epochs, 2);
    }
}
