//! TOML run configuration. Every section is optional; unknown keys are
//! rejected. Command-line flags override the file, and the effective
//! configuration is echoed into every output.

use std::path::{Path, PathBuf};

use dialkm_core::metrics::ResponseMode;
use dialkm_core::retrieval::{DEFAULT_BM25_B, DEFAULT_BM25_K1, DEFAULT_ENTITY_THRESHOLD};
use dialkm_core::unstructured::{DomainThresholds, TfIdfVariant};
use dialkm_core::KnowledgeDomain;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub paths: Paths,
    pub index: IndexSection,
    pub retrieval: RetrievalSection,
    pub metrics: MetricsSection,
    /// Reserved; no component is randomized.
    pub seed: Option<u64>,
}

/// Input files. Output paths are per-invocation flags and stay out of the
/// config so that they do not affect its fingerprint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub docs: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub ontology: Option<PathBuf>,
    pub canon_map: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexSection {
    pub thresholds: Thresholds,
    pub tfidf: TfIdfVariant,
}

impl Default for IndexSection {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            tfidf: TfIdfVariant::Raw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub restaurant: f64,
    pub hotel: f64,
    pub taxi: f64,
    pub train: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        DomainThresholds::default().into()
    }
}

impl From<DomainThresholds> for Thresholds {
    fn from(t: DomainThresholds) -> Self {
        Self {
            restaurant: t.restaurant,
            hotel: t.hotel,
            taxi: t.taxi,
            train: t.train,
        }
    }
}

impl Thresholds {
    pub fn to_domain(self) -> Result<DomainThresholds, CliError> {
        Ok(DomainThresholds::new(
            self.restaurant,
            self.hotel,
            self.taxi,
            self.train,
        )?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Topic,
    Tfidf,
    Bm25,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalSection {
    pub method: Method,
    pub k: usize,
    pub k1: f64,
    pub b: f64,
    pub entity_threshold: f64,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        Self {
            method: Method::Topic,
            k: 5,
            k1: DEFAULT_BM25_K1,
            b: DEFAULT_BM25_B,
            entity_threshold: DEFAULT_ENTITY_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub mode: ResponseMode,
    pub bleu_smoothing: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            mode: ResponseMode::Delex,
            bleu_smoothing: true,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
        Self::from_toml(&raw)
            .map_err(|e| CliError::new("config", format!("{}: {}", path.display(), e.message)))
    }

    pub fn from_toml(raw: &str) -> Result<Self, CliError> {
        let config: Config =
            toml::from_str(raw).map_err(|e| CliError::new("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.index.thresholds.to_domain()?;
        let r = &self.retrieval;
        if r.k == 0 {
            return Err(CliError::new("config", "retrieval.k must be at least 1"));
        }
        if !(r.k1 >= 0.0 && (0.0..=1.0).contains(&r.b)) {
            return Err(CliError::new(
                "config",
                "retrieval.k1 must be >= 0 and retrieval.b in [0, 1]",
            ));
        }
        if !(0.0..=1.0).contains(&r.entity_threshold) {
            return Err(CliError::new(
                "config",
                "retrieval.entity_threshold must be in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn set_threshold(&mut self, domain: KnowledgeDomain, value: f64) {
        let t = &mut self.index.thresholds;
        match domain {
            KnowledgeDomain::Restaurant => t.restaurant = value,
            KnowledgeDomain::Hotel => t.hotel = value,
            KnowledgeDomain::Taxi => t.taxi = value,
            KnowledgeDomain::Train => t.train = value,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
