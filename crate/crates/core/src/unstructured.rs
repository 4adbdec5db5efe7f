//! Topic-word index over the document base.
//!
//! Per domain: fit TF-IDF over the domain's documents, take each document's
//! three highest-scoring words as candidates, score every candidate word by
//! its cumulative average TF-IDF (sum of its candidate scores across the
//! domain divided by the domain's entity count) and keep the candidates at
//! or above the domain threshold. A document whose candidates are all
//! filtered keeps its single best one, so every document ends up with one
//! to three topic words.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::corpus::{Document, DocumentBase, KnowledgeDomain};
use crate::error::{Error, Result};

/// Index file format version written by [`save_index`].
pub const INDEX_VERSION: &str = "1";

/// Maximum topic candidates per document.
pub const MAX_CANDIDATES: usize = 3;

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Lowercasing tokenizer that splits on runs of non-alphanumeric characters
/// and drops stopwords.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tokenizer {
    stopwords: BTreeSet<String>,
}

impl Tokenizer {
    pub fn without_stopwords() -> Self {
        Self::default()
    }

    /// The bundled English stopword list.
    pub fn english() -> Self {
        Self::from_stopword_list(ENGLISH_STOPWORDS)
    }

    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            stopwords: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn from_stopword_list(text: &str) -> Self {
        Self::with_stopwords(text.lines().filter(|l| !l.trim_start().starts_with('#')))
    }

    pub fn from_stopword_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_stopword_list(&raw))
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }
}

pub fn tokenize(text: &str, tokenizer: &Tokenizer) -> Vec<String> {
    tokenizer.tokenize(text)
}

/// Term weighting. `Raw` is `tf * ln(N / df)` with raw counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TfIdfVariant {
    #[default]
    Raw,
    /// `(1 + ln tf) * ln(N / df)`
    Sublinear,
    /// `tf * (ln((1 + N) / (1 + df)) + 1)`
    Smoothed,
}

impl TfIdfVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            TfIdfVariant::Raw => "raw",
            TfIdfVariant::Sublinear => "sublinear",
            TfIdfVariant::Smoothed => "smoothed",
        }
    }

    fn weight(self, tf: usize, df: usize, n: usize) -> f64 {
        if tf == 0 || df == 0 {
            return 0.0;
        }
        match self {
            TfIdfVariant::Raw => tf as f64 * (n as f64 / df as f64).ln(),
            TfIdfVariant::Sublinear => (1.0 + (tf as f64).ln()) * (n as f64 / df as f64).ln(),
            TfIdfVariant::Smoothed => tf as f64 * (((1 + n) as f64 / (1 + df) as f64).ln() + 1.0),
        }
    }

    fn idf(self, df: usize, n: usize) -> f64 {
        if df == 0 {
            return 0.0;
        }
        match self {
            TfIdfVariant::Raw | TfIdfVariant::Sublinear => (n as f64 / df as f64).ln(),
            TfIdfVariant::Smoothed => ((1 + n) as f64 / (1 + df) as f64).ln() + 1.0,
        }
    }
}

impl FromStr for TfIdfVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(TfIdfVariant::Raw),
            "sublinear" => Ok(TfIdfVariant::Sublinear),
            "smoothed" => Ok(TfIdfVariant::Smoothed),
            other => Err(Error::Config(format!("unknown tf-idf variant `{other}`"))),
        }
    }
}

/// Document frequencies and per-document term counts over one document set.
#[derive(Clone, Debug)]
pub struct TfIdfModel {
    domain: Option<KnowledgeDomain>,
    variant: TfIdfVariant,
    n_docs: usize,
    df: BTreeMap<String, usize>,
    tf: BTreeMap<String, BTreeMap<String, usize>>,
}

impl TfIdfModel {
    /// Fits over `docs`. A document with no tokens after stopword removal is
    /// re-tokenized without stopwords.
    pub fn fit<'a>(
        docs: impl IntoIterator<Item = &'a Document>,
        tokenizer: &Tokenizer,
        variant: TfIdfVariant,
    ) -> Result<Self> {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut tf: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut domains = BTreeSet::new();
        for doc in docs {
            domains.insert(doc.domain);
            let mut tokens = tokenizer.tokenize(&doc.body);
            if tokens.is_empty() {
                tokens = Tokenizer::without_stopwords().tokenize(&doc.body);
            }
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_default() += 1;
            }
            for word in counts.keys() {
                *df.entry(word.clone()).or_default() += 1;
            }
            if tf.insert(doc.id.clone(), counts).is_some() {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        if tf.is_empty() {
            return Err(Error::EmptyCorpus("tf-idf model".into()));
        }
        let domain = match domains.len() {
            1 => domains.into_iter().next(),
            _ => None,
        };
        Ok(Self {
            domain,
            variant,
            n_docs: tf.len(),
            df,
            tf,
        })
    }

    /// Fits over the documents of one domain.
    pub fn fit_domain(
        base: &DocumentBase,
        domain: KnowledgeDomain,
        tokenizer: &Tokenizer,
        variant: TfIdfVariant,
    ) -> Result<Self> {
        let docs = base.domain_documents(domain);
        if docs.is_empty() {
            return Err(Error::EmptyCorpus(format!("domain `{domain}`")));
        }
        Self::fit(docs, tokenizer, variant)
    }

    /// The domain all fitted documents share, if they share one.
    pub fn domain(&self) -> Option<KnowledgeDomain> {
        self.domain
    }

    pub fn variant(&self) -> TfIdfVariant {
        self.variant
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, word: &str) -> usize {
        self.df.get(word).copied().unwrap_or(0)
    }

    pub fn idf(&self, word: &str) -> f64 {
        self.variant.idf(self.df(word), self.n_docs)
    }

    /// Weight of a term occurring `tf` times, using this model's statistics.
    pub fn weight(&self, word: &str, tf: usize) -> f64 {
        self.variant.weight(tf, self.df(word), self.n_docs)
    }

    pub fn term_counts(&self, doc_id: &str) -> Option<&BTreeMap<String, usize>> {
        self.tf.get(doc_id)
    }

    /// Document ids in order.
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.tf.keys().map(String::as_str)
    }

    /// TF-IDF of `word` in document `doc_id`; zero when absent.
    pub fn tfidf(&self, word: &str, doc_id: &str) -> f64 {
        let tf = self
            .tf
            .get(doc_id)
            .and_then(|c| c.get(word))
            .copied()
            .unwrap_or(0);
        self.weight(word, tf)
    }
}

pub fn fit_tfidf<'a>(
    docs: impl IntoIterator<Item = &'a Document>,
    tokenizer: &Tokenizer,
) -> Result<TfIdfModel> {
    TfIdfModel::fit(docs, tokenizer, TfIdfVariant::Raw)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicCandidate {
    pub word: String,
    pub tfidf: f64,
    pub doc_id: String,
}

/// Up to three highest-TF-IDF words of a document; ties go to the
/// lexicographically smaller word.
pub fn top_candidates(model: &TfIdfModel, doc_id: &str) -> Vec<TopicCandidate> {
    let Some(counts) = model.term_counts(doc_id) else {
        return Vec::new();
    };
    let mut scored: Vec<(&str, f64)> = counts
        .iter()
        .map(|(w, &tf)| (w.as_str(), model.weight(w, tf)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored
        .into_iter()
        .take(MAX_CANDIDATES)
        .map(|(word, tfidf)| TopicCandidate {
            word: word.to_string(),
            tfidf,
            doc_id: doc_id.to_string(),
        })
        .collect()
}

/// Cumulative average TF-IDF: the sum of `word`'s TF-IDF over each of its
/// occurrences in `candidates`, divided by the domain's entity count.
///
/// # Panics
///
/// If `entity_count` is zero.
pub fn ca_tfidf(word: &str, candidates: &[TopicCandidate], entity_count: usize) -> f64 {
    assert!(entity_count >= 1, "entity count must be positive");
    let sum = candidates
        .iter()
        .filter(|c| c.word == word)
        .fold(0.0, |acc, c| acc + c.tfidf);
    sum / entity_count as f64
}

/// CA-TF-IDF filtering thresholds per domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainThresholds {
    pub restaurant: f64,
    pub hotel: f64,
    pub taxi: f64,
    pub train: f64,
}

impl Default for DomainThresholds {
    fn default() -> Self {
        Self {
            restaurant: 2.3,
            hotel: 2.7,
            taxi: 6.9,
            train: 7.3,
        }
    }
}

impl DomainThresholds {
    pub fn new(restaurant: f64, hotel: f64, taxi: f64, train: f64) -> Result<Self> {
        let t = Self {
            restaurant,
            hotel,
            taxi,
            train,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for d in KnowledgeDomain::ALL {
            let v = self.get(d);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "threshold for {d} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, domain: KnowledgeDomain) -> f64 {
        match domain {
            KnowledgeDomain::Restaurant => self.restaurant,
            KnowledgeDomain::Hotel => self.hotel,
            KnowledgeDomain::Taxi => self.taxi,
            KnowledgeDomain::Train => self.train,
        }
    }

    pub fn set(&mut self, domain: KnowledgeDomain, value: f64) {
        match domain {
            KnowledgeDomain::Restaurant => self.restaurant = value,
            KnowledgeDomain::Hotel => self.hotel = value,
            KnowledgeDomain::Taxi => self.taxi = value,
            KnowledgeDomain::Train => self.train = value,
        }
    }
}

impl FromStr for DomainThresholds {
    type Err = Error;

    /// `restaurant,hotel,taxi,train`, e.g. `2.3,2.7,6.9,7.3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!(
                "expected 4 comma-separated thresholds, got `{s}`"
            )));
        }
        let mut values = [0.0; 4];
        for (v, p) in values.iter_mut().zip(&parts) {
            *v = p
                .parse()
                .map_err(|_| Error::Config(format!("bad threshold `{p}`")))?;
        }
        Self::new(values[0], values[1], values[2], values[3])
    }
}

impl fmt::Display for DomainThresholds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.restaurant, self.hotel, self.taxi, self.train
        )
    }
}

/// Everything that determines the content of a built index.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexConfig {
    pub tokenizer: Tokenizer,
    pub variant: TfIdfVariant,
    pub thresholds: DomainThresholds,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::english(),
            variant: TfIdfVariant::Raw,
            thresholds: DomainThresholds::default(),
        }
    }
}

impl IndexConfig {
    /// SHA-256 over a canonical description of the config.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::json!({
            "tokenizer": "alnum-lowercase",
            "stopwords": self.tokenizer.stopwords(),
            "tfidf": self.variant.as_str(),
            "candidates": MAX_CANDIDATES,
            "thresholds": self.thresholds,
            "floor": "keep-best",
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

/// Intermediate results of topic extraction for one domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainExtraction {
    pub domain: KnowledgeDomain,
    pub entity_count: usize,
    /// Candidates per document id, in rank order.
    pub candidates: BTreeMap<String, Vec<TopicCandidate>>,
    /// CA-TF-IDF of every candidate word.
    pub ca_scores: BTreeMap<String, f64>,
    /// Final topic words per document id.
    pub topics: BTreeMap<String, Vec<String>>,
}

/// Runs topic extraction for one domain.
pub fn extract_domain_topics(
    base: &DocumentBase,
    domain: KnowledgeDomain,
    config: &IndexConfig,
) -> Result<DomainExtraction> {
    let model = TfIdfModel::fit_domain(base, domain, &config.tokenizer, config.variant)?;
    let entity_count = base.entity_count(domain).max(1);

    let candidates: BTreeMap<String, Vec<TopicCandidate>> = model
        .doc_ids()
        .map(|id| (id.to_string(), top_candidates(&model, id)))
        .collect();
    for (id, c) in &candidates {
        if c.is_empty() {
            return Err(Error::NoTokens(id.clone()));
        }
    }

    // documents in id order, candidates in rank order
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for c in candidates.values().flatten() {
        let acc = sums.entry(c.word.clone()).or_insert(0.0);
        *acc += c.tfidf;
    }
    let ca_scores: BTreeMap<String, f64> = sums
        .into_iter()
        .map(|(w, s)| (w, s / entity_count as f64))
        .collect();

    let threshold = config.thresholds.get(domain);
    let topics = candidates
        .iter()
        .map(|(id, cands)| {
            let score = |c: &TopicCandidate| ca_scores[&c.word];
            let mut kept: Vec<&TopicCandidate> =
                cands.iter().filter(|c| score(c) >= threshold).collect();
            if kept.is_empty() {
                let best = cands
                    .iter()
                    .reduce(|best, c| if score(c) > score(best) { c } else { best })
                    .expect("non-empty candidates");
                kept.push(best);
            }
            kept.sort_by(|a, b| {
                score(b)
                    .total_cmp(&score(a))
                    .then_with(|| a.word.cmp(&b.word))
            });
            (
                id.clone(),
                kept.into_iter().map(|c| c.word.clone()).collect(),
            )
        })
        .collect();

    Ok(DomainExtraction {
        domain,
        entity_count,
        candidates,
        ca_scores,
        topics,
    })
}

/// Document id -> topic words, plus what produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicIndex {
    pub version: String,
    pub config_fingerprint: String,
    pub thresholds: DomainThresholds,
    pub topics: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<Value>,
}

impl TopicIndex {
    pub fn topics(&self, doc_id: &str) -> Option<&[String]> {
        self.topics.get(doc_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Whether the index was built with `config`; logs a warning if not.
    pub fn check_config(&self, config: &IndexConfig) -> bool {
        let expected = config.fingerprint();
        if self.config_fingerprint != expected {
            log::warn!(
                "index was built with config {} but the current config is {}",
                self.config_fingerprint,
                expected
            );
            return false;
        }
        true
    }

    /// Pretty JSON with a trailing newline; byte-stable for equal indexes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("index serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(raw: &str, context: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(raw).map_err(|e| Error::parse(context, e))?;
        let version = value.get("version").and_then(Value::as_str).unwrap_or("");
        if version != INDEX_VERSION {
            return Err(Error::Version {
                found: version.to_string(),
                expected: INDEX_VERSION.to_string(),
            });
        }
        serde_json::from_value(value).map_err(|e| Error::parse(context, e))
    }
}

/// Builds the topic index over every domain present in the base.
pub fn build_index(base: &DocumentBase, config: &IndexConfig) -> Result<TopicIndex> {
    config.thresholds.validate()?;
    if base.is_empty() {
        return Err(Error::EmptyCorpus("document base".into()));
    }
    let domains: Vec<KnowledgeDomain> = base.domains().into_iter().collect();
    let extractions = domains
        .par_iter()
        .map(|&d| extract_domain_topics(base, d, config))
        .collect::<Result<Vec<_>>>()?;
    let topics = extractions.into_iter().flat_map(|e| e.topics).collect();
    Ok(TopicIndex {
        version: INDEX_VERSION.to_string(),
        config_fingerprint: config.fingerprint(),
        thresholds: config.thresholds,
        topics,
        manifest: None,
    })
}

pub fn save_index(index: &TopicIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, index.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<TopicIndex> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TopicIndex::from_json_str(&raw, &path.display().to_string())
}
