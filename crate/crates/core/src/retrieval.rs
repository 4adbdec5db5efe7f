//! Document retrieval from the extended belief state, plus TF-IDF and BM25
//! baselines over the dialog context.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::belief::{ExtendedBeliefState, Topic, NO_ENTITY};
use crate::corpus::{Document, DocumentBase, KnowledgeDomain};
use crate::error::Result;
use crate::text::normalize_text;
use crate::unstructured::{TfIdfModel, TfIdfVariant, Tokenizer, TopicIndex};

/// Minimum similarity for the fuzzy entity fallback.
pub const DEFAULT_ENTITY_THRESHOLD: f64 = 0.8;
pub const DEFAULT_BM25_K1: f64 = 1.5;
pub const DEFAULT_BM25_B: f64 = 0.75;

/// Length of the longest common subsequence of two char sequences.
fn lcs_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut row = vec![0usize; b.len() + 1];
    for &ca in a {
        let mut diag = 0;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if ca == cb { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Insertions plus deletions needed to turn `a` into `b`.
pub fn indel_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    a.len() + b.len() - 2 * lcs_chars(&a, &b)
}

/// Indel-normalized similarity `1 - indel(a, b) / (|a| + |b|)` over chars;
/// 1.0 for two empty strings.
pub fn fuzzy_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * lcs_chars(&a, &b) as f64 / total as f64
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RetrievalQuery {
    pub domain: Option<KnowledgeDomain>,
    pub entity: Option<String>,
    pub topic: Topic,
}

impl RetrievalQuery {
    /// Domain and entity from the `ruk` triple, topic from the state. The
    /// `none` entity placeholder maps to no entity.
    pub fn from_state(state: &ExtendedBeliefState) -> Self {
        let Some(ruk) = state.ruk() else {
            return Self {
                topic: state.topic().clone(),
                ..Self::default()
            };
        };
        let entity = normalize_text(&ruk.value);
        Self {
            domain: ruk.domain.parse().ok(),
            entity: (!entity.is_empty() && entity != NO_ENTITY).then_some(entity),
            topic: state.topic().clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Documents by non-increasing score, ties by ascending id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedRetrieval {
    pub best: Option<String>,
    pub ranking: Vec<ScoredDoc>,
}

impl RankedRetrieval {
    pub fn none() -> Self {
        Self::default()
    }

    /// Sorts and optionally truncates to the top `k`.
    pub fn from_scores(scores: impl IntoIterator<Item = (String, f64)>, k: Option<usize>) -> Self {
        let mut ranking: Vec<ScoredDoc> = scores
            .into_iter()
            .map(|(doc_id, score)| ScoredDoc { doc_id, score })
            .collect();
        ranking.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        if let Some(k) = k {
            ranking.truncate(k);
        }
        Self {
            best: ranking.first().map(|d| d.doc_id.clone()),
            ranking,
        }
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.ranking.iter().map(|d| d.doc_id.clone()).collect()
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.ranking.truncate(k);
        self
    }
}

/// Candidate documents of the query's domain and entity. An entity with no
/// exact (normalized) match falls back to the most similar entity at or
/// above `entity_threshold`, then to the whole domain.
pub fn locate_documents_with<'a>(
    base: &'a DocumentBase,
    query: &RetrievalQuery,
    entity_threshold: f64,
) -> Vec<&'a Document> {
    let Some(domain) = query.domain else {
        return Vec::new();
    };
    let Some(entity) = query.entity.as_deref() else {
        return base.domain_documents(domain);
    };
    let exact = base.entity_documents(domain, entity);
    if !exact.is_empty() {
        return exact;
    }
    let best = base
        .entities(domain)
        .into_iter()
        .map(|e| (e, fuzzy_ratio(entity, e)))
        .filter(|(_, r)| *r >= entity_threshold)
        // entities come sorted, so the first maximum is the smallest name
        .fold(None::<(&str, f64)>, |best, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        });
    match best {
        Some((name, _)) => base.entity_documents(domain, name),
        None => base.domain_documents(domain),
    }
}

pub fn locate_documents<'a>(base: &'a DocumentBase, query: &RetrievalQuery) -> Vec<&'a Document> {
    locate_documents_with(base, query, DEFAULT_ENTITY_THRESHOLD)
}

/// Scores each located document by the best fuzzy match between the
/// query topic (words joined by spaces) and one of its index topic words.
pub fn topic_match_retrieve_with(
    index: &TopicIndex,
    base: &DocumentBase,
    query: &RetrievalQuery,
    entity_threshold: f64,
) -> RankedRetrieval {
    if query.domain.is_none() || query.topic.is_empty() {
        return RankedRetrieval::none();
    }
    let topic = query.topic.joined();
    let scores = locate_documents_with(base, query, entity_threshold)
        .into_iter()
        .map(|doc| {
            let score = index
                .topics(&doc.id)
                .unwrap_or_default()
                .iter()
                .map(|w| fuzzy_ratio(&topic, w))
                .fold(0.0, f64::max);
            (doc.id.clone(), score)
        });
    RankedRetrieval::from_scores(scores, None)
}

pub fn topic_match_retrieve(
    index: &TopicIndex,
    base: &DocumentBase,
    query: &RetrievalQuery,
) -> RankedRetrieval {
    topic_match_retrieve_with(index, base, query, DEFAULT_ENTITY_THRESHOLD)
}

/// Cosine similarity between TF-IDF vectors of the context and of every
/// document body, with statistics fitted on the whole base.
#[derive(Clone, Debug)]
pub struct TfIdfRetriever {
    model: TfIdfModel,
    tokenizer: Tokenizer,
    doc_vectors: BTreeMap<String, (BTreeMap<String, f64>, f64)>,
}

impl TfIdfRetriever {
    pub fn fit(base: &DocumentBase, tokenizer: Tokenizer) -> Result<Self> {
        let model = TfIdfModel::fit(base.documents(), &tokenizer, TfIdfVariant::Raw)?;
        let doc_vectors = model
            .doc_ids()
            .map(|id| {
                let vec: BTreeMap<String, f64> = model
                    .term_counts(id)
                    .into_iter()
                    .flatten()
                    .map(|(w, &tf)| (w.clone(), model.weight(w, tf)))
                    .collect();
                let norm = vec.values().map(|v| v * v).sum::<f64>().sqrt();
                (id.to_string(), (vec, norm))
            })
            .collect();
        Ok(Self {
            model,
            tokenizer,
            doc_vectors,
        })
    }

    pub fn retrieve(&self, context: &str, k: usize) -> RankedRetrieval {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for t in self.tokenizer.tokenize(context) {
            *counts.entry(t).or_default() += 1;
        }
        let query: BTreeMap<&str, f64> = counts
            .iter()
            .map(|(w, &tf)| (w.as_str(), self.model.weight(w, tf)))
            .collect();
        let qnorm = query.values().map(|v| v * v).sum::<f64>().sqrt();
        let scores = self.doc_vectors.iter().map(|(id, (vec, norm))| {
            let dot: f64 = query
                .iter()
                .filter_map(|(w, q)| vec.get(*w).map(|d| q * d))
                .sum();
            let score = if qnorm > 0.0 && *norm > 0.0 {
                dot / (qnorm * norm)
            } else {
                0.0
            };
            (id.clone(), score)
        });
        RankedRetrieval::from_scores(scores, Some(k))
    }
}

pub fn tfidf_retrieve(context: &str, base: &DocumentBase, k: usize) -> Result<RankedRetrieval> {
    Ok(TfIdfRetriever::fit(base, Tokenizer::english())?.retrieve(context, k))
}

/// Okapi BM25 with idf `ln(1 + (N - df + 0.5) / (df + 0.5))`, summed over
/// every context token.
#[derive(Clone, Debug)]
pub struct Bm25Retriever {
    tokenizer: Tokenizer,
    k1: f64,
    b: f64,
    n_docs: usize,
    avg_len: f64,
    df: BTreeMap<String, usize>,
    docs: BTreeMap<String, (BTreeMap<String, usize>, usize)>,
}

impl Bm25Retriever {
    pub fn fit(base: &DocumentBase, tokenizer: Tokenizer, k1: f64, b: f64) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut docs = BTreeMap::new();
        let mut total_len = 0;
        for doc in base.documents() {
            let tokens = tokenizer.tokenize(&doc.body);
            total_len += tokens.len();
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for t in &tokens {
                *counts.entry(t.clone()).or_default() += 1;
            }
            for w in counts.keys() {
                *df.entry(w.clone()).or_default() += 1;
            }
            docs.insert(doc.id.clone(), (counts, tokens.len()));
        }
        let n_docs = docs.len();
        let avg_len = if n_docs > 0 {
            total_len as f64 / n_docs as f64
        } else {
            0.0
        };
        Self {
            tokenizer,
            k1,
            b,
            n_docs,
            avg_len,
            df,
            docs,
        }
    }

    pub fn idf(&self, word: &str) -> f64 {
        let df = self.df.get(word).copied().unwrap_or(0) as f64;
        (1.0 + (self.n_docs as f64 - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn score(&self, query_tokens: &[String], doc_id: &str) -> f64 {
        let Some((counts, len)) = self.docs.get(doc_id) else {
            return 0.0;
        };
        let norm = if self.avg_len > 0.0 {
            1.0 - self.b + self.b * (*len as f64 / self.avg_len)
        } else {
            1.0
        };
        query_tokens
            .iter()
            .map(|q| {
                let tf = counts.get(q).copied().unwrap_or(0) as f64;
                if tf == 0.0 {
                    return 0.0;
                }
                self.idf(q) * tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
            })
            .sum()
    }

    pub fn retrieve(&self, context: &str, k: usize) -> RankedRetrieval {
        let tokens = self.tokenizer.tokenize(context);
        let scores = self
            .docs
            .keys()
            .map(|id| (id.clone(), self.score(&tokens, id)));
        RankedRetrieval::from_scores(scores, Some(k))
    }
}

pub fn bm25_retrieve(
    context: &str,
    base: &DocumentBase,
    k: usize,
    k1: f64,
    b: f64,
) -> RankedRetrieval {
    Bm25Retriever::fit(base, Tokenizer::english(), k1, b).retrieve(context, k)
}
