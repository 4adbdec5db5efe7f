//! Oracles shared by the acceptance runner and the integration tests. None
//! of them call into the crate's own algorithms.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use dialkm_core::corpus::{Document, KnowledgeDomain};
use rand::rngs::StdRng;
use rand::Rng;

pub fn synthetic_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic")
}

/// Every sequence over an alphabet up to a maximum length, with the set of
/// its subsequences stored as a bitset over the same universe. Sequences
/// are ordered by length, so the highest bit of an intersection is a
/// longest common subsequence.
pub struct SubsequenceUniverse {
    pub seqs: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    subseqs: Vec<Vec<u64>>,
}

impl SubsequenceUniverse {
    pub fn new(alphabet: u8, max_len: usize) -> Self {
        let mut seqs: Vec<Vec<u8>> = vec![Vec::new()];
        let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for s in &frontier {
                for c in 0..alphabet {
                    let mut t = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            seqs.extend(next.iter().cloned());
            frontier = next;
        }
        let index: HashMap<Vec<u8>, usize> = seqs
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let words = seqs.len().div_ceil(64);
        let subseqs = seqs
            .iter()
            .map(|s| {
                let mut bits = vec![0u64; words];
                for mask in 0u32..(1 << s.len()) {
                    let sub: Vec<u8> = (0..s.len())
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| s[i])
                        .collect();
                    let k = index[&sub];
                    bits[k / 64] |= 1 << (k % 64);
                }
                bits
            })
            .collect();
        Self {
            seqs,
            index,
            subseqs,
        }
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    /// Length of the longest common subsequence of sequences `i` and `j`.
    pub fn lcs(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.subseqs[i], &self.subseqs[j]);
        for w in (0..a.len()).rev() {
            let common = a[w] & b[w];
            if common != 0 {
                let k = w * 64 + 63 - common.leading_zeros() as usize;
                return self.seqs[k].len();
            }
        }
        unreachable!("the empty sequence is common to all")
    }

    pub fn as_string(&self, i: usize, letters: &[char]) -> String {
        self.seqs[i].iter().map(|&c| letters[c as usize]).collect()
    }

    pub fn as_tokens(&self, i: usize, words: &[&str]) -> Vec<String> {
        self.seqs[i]
            .iter()
            .map(|&c| words[c as usize].to_string())
            .collect()
    }
}

/// LCS by enumerating all subsequences of the shorter input.
pub fn lcs_by_enumeration<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let is_subsequence = |mask: u32| {
        let mut it = long.iter();
        (0..short.len())
            .filter(|i| mask >> i & 1 == 1)
            .all(|i| it.any(|x| *x == short[i]))
    };
    (0u32..(1 << short.len()))
        .filter(|&m| is_subsequence(m))
        .map(u32::count_ones)
        .max()
        .unwrap_or(0) as usize
}

/// Result of recomputing topic extraction for one domain from scratch.
pub struct OracleExtraction {
    pub ca: BTreeMap<String, f64>,
    pub topics: BTreeMap<String, Vec<String>>,
}

/// Raw TF-IDF, top-three candidates and CA-TF-IDF filtering with the
/// keep-best floor, for documents whose bodies are whitespace-separated
/// lowercase alphanumeric words.
pub fn oracle_extract(docs: &[Document], threshold: f64) -> OracleExtraction {
    let mut docs: Vec<&Document> = docs.iter().collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    let n = docs.len();
    let entities: BTreeSet<Option<String>> = docs.iter().map(|d| d.entity.clone()).collect();
    let entity_count = entities.len();

    let tf: Vec<BTreeMap<&str, usize>> = docs
        .iter()
        .map(|d| {
            let mut m = BTreeMap::new();
            for w in d.body.split_whitespace() {
                *m.entry(w).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &tf {
        for w in m.keys() {
            *df.entry(w).or_insert(0) += 1;
        }
    }

    let mut candidates: Vec<Vec<(String, f64)>> = Vec::new();
    for m in &tf {
        let mut scored: Vec<(String, f64)> = m
            .iter()
            .map(|(w, &c)| (w.to_string(), c as f64 * (n as f64 / df[w] as f64).ln()))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored.truncate(3);
        candidates.push(scored);
    }

    let mut ca: BTreeMap<String, f64> = BTreeMap::new();
    for doc_cands in &candidates {
        for (w, s) in doc_cands {
            *ca.entry(w.clone()).or_insert(0.0) += s;
        }
    }
    for v in ca.values_mut() {
        *v /= entity_count as f64;
    }

    let mut topics = BTreeMap::new();
    for (d, doc_cands) in docs.iter().zip(&candidates) {
        let mut kept: Vec<&String> = doc_cands
            .iter()
            .map(|(w, _)| w)
            .filter(|w| ca[*w] >= threshold)
            .collect();
        if kept.is_empty() {
            let mut best = &doc_cands[0].0;
            for (w, _) in doc_cands {
                if ca[w] > ca[best] {
                    best = w;
                }
            }
            kept.push(best);
        }
        kept.sort_by(|a, b| ca[*b].partial_cmp(&ca[*a]).unwrap().then(a.cmp(b)));
        topics.insert(d.id.clone(), kept.into_iter().cloned().collect());
    }
    OracleExtraction { ca, topics }
}

/// A random single-domain base with at most `max_entities` entities of at
/// most `max_docs` documents each.
pub fn random_domain(
    rng: &mut StdRng,
    domain: KnowledgeDomain,
    max_entities: usize,
    max_docs: usize,
) -> Vec<Document> {
    let vocab: Vec<String> = (0..rng.gen_range(6..40))
        .map(|i| format!("w{i:02}"))
        .collect();
    let entity_less =
        matches!(domain, KnowledgeDomain::Taxi | KnowledgeDomain::Train) && rng.gen_bool(0.5);
    let n_entities = if entity_less {
        1
    } else {
        rng.gen_range(1..=max_entities)
    };
    let mut docs = Vec::new();
    for e in 0..n_entities {
        for d in 0..rng.gen_range(1..=max_docs) {
            let len = rng.gen_range(1..20);
            let body: Vec<&str> = (0..len)
                .map(|_| {
                    // skewed so that some words repeat within a document
                    let r: f64 = rng.gen();
                    vocab[((r * r) * vocab.len() as f64) as usize].as_str()
                })
                .collect();
            docs.push(Document {
                id: format!("{}-{e:02}-{d}", domain.as_str()),
                domain,
                entity: (!entity_less).then(|| format!("entity {e}")),
                body: body.join(" "),
            });
        }
    }
    docs
}
