//! Deterministic inputs for the benchmarks.

use dialkm_core::{Document, DocumentBase, KnowledgeDomain};

const WORDS: [&str; 16] = [
    "parking",
    "breakfast",
    "wifi",
    "pets",
    "luggage",
    "payment",
    "vegetarian",
    "delivery",
    "bicycles",
    "food",
    "room",
    "guests",
    "available",
    "charge",
    "allowed",
    "station",
];

/// `entities` entities per domain with `docs_per_entity` documents each.
/// Taxi and train get `docs_per_entity` entity-less documents.
pub fn document_base(entities: usize, docs_per_entity: usize) -> DocumentBase {
    let mut docs = Vec::new();
    for domain in KnowledgeDomain::ALL {
        let entity_count = match domain {
            KnowledgeDomain::Restaurant | KnowledgeDomain::Hotel => entities,
            KnowledgeDomain::Taxi | KnowledgeDomain::Train => 1,
        };
        for e in 0..entity_count {
            for d in 0..docs_per_entity {
                let topic = WORDS[(d * 7 + e) % WORDS.len()];
                let body: Vec<&str> = (0..24)
                    .map(|i| WORDS[(i * 5 + d + e) % WORDS.len()])
                    .collect();
                let entity = matches!(domain, KnowledgeDomain::Restaurant | KnowledgeDomain::Hotel)
                    .then(|| format!("{} place {e}", domain.as_str()));
                docs.push(Document {
                    id: format!("{}-{e}-{d}", domain.as_str()),
                    domain,
                    entity,
                    body: format!("{topic} {topic} {topic} {}", body.join(" ")),
                });
            }
        }
    }
    DocumentBase::new(docs).expect("generated base is valid")
}

/// Sentence pairs for the language metrics.
pub fn sentence_pairs(n: usize) -> (Vec<String>, Vec<String>) {
    let sentence = |seed: usize| -> String {
        (0..14)
            .map(|i| WORDS[(i * 3 + seed) % WORDS.len()])
            .collect::<Vec<_>>()
            .join(" ")
    };
    let hyps = (0..n).map(sentence).collect();
    let refs = (0..n).map(|i| sentence(i + i % 3)).collect();
    (hyps, refs)
}
