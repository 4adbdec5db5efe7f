use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dialkm_core::belief::{extend_corpus, ExtendError};
use dialkm_core::corpus::{
    corpus_stats, load_corpus, load_document_base, load_ontology, SCHEMA_VERSION,
};
use dialkm_core::metrics::{evaluate as run_evaluation, load_predictions, EvalOptions};
use dialkm_core::retrieval::{topic_match_retrieve_with, Bm25Retriever, TfIdfRetriever};
use dialkm_core::structured::{encode_match, load_database};
use dialkm_core::unstructured::{
    build_index as build_topic_index, load_index, DomainThresholds, TfIdfVariant,
};
use dialkm_core::{
    CanonMap, Database, Document, DocumentBase, ExtendedBeliefState, IndexConfig, KnowledgeDomain,
    RankedRetrieval, RetrievalQuery, Split, Tokenizer,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{Config, Method};
use crate::output::{envelope, CliError, Manifest};

/// Flag value if given, else the config path; the result is written back so
/// that the echoed config shows what was used.
fn resolve(flag: Option<PathBuf>, slot: &mut Option<PathBuf>) -> Option<PathBuf> {
    if flag.is_some() {
        *slot = flag;
    }
    slot.clone()
}

fn require(
    flag: Option<PathBuf>,
    slot: &mut Option<PathBuf>,
    name: &str,
) -> Result<PathBuf, CliError> {
    resolve(flag, slot).ok_or_else(|| {
        CliError::new(
            "config",
            format!("no {name} path given (use --{name} or paths.{name})"),
        )
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn tokenizer(config: &Config) -> Result<Tokenizer, CliError> {
    Ok(match &config.paths.stopwords {
        Some(path) => Tokenizer::from_stopword_file(path)?,
        None => Tokenizer::english(),
    })
}

fn index_config(config: &Config) -> Result<IndexConfig, CliError> {
    Ok(IndexConfig {
        tokenizer: tokenizer(config)?,
        variant: config.index.tfidf,
        thresholds: config.index.thresholds.to_domain()?,
    })
}

fn parse_state(text: &str) -> Result<ExtendedBeliefState, CliError> {
    text.parse::<ExtendedBeliefState>()
        .map_err(|e| CliError::new("invalid_state", e.to_string()))
}

pub fn stats(
    config: &mut Config,
    corpus: Option<PathBuf>,
    ontology: Option<PathBuf>,
) -> Result<Value, CliError> {
    let corpus_path = require(corpus, &mut config.paths.corpus, "corpus")?;
    let ontology_path = resolve(ontology, &mut config.paths.ontology);
    let mut manifest = Manifest::new(config);
    manifest.add_input("corpus", &corpus_path)?;
    let corpus = load_corpus(&corpus_path, SCHEMA_VERSION)?;
    let ontology = match &ontology_path {
        Some(p) => {
            manifest.add_input("ontology", p)?;
            Some(load_ontology(p)?)
        }
        None => None,
    };
    let stats = corpus_stats(&corpus, ontology.as_ref());
    Ok(envelope(stats, &manifest, config))
}

pub fn extend_labels(
    config: &mut Config,
    corpus: Option<PathBuf>,
    docs: Option<PathBuf>,
    index: Option<PathBuf>,
    out: &Path,
) -> Result<Value, CliError> {
    let corpus_path = require(corpus, &mut config.paths.corpus, "corpus")?;
    let docs_path = require(docs, &mut config.paths.docs, "docs")?;
    let index_path = resolve(index, &mut config.paths.index)
        .filter(|p| p.is_file())
        .ok_or_else(|| {
            CliError::new(
                "missing_index",
                "no topic index found; run build-index first",
            )
        })?;

    let mut manifest = Manifest::new(config);
    manifest.add_input("corpus", &corpus_path)?;
    manifest.add_input("docs", &docs_path)?;
    manifest.add_input("index", &index_path)?;

    let corpus = load_corpus(&corpus_path, SCHEMA_VERSION)?;
    let base = load_document_base(&docs_path)?;
    let index = load_index(&index_path)?;
    index.check_config(&index_config(config)?);

    let extended = match extend_corpus(&corpus, &base, &index) {
        Ok(c) => c,
        Err(ExtendError::Unresolved(list)) => {
            let offenders: Vec<Value> = list
                .iter()
                .map(|(d, t, doc)| json!({"dialog_id": d, "turn": t, "doc_id": doc}))
                .collect();
            return Err(CliError::new(
                "unresolved_documents",
                format!(
                    "{} inserted turn(s) reference unknown documents",
                    offenders.len()
                ),
            )
            .with_details(json!({ "offenders": offenders })));
        }
        Err(ExtendError::Label(e)) => return Err(e.into()),
    };
    write_file(out, &extended.to_json(Some(&manifest.to_value())))?;
    let inserted = extended
        .dialogs()
        .flat_map(|d| d.turns.iter())
        .filter(|t| t.gold_document_id.is_some())
        .count();
    Ok(envelope(
        json!({"out": out, "dialogs": extended.len(), "extended_turns": inserted}),
        &manifest,
        config,
    ))
}

pub fn build_index(
    config: &mut Config,
    docs: Option<PathBuf>,
    out: &Path,
    thresholds: Option<DomainThresholds>,
    stopwords: Option<PathBuf>,
    tfidf: Option<TfIdfVariant>,
) -> Result<Value, CliError> {
    let docs_path = require(docs, &mut config.paths.docs, "docs")?;
    resolve(stopwords, &mut config.paths.stopwords);
    if let Some(t) = thresholds {
        for d in KnowledgeDomain::ALL {
            config.set_threshold(d, t.get(d));
        }
    }
    if let Some(v) = tfidf {
        config.index.tfidf = v;
    }
    config.validate()?;

    let mut manifest = Manifest::new(config);
    manifest.add_input("docs", &docs_path)?;
    if let Some(p) = &config.paths.stopwords {
        manifest.add_input("stopwords", p)?;
    }
    let base = load_document_base(&docs_path)?;
    let mut index = build_topic_index(&base, &index_config(config)?)?;
    index.manifest = Some(manifest.to_value());
    write_file(out, &index.to_json())?;

    let mut per_domain: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in base.documents() {
        *per_domain.entry(doc.domain.as_str()).or_default() += 1;
    }
    Ok(envelope(
        json!({
            "out": out,
            "documents": index.len(),
            "documents_per_domain": per_domain,
            "index_fingerprint": index.config_fingerprint,
        }),
        &manifest,
        config,
    ))
}

pub fn retrieve(
    config: &mut Config,
    index: Option<PathBuf>,
    docs: Option<PathBuf>,
    state: &str,
    context: Option<&str>,
) -> Result<Value, CliError> {
    let docs_path = require(docs, &mut config.paths.docs, "docs")?;
    let state = parse_state(state)?;
    let r = config.retrieval.clone();
    let index_path = match r.method {
        Method::Topic => Some(
            resolve(index, &mut config.paths.index)
                .filter(|p| p.is_file())
                .ok_or_else(|| {
                    CliError::new(
                        "missing_index",
                        "no topic index found; run build-index first",
                    )
                })?,
        ),
        Method::Tfidf | Method::Bm25 => None,
    };

    let mut manifest = Manifest::new(config);
    manifest.add_input("docs", &docs_path)?;
    let base = load_document_base(&docs_path)?;

    let ranked = match index_path {
        Some(index_path) => {
            manifest.add_input("index", &index_path)?;
            let index = load_index(&index_path)?;
            index.check_config(&index_config(config)?);
            let query = RetrievalQuery::from_state(&state);
            topic_match_retrieve_with(&index, &base, &query, r.entity_threshold).truncated(r.k)
        }
        None => {
            let context = context.ok_or_else(|| {
                CliError::new(
                    "config",
                    "--context is required for the tfidf and bm25 methods",
                )
            })?;
            let tok = tokenizer(config)?;
            if r.method == Method::Tfidf {
                TfIdfRetriever::fit(&base, tok)?.retrieve(context, r.k)
            } else {
                Bm25Retriever::fit(&base, tok, r.k1, r.b).retrieve(context, r.k)
            }
        }
    };
    Ok(envelope(
        retrieval_payload(r.method, &state, ranked),
        &manifest,
        config,
    ))
}

fn retrieval_payload(
    method: Method,
    state: &ExtendedBeliefState,
    ranked: RankedRetrieval,
) -> Value {
    let query = RetrievalQuery::from_state(state);
    json!({
        "method": method,
        "query": {
            "domain": query.domain,
            "entity": query.entity,
            "topic": query.topic.words(),
        },
        "best": ranked.best,
        "ranking": ranked.ranking,
    })
}

pub fn query_db(
    config: &mut Config,
    db: Option<PathBuf>,
    ontology: Option<PathBuf>,
    canon_map: Option<PathBuf>,
    domain: &str,
    state: &str,
) -> Result<Value, CliError> {
    let db_path = require(db, &mut config.paths.db, "db")?;
    let ontology_path = resolve(ontology, &mut config.paths.ontology);
    let canon_path = resolve(canon_map, &mut config.paths.canon_map);
    let state = parse_state(state)?;

    let mut manifest = Manifest::new(config);
    manifest.add_input("db", &db_path)?;
    let ontology = match &ontology_path {
        Some(p) => {
            manifest.add_input("ontology", p)?;
            Some(load_ontology(p)?)
        }
        None => None,
    };
    let mut db = load_database(&db_path, ontology.as_ref())?;
    if let Some(p) = &canon_path {
        manifest.add_input("canon_map", p)?;
        db = db.with_canon_map(CanonMap::load(p)?);
    }
    let result = db.query(&state, domain)?;
    let vector = encode_match(&result);
    let mut payload = serde_json::to_value(&result).expect("match result serializes");
    payload["match_vector"] = json!(vector.to_vec());
    Ok(envelope(payload, &manifest, config))
}

pub struct EvalInputs {
    pub corpus: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub ontology: Option<PathBuf>,
    pub canon_map: Option<PathBuf>,
}

pub fn evaluate(
    config: &mut Config,
    inputs: EvalInputs,
    split: Option<Split>,
    report: Option<&Path>,
) -> Result<Value, CliError> {
    let paths = &mut config.paths;
    let corpus_path = require(inputs.corpus, &mut paths.corpus, "corpus")?;
    let predictions_path = require(inputs.predictions, &mut paths.predictions, "predictions")?;
    let db_path = resolve(inputs.db, &mut paths.db);
    let ontology_path = resolve(inputs.ontology, &mut paths.ontology);
    let canon_path = resolve(inputs.canon_map, &mut paths.canon_map);

    let mut manifest = Manifest::new(config);
    manifest.add_input("corpus", &corpus_path)?;
    manifest.add_input("predictions", &predictions_path)?;
    let corpus = load_corpus(&corpus_path, SCHEMA_VERSION)?;
    let predictions = load_predictions(&predictions_path)?;
    let ontology = match &ontology_path {
        Some(p) => {
            manifest.add_input("ontology", p)?;
            Some(load_ontology(p)?)
        }
        None => None,
    };
    let canon = match &canon_path {
        Some(p) => {
            manifest.add_input("canon_map", p)?;
            CanonMap::load(p)?
        }
        None => CanonMap::new(),
    };
    let db = match &db_path {
        Some(p) => {
            manifest.add_input("db", p)?;
            load_database(p, ontology.as_ref())?.with_canon_map(canon.clone())
        }
        None => {
            log::warn!("no database given; Inform and Success see empty tables");
            Database::default()
        }
    };
    let opts = EvalOptions {
        mode: config.metrics.mode,
        bleu_smoothing: config.metrics.bleu_smoothing,
        canon,
        ontology,
        split,
    };
    let result = run_evaluation(&corpus, &predictions, &db, &opts)?;
    let value = envelope(result, &manifest, config);
    if let Some(path) = report {
        write_file(path, &crate::output::pretty(&value))?;
    }
    Ok(value)
}

#[derive(Deserialize)]
struct KnowledgeEntity {
    name: Option<String>,
    docs: BTreeMap<String, KnowledgeDoc>,
}

#[derive(Deserialize)]
struct KnowledgeDoc {
    title: String,
    body: String,
}

/// Reads `{domain: {entity_id: {name, docs: {doc_id: {title, body}}}}}`.
/// Domains outside the four knowledge domains are skipped.
pub fn convert_docs(config: &Config, knowledge: &Path, out: &Path) -> Result<Value, CliError> {
    let mut manifest = Manifest::new(config);
    manifest.add_input("knowledge", knowledge)?;
    let raw = std::fs::read_to_string(knowledge)
        .map_err(|e| CliError::new("io", format!("{}: {e}", knowledge.display())))?;
    let parsed: BTreeMap<String, BTreeMap<String, KnowledgeEntity>> = serde_json::from_str(&raw)
        .map_err(|e| CliError::new("parse", format!("{}: {e}", knowledge.display())))?;

    let mut docs = Vec::new();
    let mut skipped = Vec::new();
    for (domain_name, entities) in parsed {
        let Ok(domain) = domain_name.parse::<KnowledgeDomain>() else {
            log::warn!("skipping domain `{domain_name}`");
            skipped.push(domain_name);
            continue;
        };
        for (entity_id, entity) in entities {
            for (doc_id, doc) in entity.docs {
                docs.push(Document {
                    id: format!("{}-{entity_id}-{doc_id}", domain.as_str()),
                    domain,
                    entity: entity.name.clone().filter(|n| !n.trim().is_empty()),
                    body: format!("{} {}", doc.title.trim(), doc.body.trim()),
                });
            }
        }
    }
    let base = DocumentBase::new(docs)?;
    write_file(out, &base.to_json())?;
    Ok(envelope(
        json!({"out": out, "documents": base.len(), "skipped_domains": skipped}),
        &manifest,
        config,
    ))
}
