//! Hybrid knowledge management for task-oriented dialog.
//!
//! Structured knowledge lives in a slot-value database queried from the
//! belief state. Unstructured knowledge lives in short FAQ-style documents
//! that are indexed offline by topic words and retrieved by matching the
//! extended belief state (a `ruk` entity triple plus topic words).

pub mod belief;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod retrieval;
pub mod structured;
pub mod text;
pub mod unstructured;

pub use belief::{DsvTriple, ExtendedBeliefState, Topic};
pub use corpus::{
    Dialog, DialogCorpus, Document, DocumentBase, KnowledgeDomain, Ontology, Split, Turn, TurnKind,
};
pub use error::{Error, Result};
pub use retrieval::{RankedRetrieval, RetrievalQuery, ScoredDoc};
pub use structured::{Database, MatchResult, MatchVector};
pub use text::CanonMap;
pub use unstructured::{IndexConfig, Tokenizer, TopicIndex};
