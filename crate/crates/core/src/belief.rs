//! Extended belief state: domain-slot-value triples, an optional `ruk`
//! triple marking a turn that needs unstructured knowledge, and the topic
//! word sequence of that turn.
//!
//! The flat text interchange format is
//!
//! ```text
//! domain-slot: value; domain-slot: value | topic: w1 w2
//! ```
//!
//! Triples are written in `(domain, slot)` order. Values must not contain
//! `;` or `|`. Whitespace around every component is insignificant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{DialogCorpus, Document, KnowledgeDomain, TurnKind};
use crate::error::{Error, Result};
use crate::text::{normalize_text, CanonMap};
use crate::unstructured::TopicIndex;

/// Reserved slot name of the unstructured-knowledge triple.
pub const RUK_SLOT: &str = "ruk";

/// `ruk` value for domains whose documents have no entity (taxi, train).
pub const NO_ENTITY: &str = "none";

/// Value meaning "any value is acceptable"; imposes no DB constraint.
pub const DONTCARE: &str = "dontcare";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DsvTriple {
    pub domain: String,
    pub slot: String,
    pub value: String,
}

impl DsvTriple {
    pub fn new(
        domain: impl Into<String>,
        slot: impl Into<String>,
        value: impl Into<String>,
    ) -> Self {
        Self {
            domain: domain.into(),
            slot: slot.into(),
            value: value.into(),
        }
    }

    pub fn is_ruk(&self) -> bool {
        self.slot.trim().eq_ignore_ascii_case(RUK_SLOT)
    }

    fn key(&self) -> (&str, &str) {
        (&self.domain, &self.slot)
    }
}

impl fmt::Display for DsvTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}: {}", self.domain, self.slot, self.value)
    }
}

/// Topic word sequence; lowercase, no empty tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Topic(Vec<String>);

impl Topic {
    /// Lowercases the words and splits any that contain whitespace.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Topic(
            words
                .into_iter()
                .flat_map(|w| {
                    w.as_ref()
                        .split_whitespace()
                        .map(|t| t.to_lowercase())
                        .collect::<Vec<_>>()
                })
                .collect(),
        )
    }

    pub fn words(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Words joined with single spaces.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

/// A belief state with at most one `ruk` triple and a topic that is only
/// present alongside it. Triples are kept sorted by `(domain, slot)` and
/// that key is unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ExtendedBeliefState {
    triples: Vec<DsvTriple>,
    topic: Topic,
}

impl ExtendedBeliefState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(triples: impl IntoIterator<Item = DsvTriple>, topic: Topic) -> Result<Self> {
        let mut triples: Vec<DsvTriple> = triples.into_iter().collect();
        triples.sort();
        for t in &triples {
            for (name, part) in [
                ("domain", &t.domain),
                ("slot", &t.slot),
                ("value", &t.value),
            ] {
                if part.trim().is_empty() {
                    return Err(Error::InvalidState(format!("empty {name} in `{t}`")));
                }
            }
            if t.domain.contains(['-', ':', ';', '|']) {
                return Err(Error::InvalidState(format!(
                    "illegal character in domain `{}`",
                    t.domain
                )));
            }
            if t.slot.contains([':', ';', '|']) || t.value.contains([';', '|']) {
                return Err(Error::InvalidState(format!("illegal character in `{t}`")));
            }
        }
        for pair in triples.windows(2) {
            if pair[0].key() == pair[1].key() {
                return Err(Error::InvalidState(format!(
                    "duplicate slot `{}-{}`",
                    pair[0].domain, pair[0].slot
                )));
            }
        }
        let ruk: Vec<&DsvTriple> = triples.iter().filter(|t| t.is_ruk()).collect();
        if ruk.len() > 1 {
            return Err(Error::InvalidState("more than one ruk triple".into()));
        }
        if let Some(r) = ruk.first() {
            if r.domain.parse::<KnowledgeDomain>().is_err() {
                return Err(Error::InvalidState(format!(
                    "ruk domain `{}` has no documents",
                    r.domain
                )));
            }
        }
        if ruk.is_empty() && !topic.is_empty() {
            return Err(Error::InvalidState(
                "topic given without a ruk triple".into(),
            ));
        }
        if topic.words().iter().any(|w| w.is_empty()) {
            return Err(Error::InvalidState("empty topic token".into()));
        }
        Ok(Self { triples, topic })
    }

    /// State made of plain triples, no ruk or topic requirements checked
    /// beyond the usual invariants.
    pub fn from_triples(triples: impl IntoIterator<Item = DsvTriple>) -> Result<Self> {
        Self::new(triples, Topic::default())
    }

    pub fn triples(&self) -> &[DsvTriple] {
        &self.triples
    }

    pub fn topic(&self) -> &Topic {
        &self.topic
    }

    pub fn ruk(&self) -> Option<&DsvTriple> {
        self.triples.iter().find(|t| t.is_ruk())
    }

    pub fn non_ruk(&self) -> impl Iterator<Item = &DsvTriple> {
        self.triples.iter().filter(|t| !t.is_ruk())
    }

    /// The same state with `ruk` and topic removed.
    pub fn without_ruk(&self) -> Self {
        Self {
            triples: self.non_ruk().cloned().collect(),
            topic: Topic::default(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty() && self.topic.is_empty()
    }

    pub fn get(&self, domain: &str, slot: &str) -> Option<&str> {
        self.triples
            .iter()
            .find(|t| t.domain == domain && t.slot == slot)
            .map(|t| t.value.as_str())
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    #[serde(default)]
    slots: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    topic: Vec<String>,
}

impl Serialize for ExtendedBeliefState {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        StateRepr {
            slots: self
                .triples
                .iter()
                .map(|t| (format!("{}-{}", t.domain, t.slot), t.value.clone()))
                .collect(),
            topic: self.topic.0.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExtendedBeliefState {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = StateRepr::deserialize(deserializer)?;
        let triples = repr
            .slots
            .into_iter()
            .map(|(key, value)| {
                let (domain, slot) = key.split_once('-').ok_or_else(|| {
                    D::Error::custom(format!("slot key `{key}` is not domain-slot"))
                })?;
                Ok(DsvTriple::new(domain, slot, value))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        ExtendedBeliefState::new(triples, Topic::new(repr.topic)).map_err(D::Error::custom)
    }
}

/// Adds the `ruk` triple and topic of the gold document to an original
/// state. Without a document the state passes through with an empty topic.
pub fn extend_label(
    original: &ExtendedBeliefState,
    doc: Option<(&Document, &[String])>,
) -> Result<ExtendedBeliefState> {
    if let Some(ruk) = original.ruk() {
        return Err(Error::Conflict(ruk.to_string()));
    }
    match doc {
        None => Ok(original.without_ruk()),
        Some((doc, topic_words)) => {
            let entity = doc
                .entity_key()
                .filter(|e| !e.is_empty())
                .unwrap_or_else(|| NO_ENTITY.to_string());
            let mut triples = original.triples.clone();
            triples.push(DsvTriple::new(doc.domain.as_str(), RUK_SLOT, entity));
            ExtendedBeliefState::new(triples, Topic::new(topic_words))
        }
    }
}

/// State at the start of a turn of the given kind, before any tracker
/// update: the previous non-`ruk` triples carry over, `ruk` and topic are
/// per-turn and reset. Inserted turns leave the original triples unchanged.
pub fn carry_over(prev: &ExtendedBeliefState, kind: TurnKind) -> ExtendedBeliefState {
    match kind {
        TurnKind::Inserted | TurnKind::Original => prev.without_ruk(),
    }
}

/// Lowercases and trims every component, applies the canonical value table
/// and drops triples whose value normalizes to nothing. When two triples
/// collide on `(domain, slot)` after normalization the first in the
/// original order wins. Idempotent.
pub fn normalize_state(state: &ExtendedBeliefState, canon: &CanonMap) -> ExtendedBeliefState {
    let mut seen = BTreeSet::new();
    let mut triples = Vec::with_capacity(state.triples.len());
    for t in &state.triples {
        let domain = normalize_text(&t.domain);
        let slot = normalize_text(&t.slot);
        let value = if t.is_ruk() {
            normalize_text(&t.value)
        } else {
            canon.canonical(&t.value)
        };
        if domain.is_empty() || slot.is_empty() || value.is_empty() {
            continue;
        }
        if seen.insert((domain.clone(), slot.clone())) {
            triples.push(DsvTriple {
                domain,
                slot,
                value,
            });
        }
    }
    triples.sort();
    let has_ruk = triples.iter().any(DsvTriple::is_ruk);
    let topic = if has_ruk {
        Topic::new(state.topic.words())
    } else {
        Topic::default()
    };
    ExtendedBeliefState { triples, topic }
}

/// Renders the flat interchange format.
pub fn serialize_state(state: &ExtendedBeliefState) -> String {
    let mut out = state
        .triples
        .iter()
        .map(|t| format!("{}-{}: {}", t.domain.trim(), t.slot.trim(), t.value.trim()))
        .collect::<Vec<_>>()
        .join("; ");
    if !state.topic.is_empty() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str("| topic: ");
        out.push_str(&state.topic.joined());
    }
    out
}

/// Offset of the first non-whitespace byte of `s[start..end]`.
fn skip_ws(s: &str, start: usize) -> usize {
    start + (s[start..].len() - s[start..].trim_start().len())
}

/// Parses the flat interchange format. Syntax errors carry the byte offset
/// where they were detected.
pub fn parse_state(text: &str) -> Result<ExtendedBeliefState> {
    let (head, tail) = match text.find('|') {
        Some(p) => (&text[..p], Some(p + 1)),
        None => (text, None),
    };

    let mut topic = Topic::default();
    if let Some(start) = tail {
        let rest = &text[start..];
        if let Some(p) = rest.find('|') {
            return Err(Error::Format {
                offset: start + p,
                message: "more than one `|` separator".into(),
            });
        }
        let at = skip_ws(text, start);
        let body = &text[at..];
        let words = body.strip_prefix("topic:").ok_or_else(|| Error::Format {
            offset: at,
            message: "expected `topic:` after `|`".into(),
        })?;
        topic = Topic::new(words.split_whitespace());
    }

    let mut triples = Vec::new();
    let mut seen = BTreeSet::new();
    let mut offset = 0;
    for segment in head.split(';') {
        let seg_start = offset;
        offset += segment.len() + 1;
        if segment.trim().is_empty() {
            continue;
        }
        let at = skip_ws(text, seg_start);
        let colon = segment.find(':').ok_or_else(|| Error::Format {
            offset: at,
            message: "missing `:` between slot and value".into(),
        })?;
        let key = &segment[..colon];
        let value = segment[colon + 1..].trim();
        let (domain, slot) = key.split_once('-').ok_or_else(|| Error::Format {
            offset: at,
            message: format!("slot `{}` is not of the form domain-slot", key.trim()),
        })?;
        let (domain, slot) = (domain.trim(), slot.trim());
        if domain.is_empty() || slot.is_empty() {
            return Err(Error::Format {
                offset: at,
                message: "empty domain or slot".into(),
            });
        }
        if value.is_empty() {
            return Err(Error::Format {
                offset: seg_start + colon + 1,
                message: "empty value".into(),
            });
        }
        if !seen.insert((domain.to_string(), slot.to_string())) {
            return Err(Error::Format {
                offset: at,
                message: format!("duplicate slot `{domain}-{slot}`"),
            });
        }
        triples.push(DsvTriple::new(domain, slot, value));
    }
    ExtendedBeliefState::new(triples, topic)
}

impl fmt::Display for ExtendedBeliefState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_state(self))
    }
}

impl FromStr for ExtendedBeliefState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_state(s)
    }
}

/// Vocabulary sizes of the two parts of the extended state and of their
/// combination, counted over a set of states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularySizes {
    pub dsv: usize,
    pub topic: usize,
    pub combined: usize,
}

/// Token vocabularies of the triple part (domain, slot, value words; the
/// `ruk` slot included) and of the topic part, after normalization.
pub fn vocabulary_sizes<'a>(
    states: impl IntoIterator<Item = &'a ExtendedBeliefState>,
) -> VocabularySizes {
    let mut dsv = BTreeSet::new();
    let mut topic = BTreeSet::new();
    for state in states {
        for t in &state.triples {
            dsv.insert(normalize_text(&t.domain));
            dsv.insert(normalize_text(&t.slot));
            dsv.extend(
                normalize_text(&t.value)
                    .split(' ')
                    .filter(|w| !w.is_empty())
                    .map(str::to_string),
            );
        }
        topic.extend(state.topic.words().iter().cloned());
    }
    let combined = dsv.union(&topic).count();
    VocabularySizes {
        dsv: dsv.len(),
        topic: topic.len(),
        combined,
    }
}

/// Gives every inserted turn of the corpus its `ruk` triple and topic from
/// the gold document. Returns the offending `(dialog, turn, doc id)`
/// triples when documents are missing from the base or the index.
pub fn extend_corpus(
    corpus: &DialogCorpus,
    base: &crate::corpus::DocumentBase,
    index: &TopicIndex,
) -> Result<DialogCorpus, ExtendError> {
    let mut unresolved = Vec::new();
    let mut out = corpus.clone();
    for dialog in out.dialogs_mut() {
        for turn in dialog.turns.iter_mut() {
            let Some(doc_id) = turn.gold_document_id.as_deref() else {
                continue;
            };
            let (Some(doc), Some(words)) = (base.get(doc_id), index.topics(doc_id)) else {
                unresolved.push((dialog.id.clone(), turn.index, doc_id.to_string()));
                continue;
            };
            turn.gold_state =
                extend_label(&turn.gold_state, Some((doc, words))).map_err(ExtendError::Label)?;
        }
    }
    if unresolved.is_empty() {
        Ok(out)
    } else {
        Err(ExtendError::Unresolved(unresolved))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExtendError {
    #[error("{} inserted turn(s) reference documents missing from the base or index", .0.len())]
    Unresolved(Vec<(String, usize, String)>),
    #[error(transparent)]
    Label(Error),
}
