//! Dialogs, document base, ontology and corpus statistics.
//!
//! All files are UTF-8 JSON in the canonical layouts documented in the
//! README. Text is kept verbatim; normalization happens at comparison time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::belief::{ExtendedBeliefState, RUK_SLOT};
use crate::error::{Error, Result};
use crate::text::normalize_text;

/// Dialog file schema version understood by [`load_corpus`].
pub const SCHEMA_VERSION: &str = "1";

/// Domains of the MultiWOZ ontology, used to validate goals when no
/// ontology file is supplied.
pub const MULTIWOZ_DOMAINS: [&str; 7] = [
    "attraction",
    "hospital",
    "hotel",
    "police",
    "restaurant",
    "taxi",
    "train",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[serde(alias = "val", alias = "valid", alias = "validation")]
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalize_text(s).as_str() {
            "train" => Ok(Split::Train),
            "dev" | "val" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Whether a turn belongs to the original dialog or was inserted and is
/// grounded on a document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnKind {
    Original,
    Inserted,
}

/// The four domains that own documents in the document base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", try_from = "String", into = "String")]
pub enum KnowledgeDomain {
    Restaurant,
    Hotel,
    Taxi,
    Train,
}

impl KnowledgeDomain {
    pub const ALL: [KnowledgeDomain; 4] = [
        KnowledgeDomain::Restaurant,
        KnowledgeDomain::Hotel,
        KnowledgeDomain::Taxi,
        KnowledgeDomain::Train,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KnowledgeDomain::Restaurant => "restaurant",
            KnowledgeDomain::Hotel => "hotel",
            KnowledgeDomain::Taxi => "taxi",
            KnowledgeDomain::Train => "train",
        }
    }
}

impl fmt::Display for KnowledgeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KnowledgeDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = normalize_text(s);
        KnowledgeDomain::ALL
            .into_iter()
            .find(|d| d.as_str() == norm)
            .ok_or_else(|| Error::UnknownDomain(s.to_string()))
    }
}

impl TryFrom<String> for KnowledgeDomain {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KnowledgeDomain> for String {
    fn from(d: KnowledgeDomain) -> String {
        d.as_str().to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    #[serde(rename = "user")]
    pub user_utterance: String,
    #[serde(rename = "response")]
    pub system_response: String,
    pub kind: TurnKind,
    #[serde(rename = "state")]
    pub gold_state: ExtendedBeliefState,
    #[serde(rename = "doc_id", default, skip_serializing_if = "Option::is_none")]
    pub gold_document_id: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainGoal {
    /// Informable constraints, slot -> value.
    #[serde(default)]
    pub constraints: BTreeMap<String, String>,
    /// Requested slot names.
    #[serde(default)]
    pub requests: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalSpec {
    pub domains: BTreeMap<String, DomainGoal>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialog {
    pub id: String,
    pub split: Split,
    pub goal: GoalSpec,
    pub turns: Vec<Turn>,
}

/// The turns a model conditions on at turn `t`: the previous system
/// response (absent at `t = 1`) followed by the current user utterance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Context<'a> {
    pub previous_response: Option<&'a str>,
    pub user_utterance: &'a str,
}

impl<'a> Context<'a> {
    pub fn parts(&self) -> Vec<&'a str> {
        self.previous_response
            .into_iter()
            .chain(std::iter::once(self.user_utterance))
            .collect()
    }

    pub fn text(&self) -> String {
        self.parts().join(" ")
    }
}

impl Dialog {
    /// Turn `t`, 1-based.
    pub fn turn(&self, t: usize) -> Result<&Turn> {
        if t == 0 || t > self.turns.len() {
            return Err(Error::TurnIndex {
                index: t,
                len: self.turns.len(),
            });
        }
        Ok(&self.turns[t - 1])
    }

    pub fn has_inserted_turns(&self) -> bool {
        self.turns.iter().any(|t| t.kind == TurnKind::Inserted)
    }

    fn validate(&self, domains: &[&str]) -> Result<()> {
        let location = format!("dialog `{}`", self.id);
        let schema = |field: &str, message: String| Error::Schema {
            location: location.clone(),
            field: field.to_string(),
            message,
        };
        if self.id.trim().is_empty() {
            return Err(schema("id", "empty dialog id".into()));
        }
        if self.turns.is_empty() {
            return Err(schema("turns", "dialog has no turns".into()));
        }
        for (pos, turn) in self.turns.iter().enumerate() {
            if turn.index != pos + 1 {
                return Err(schema(
                    "index",
                    format!("expected turn index {}, found {}", pos + 1, turn.index),
                ));
            }
            match (turn.kind, &turn.gold_document_id) {
                (TurnKind::Inserted, None) => {
                    return Err(schema(
                        "doc_id",
                        format!("inserted turn {} has no doc_id", turn.index),
                    ))
                }
                (TurnKind::Original, Some(_)) => {
                    return Err(schema(
                        "doc_id",
                        format!("original turn {} carries a doc_id", turn.index),
                    ))
                }
                _ => {}
            }
        }
        for domain in self.goal.domains.keys() {
            if !domains.contains(&normalize_text(domain).as_str()) {
                return Err(schema("goal", format!("unknown goal domain `{domain}`")));
            }
        }
        Ok(())
    }
}

/// Builds the context for turn `t` (1-based) of `dialog`.
pub fn build_context(dialog: &Dialog, t: usize) -> Result<Context<'_>> {
    let turn = dialog.turn(t)?;
    let previous_response = if t > 1 {
        Some(dialog.turns[t - 2].system_response.as_str())
    } else {
        None
    };
    Ok(Context {
        previous_response,
        user_utterance: &turn.user_utterance,
    })
}

/// A validated set of dialogs keyed by id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DialogCorpus {
    dialogs: BTreeMap<String, Dialog>,
}

#[derive(Serialize)]
struct CorpusFileOut<'a> {
    schema_version: &'a str,
    dialogs: Vec<&'a Dialog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<&'a Value>,
}

const DIALOG_FIELDS: [&str; 4] = ["id", "split", "goal", "turns"];
const TURN_FIELDS: [&str; 5] = ["index", "user", "response", "kind", "state"];

impl DialogCorpus {
    /// Validates and indexes dialogs; rejects duplicate ids.
    pub fn from_dialogs(dialogs: impl IntoIterator<Item = Dialog>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for dialog in dialogs {
            dialog.validate(&MULTIWOZ_DOMAINS)?;
            if map.contains_key(&dialog.id) {
                return Err(Error::DuplicateId(dialog.id));
            }
            map.insert(dialog.id.clone(), dialog);
        }
        Ok(Self { dialogs: map })
    }

    /// Parses the dialog JSON schema: either a bare array of dialogs or an
    /// object `{"schema_version", "dialogs", ...}`.
    pub fn from_json_str(raw: &str, schema_version: &str, context: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(raw).map_err(|e| Error::parse(context, e))?;
        let items = match root {
            Value::Array(items) => items,
            Value::Object(mut obj) => {
                if let Some(found) = obj.get("schema_version") {
                    let found = found
                        .as_str()
                        .map(str::to_string)
                        .unwrap_or_else(|| found.to_string());
                    if found != schema_version {
                        return Err(Error::Version {
                            found,
                            expected: schema_version.to_string(),
                        });
                    }
                }
                match obj.remove("dialogs") {
                    Some(Value::Array(items)) => items,
                    _ => {
                        return Err(Error::Schema {
                            location: context.to_string(),
                            field: "dialogs".into(),
                            message: "expected an array of dialogs".into(),
                        })
                    }
                }
            }
            _ => {
                return Err(Error::Schema {
                    location: context.to_string(),
                    field: "dialogs".into(),
                    message: "expected an array or an object".into(),
                })
            }
        };
        if schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                found: schema_version.to_string(),
                expected: SCHEMA_VERSION.to_string(),
            });
        }
        let dialogs = items
            .into_iter()
            .enumerate()
            .map(|(pos, item)| parse_dialog(pos, item))
            .collect::<Result<Vec<_>>>()?;
        Self::from_dialogs(dialogs)
    }

    pub fn len(&self) -> usize {
        self.dialogs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Dialog> {
        self.dialogs.get(id)
    }

    /// Dialogs in id order.
    pub fn dialogs(&self) -> impl Iterator<Item = &Dialog> {
        self.dialogs.values()
    }

    pub fn dialogs_mut(&mut self) -> impl Iterator<Item = &mut Dialog> {
        self.dialogs.values_mut()
    }

    /// Restricts the corpus to one split.
    pub fn filter_split(&self, split: Split) -> DialogCorpus {
        DialogCorpus {
            dialogs: self
                .dialogs
                .iter()
                .filter(|(_, d)| d.split == split)
                .map(|(k, d)| (k.clone(), d.clone()))
                .collect(),
        }
    }

    /// Checks every inserted turn's `doc_id` against the document base and
    /// returns the offending `(dialog id, turn index, doc id)` triples.
    pub fn unresolved_documents(&self, base: &DocumentBase) -> Vec<(String, usize, String)> {
        let mut missing = Vec::new();
        for dialog in self.dialogs() {
            for turn in &dialog.turns {
                if let Some(doc_id) = &turn.gold_document_id {
                    if base.get(doc_id).is_none() {
                        missing.push((dialog.id.clone(), turn.index, doc_id.clone()));
                    }
                }
            }
        }
        missing
    }

    /// Checks goal domains against an ontology.
    pub fn validate_against(&self, ontology: &Ontology) -> Result<()> {
        let domains: Vec<&str> = ontology.domains().collect();
        for dialog in self.dialogs() {
            dialog.validate(&domains)?;
        }
        Ok(())
    }

    /// Serializes to the canonical schema, optionally embedding a manifest.
    pub fn to_json(&self, manifest: Option<&Value>) -> String {
        let out = CorpusFileOut {
            schema_version: SCHEMA_VERSION,
            dialogs: self.dialogs.values().collect(),
            manifest,
        };
        let mut s = serde_json::to_string_pretty(&out).expect("corpus serializes");
        s.push('\n');
        s
    }
}

fn parse_dialog(pos: usize, item: Value) -> Result<Dialog> {
    let id = item
        .get("id")
        .and_then(Value::as_str)
        .map(|s| format!("dialog `{s}`"))
        .unwrap_or_else(|| format!("dialog #{pos}"));
    let schema = |field: &str, message: String| Error::Schema {
        location: id.clone(),
        field: field.to_string(),
        message,
    };
    let obj = item
        .as_object()
        .ok_or_else(|| schema("id", "dialog is not an object".into()))?;
    for field in DIALOG_FIELDS {
        if !obj.contains_key(field) {
            return Err(schema(field, "missing field".into()));
        }
    }
    if let Some(turns) = obj.get("turns").and_then(Value::as_array) {
        for (t, turn) in turns.iter().enumerate() {
            let turn_obj = turn
                .as_object()
                .ok_or_else(|| schema("turns", format!("turn #{t} is not an object")))?;
            for field in TURN_FIELDS {
                if !turn_obj.contains_key(field) {
                    return Err(schema(field, format!("missing in turn #{t}")));
                }
            }
        }
    }
    serde_json::from_value(item).map_err(|e| {
        let message = e.to_string();
        let field = DIALOG_FIELDS
            .iter()
            .chain(TURN_FIELDS.iter())
            .find(|f| message.contains(&format!("`{f}`")))
            .copied()
            .unwrap_or("?");
        schema(field, message)
    })
}

/// Reads a dialog file. `schema_version` must match the file's declared
/// version (when it declares one) and the version this crate understands.
pub fn load_corpus(path: impl AsRef<Path>, schema_version: &str) -> Result<DialogCorpus> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DialogCorpus::from_json_str(&raw, schema_version, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub domain: KnowledgeDomain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<String>,
    pub body: String,
}

impl Document {
    /// Normalized entity name, if the document has one.
    pub fn entity_key(&self) -> Option<String> {
        self.entity.as_deref().map(normalize_text)
    }
}

#[derive(Deserialize)]
struct RawDocument {
    id: String,
    domain: String,
    #[serde(default)]
    entity: Option<String>,
    body: String,
}

/// `(domain, normalized entity)`; entity-less domains group by domain alone.
pub type GroupKey = (KnowledgeDomain, Option<String>);

/// Documents sorted by id and grouped by `(domain, entity)`.
#[derive(Clone, Debug, Default)]
pub struct DocumentBase {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    groups: BTreeMap<GroupKey, Vec<usize>>,
}

impl PartialEq for DocumentBase {
    fn eq(&self, other: &Self) -> bool {
        self.docs == other.docs
    }
}

impl DocumentBase {
    pub fn new(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut docs: Vec<Document> = docs.into_iter().collect();
        for doc in &docs {
            if doc.body.trim().is_empty() {
                return Err(Error::Schema {
                    location: format!("document `{}`", doc.id),
                    field: "body".into(),
                    message: "empty body".into(),
                });
            }
            if doc.id.trim().is_empty() {
                return Err(Error::Schema {
                    location: "document base".into(),
                    field: "id".into(),
                    message: "empty document id".into(),
                });
            }
        }
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = HashMap::with_capacity(docs.len());
        let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
        for (pos, doc) in docs.iter().enumerate() {
            if by_id.insert(doc.id.clone(), pos).is_some() {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            groups
                .entry((doc.domain, doc.entity_key()))
                .or_default()
                .push(pos);
        }
        Ok(Self {
            docs,
            by_id,
            groups,
        })
    }

    pub fn from_json_str(raw: &str, context: &str) -> Result<Self> {
        let items: Vec<RawDocument> =
            serde_json::from_str(raw).map_err(|e| Error::parse(context, e))?;
        let docs = items
            .into_iter()
            .map(|raw| {
                Ok(Document {
                    domain: raw.domain.parse()?,
                    id: raw.id,
                    entity: raw.entity.filter(|e| !e.trim().is_empty()),
                    body: raw.body,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(docs)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.docs).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    /// All documents in id order.
    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn groups(&self) -> impl Iterator<Item = (&GroupKey, Vec<&Document>)> {
        self.groups
            .iter()
            .map(|(k, idx)| (k, idx.iter().map(|&i| &self.docs[i]).collect()))
    }

    pub fn domains(&self) -> BTreeSet<KnowledgeDomain> {
        self.groups.keys().map(|(d, _)| *d).collect()
    }

    /// Documents of one domain in id order.
    pub fn domain_documents(&self, domain: KnowledgeDomain) -> Vec<&Document> {
        self.docs.iter().filter(|d| d.domain == domain).collect()
    }

    /// Normalized entity names in a domain.
    pub fn entities(&self, domain: KnowledgeDomain) -> Vec<&str> {
        self.groups
            .keys()
            .filter(|(d, _)| *d == domain)
            .filter_map(|(_, e)| e.as_deref())
            .collect()
    }

    /// Number of `(domain, entity)` groups in a domain; an entity-less
    /// domain counts as one group.
    pub fn entity_count(&self, domain: KnowledgeDomain) -> usize {
        self.groups.keys().filter(|(d, _)| *d == domain).count()
    }

    /// Documents of one entity (normalized name) in id order.
    pub fn entity_documents(&self, domain: KnowledgeDomain, entity: &str) -> Vec<&Document> {
        self.groups
            .get(&(domain, Some(normalize_text(entity))))
            .map(|idx| idx.iter().map(|&i| &self.docs[i]).collect())
            .unwrap_or_default()
    }
}

/// Reads a document file (JSON array of `{"id", "domain", "entity"?, "body"}`).
pub fn load_document_base(path: impl AsRef<Path>) -> Result<DocumentBase> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DocumentBase::from_json_str(&raw, &path.display().to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyFile {
    slots: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    requestable: BTreeMap<String, Vec<String>>,
}

/// Informable slots (`domain-slot` -> values) and requestable slot names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    informable: BTreeMap<(String, String), BTreeSet<String>>,
    requestable: BTreeMap<String, BTreeSet<String>>,
}

impl Ontology {
    pub fn from_json_str(raw: &str, context: &str) -> Result<Self> {
        let file: OntologyFile = serde_json::from_str(raw).map_err(|e| Error::parse(context, e))?;
        let mut informable = BTreeMap::new();
        for (key, values) in file.slots {
            let (domain, slot) = key.split_once('-').ok_or_else(|| Error::Schema {
                location: context.to_string(),
                field: "slots".into(),
                message: format!("slot key `{key}` is not of the form domain-slot"),
            })?;
            informable.insert(
                (normalize_text(domain), normalize_text(slot)),
                values.iter().map(|v| normalize_text(v)).collect(),
            );
        }
        let requestable = file
            .requestable
            .into_iter()
            .map(|(d, slots)| {
                (
                    normalize_text(&d),
                    slots.iter().map(|s| normalize_text(s)).collect(),
                )
            })
            .collect();
        Ok(Self {
            informable,
            requestable,
        })
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        let set: BTreeSet<&str> = self
            .informable
            .keys()
            .map(|(d, _)| d.as_str())
            .chain(self.requestable.keys().map(String::as_str))
            .collect();
        set.into_iter()
    }

    pub fn has_domain(&self, domain: &str) -> bool {
        let domain = normalize_text(domain);
        self.domains().any(|d| d == domain)
    }

    /// Whether `slot` is informable or requestable in `domain`.
    pub fn knows_slot(&self, domain: &str, slot: &str) -> bool {
        let (domain, slot) = (normalize_text(domain), normalize_text(slot));
        self.informable
            .contains_key(&(domain.clone(), slot.clone()))
            || self
                .requestable
                .get(&domain)
                .is_some_and(|s| s.contains(&slot))
    }

    /// Informable slot types, excluding `ruk`.
    pub fn slot_types(&self) -> usize {
        self.informable
            .keys()
            .filter(|(_, s)| s != RUK_SLOT)
            .count()
    }

    /// Sum over slot types (excluding `ruk`) of their value-list sizes.
    pub fn slot_values(&self) -> usize {
        self.informable
            .iter()
            .filter(|((_, s), _)| s != RUK_SLOT)
            .map(|(_, v)| v.len())
            .sum()
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ontology::from_json_str(&raw, &path.display().to_string())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    fn bump(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Dev => self.dev += 1,
            Split::Test => self.test += 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub dialogs: SplitCounts,
    pub dialogs_with_inserted_turns: SplitCounts,
    pub turns: usize,
    pub inserted_turns: usize,
    /// Mean turns per dialog over all splits combined.
    pub average_turns: f64,
    pub slot_types: usize,
    pub slot_values: usize,
}

/// Dataset statistics. Slot counts come from the ontology when one is
/// given, otherwise from the distinct `(domain, slot)` and
/// `(domain, slot, value)` pairs of the gold states (`ruk` excluded).
pub fn corpus_stats(corpus: &DialogCorpus, ontology: Option<&Ontology>) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let mut slot_types = BTreeSet::new();
    let mut slot_values = BTreeSet::new();
    for dialog in corpus.dialogs() {
        stats.dialogs.bump(dialog.split);
        if dialog.has_inserted_turns() {
            stats.dialogs_with_inserted_turns.bump(dialog.split);
        }
        stats.turns += dialog.turns.len();
        for turn in &dialog.turns {
            if turn.kind == TurnKind::Inserted {
                stats.inserted_turns += 1;
            }
            for triple in turn.gold_state.non_ruk() {
                let key = (normalize_text(&triple.domain), normalize_text(&triple.slot));
                slot_values.insert((key.clone(), normalize_text(&triple.value)));
                slot_types.insert(key);
            }
        }
    }
    if !corpus.is_empty() {
        stats.average_turns = stats.turns as f64 / corpus.len() as f64;
    }
    match ontology {
        Some(o) => {
            stats.slot_types = o.slot_types();
            stats.slot_values = o.slot_values();
        }
        None => {
            stats.slot_types = slot_types.len();
            stats.slot_values = slot_values.len();
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dialog_json(id: &str, split: &str, n: usize) -> String {
        let turns: Vec<String> = (1..=n)
            .map(|i| {
                format!(
                    r#"{{"index": {i}, "user": "u{i}", "response": "r{i}", "kind": "original", "state": {{"slots": {{"hotel-area": "north"}}}}}}"#
                )
            })
            .collect();
        format!(
            r#"{{"id": "{id}", "split": "{split}", "goal": {{"hotel": {{"constraints": {{"area": "north"}}, "requests": ["phone"]}}}}, "turns": [{}]}}"#,
            turns.join(",")
        )
    }

    fn corpus_of(dialogs: &[String]) -> Result<DialogCorpus> {
        DialogCorpus::from_json_str(&format!("[{}]", dialogs.join(",")), "1", "test")
    }

    #[test]
    fn empty_dialog_list_gives_zero_stats() {
        let corpus = DialogCorpus::from_json_str("[]", "1", "test").unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus_stats(&corpus, None), CorpusStats::default());
    }

    #[test]
    fn average_turns_of_three_and_five() {
        let corpus =
            corpus_of(&[dialog_json("a", "train", 3), dialog_json("b", "test", 5)]).unwrap();
        let stats = corpus_stats(&corpus, None);
        assert_eq!(stats.average_turns, 4.0);
        assert_eq!(
            stats.dialogs,
            SplitCounts {
                train: 1,
                dev: 0,
                test: 1
            }
        );
        assert_eq!(stats.turns, 8);
        assert_eq!(stats.slot_types, 1);
        assert_eq!(stats.slot_values, 1);
    }

    #[test]
    fn duplicate_dialog_ids_rejected() {
        let err =
            corpus_of(&[dialog_json("a", "train", 1), dialog_json("a", "dev", 2)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn missing_field_names_field_and_dialog() {
        let raw = r#"[{"id": "d7", "split": "train", "goal": {}}]"#;
        match DialogCorpus::from_json_str(raw, "1", "test").unwrap_err() {
            Error::Schema {
                location, field, ..
            } => {
                assert!(location.contains("d7"));
                assert_eq!(field, "turns");
            }
            other => panic!("unexpected {other:?}"),
        }
        let raw = r#"[{"id": "d8", "split": "train", "goal": {}, "turns": [{"index": 1, "user": "hi", "kind": "original", "state": {}}]}]"#;
        match DialogCorpus::from_json_str(raw, "1", "test").unwrap_err() {
            Error::Schema {
                location, field, ..
            } => {
                assert!(location.contains("d8"));
                assert_eq!(field, "response");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(
            DialogCorpus::from_json_str("[{", "1", "test"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn version_mismatch() {
        let raw = r#"{"schema_version": "2", "dialogs": []}"#;
        assert!(matches!(
            DialogCorpus::from_json_str(raw, "1", "test"),
            Err(Error::Version { .. })
        ));
        let raw = r#"{"schema_version": "1", "dialogs": []}"#;
        assert!(DialogCorpus::from_json_str(raw, "1", "test")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn inserted_turn_requires_doc_id() {
        let raw = r#"[{"id": "x", "split": "dev", "goal": {}, "turns": [
            {"index": 1, "user": "u", "response": "r", "kind": "inserted", "state": {}}]}]"#;
        assert!(matches!(
            DialogCorpus::from_json_str(raw, "1", "test"),
            Err(Error::Schema { field, .. }) if field == "doc_id"
        ));
    }

    #[test]
    fn turn_indices_must_be_consecutive() {
        let raw = r#"[{"id": "x", "split": "dev", "goal": {}, "turns": [
            {"index": 2, "user": "u", "response": "r", "kind": "original", "state": {}}]}]"#;
        assert!(matches!(
            DialogCorpus::from_json_str(raw, "1", "test"),
            Err(Error::Schema { field, .. }) if field == "index"
        ));
    }

    #[test]
    fn build_context_cases() {
        let corpus = corpus_of(&[dialog_json("a", "train", 3)]).unwrap();
        let dialog = corpus.get("a").unwrap();
        assert_eq!(build_context(dialog, 1).unwrap().parts(), vec!["u1"]);
        assert_eq!(build_context(dialog, 2).unwrap().parts(), vec!["r1", "u2"]);
        assert_eq!(build_context(dialog, 3).unwrap().text(), "r2 u3");
        assert!(matches!(
            build_context(dialog, 4),
            Err(Error::TurnIndex { index: 4, len: 3 })
        ));
        assert!(build_context(dialog, 0).is_err());
    }

    #[test]
    fn document_groups() {
        let raw = r#"[
            {"id": "r2", "domain": "restaurant", "entity": "Pizza Hut", "body": "b"},
            {"id": "r1", "domain": "restaurant", "entity": "pizza hut", "body": "a"},
            {"id": "t1", "domain": "taxi", "body": "c"}
        ]"#;
        let base = DocumentBase::from_json_str(raw, "test").unwrap();
        let ids: Vec<&str> = base.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["r1", "r2", "t1"]);
        assert_eq!(base.entity_count(KnowledgeDomain::Restaurant), 1);
        assert_eq!(base.entity_count(KnowledgeDomain::Taxi), 1);
        assert_eq!(
            base.entity_documents(KnowledgeDomain::Restaurant, "PIZZA HUT")
                .len(),
            2
        );
    }

    #[test]
    fn unknown_document_domain() {
        let raw = r#"[{"id": "p1", "domain": "police", "body": "x"}]"#;
        assert!(matches!(
            DocumentBase::from_json_str(raw, "test"),
            Err(Error::UnknownDomain(d)) if d == "police"
        ));
    }

    #[test]
    fn ontology_counts_exclude_ruk() {
        let raw = r#"{"slots": {"hotel-area": ["north", "south"], "hotel-ruk": ["x"], "train-day": ["monday"]},
                      "requestable": {"hotel": ["phone"]}}"#;
        let onto = Ontology::from_json_str(raw, "test").unwrap();
        assert_eq!(onto.slot_types(), 2);
        assert_eq!(onto.slot_values(), 3);
        assert!(onto.knows_slot("hotel", "phone"));
        assert!(onto.knows_slot("Hotel", "Area"));
        assert!(!onto.knows_slot("hotel", "day"));
        let domains: Vec<&str> = onto.domains().collect();
        assert_eq!(domains, ["hotel", "train"]);
    }
}
