//! Database query over the belief state and the match-vector encoding of
//! its result.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::{ExtendedBeliefState, DONTCARE};
use crate::corpus::Ontology;
use crate::error::{Error, Result};
use crate::text::{normalize_text, CanonMap};

/// Slots carrying booking details rather than entity attributes start with
/// this prefix; they never constrain a DB lookup.
pub const BOOKING_SLOT_PREFIX: &str = "book";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbEntry {
    pub slots: BTreeMap<String, String>,
    #[serde(default)]
    pub bookable: bool,
}

impl DbEntry {
    /// Display name: the `name` slot, falling back to a train id.
    pub fn name(&self) -> Option<&str> {
        ["name", "trainid", "id"]
            .iter()
            .find_map(|k| self.slots.get(*k))
            .map(String::as_str)
    }
}

/// Per-domain tables of entries. Immutable after load.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    tables: BTreeMap<String, Vec<DbEntry>>,
    canon: CanonMap,
}

impl Database {
    /// Builds a database, checking entry slots against the ontology when
    /// one is supplied.
    pub fn new(
        tables: BTreeMap<String, Vec<DbEntry>>,
        ontology: Option<&Ontology>,
    ) -> Result<Self> {
        let tables: BTreeMap<String, Vec<DbEntry>> = tables
            .into_iter()
            .map(|(d, entries)| {
                let entries = entries
                    .into_iter()
                    .map(|e| DbEntry {
                        slots: e
                            .slots
                            .into_iter()
                            .map(|(k, v)| (normalize_text(&k), v))
                            .collect(),
                        bookable: e.bookable,
                    })
                    .collect();
                (normalize_text(&d), entries)
            })
            .collect();
        if let Some(ontology) = ontology {
            for (domain, entries) in &tables {
                if !ontology.has_domain(domain) {
                    return Err(Error::UnknownDomain(domain.clone()));
                }
                for entry in entries {
                    if let Some(slot) = entry.slots.keys().find(|s| !ontology.knows_slot(domain, s))
                    {
                        return Err(Error::UnknownSlot {
                            domain: domain.clone(),
                            slot: slot.clone(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            tables,
            canon: CanonMap::new(),
        })
    }

    pub fn from_json_str(raw: &str, ontology: Option<&Ontology>, context: &str) -> Result<Self> {
        let tables: BTreeMap<String, Vec<DbEntry>> =
            serde_json::from_str(raw).map_err(|e| Error::parse(context, e))?;
        Self::new(tables, ontology)
    }

    /// Value canonicalization used when comparing state and entry values.
    pub fn with_canon_map(mut self, canon: CanonMap) -> Self {
        self.canon = canon;
        self
    }

    pub fn has_domain(&self, domain: &str) -> bool {
        self.tables.contains_key(&normalize_text(domain))
    }

    pub fn table(&self, domain: &str) -> Option<&[DbEntry]> {
        self.tables.get(&normalize_text(domain)).map(Vec::as_slice)
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    /// Matches the non-`ruk` triples of `domain` in `state` against the
    /// domain's table.
    pub fn query(&self, state: &ExtendedBeliefState, domain: &str) -> Result<MatchResult> {
        let domain_norm = normalize_text(domain);
        let constraints = state
            .non_ruk()
            .filter(|t| normalize_text(&t.domain) == domain_norm)
            .map(|t| (t.slot.as_str(), t.value.as_str()));
        self.query_constraints(domain, constraints)
    }

    /// Matches bare `(slot, value)` constraints against one table. Values
    /// equal to `dontcare` and booking slots impose nothing; an entry
    /// lacking a constrained slot does not match.
    pub fn query_constraints<'a>(
        &self,
        domain: &str,
        constraints: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<MatchResult> {
        let domain_norm = normalize_text(domain);
        let table = self
            .tables
            .get(&domain_norm)
            .ok_or_else(|| Error::UnknownDomain(domain.to_string()))?;
        let constraints: Vec<(String, String)> = constraints
            .into_iter()
            .map(|(s, v)| (normalize_text(s), self.canon.canonical(v)))
            .filter(|(s, v)| v != DONTCARE && !s.starts_with(BOOKING_SLOT_PREFIX))
            .collect();
        let matched: Vec<usize> = table
            .iter()
            .enumerate()
            .filter(|(_, entry)| {
                constraints.iter().all(|(slot, value)| {
                    entry
                        .slots
                        .get(slot)
                        .is_some_and(|v| self.canon.canonical(v) == *value)
                })
            })
            .map(|(i, _)| i)
            .collect();
        let booking_available = matched.iter().any(|&i| table[i].bookable);
        Ok(MatchResult {
            domain: domain_norm,
            count: matched.len(),
            matched_entities: matched
                .iter()
                .map(|&i| EntityRef {
                    index: i,
                    name: table[i].name().map(str::to_string),
                })
                .collect(),
            booking_available,
        })
    }
}

/// Reads a DB file: `{domain: [{"slots": {...}, "bookable": bool}]}`.
pub fn load_database(path: impl AsRef<Path>, ontology: Option<&Ontology>) -> Result<Database> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Database::from_json_str(&raw, ontology, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    /// Position in the domain's table.
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub domain: String,
    pub matched_entities: Vec<EntityRef>,
    pub count: usize,
    pub booking_available: bool,
}

/// Upper bounds (inclusive) of all count buckets but the last; the last
/// bucket is open-ended. The default `[0, 1, 3]` yields
/// `{0}, {1}, {2, 3}, {4, ..}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BucketScheme(Vec<usize>);

impl Default for BucketScheme {
    fn default() -> Self {
        BucketScheme(vec![0, 1, 3])
    }
}

impl BucketScheme {
    /// Bounds must be strictly increasing.
    pub fn new(bounds: Vec<usize>) -> Result<Self> {
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "bucket bounds {bounds:?} not increasing"
            )));
        }
        Ok(BucketScheme(bounds))
    }

    pub fn buckets(&self) -> usize {
        self.0.len() + 1
    }

    pub fn bucket_of(&self, count: usize) -> usize {
        self.0
            .iter()
            .position(|&b| count <= b)
            .unwrap_or(self.0.len())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchVector {
    pub count_bucket: Vec<u8>,
    pub booking_bit: u8,
}

impl MatchVector {
    /// Bucket one-hot followed by the booking bit.
    pub fn to_vec(&self) -> Vec<u8> {
        let mut v = self.count_bucket.clone();
        v.push(self.booking_bit);
        v
    }
}

pub fn encode_match(result: &MatchResult) -> MatchVector {
    encode_match_with(result, &BucketScheme::default())
}

pub fn encode_match_with(result: &MatchResult, scheme: &BucketScheme) -> MatchVector {
    let mut count_bucket = vec![0; scheme.buckets()];
    count_bucket[scheme.bucket_of(result.count)] = 1;
    MatchVector {
        count_bucket,
        booking_bit: u8::from(result.booking_available),
    }
}
