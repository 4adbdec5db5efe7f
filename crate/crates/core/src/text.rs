//! Text normalization shared by belief-state comparison and DB matching.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases, trims and collapses internal whitespace runs to one space.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Value canonicalization table (e.g. `centre` -> `center`).
///
/// Keys and targets are stored normalized. Lookups follow chains to a fixed
/// point so that canonicalization stays idempotent even for tables like
/// `{a -> b, b -> c}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonMap {
    entries: BTreeMap<String, String>,
}

impl CanonMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let entries = pairs
            .into_iter()
            .map(|(k, v)| (normalize_text(k.as_ref()), normalize_text(v.as_ref())))
            .filter(|(k, v)| !k.is_empty() && k != v)
            .collect();
        Self { entries }
    }

    /// Loads a JSON object mapping surface values to canonical values.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: BTreeMap<String, String> =
            serde_json::from_str(&raw).map_err(|e| Error::parse(path.display().to_string(), e))?;
        Ok(Self::from_pairs(map))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Normalizes `value` and substitutes its canonical form.
    ///
    /// A cycle in the table resolves to its lexicographically smallest member.
    pub fn canonical(&self, value: &str) -> String {
        let mut current = normalize_text(value);
        let mut seen = vec![current.clone()];
        while let Some(next) = self.entries.get(&current) {
            if seen.contains(next) {
                let start = seen.iter().position(|s| s == next).unwrap_or(0);
                return seen[start..].iter().min().cloned().unwrap_or(current);
            }
            seen.push(next.clone());
            current = next.clone();
        }
        current
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_and_lowercases() {
        assert_eq!(normalize_text("  North  "), "north");
        assert_eq!(
            normalize_text("Arbury\tLodge   Guesthouse"),
            "arbury lodge guesthouse"
        );
        assert_eq!(normalize_text(""), "");
    }

    #[test]
    fn canon_map_follows_chains() {
        let map = CanonMap::from_pairs([("centre", "center"), ("Center", "centre of town")]);
        assert_eq!(map.canonical("Centre"), "centre of town");
        assert_eq!(
            map.canonical(&map.canonical("centre")),
            map.canonical("centre")
        );
    }

    #[test]
    fn canon_map_cycle_terminates() {
        let map = CanonMap::from_pairs([("a", "b"), ("b", "a")]);
        assert_eq!(map.canonical("a"), "a");
        assert_eq!(map.canonical("b"), "a");
    }
}
