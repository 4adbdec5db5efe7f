//! Dialog-level Inform and Success.
//!
//! Delexicalized mode follows the MultiWOZ convention: a response offers an
//! entity of domain `d` when it contains `[d_name]` (or `[d_id]`), and the
//! offered entity is the first DB match of the predicted belief state at
//! that turn. A requested slot `s` is answered when some response contains
//! `[d_s]`, with spaces in `s` turned into underscores and `trainid` written
//! as `id`. Lexical mode detects offers by entity names appearing in the
//! response and answers by the offered entity's slot value, or the slot
//! name when the entity has no value.

use serde::{Deserialize, Serialize};

use crate::belief::ExtendedBeliefState;
use crate::corpus::{GoalSpec, Ontology, MULTIWOZ_DOMAINS};
use crate::error::{Error, Result};
use crate::structured::Database;
use crate::text::normalize_text;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseMode {
    #[default]
    Delex,
    Lexical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogOutcome {
    pub inform: bool,
    pub success: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Offer {
    Entity(usize),
    /// Offered by placeholder in a domain without a DB table.
    Placeholder,
}

fn placeholder(domain: &str, slot: &str) -> String {
    // train ids are delexicalized as `[train_id]`
    let slot = if slot == "trainid" { "id" } else { slot };
    format!("[{}_{}]", domain, slot.replace(' ', "_"))
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(needle).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + needle.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// Evaluates one dialog. `turns` holds the predicted state and the
/// response of every turn in order.
pub fn inform_success(
    turns: &[(&ExtendedBeliefState, &str)],
    goal: &GoalSpec,
    db: &Database,
    ontology: Option<&Ontology>,
    mode: ResponseMode,
) -> Result<DialogOutcome> {
    let responses: Vec<String> = turns.iter().map(|(_, r)| r.to_lowercase()).collect();
    let mut inform = true;
    let mut answered = true;
    let mut any_domain = false;

    for (domain, dg) in &goal.domains {
        let domain = normalize_text(domain);
        let known = match ontology {
            Some(o) => o.has_domain(&domain),
            None => MULTIWOZ_DOMAINS.contains(&domain.as_str()),
        };
        if !known {
            return Err(Error::UnknownDomain(domain));
        }
        if dg.constraints.is_empty() && dg.requests.is_empty() {
            continue;
        }
        any_domain = true;
        let table = db.table(&domain);

        let mut offer: Option<Offer> = None;
        for ((state, _), resp) in turns.iter().zip(&responses) {
            match (mode, table) {
                (ResponseMode::Delex, _) => {
                    let mentioned = resp.contains(&placeholder(&domain, "name"))
                        || resp.contains(&placeholder(&domain, "id"));
                    if !mentioned {
                        continue;
                    }
                    if table.is_some() {
                        let result = db.query(state, &domain)?;
                        if let Some(first) = result.matched_entities.first() {
                            offer = Some(Offer::Entity(first.index));
                        }
                    } else {
                        offer = Some(Offer::Placeholder);
                    }
                }
                (ResponseMode::Lexical, Some(entries)) => {
                    let norm = normalize_text(resp);
                    let hit = entries
                        .iter()
                        .enumerate()
                        .filter_map(|(i, e)| e.name().map(|n| (i, normalize_text(n))))
                        .filter(|(_, n)| contains_word(&norm, n))
                        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)));
                    if let Some((i, _)) = hit {
                        offer = Some(Offer::Entity(i));
                    }
                }
                (ResponseMode::Lexical, None) => {
                    if resp.contains(&placeholder(&domain, "name")) {
                        offer = Some(Offer::Placeholder);
                    }
                }
            }
        }

        let domain_inform = if dg.constraints.is_empty() {
            true
        } else {
            match offer {
                None => false,
                Some(Offer::Placeholder) => true,
                Some(Offer::Entity(i)) => {
                    let constraints = dg.constraints.iter().map(|(s, v)| (s.as_str(), v.as_str()));
                    db.query_constraints(&domain, constraints)?
                        .matched_entities
                        .iter()
                        .any(|e| e.index == i)
                }
            }
        };

        let entity = match (offer, table) {
            (Some(Offer::Entity(i)), Some(entries)) => entries.get(i),
            _ => None,
        };
        let domain_answered = dg.requests.iter().all(|slot| match mode {
            ResponseMode::Delex => {
                let token = placeholder(&domain, &normalize_text(slot));
                responses.iter().any(|r| r.contains(&token))
            }
            ResponseMode::Lexical => {
                let slot = normalize_text(slot);
                let needle = entity
                    .and_then(|e| e.slots.get(&slot))
                    .map(|v| normalize_text(v))
                    .unwrap_or_else(|| slot.clone());
                responses
                    .iter()
                    .any(|r| contains_word(&normalize_text(r), &needle))
            }
        });

        inform &= domain_inform;
        answered &= domain_answered;
    }

    let inform = inform && any_domain;
    Ok(DialogOutcome {
        inform,
        success: inform && answered,
    })
}
