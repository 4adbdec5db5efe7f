use std::collections::HashSet;

use crate::error::{Error, Result};

fn check_unique(ranked: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ranked.len());
    for id in ranked {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateDoc(id.clone()));
        }
    }
    Ok(())
}

/// Reciprocal rank of `gold` if it is within the top `k`, else 0.
pub fn mrr_at_k(ranked: &[String], gold: &str, k: usize) -> Result<f64> {
    check_unique(ranked)?;
    Ok(ranked
        .iter()
        .take(k)
        .position(|d| d == gold)
        .map_or(0.0, |p| 1.0 / (p + 1) as f64))
}

/// 1 if the top-ranked document is `gold`, else 0.
pub fn r_at_1(ranked: &[String], gold: &str) -> Result<f64> {
    check_unique(ranked)?;
    Ok(if ranked.first().is_some_and(|d| d == gold) {
        1.0
    } else {
        0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking_with_gold_at(rank: usize) -> Vec<String> {
        (1..=10)
            .map(|i| {
                if i == rank {
                    "gold".to_string()
                } else {
                    format!("d{i}")
                }
            })
            .collect()
    }

    #[test]
    fn examples() {
        let r = ranking_with_gold_at(1);
        assert_eq!(mrr_at_k(&r, "gold", 5).unwrap(), 1.0);
        assert_eq!(r_at_1(&r, "gold").unwrap(), 1.0);
        let r = ranking_with_gold_at(3);
        assert_eq!(mrr_at_k(&r, "gold", 5).unwrap(), 1.0 / 3.0);
        assert_eq!(r_at_1(&r, "gold").unwrap(), 0.0);
        assert_eq!(mrr_at_k(&ranking_with_gold_at(6), "gold", 5).unwrap(), 0.0);
        assert_eq!(mrr_at_k(&[], "gold", 5).unwrap(), 0.0);
        assert_eq!(r_at_1(&[], "gold").unwrap(), 0.0);
    }

    #[test]
    fn duplicates_rejected() {
        let r = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        assert!(matches!(mrr_at_k(&r, "a", 5), Err(Error::DuplicateDoc(d)) if d == "a"));
        assert!(r_at_1(&r, "a").is_err());
    }
}
