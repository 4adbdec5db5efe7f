use std::collections::HashMap;

use super::metric_tokens;
use crate::error::{Error, Result};

const MAX_ORDER: usize = 4;

/// Sufficient statistics of corpus BLEU-4; merging is associative, so
/// per-worker accumulators can be combined in any grouping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    /// Clipped n-gram matches, n = 1..=4.
    pub matches: [u64; MAX_ORDER],
    /// Candidate n-gram counts, n = 1..=4.
    pub totals: [u64; MAX_ORDER],
    pub candidate_len: u64,
    pub reference_len: u64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

impl BleuStats {
    pub fn sentence(candidate: &[String], reference: &[String]) -> Self {
        let mut stats = BleuStats {
            candidate_len: candidate.len() as u64,
            reference_len: reference.len() as u64,
            ..Self::default()
        };
        for n in 1..=MAX_ORDER {
            let cand = ngram_counts(candidate, n);
            let refs = ngram_counts(reference, n);
            stats.totals[n - 1] = cand.values().sum();
            stats.matches[n - 1] = cand
                .iter()
                .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    pub fn merge(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// BLEU on the 0-100 scale. With `smoothing`, a zero match count for
    /// n >= 2 becomes `(0 + 1) / (total + 1)`; unigram precision is never
    /// smoothed.
    pub fn score(&self, smoothing: bool) -> f64 {
        if self.candidate_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_ORDER {
            let (m, t) = (self.matches[n] as f64, self.totals[n] as f64);
            let p = if n > 0 && self.matches[n] == 0 {
                if !smoothing {
                    return 0.0;
                }
                (m + 1.0) / (t + 1.0)
            } else {
                m / t
            };
            log_sum += p.ln();
        }
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
        100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
    }
}

/// Corpus BLEU-4 with brevity penalty and add-one smoothing, 0-100.
pub fn bleu<S: AsRef<str>>(candidates: &[S], references: &[S]) -> Result<f64> {
    bleu_with(candidates, references, true)
}

pub fn bleu_with<S: AsRef<str>>(
    candidates: &[S],
    references: &[S],
    smoothing: bool,
) -> Result<f64> {
    if candidates.len() != references.len() {
        return Err(Error::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let mut stats = BleuStats::default();
    for (c, r) in candidates.iter().zip(references) {
        stats.merge(&BleuStats::sentence(
            &metric_tokens(c.as_ref()),
            &metric_tokens(r.as_ref()),
        ));
    }
    Ok(stats.score(smoothing))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_match_is_100() {
        let refs = ["the hotel is in the north", "yes", "i booked it for you"];
        assert!((bleu(&refs, &refs).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn no_shared_unigrams_is_zero() {
        assert_eq!(bleu(&["a b c"], &["x y z"]).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_short_candidate() {
        // p1 = 3/3, p2 = 2/2, p3 = 1/1, p4 smoothed (0+1)/(0+1);
        // c = 3 < r = 4, so BP = exp(1 - 4/3)
        let got = bleu(&["the cat sat"], &["the cat sat down"]).unwrap();
        let expected = 100.0 * (1.0f64 - 4.0 / 3.0).exp();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert_eq!(
            bleu_with(&["the cat sat"], &["the cat sat down"], false).unwrap(),
            0.0
        );
    }

    #[test]
    fn clipping() {
        // candidate "the the the" vs "the cat": unigram matches clipped to 1
        let s = BleuStats::sentence(&metric_tokens("the the the"), &metric_tokens("the cat"));
        assert_eq!(s.matches[0], 1);
        assert_eq!(s.totals[0], 3);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            bleu(&["a"], &["a", "b"]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn merge_is_order_independent() {
        let a = BleuStats::sentence(&metric_tokens("a b c d"), &metric_tokens("a b d"));
        let b = BleuStats::sentence(&metric_tokens("x y"), &metric_tokens("x y z"));
        let mut ab = a;
        ab.merge(&b);
        let mut ba = b;
        ba.merge(&a);
        assert_eq!(ab, ba);
    }
}
