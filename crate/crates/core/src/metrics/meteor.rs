use rust_stemmers::{Algorithm, Stemmer};

use super::metric_tokens;

/// METEOR parameters: F-mean weight `alpha`, fragmentation exponent `beta`
/// and penalty weight `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Sentence METEOR in `[0, 1]` with exact and Porter-stem matching.
pub fn meteor(candidate: &str, reference: &str) -> f64 {
    meteor_tokens(
        &metric_tokens(candidate),
        &metric_tokens(reference),
        &MeteorParams::default(),
    )
}

/// Aligns candidate to reference tokens: exact matches first, then stem
/// matches, each stage scanning the candidate left to right and taking the
/// first free reference position. Returns `(candidate, reference)` pairs in
/// candidate order.
fn align(c: &[String], r: &[String]) -> Vec<(usize, usize)> {
    let stemmer = Stemmer::create(Algorithm::English);
    let c_stems: Vec<String> = c.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let r_stems: Vec<String> = r.iter().map(|t| stemmer.stem(t).into_owned()).collect();

    let mut c_used = vec![false; c.len()];
    let mut r_used = vec![false; r.len()];
    let mut pairs = Vec::new();
    for (cs, rs) in [(c, r), (&c_stems[..], &r_stems[..])] {
        for i in 0..c.len() {
            if c_used[i] {
                continue;
            }
            if let Some(j) = (0..r.len()).find(|&j| !r_used[j] && cs[i] == rs[j]) {
                c_used[i] = true;
                r_used[j] = true;
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

pub(crate) fn meteor_tokens(c: &[String], r: &[String], params: &MeteorParams) -> f64 {
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let pairs = align(c, r);
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / c.len() as f64;
    let recall = m as f64 / r.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let chunks = 1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let penalty = params.gamma * (chunks as f64 / m as f64).powf(params.beta);
    fmean * (1.0 - penalty)
}
