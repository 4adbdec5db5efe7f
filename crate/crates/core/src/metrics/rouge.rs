use super::metric_tokens;

pub const ROUGE_L_BETA: f64 = 1.2;

/// Longest common subsequence length of two token sequences.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// LCS-based F-measure in `[0, 1]` with recall weighted by beta = 1.2.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let c = metric_tokens(candidate);
    let r = metric_tokens(reference);
    rouge_l_tokens(&c, &r)
}

pub(crate) fn rouge_l_tokens(c: &[String], r: &[String]) -> f64 {
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(c, r) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / c.len() as f64;
    let rec = lcs / r.len() as f64;
    let b2 = ROUGE_L_BETA * ROUGE_L_BETA;
    (1.0 + b2) * p * rec / (rec + b2 * p)
}
