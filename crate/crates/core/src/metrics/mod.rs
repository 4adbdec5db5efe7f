//! Evaluation metrics: language quality (BLEU, METEOR, ROUGE-L), task
//! completion (Inform, Success, Combined), belief tracking (Joint Goal) and
//! document retrieval (MRR@k, R@1).

mod bleu;
mod evaluate;
mod meteor;
mod ranking;
mod rouge;
mod task;

pub use bleu::{bleu, bleu_with, BleuStats};
pub use evaluate::{
    evaluate, joint_goal, load_predictions, EvalOptions, EvalReport, KindScores, LanguageScores,
    MetricSet, PredictionSet, TurnPrediction,
};
pub use meteor::{meteor, MeteorParams};
pub use ranking::{mrr_at_k, r_at_1};
pub use rouge::{lcs_len, rouge_l, ROUGE_L_BETA};
pub use task::{inform_success, DialogOutcome, ResponseMode};

/// `(inform + success) * 0.5 + bleu`, all on the 0-100 scale.
pub fn combined_score(inform: f64, success: f64, bleu: f64) -> f64 {
    (inform + success) * 0.5 + bleu
}

/// Lowercased whitespace tokens used by the language metrics.
pub fn metric_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}
