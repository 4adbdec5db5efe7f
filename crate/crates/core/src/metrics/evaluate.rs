use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bleu::BleuStats;
use super::meteor::{meteor_tokens, MeteorParams};
use super::ranking::{mrr_at_k, r_at_1};
use super::rouge::rouge_l_tokens;
use super::task::{inform_success, DialogOutcome, ResponseMode};
use super::{combined_score, metric_tokens};
use crate::belief::{normalize_state, DsvTriple, ExtendedBeliefState};
use crate::corpus::{Dialog, DialogCorpus, Ontology, Split, TurnKind};
use crate::error::{Error, Result};
use crate::structured::Database;
use crate::text::CanonMap;

const MRR_K: usize = 5;

mod flat_state {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::belief::{parse_state, serialize_state, ExtendedBeliefState};

    pub fn serialize<S: Serializer>(state: &ExtendedBeliefState, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&serialize_state(state))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExtendedBeliefState, D::Error> {
        let text = String::deserialize(d)?;
        parse_state(&text).map_err(serde::de::Error::custom)
    }
}

/// One line of a prediction file; `state` uses the flat text format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnPrediction {
    pub dialog_id: String,
    pub turn_index: usize,
    #[serde(with = "flat_state")]
    pub state: ExtendedBeliefState,
    #[serde(default)]
    pub ranked_docs: Vec<String>,
    #[serde(default)]
    pub response: String,
}

/// Predictions keyed by `(dialog id, turn index)`.
#[derive(Clone, Debug, Default)]
pub struct PredictionSet {
    by_turn: HashMap<(String, usize), TurnPrediction>,
}

impl PredictionSet {
    pub fn new(predictions: impl IntoIterator<Item = TurnPrediction>) -> Result<Self> {
        let mut by_turn = HashMap::new();
        for p in predictions {
            let key = (p.dialog_id.clone(), p.turn_index);
            if by_turn.contains_key(&key) {
                return Err(Error::DuplicatePrediction {
                    dialog_id: key.0,
                    turn: key.1,
                });
            }
            by_turn.insert(key, p);
        }
        Ok(Self { by_turn })
    }

    pub fn from_json_str(raw: &str, context: &str) -> Result<Self> {
        let list: Vec<TurnPrediction> =
            serde_json::from_str(raw).map_err(|e| Error::parse(context, e))?;
        Self::new(list)
    }

    pub fn len(&self) -> usize {
        self.by_turn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_turn.is_empty()
    }

    pub fn get(&self, dialog_id: &str, turn: usize) -> Option<&TurnPrediction> {
        self.by_turn.get(&(dialog_id.to_string(), turn))
    }

    fn require(&self, dialog_id: &str, turn: usize) -> Result<&TurnPrediction> {
        self.get(dialog_id, turn)
            .ok_or_else(|| Error::MissingPrediction {
                dialog_id: dialog_id.to_string(),
                turn,
            })
    }

    /// Predictions sorted by `(dialog id, turn index)`.
    pub fn to_json(&self) -> String {
        let mut list: Vec<&TurnPrediction> = self.by_turn.values().collect();
        list.sort_by(|a, b| (&a.dialog_id, a.turn_index).cmp(&(&b.dialog_id, b.turn_index)));
        let mut s = serde_json::to_string_pretty(&list).expect("predictions serialize");
        s.push('\n');
        s
    }
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionSet> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PredictionSet::from_json_str(&raw, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub mode: ResponseMode,
    pub bleu_smoothing: bool,
    pub canon: CanonMap,
    pub ontology: Option<Ontology>,
    /// Evaluate only this split.
    pub split: Option<Split>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mode: ResponseMode::Delex,
            bleu_smoothing: true,
            canon: CanonMap::new(),
            ontology: None,
            split: None,
        }
    }
}

fn tracked_triples(state: &ExtendedBeliefState, canon: &CanonMap) -> Vec<DsvTriple> {
    normalize_state(state, canon).non_ruk().cloned().collect()
}

/// Percentage of original turns whose normalized non-`ruk` triples equal
/// the gold ones exactly.
pub fn joint_goal(
    predictions: &PredictionSet,
    corpus: &DialogCorpus,
    canon: &CanonMap,
) -> Result<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for dialog in corpus.dialogs() {
        for turn in dialog.turns.iter().filter(|t| t.kind == TurnKind::Original) {
            let pred = predictions.require(&dialog.id, turn.index)?;
            total += 1;
            if tracked_triples(&pred.state, canon) == tracked_triples(&turn.gold_state, canon) {
                correct += 1;
            }
        }
    }
    Ok(percent(correct as f64, total))
}

fn percent(x: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * x / n as f64
    }
}

fn mean(x: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        x / n as f64
    }
}

#[derive(Clone, Debug, Default)]
struct LanguageAcc {
    bleu: BleuStats,
    meteor: f64,
    rouge: f64,
    turns: usize,
}

impl LanguageAcc {
    fn merge(&mut self, other: &LanguageAcc) {
        self.bleu.merge(&other.bleu);
        self.meteor += other.meteor;
        self.rouge += other.rouge;
        self.turns += other.turns;
    }

    fn scores(&self, smoothing: bool) -> LanguageScores {
        LanguageScores {
            bleu: self.bleu.score(smoothing),
            meteor: 100.0 * mean(self.meteor, self.turns),
            rouge_l: 100.0 * mean(self.rouge, self.turns),
            turns: self.turns,
        }
    }
}

/// Per-dialog partial results; summed sequentially in dialog-id order.
#[derive(Clone, Debug)]
struct DialogEval {
    split: Split,
    original: LanguageAcc,
    inserted: LanguageAcc,
    joint_correct: usize,
    mrr: f64,
    r1: f64,
    outcome: DialogOutcome,
}

fn eval_dialog(
    dialog: &Dialog,
    predictions: &PredictionSet,
    db: &Database,
    opts: &EvalOptions,
) -> Result<DialogEval> {
    let mut acc = DialogEval {
        split: dialog.split,
        original: LanguageAcc::default(),
        inserted: LanguageAcc::default(),
        joint_correct: 0,
        mrr: 0.0,
        r1: 0.0,
        outcome: DialogOutcome::default(),
    };
    let params = MeteorParams::default();
    let mut turns = Vec::with_capacity(dialog.turns.len());
    for turn in &dialog.turns {
        let pred = predictions.require(&dialog.id, turn.index)?;
        let c = metric_tokens(&pred.response);
        let r = metric_tokens(&turn.system_response);
        let lang = match turn.kind {
            TurnKind::Original => &mut acc.original,
            TurnKind::Inserted => &mut acc.inserted,
        };
        lang.bleu.merge(&BleuStats::sentence(&c, &r));
        lang.meteor += meteor_tokens(&c, &r, &params);
        lang.rouge += rouge_l_tokens(&c, &r);
        lang.turns += 1;

        match (turn.kind, &turn.gold_document_id) {
            (TurnKind::Original, _) => {
                if tracked_triples(&pred.state, &opts.canon)
                    == tracked_triples(&turn.gold_state, &opts.canon)
                {
                    acc.joint_correct += 1;
                }
            }
            (TurnKind::Inserted, Some(gold)) => {
                acc.mrr += mrr_at_k(&pred.ranked_docs, gold, MRR_K)?;
                acc.r1 += r_at_1(&pred.ranked_docs, gold)?;
            }
            (TurnKind::Inserted, None) => {}
        }
        turns.push((&pred.state, pred.response.as_str()));
    }
    acc.outcome = inform_success(&turns, &dialog.goal, db, opts.ontology.as_ref(), opts.mode)?;
    Ok(acc)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageScores {
    pub bleu: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub turns: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KindScores {
    pub original: LanguageScores,
    pub inserted: LanguageScores,
}

/// Every metric over one set of dialogs. Percentages and BLEU-family
/// values are on the 0-100 scale; `mrr5` and `r1` are in `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub inform: f64,
    pub success: f64,
    pub bleu: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub combined: f64,
    pub joint_goal: f64,
    pub mrr5: f64,
    pub r1: f64,
    pub dialogs: usize,
    pub original_turns: usize,
    pub inserted_turns: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub overall: MetricSet,
    pub by_split: BTreeMap<Split, MetricSet>,
    pub by_kind: KindScores,
}

fn aggregate<'a>(
    evals: impl IntoIterator<Item = &'a DialogEval>,
    smoothing: bool,
) -> (MetricSet, KindScores) {
    let (mut original, mut inserted) = (LanguageAcc::default(), LanguageAcc::default());
    let (mut inform, mut success, mut dialogs) = (0usize, 0usize, 0usize);
    let (mut joint, mut mrr, mut r1) = (0usize, 0.0, 0.0);
    for e in evals {
        dialogs += 1;
        inform += usize::from(e.outcome.inform);
        success += usize::from(e.outcome.success);
        original.merge(&e.original);
        inserted.merge(&e.inserted);
        joint += e.joint_correct;
        mrr += e.mrr;
        r1 += e.r1;
    }
    let mut all = original.clone();
    all.merge(&inserted);
    let lang = all.scores(smoothing);
    let inform = percent(inform as f64, dialogs);
    let success = percent(success as f64, dialogs);
    let set = MetricSet {
        inform,
        success,
        bleu: lang.bleu,
        meteor: lang.meteor,
        rouge_l: lang.rouge_l,
        combined: combined_score(inform, success, lang.bleu),
        joint_goal: percent(joint as f64, original.turns),
        mrr5: mean(mrr, inserted.turns),
        r1: mean(r1, inserted.turns),
        dialogs,
        original_turns: original.turns,
        inserted_turns: inserted.turns,
    };
    let kinds = KindScores {
        original: original.scores(smoothing),
        inserted: inserted.scores(smoothing),
    };
    (set, kinds)
}

/// Scores predictions against the gold corpus: Joint Goal over original
/// turns, MRR@5 and R@1 over inserted turns, language metrics over all
/// turns, Inform and Success per dialog. Dialogs are evaluated in parallel
/// and reduced in id order, so the report does not depend on thread count.
pub fn evaluate(
    corpus: &DialogCorpus,
    predictions: &PredictionSet,
    db: &Database,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let dialogs: Vec<&Dialog> = corpus
        .dialogs()
        .filter(|d| opts.split.is_none_or(|s| d.split == s))
        .collect();
    let evals = dialogs
        .par_iter()
        .map(|d| eval_dialog(d, predictions, db, opts))
        .collect::<Result<Vec<_>>>()?;
    let (overall, by_kind) = aggregate(&evals, opts.bleu_smoothing);
    let by_split = Split::ALL
        .into_iter()
        .filter(|s| evals.iter().any(|e| e.split == *s))
        .map(|s| {
            (
                s,
                aggregate(evals.iter().filter(|e| e.split == s), opts.bleu_smoothing).0,
            )
        })
        .collect();
    Ok(EvalReport {
        overall,
        by_split,
        by_kind,
    })
}
