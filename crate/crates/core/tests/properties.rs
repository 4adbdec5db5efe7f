use std::collections::BTreeMap;

use dialkm_core::belief::{
    extend_label, normalize_state, parse_state, serialize_state, vocabulary_sizes, DsvTriple,
    ExtendedBeliefState, Topic,
};
use dialkm_core::corpus::{corpus_stats, DialogCorpus, Document, DocumentBase, KnowledgeDomain};
use dialkm_core::metrics::{combined_score, lcs_len, mrr_at_k, r_at_1};
use dialkm_core::retrieval::{fuzzy_ratio, topic_match_retrieve, RetrievalQuery};
use dialkm_core::structured::{encode_match, Database, DbEntry, MatchResult};
use dialkm_core::text::CanonMap;
use dialkm_core::unstructured::{build_index, IndexConfig};
use dialkm_core::Tokenizer;
use proptest::prelude::*;

fn triple() -> impl Strategy<Value = DsvTriple> {
    (
        prop::sample::select(vec!["hotel", "restaurant", "train", "taxi", "attraction"]),
        "[a-z]{1,6}( [a-z]{1,4})?",
        "[a-z0-9:]{1,6}( [a-z0-9]{1,5}){0,2}",
    )
        .prop_map(|(d, s, v)| DsvTriple::new(d, s, v))
}

fn plain_state() -> impl Strategy<Value = ExtendedBeliefState> {
    prop::collection::vec(triple(), 0..6).prop_map(|ts| {
        let mut seen = BTreeMap::new();
        for t in ts {
            if t.slot != "ruk" {
                seen.entry((t.domain.clone(), t.slot.clone())).or_insert(t);
            }
        }
        ExtendedBeliefState::from_triples(seen.into_values()).unwrap()
    })
}

fn extended_state() -> impl Strategy<Value = ExtendedBeliefState> {
    (
        plain_state(),
        prop::option::of((
            prop::sample::select(KnowledgeDomain::ALL.to_vec()),
            "[a-z]{1,8}( [a-z]{1,6}){0,2}",
            prop::collection::vec("[a-z]{1,9}", 0..3),
        )),
    )
        .prop_map(|(state, ruk)| match ruk {
            None => state,
            Some((domain, entity, topic)) => {
                let mut triples = state.triples().to_vec();
                triples.push(DsvTriple::new(domain.as_str(), "ruk", entity));
                ExtendedBeliefState::new(triples, Topic::new(topic)).unwrap()
            }
        })
}

fn messy(s: &str) -> String {
    s.split(' ')
        .enumerate()
        .map(|(i, w)| {
            if i % 2 == 0 {
                w.to_uppercase()
            } else {
                w.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("  ")
}

fn hotel_db(entries: &[(String, String, bool)]) -> Database {
    let table = entries
        .iter()
        .map(|(area, price, bookable)| DbEntry {
            slots: [
                ("area".to_string(), area.clone()),
                ("pricerange".to_string(), price.clone()),
            ]
            .into(),
            bookable: *bookable,
        })
        .collect();
    Database::new([("hotel".to_string(), table)].into(), None).unwrap()
}

fn entries() -> impl Strategy<Value = Vec<(String, String, bool)>> {
    prop::collection::vec(
        (
            prop::sample::select(vec!["north", "south", "centre"]).prop_map(String::from),
            prop::sample::select(vec!["cheap", "moderate"]).prop_map(String::from),
            any::<bool>(),
        ),
        0..12,
    )
}

proptest! {
    #[test]
    fn flat_format_round_trips(state in extended_state()) {
        let text = serialize_state(&state);
        let back = parse_state(&text).unwrap();
        prop_assert_eq!(&back, &state);
        prop_assert_eq!(serialize_state(&back), text);
    }

    #[test]
    fn json_round_trips(state in extended_state()) {
        let json = serde_json::to_string(&state).unwrap();
        let back: ExtendedBeliefState = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, state);
    }

    #[test]
    fn normalize_is_idempotent(state in extended_state(), shout in any::<bool>()) {
        let state = if shout {
            let triples = state.triples().iter().map(|t| DsvTriple::new(&t.domain, &t.slot, format!(" {} ", messy(&t.value))));
            ExtendedBeliefState::new(triples, state.topic().clone()).unwrap()
        } else {
            state
        };
        let canon = CanonMap::from_pairs([("centre", "center"), ("b", "a")]);
        let once = normalize_state(&state, &canon);
        prop_assert_eq!(normalize_state(&once, &canon), once.clone());
        for t in once.triples() {
            prop_assert_eq!(t.value.trim(), t.value.as_str());
            prop_assert_eq!(t.value.to_lowercase(), t.value.clone());
        }
    }

    #[test]
    fn extend_label_keeps_original_triples(state in plain_state(), entity in prop::option::of("[a-z]{1,10}"), topic in prop::collection::vec("[a-z]{1,8}", 1..3)) {
        let doc = Document {
            id: "d".into(),
            domain: if entity.is_some() { KnowledgeDomain::Hotel } else { KnowledgeDomain::Taxi },
            entity: entity.clone(),
            body: "b".into(),
        };
        let out = extend_label(&state, Some((&doc, &topic))).unwrap();
        prop_assert_eq!(out.non_ruk().cloned().collect::<Vec<_>>(), state.triples().to_vec());
        let ruk = out.ruk().unwrap();
        prop_assert_eq!(ruk.value.as_str(), entity.as_deref().unwrap_or("none"));
        prop_assert_eq!(out.topic().words(), topic.as_slice());
    }

    #[test]
    fn vocabulary_is_subadditive(states in prop::collection::vec(extended_state(), 0..8)) {
        let v = vocabulary_sizes(&states);
        prop_assert!(v.combined <= v.dsv + v.topic);
        prop_assert!(v.combined >= v.dsv.max(v.topic));
    }

    #[test]
    fn query_ignores_entry_and_triple_order(rows in entries(), area in prop::option::of(prop::sample::select(vec!["north", "south"])), price in prop::option::of(prop::sample::select(vec!["cheap", "dontcare"]))) {
        let mut triples = Vec::new();
        if let Some(a) = area { triples.push(DsvTriple::new("hotel", "area", a)); }
        if let Some(p) = price { triples.push(DsvTriple::new("hotel", "pricerange", p)); }
        let state = ExtendedBeliefState::from_triples(triples.clone()).unwrap();
        triples.reverse();
        let reversed_state = ExtendedBeliefState::from_triples(triples).unwrap();
        let forward = hotel_db(&rows).query(&state, "hotel").unwrap();
        let mut rev_rows = rows.clone();
        rev_rows.reverse();
        let backward = hotel_db(&rev_rows).query(&reversed_state, "hotel").unwrap();
        prop_assert_eq!(forward.count, backward.count);
        prop_assert_eq!(forward.booking_available, backward.booking_available);
        prop_assert_eq!(forward.count, forward.matched_entities.len());
        let n = rows.len();
        let mut fwd: Vec<usize> = forward.matched_entities.iter().map(|e| e.index).collect();
        let mut bwd: Vec<usize> = backward.matched_entities.iter().map(|e| n - 1 - e.index).collect();
        fwd.sort_unstable();
        bwd.sort_unstable();
        prop_assert_eq!(fwd, bwd);
    }

    #[test]
    fn adding_a_constraint_never_increases_count(rows in entries(), area in prop::sample::select(vec!["north", "south", "centre"]), price in prop::sample::select(vec!["cheap", "moderate"])) {
        let db = hotel_db(&rows);
        let loose = ExtendedBeliefState::from_triples([DsvTriple::new("hotel", "area", area)]).unwrap();
        let tight = ExtendedBeliefState::from_triples([
            DsvTriple::new("hotel", "area", area),
            DsvTriple::new("hotel", "pricerange", price),
        ]).unwrap();
        prop_assert!(db.query(&tight, "hotel").unwrap().count <= db.query(&loose, "hotel").unwrap().count);
        prop_assert!(db.query(&loose, "hotel").unwrap().count <= db.query(&ExtendedBeliefState::empty(), "hotel").unwrap().count);
    }

    #[test]
    fn match_vector_has_one_bucket(count in 0usize..10_000, booking in any::<bool>()) {
        let v = encode_match(&MatchResult { domain: "hotel".into(), matched_entities: vec![], count, booking_available: booking });
        prop_assert_eq!(v.count_bucket.len(), 4);
        prop_assert_eq!(v.count_bucket.iter().filter(|&&b| b == 1).count(), 1);
        let want = match count { 0 => 0, 1 => 1, 2 | 3 => 2, _ => 3 };
        prop_assert_eq!(v.count_bucket[want], 1);
        prop_assert_eq!(v.booking_bit, u8::from(booking));
    }

    #[test]
    fn fuzzy_ratio_is_symmetric_and_bounded(a in "[a-dé ]{0,12}", b in "[a-dé ]{0,12}") {
        let r = fuzzy_ratio(&a, &b);
        prop_assert_eq!(r, fuzzy_ratio(&b, &a));
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r == 1.0, a == b);
    }

    #[test]
    fn lcs_is_symmetric_and_bounded(a in prop::collection::vec(0u8..4, 0..12), b in prop::collection::vec(0u8..4, 0..12)) {
        let l = lcs_len(&a, &b);
        prop_assert_eq!(l, lcs_len(&b, &a));
        prop_assert!(l <= a.len().min(b.len()));
        prop_assert_eq!(lcs_len(&a, &a), a.len());
    }

    #[test]
    fn combined_identity(i in 0.0f64..=100.0, s in 0.0f64..=100.0, b in 0.0f64..=100.0) {
        prop_assert!((combined_score(i, s, b) - ((i + s) * 0.5 + b)).abs() <= 1e-9);
    }

    #[test]
    fn r1_implies_full_mrr(n in 1usize..12, gold in 0usize..12, k in 1usize..12) {
        let ranked: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let gold = format!("d{gold}");
        if r_at_1(&ranked, &gold).unwrap() == 1.0 {
            prop_assert_eq!(mrr_at_k(&ranked, &gold, k).unwrap(), 1.0);
        }
        let m = mrr_at_k(&ranked, &gold, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
    }
}

fn random_base() -> impl Strategy<Value = Vec<Document>> {
    let word = prop::sample::select(vec![
        "parking",
        "wifi",
        "breakfast",
        "pets",
        "pool",
        "gym",
        "free",
        "room",
        "card",
        "cash",
        "late",
        "early",
    ]);
    prop::collection::vec(
        (
            prop::sample::select(KnowledgeDomain::ALL.to_vec()),
            0usize..4,
            prop::collection::vec(word, 1..12),
        ),
        1..30,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (domain, entity, words))| Document {
                id: format!("doc{i:03}"),
                domain,
                entity: matches!(domain, KnowledgeDomain::Hotel | KnowledgeDomain::Restaurant)
                    .then(|| format!("entity {entity}")),
                body: words.join(" "),
            })
            .collect()
    })
}

fn config(thresholds: [f64; 4]) -> IndexConfig {
    let mut c = IndexConfig {
        tokenizer: Tokenizer::without_stopwords(),
        ..IndexConfig::default()
    };
    for (d, t) in KnowledgeDomain::ALL.into_iter().zip(thresholds) {
        c.thresholds.set(d, t);
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_has_one_to_three_topics(docs in random_base(), t in prop::array::uniform4(0.0f64..5.0)) {
        let base = DocumentBase::new(docs).unwrap();
        let index = build_index(&base, &config(t)).unwrap();
        for doc in base.documents() {
            let n = index.topics(&doc.id).unwrap().len();
            prop_assert!((1..=3).contains(&n));
        }
        prop_assert_eq!(build_index(&base, &config(t)).unwrap().to_json(), index.to_json());
    }

    #[test]
    fn raising_a_threshold_never_adds_topics(docs in random_base(), t in prop::array::uniform4(0.0f64..5.0), bump in 0.0f64..3.0, which in 0usize..4) {
        let base = DocumentBase::new(docs).unwrap();
        let low = build_index(&base, &config(t)).unwrap();
        let mut raised = t;
        raised[which] += bump;
        let high = build_index(&base, &config(raised)).unwrap();
        for doc in base.documents() {
            let before = low.topics(&doc.id).unwrap();
            let after = high.topics(&doc.id).unwrap();
            // the keep-best floor may re-admit a single word
            if after.len() > 1 || before.contains(&after[0]) {
                prop_assert!(after.iter().all(|w| before.contains(w)), "{:?} -> {:?}", before, after);
            }
        }
    }

    #[test]
    fn topic_match_is_scoped_to_its_domain(docs in random_base(), extra in random_base(), topic in "[a-z]{3,9}", entity in 0usize..4) {
        let base = DocumentBase::new(docs.clone()).unwrap();
        let hotel_only: Vec<Document> = docs.iter().filter(|d| d.domain == KnowledgeDomain::Hotel).cloned().collect();
        let others: Vec<Document> = extra
            .into_iter()
            .filter(|d| d.domain != KnowledgeDomain::Hotel)
            .map(|mut d| { d.id = format!("x-{}", d.id); d })
            .collect();
        let grown = DocumentBase::new(docs.iter().cloned().chain(others)).unwrap();
        prop_assume!(!hotel_only.is_empty());
        let cfg = config([2.3, 2.7, 6.9, 7.3]);
        let (i1, i2) = (build_index(&base, &cfg).unwrap(), build_index(&grown, &cfg).unwrap());
        let state = ExtendedBeliefState::new(
            [DsvTriple::new("hotel", "ruk", format!("entity {entity}"))],
            Topic::new([topic]),
        ).unwrap();
        let q = RetrievalQuery::from_state(&state);
        prop_assert_eq!(topic_match_retrieve(&i1, &base, &q), topic_match_retrieve(&i2, &grown, &q));
    }

    #[test]
    fn no_ruk_or_topic_means_no_document(docs in random_base(), state in plain_state()) {
        let base = DocumentBase::new(docs).unwrap();
        let index = build_index(&base, &config([0.0; 4])).unwrap();
        let r = topic_match_retrieve(&index, &base, &RetrievalQuery::from_state(&state));
        prop_assert!(r.best.is_none() && r.ranking.is_empty());
        let ruk_only = ExtendedBeliefState::from_triples([DsvTriple::new("hotel", "ruk", "entity 1")]).unwrap();
        let r = topic_match_retrieve(&index, &base, &RetrievalQuery::from_state(&ruk_only));
        prop_assert!(r.best.is_none());
    }
}

fn corpus_json(turns: &[usize], splits: &[&str]) -> String {
    let dialogs: Vec<serde_json::Value> = turns
        .iter()
        .zip(splits)
        .enumerate()
        .map(|(i, (&n, split))| {
            let turns: Vec<serde_json::Value> = (1..=n)
                .map(|t| {
                    serde_json::json!({
                        "index": t, "user": format!("u{t}"), "response": format!("r{t}"), "kind": "original",
                        "state": {"slots": {"hotel-area": if t % 2 == 0 { "north" } else { "south" }}}
                    })
                })
                .collect();
            serde_json::json!({"id": format!("d{i}"), "split": split, "goal": {}, "turns": turns})
        })
        .collect();
    serde_json::Value::Array(dialogs).to_string()
}

proptest! {
    #[test]
    fn corpus_round_trip_and_order_invariant_stats(
        rows in prop::collection::vec((1usize..6, prop::sample::select(vec!["train", "dev", "test"])), 0..8),
    ) {
        let turns: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let splits: Vec<&str> = rows.iter().map(|r| r.1).collect();
        let corpus = DialogCorpus::from_json_str(&corpus_json(&turns, &splits), "1", "t").unwrap();
        let again = DialogCorpus::from_json_str(&corpus.to_json(None), "1", "t").unwrap();
        prop_assert_eq!(&again, &corpus);

        let mut reversed: Vec<_> = corpus.dialogs().cloned().collect();
        reversed.reverse();
        let reversed = DialogCorpus::from_dialogs(reversed).unwrap();
        prop_assert_eq!(corpus_stats(&reversed, None), corpus_stats(&corpus, None));
    }
}
