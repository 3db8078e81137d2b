mod common;

use proptest::prelude::*;

use pprtopk_core::disambig::{
    disambiguate, related_pages, reweight_profile, Corpus, CorpusPage, DisambigConfig, MergeKind,
    PROFILE_TERMS,
};
use pprtopk_core::{Error, Graph};

/// Two three-page cliques on hosts L and R; hubs 0 and 3 link across.
fn barbell() -> Graph {
    let mut edges = vec![(0, 3), (3, 0)];
    for side in [0, 3] {
        for a in side..side + 3 {
            for b in side..side + 3 {
                if a != b {
                    edges.push((a, b));
                }
            }
        }
    }
    Graph::from_edges(6, edges)
        .with_hosts(&["L", "L", "L", "R", "R", "R"])
        .unwrap()
}

#[test]
fn left_hub_relates_to_right_hub() {
    let top = related_pages(&barbell(), 0, 8, 0.2, 5_000, 1).unwrap();
    assert_eq!(top.ids, vec![3]);
    assert!(top.is_truncated());
}

#[test]
fn two_person_corpus_splits_in_two() {
    let corpus = common::two_person_corpus();
    let out = disambiguate(&corpus, &DisambigConfig::default()).unwrap();
    assert_eq!(out.clusters, vec![vec![0, 1], vec![4, 5]]);
    assert_eq!(out.related[&0], vec![2, 3]);
    assert!(out.merges.iter().all(|m| m.kind == MergeKind::Structure));
    assert!(out.summaries[0].top_terms.contains(&"hockey".to_string()));
    assert!(out.summaries[1].top_terms.contains(&"radio".to_string()));
}

#[test]
fn low_threshold_merges_by_content() {
    let corpus = common::two_person_corpus();
    let cfg = DisambigConfig {
        threshold: 0.0,
        ..DisambigConfig::default()
    };
    let out = disambiguate(&corpus, &cfg).unwrap();
    assert_eq!(out.clusters, vec![vec![0, 1, 4, 5]]);
    assert_eq!(out.merges.last().unwrap().kind, MergeKind::Content);
}

#[test]
fn result_serializes_with_clusters_key() {
    let out = disambiguate(&common::two_person_corpus(), &DisambigConfig::default()).unwrap();
    let v = serde_json::to_value(&out).unwrap();
    assert_eq!(v["clusters"], serde_json::json!([[0, 1], [4, 5]]));
}

#[test]
fn missing_host_is_a_parse_error() {
    let bad = "{\"id\": 0, \"text\": \"x\", \"person\": true}\n";
    assert!(matches!(Corpus::parse(bad.as_bytes()), Err(Error::Parse { line: 1, .. })));
}

fn page(id: usize, words: &[String]) -> CorpusPage {
    CorpusPage {
        id,
        host: "h".into(),
        text_tokens: words.to_vec(),
        is_person_page: true,
        outlinks: Vec::new(),
    }
}

proptest! {
    #[test]
    fn profiles_are_unit_and_short(
        words in proptest::collection::vec("[a-z]{1,3}", 1..80),
        other in proptest::collection::vec("[a-z]{1,3}", 0..40)
    ) {
        let person = page(0, &words);
        let related = page(1, &other);
        let prof = reweight_profile(&person, &[&related]);
        prop_assert!(prof.terms.len() <= PROFILE_TERMS);
        let norm: f64 = prof.terms.iter().map(|(_, w)| w * w).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        prop_assert!(prof.terms.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert!(prof.terms.iter().all(|(t, _)| words.contains(t)));
    }
}
