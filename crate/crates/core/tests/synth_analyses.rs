//! Analyses on generated corpora whose behavior is known by construction.

use qreform::actions::{extract_pairs, fixed_query_similarity, pair_summary, similarity_by_position, COMBINED};
use qreform::corpus::{from_canonical_json, to_canonical_json, Corpus, Impression, Session};
use qreform::ireval::{metrics_by_position, scenario_metric_eval, DEFAULT_CUTOFF};
use qreform::scenarios::{assign_scenarios, retention_by_scenario, Action};
use qreform::sources::{DocstorePolicy, SourceIndex};
use qreform::stattests::WilcoxonOptions;
use qreform::synthgen::{generate, GeneratorSpec, LengthRange, Planting, RelevanceSpec};
use qreform::NormalizationConfig;

fn spec() -> GeneratorSpec {
    GeneratorSpec {
        seed: 77,
        sessions: 300,
        session_length: LengthRange { min: 2, max: 6 },
        test_query: false,
        dataset: "synthetic".into(),
        vocabulary: 1_000,
        query_length: 3,
        p_keep: 2.0 / 3.0,
        p_keep_by_scenario: None,
        drift: 0.0,
        add_slots: 2,
        p_add: 0.5,
        added: Planting { ncs: 0.3, cs: 0.4, cd: 0.8, ncd: 0.05 },
        query: Planting { ncs: 0.85, cs: 0.6, cd: 0.7, ncd: 0.3 },
        click_probs: vec![0.5, 0.35, 0.25, 0.15],
        snippet_length: 6,
        document_length: 20,
        filler_vocabulary: 300,
        max_dwell: 60,
        shared_filler: false,
        relevance: None,
    }
}

#[test]
fn full_retention_means_unit_similarity() {
    let c = generate(&GeneratorSpec { p_keep: 1.0, add_slots: 0, ..spec() }).unwrap();
    let t = pair_summary(&extract_pairs(&c, true)).unwrap();
    assert_eq!(t.value("Jaccard", COMBINED), Some(1.0));
    assert_eq!(t.value("Cosine", COMBINED), Some(1.0));
    assert!(similarity_by_position(&extract_pairs(&c, true), 9)
        .iter()
        .all(|p| p.jaccard == 1.0 && p.cosine == 1.0));
}

#[test]
fn two_thirds_retention_on_three_term_queries() {
    let s = GeneratorSpec {
        sessions: 10_000,
        session_length: LengthRange { min: 2, max: 2 },
        add_slots: 0,
        ..spec()
    };
    let t = pair_summary(&extract_pairs(&generate(&s).unwrap(), true)).unwrap();
    let retained = t.value("Retained", COMBINED).unwrap();
    assert!((retained - 2.0).abs() < 0.05, "{retained}");
}

#[test]
fn drift_lowers_similarity_to_the_first_query() {
    let s = GeneratorSpec {
        sessions: 2_000,
        session_length: LengthRange { min: 6, max: 6 },
        p_keep: 1.0,
        drift: 0.3,
        add_slots: 0,
        ..spec()
    };
    let series = fixed_query_similarity(&generate(&s).unwrap(), 1, 9, true);
    assert_eq!(series.len(), 6);
    assert_eq!(series[0].cosine, 1.0);
    assert!(series.windows(2).all(|w| w[1].cosine < w[0].cosine), "{series:?}");
}

#[test]
fn planted_half_overlap_series() {
    let cfg = NormalizationConfig::default();
    let queries = ["gun control law", "gun control poll", "gun state poll", "crime state poll", "crime state rate"];
    let impressions = queries
        .iter()
        .enumerate()
        .map(|(i, q)| Impression {
            position: i as u32 + 1,
            raw_query: q.to_string(),
            query_terms: cfg.normalize(q),
            results: Vec::new(),
            clicks: Vec::new(),
            document_incomplete: false,
        })
        .collect();
    let mut c = Corpus::new("constructed", cfg);
    c.sessions.push(Session {
        id: "s".into(),
        dataset: "constructed".into(),
        topic_id: None,
        impressions,
        has_test_query: false,
    });
    let series = similarity_by_position(&extract_pairs(&c, true), 9);
    assert_eq!(series.len(), 4);
    assert!(series.iter().all(|p| p.jaccard == 0.5));
}

#[test]
fn planted_full_retention_of_scenario_eight() {
    let s = GeneratorSpec {
        p_keep_by_scenario: Some([0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0]),
        ..spec()
    };
    let c = generate(&s).unwrap();
    let index = SourceIndex::new(&c, DocstorePolicy::Drop);
    let series = retention_by_scenario(&assign_scenarios(&extract_pairs(&c, false), &index));
    let eight = series.iter().find(|p| p.scenario == 8).unwrap();
    assert_eq!(eight.retained, 1.0);
    assert!(eight.population > 30);
}

#[test]
fn retention_in_scenario_eight_precedes_worse_rankings() {
    let s = GeneratorSpec {
        relevance: Some(RelevanceSpec {
            grade_weights: [0.4, 0.3, 0.15, 0.1, 0.05],
            penalty_scenario: Some(8),
        }),
        ..spec()
    };
    let c = generate(&s).unwrap();
    let index = SourceIndex::new(&c, DocstorePolicy::Drop);
    let records = assign_scenarios(&extract_pairs(&c, false), &index);
    let table = scenario_metric_eval(&records, &c, DEFAULT_CUTOFF, WilcoxonOptions::default()).unwrap();
    let row = format!("{} 8", Action::Retained.label());
    for metric in ["NDCG@10", "NERR@10", "MAP"] {
        let cell = table.cell(&row, metric).unwrap();
        assert!(cell.population.unwrap() >= 30);
        assert!(cell.value.unwrap() < 0.0, "{metric}: {cell:?}");
        assert!(cell.significant && cell.p_value.unwrap() < 0.05, "{metric}: {cell:?}");
    }
    let points = metrics_by_position(&c, DEFAULT_CUTOFF, 9).unwrap();
    assert!(!points.is_empty());
    for p in points {
        for v in [p.ndcg, p.nerr, p.map] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn generated_corpora_round_trip() {
    for seed in 0..5 {
        let c = generate(&GeneratorSpec { seed, sessions: 30, test_query: seed % 2 == 0, ..spec() }).unwrap();
        let bytes = to_canonical_json(&c);
        let back = from_canonical_json(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(to_canonical_json(&back), bytes);
    }
}
