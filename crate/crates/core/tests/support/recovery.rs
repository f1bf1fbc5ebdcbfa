//! Measured statistics of generated corpora against their closed-form
//! expectations. Standard errors are cluster-robust by session, since terms
//! and pairs of one session share click outcomes and query history.

use std::collections::BTreeMap;

use qreform::actions::{extract_pairs, QueryPair};
use qreform::scenarios::{assign_scenarios, Origin, ScenarioRecord};
use qreform::similarity::{ScoringConfig, SourceKind};
use qreform::sources::{source_scores, DocstorePolicy, SourceIndex};
use qreform::synthgen::{expected_statistics, generate, GeneratorSpec, LengthRange, Planting};

/// Ratio-of-sums mean and its cluster-robust standard error.
fn clustered_mean(clusters: &BTreeMap<usize, (f64, f64)>) -> (f64, f64) {
    let total_y: f64 = clusters.values().map(|c| c.0).sum();
    let total_n: f64 = clusters.values().map(|c| c.1).sum();
    let mean = total_y / total_n;
    let g = clusters.len() as f64;
    let ss: f64 = clusters.values().map(|(y, n)| (y - mean * n).powi(2)).sum();
    (mean, (g / (g - 1.0) * ss).sqrt() / total_n)
}


fn pair_stat(pairs: &[QueryPair], f: impl Fn(&QueryPair) -> f64) -> (f64, f64) {
    let mut clusters = BTreeMap::new();
    for p in pairs {
        let c = clusters.entry(p.session_index).or_insert((0.0, 0.0));
        c.0 += f(p);
        c.1 += 1.0;
    }
    clustered_mean(&clusters)
}

fn scenario_share(records: &[ScenarioRecord], origin: Origin, scenario: u8) -> (f64, f64) {
    let mut clusters = BTreeMap::new();
    for r in records.iter().filter(|r| r.origin == origin) {
        let c = clusters.entry(r.session_index).or_insert((0.0, 0.0));
        c.0 += f64::from(u8::from(r.scenario == scenario));
        c.1 += 1.0;
    }
    clustered_mean(&clusters)
}

pub fn base() -> GeneratorSpec {
    GeneratorSpec {
        seed: 1,
        sessions: 2_600,
        session_length: LengthRange { min: 3, max: 7 },
        test_query: false,
        dataset: "synthetic".into(),
        vocabulary: 2_000,
        query_length: 3,
        p_keep: 2.0 / 3.0,
        p_keep_by_scenario: None,
        drift: 0.0,
        add_slots: 2,
        p_add: 0.5,
        added: Planting { ncs: 0.3, cs: 0.4, cd: 0.8, ncd: 0.05 },
        query: Planting { ncs: 0.85, cs: 0.6, cd: 0.7, ncd: 0.3 },
        click_probs: vec![0.5, 0.35, 0.25, 0.15, 0.1],
        snippet_length: 8,
        document_length: 30,
        filler_vocabulary: 400,
        max_dwell: 60,
        shared_filler: false,
        relevance: None,
    }
}

pub fn specs() -> Vec<(&'static str, GeneratorSpec)> {
    vec![
        ("baseline", base()),
        (
            "drifting",
            GeneratorSpec {
                seed: 2,
                p_keep: 0.8,
                drift: 0.3,
                added: Planting { ncs: 0.2, cs: 0.5, cd: 0.9, ncd: 0.1 },
                ..base()
            },
        ),
        (
            "scenario-dependent keep",
            GeneratorSpec {
                seed: 3,
                p_keep_by_scenario: Some([0.2, 0.4, 0.5, 0.6, 0.5, 0.7, 0.8, 0.95]),
                ..base()
            },
        ),
        (
            "sparse clicks with test queries",
            GeneratorSpec {
                seed: 4,
                test_query: true,
                session_length: LengthRange { min: 4, max: 8 },
                click_probs: vec![0.3, 0.15, 0.1, 0.05, 0.05, 0.02],
                added: Planting { ncs: 0.5, cs: 0.6, cd: 0.85, ncd: 0.02 },
                ..base()
            },
        ),
        (
            "long queries, long rankings",
            GeneratorSpec {
                seed: 5,
                query_length: 5,
                p_keep: 0.5,
                add_slots: 4,
                p_add: 0.3,
                click_probs: vec![0.6, 0.5, 0.4, 0.3, 0.3, 0.2, 0.2, 0.1, 0.1, 0.1],
                added: Planting { ncs: 0.1, cs: 0.3, cd: 0.7, ncd: 0.05 },
                ..base()
            },
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub pairs: usize,
    /// Quantities compared against their expectation.
    pub checks: usize,
    /// Largest |measured - expected| / se over all checks.
    pub max_z: f64,
    /// Mean (Jaccard, cosine, BM25) of clicked and non-clicked documents.
    pub cd: (f64, f64, f64),
    pub ncd: (f64, f64, f64),
}

/// Checks one spec: retained, removed and added counts and both scenario
/// distributions within three standard errors, and cd above ncd on every
/// measure. Every failing check is reported.
pub fn check_spec(spec: &GeneratorSpec) -> Result<Recovery, Vec<String>> {
    let mut failures = Vec::new();
    let expected = expected_statistics(spec).map_err(|e| vec![e.to_string()])?;
    let corpus = generate(spec).map_err(|e| vec![e.to_string()])?;
    let pairs = extract_pairs(&corpus, true);
    if pairs.len() < 10_000 {
        failures.push(format!("only {} pairs", pairs.len()));
    }

    let mut max_z = 0.0f64;
    let mut checks = 0;
    let mut compare = |label: String, (mean, se): (f64, f64), want: f64| {
        checks += 1;
        let gap = (mean - want).abs();
        if se > 0.0 {
            max_z = max_z.max(gap / se);
        }
        if gap > 3.0 * se + 1e-12 {
            failures.push(format!("{label}: measured {mean:.5} (se {se:.5}), expected {want:.5}"));
        }
    };
    let e = &expected.all_pairs;
    compare("retained".into(), pair_stat(&pairs, |p| p.retained.len() as f64), e.retained);
    compare("removed".into(), pair_stat(&pairs, |p| p.removed.len() as f64), e.removed);
    compare("added".into(), pair_stat(&pairs, |p| p.added.len() as f64), e.added);

    let index = SourceIndex::new(&corpus, DocstorePolicy::Drop);
    let records = assign_scenarios(&pairs, &index);
    for s in 1..=8u8 {
        let i = s as usize - 1;
        compare(format!("query scenario {s}"), scenario_share(&records, Origin::Query, s), expected.query_scenarios[i]);
        compare(format!("added scenario {s}"), scenario_share(&records, Origin::Added, s), expected.added_scenarios[i]);
    }

    let scoring = ScoringConfig::default();
    let mean = |kind| {
        let scores: Vec<_> = source_scores(&pairs, &index, kind, &scoring).unwrap().into_iter().flatten().collect();
        let n = scores.len() as f64;
        (
            scores.iter().map(|s| s.jaccard).sum::<f64>() / n,
            scores.iter().map(|s| s.cosine).sum::<f64>() / n,
            scores.iter().map(|s| s.bm25).sum::<f64>() / n,
        )
    };
    let (cd, ncd) = (mean(SourceKind::ClickedDocuments), mean(SourceKind::NonClickedDocuments));
    if !(cd.0 > ncd.0 && cd.1 > ncd.1 && cd.2 > ncd.2) {
        failures.push(format!("cd {cd:?} does not exceed ncd {ncd:?}"));
    }

    if failures.is_empty() {
        Ok(Recovery { pairs: pairs.len(), checks, max_z, cd, ncd })
    } else {
        Err(failures)
    }
}
