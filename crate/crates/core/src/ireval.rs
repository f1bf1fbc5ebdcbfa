//! Graded-relevance metrics for logged rankings.
//!
//! Gains are 2^g − 1. NDCG and NERR are normalized by the ideal ordering of
//! the topic's whole judged pool, and AP divides by the topic's relevant
//! count (grade > 0).

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Impression, Session};
use crate::error::{Error, Result};
use crate::report::{Cell, ReportTable};
use crate::scenarios::{Action, ScenarioRecord, OUTCOME_SCENARIOS};
use crate::stattests::{wilcoxon_with, WilcoxonOptions};

pub const DEFAULT_CUTOFF: usize = 10;

fn gain(g: u8) -> f64 {
    f64::from((1u32 << g) - 1)
}

fn dcg(grades: &[u8], k: usize) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / (i as f64 + 2.0).log2())
        .sum()
}

fn err(grades: &[u8], k: usize) -> f64 {
    let mut not_stopped = 1.0;
    let mut total = 0.0;
    for (i, &g) in grades.iter().take(k).enumerate() {
        let r = gain(g) / 16.0;
        total += not_stopped * r / (i as f64 + 1.0);
        not_stopped *= 1.0 - r;
    }
    total
}

fn ideal(pool: &[u8]) -> Vec<u8> {
    let mut sorted = pool.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
}

/// NDCG@k; 0 when the pool has no relevant document.
pub fn ndcg_at_k(grades: &[u8], pool: &[u8], k: usize) -> f64 {
    let best = dcg(&ideal(pool), k);
    if best == 0.0 {
        0.0
    } else {
        (dcg(grades, k) / best).min(1.0)
    }
}

/// Expected reciprocal rank at k normalized by the ideal ERR of the pool.
pub fn nerr_at_k(grades: &[u8], pool: &[u8], k: usize) -> f64 {
    let best = err(&ideal(pool), k);
    if best == 0.0 {
        0.0
    } else {
        (err(grades, k) / best).min(1.0)
    }
}

/// Average precision over the full ranking, relevance being grade > 0.
pub fn average_precision(grades: &[u8], relevant_count: usize) -> f64 {
    if relevant_count == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &g) in grades.iter().enumerate() {
        if g > 0 {
            hits += 1;
            sum += hits as f64 / (i as f64 + 1.0);
        }
    }
    (sum / relevant_count as f64).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Ndcg,
    Nerr,
    Map,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ndcg, Metric::Nerr, Metric::Map];

    pub fn label(self, cutoff: usize) -> String {
        match self {
            Metric::Ndcg => format!("NDCG@{cutoff}"),
            Metric::Nerr => format!("NERR@{cutoff}"),
            Metric::Map => "MAP".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpressionMetrics {
    pub ndcg: f64,
    pub nerr: f64,
    pub ap: f64,
}

impl ImpressionMetrics {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Ndcg => self.ndcg,
            Metric::Nerr => self.nerr,
            Metric::Map => self.ap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: Metric,
    pub value_n: f64,
    pub value_n1: f64,
    pub delta: f64,
}

impl MetricDelta {
    pub fn new(metric: Metric, value_n: f64, value_n1: f64) -> Self {
        MetricDelta {
            metric,
            value_n,
            value_n1,
            delta: value_n1 - value_n,
        }
    }

    pub fn swapped(&self) -> Self {
        MetricDelta::new(self.metric, self.value_n1, self.value_n)
    }
}

/// Grades of the impression's ranking, unjudged documents graded 0. `None`
/// when the session's topic has no judgments or the impression no ranking.
pub fn judged_grades(corpus: &Corpus, session: &Session, imp: &Impression) -> Option<Vec<u8>> {
    let qrels = corpus.qrels.as_ref()?;
    let topic = session.topic_id.as_deref()?;
    if !qrels.has_topic(topic) || !imp.is_ranked() {
        return None;
    }
    Some(imp.results.iter().map(|r| qrels.grade(topic, &r.docid)).collect())
}

pub fn impression_metrics(corpus: &Corpus, session: &Session, imp: &Impression, cutoff: usize) -> Option<ImpressionMetrics> {
    let grades = judged_grades(corpus, session, imp)?;
    let qrels = corpus.qrels.as_ref()?;
    let topic = session.topic_id.as_deref()?;
    let pool = qrels.pool(topic);
    Some(ImpressionMetrics {
        ndcg: ndcg_at_k(&grades, &pool, cutoff),
        nerr: nerr_at_k(&grades, &pool, cutoff),
        ap: average_precision(&grades, qrels.relevant_count(topic)),
    })
}

/// Metrics of every judged ranked impression keyed by (session index, position).
pub fn all_impression_metrics(corpus: &Corpus, cutoff: usize) -> Result<BTreeMap<(usize, u32), ImpressionMetrics>> {
    if corpus.qrels.is_none() {
        return Err(Error::EmptyInput("relevance judgments"));
    }
    Ok(corpus
        .sessions
        .par_iter()
        .enumerate()
        .flat_map_iter(|(si, s)| {
            s.ranked_impressions()
                .filter_map(move |imp| Some(((si, imp.position), impression_metrics(corpus, s, imp, cutoff)?)))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub position: u32,
    pub nerr: f64,
    pub ndcg: f64,
    pub map: f64,
    pub count: usize,
}

/// Mean metrics per impression position (test queries have no ranking).
pub fn metrics_by_position(corpus: &Corpus, cutoff: usize, max_position: u32) -> Result<Vec<MetricPoint>> {
    let metrics = all_impression_metrics(corpus, cutoff)?;
    let mut by_pos: BTreeMap<u32, (f64, f64, f64, usize)> = BTreeMap::new();
    for ((_, pos), m) in metrics.iter().filter(|((_, p), _)| *p <= max_position) {
        let e = by_pos.entry(*pos).or_default();
        e.0 += m.nerr;
        e.1 += m.ndcg;
        e.2 += m.ap;
        e.3 += 1;
    }
    Ok(by_pos
        .into_iter()
        .map(|(position, (nerr, ndcg, map, n))| {
            let n_f = n as f64;
            MetricPoint {
                position,
                nerr: nerr / n_f,
                ndcg: ndcg / n_f,
                map: map / n_f,
                count: n,
            }
        })
        .collect())
}

/// One row per judged impression, for cross-checking with external tools.
pub fn impression_metric_table(corpus: &Corpus, cutoff: usize) -> Result<ReportTable> {
    let metrics = all_impression_metrics(corpus, cutoff)?;
    let columns = Metric::ALL.iter().map(|m| m.label(cutoff)).collect();
    let mut table = ReportTable::new("Per-impression metrics", columns);
    for ((si, pos), m) in &metrics {
        let label = format!("{}/{}", corpus.sessions[*si].id, pos);
        table.push_row(label, Metric::ALL.iter().map(|&x| Cell::value(m.get(x))).collect());
    }
    Ok(table)
}

/// Mean metric change from impression n to n+1 for each action × scenario,
/// with a two-sided Wilcoxon signed-rank test (flagged at p < 0.05). Cells
/// with fewer than two nonzero deltas get no p-value.
pub fn scenario_metric_eval(
    records: &[ScenarioRecord],
    corpus: &Corpus,
    cutoff: usize,
    wilcoxon: WilcoxonOptions,
) -> Result<ReportTable> {
    let metrics = all_impression_metrics(corpus, cutoff)?;
    let mut groups: HashMap<(Action, u8), Vec<ImpressionMetrics>> = HashMap::new();
    for r in records {
        let (Some(a), Some(b)) = (
            metrics.get(&(r.session_index, r.position)),
            metrics.get(&(r.session_index, r.position + 1)),
        ) else {
            continue;
        };
        groups.entry((r.action, r.scenario)).or_default().push(ImpressionMetrics {
            ndcg: b.ndcg - a.ndcg,
            nerr: b.nerr - a.nerr,
            ap: b.ap - a.ap,
        });
    }

    let columns = Metric::ALL.iter().map(|m| m.label(cutoff)).collect();
    let mut table = ReportTable::new("Metric change by term action and scenario", columns);
    let toggled = WilcoxonOptions {
        continuity_correction: !wilcoxon.continuity_correction,
        ..wilcoxon
    };
    let mut flips = Vec::new();
    for action in Action::ALL {
        for s in OUTCOME_SCENARIOS {
            let deltas = groups.get(&(action, s)).map(Vec::as_slice).unwrap_or(&[]);
            let label = format!("{} {}", action.label(), s);
            let cells = Metric::ALL
                .iter()
                .map(|&m| {
                    let d: Vec<f64> = deltas.iter().map(|x| x.get(m)).collect();
                    let cell = Cell::mean(d.iter().sum(), d.len());
                    let p_with = |opts| {
                        let r = wilcoxon_with(&d, opts);
                        (r.n_effective >= 2).then_some(r.p_value)
                    };
                    let p = p_with(wilcoxon);
                    if let (Some(p), Some(q)) = (p, p_with(toggled)) {
                        if (p < 0.05) != (q < 0.05) {
                            flips.push(format!("{label} {}", m.label(cutoff)));
                        }
                    }
                    cell.with_test(p, 0.05)
                })
                .collect();
            table.push_row(label, cells);
        }
    }
    table.footnote("two-sided Wilcoxon signed-rank test against zero; flagged at p < 0.05");
    if !flips.is_empty() {
        table.footnote(format!(
            "significance changes when the continuity correction is toggled: {}",
            flips.join(", ")
        ));
    }
    Ok(table)
}
