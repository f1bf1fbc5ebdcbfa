//! Adjacent query pairs and the terms retained, removed and added between
//! them.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Impression, TermBag};
use crate::error::{Error, Result};
use crate::report::{Cell, ReportTable};
use crate::similarity::{cosine_tf, jaccard};

pub const COMBINED: &str = "Combined";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPair {
    pub session_id: String,
    /// Index of the session in `Corpus::sessions`.
    pub session_index: usize,
    pub dataset: String,
    /// Position n of the earlier query (1-based).
    pub position: u32,
    pub qn: BTreeSet<String>,
    pub qn1: BTreeSet<String>,
    pub bag_n: TermBag,
    pub bag_n1: TermBag,
    pub retained: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub added: BTreeSet<String>,
    pub involves_test_query: bool,
}

impl QueryPair {
    pub fn new(
        session_id: &str,
        session_index: usize,
        dataset: &str,
        position: u32,
        bag_n: TermBag,
        bag_n1: TermBag,
        involves_test_query: bool,
    ) -> Self {
        let qn = bag_n.to_set();
        let qn1 = bag_n1.to_set();
        let retained = qn.intersection(&qn1).cloned().collect();
        let removed = qn.difference(&qn1).cloned().collect();
        let added = qn1.difference(&qn).cloned().collect();
        QueryPair {
            session_id: session_id.to_string(),
            session_index,
            dataset: dataset.to_string(),
            position,
            qn,
            qn1,
            bag_n,
            bag_n1,
            retained,
            removed,
            added,
            involves_test_query,
        }
    }

    pub fn predecessor<'a>(&self, corpus: &'a Corpus) -> &'a Impression {
        &corpus.sessions[self.session_index].impressions[self.position as usize - 1]
    }

    pub fn successor<'a>(&self, corpus: &'a Corpus) -> &'a Impression {
        &corpus.sessions[self.session_index].impressions[self.position as usize]
    }

    /// The added terms weighted by their counts in q_{n+1}.
    pub fn added_bag(&self) -> TermBag {
        self.added
            .iter()
            .map(|t| (t.clone(), self.bag_n1.count(t)))
            .collect()
    }

    pub fn jaccard(&self) -> f64 {
        jaccard(&self.qn, &self.qn1)
    }

    pub fn cosine(&self) -> f64 {
        cosine_tf(&self.bag_n, &self.bag_n1)
    }
}

/// One pair per adjacent couple of queries in each session. Pairs whose later
/// query is a test query are kept only when `include_test_queries` is set.
pub fn extract_pairs(corpus: &Corpus, include_test_queries: bool) -> Vec<QueryPair> {
    corpus
        .sessions
        .par_iter()
        .enumerate()
        .flat_map_iter(|(si, session)| {
            session
                .impressions
                .windows(2)
                .enumerate()
                .filter_map(move |(i, w)| {
                    let test = session.is_test_query(i + 1);
                    (include_test_queries || !test).then(|| {
                        QueryPair::new(
                            &session.id,
                            si,
                            &session.dataset,
                            w[0].position,
                            w[0].query_terms.clone(),
                            w[1].query_terms.clone(),
                            test,
                        )
                    })
                })
        })
        .collect()
}

/// (retained, removed, added)
pub fn term_actions(pair: &QueryPair) -> (BTreeSet<String>, BTreeSet<String>, BTreeSet<String>) {
    (pair.retained.clone(), pair.removed.clone(), pair.added.clone())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct PairSums {
    n: usize,
    jaccard: f64,
    cosine: f64,
    retained: f64,
    removed: f64,
    added: f64,
    nothing_removed: f64,
    len_n: f64,
    len_n1: f64,
}

impl PairSums {
    fn add(&mut self, p: &QueryPair) {
        self.n += 1;
        self.jaccard += p.jaccard();
        self.cosine += p.cosine();
        self.retained += p.retained.len() as f64;
        self.removed += p.removed.len() as f64;
        self.added += p.added.len() as f64;
        self.nothing_removed += f64::from(u8::from(p.removed.is_empty()));
        self.len_n += p.qn.len() as f64;
        self.len_n1 += p.qn1.len() as f64;
    }
}

/// Pair-level means per dataset label plus a combined column.
pub fn pair_summary(pairs: &[QueryPair]) -> Result<ReportTable> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("query pairs"));
    }
    let mut labels: Vec<&str> = Vec::new();
    for p in pairs {
        if !labels.contains(&p.dataset.as_str()) {
            labels.push(&p.dataset);
        }
    }
    let mut sums = vec![PairSums::default(); labels.len() + 1];
    for p in pairs {
        let i = labels.iter().position(|l| *l == p.dataset).expect("label seen");
        sums[i].add(p);
        sums[labels.len()].add(p);
    }
    let mut columns: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    columns.push(COMBINED.into());
    let mut table = ReportTable::new("Term actions between adjacent queries", columns);
    type Row = (&'static str, fn(&PairSums) -> f64);
    let rows: [Row; 8] = [
        ("Jaccard", |s| s.jaccard),
        ("Cosine", |s| s.cosine),
        ("Retained", |s| s.retained),
        ("Removed", |s| s.removed),
        ("Added", |s| s.added),
        ("All terms kept", |s| s.nothing_removed),
        ("Length q_n", |s| s.len_n),
        ("Length q_n+1", |s| s.len_n1),
    ];
    for (label, get) in rows {
        table.push_row(label, sums.iter().map(|s| Cell::mean(get(s), s.n)).collect());
    }
    table.push_row(
        "Pairs",
        sums.iter().map(|s| Cell::value(s.n as f64).with_population(s.n)).collect(),
    );
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthPoint {
    pub position: u32,
    pub mean_length: f64,
    pub count: usize,
}

/// Mean query length at each position, over sessions with exactly
/// `session_length` queries. The test query counts towards the session length
/// only when `include_test_queries` is set.
pub fn length_by_position(corpus: &Corpus, session_length: usize, include_test_queries: bool) -> Vec<LengthPoint> {
    let mut sums = vec![(0.0, 0usize); session_length];
    for s in &corpus.sessions {
        let n = s.impressions.len() - usize::from(!include_test_queries && s.has_test_query);
        if n != session_length {
            continue;
        }
        for (i, imp) in s.impressions[..n].iter().enumerate() {
            sums[i].0 += imp.query_terms.distinct() as f64;
            sums[i].1 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .filter(|(_, (_, c))| *c > 0)
        .map(|(i, (sum, count))| LengthPoint {
            position: i as u32 + 1,
            mean_length: sum / count as f64,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPoint {
    pub position: u32,
    pub jaccard: f64,
    pub cosine: f64,
    pub count: usize,
}

/// Mean pair similarity grouped by the earlier position n ≤ `max_position`.
pub fn similarity_by_position(pairs: &[QueryPair], max_position: u32) -> Vec<SimilarityPoint> {
    let mut by_pos: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.position <= max_position) {
        let e = by_pos.entry(p.position).or_default();
        e.0 += p.jaccard();
        e.1 += p.cosine();
        e.2 += 1;
    }
    by_pos
        .into_iter()
        .map(|(position, (j, c, n))| SimilarityPoint {
            position,
            jaccard: j / n as f64,
            cosine: c / n as f64,
            count: n,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedQueryPoint {
    pub position: u32,
    pub cosine: f64,
    pub count: usize,
}

/// Mean cosine between q_x and q_n for n = 1..=`max_position`, over sessions
/// that contain both positions.
pub fn fixed_query_similarity(
    corpus: &Corpus,
    x: u32,
    max_position: u32,
    include_test_queries: bool,
) -> Vec<FixedQueryPoint> {
    let mut sums = vec![(0.0, 0usize); max_position as usize];
    for s in &corpus.sessions {
        let len = s.impressions.len() - usize::from(!include_test_queries && s.has_test_query);
        if x == 0 || x as usize > len {
            continue;
        }
        let qx = &s.impressions[x as usize - 1].query_terms;
        for (i, imp) in s.impressions[..len.min(max_position as usize)].iter().enumerate() {
            sums[i].0 += if i + 1 == x as usize { 1.0 } else { cosine_tf(qx, &imp.query_terms) };
            sums[i].1 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .filter(|(_, (_, c))| *c > 0)
        .map(|(i, (sum, count))| FixedQueryPoint {
            position: i as u32 + 1,
            cosine: sum / count as f64,
            count,
        })
        .collect()
}
