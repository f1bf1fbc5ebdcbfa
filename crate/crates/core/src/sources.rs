//! Impression term sources and the similarity of added terms to them.
//!
//! An impression splits into snippet and document sources by clickthrough.
//! Each analysis scores the added terms A_{n+1} of a pair against the
//! instances (snippets or documents) of a source in impression n, averages
//! over the instances of the pair, then over pairs.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::QueryPair;
use crate::corpus::{Corpus, DocumentBags, Impression, Session, TermBag};
use crate::error::{Error, Result};
use crate::report::{Cell, ReportTable};
use crate::similarity::{bm25, cosine_tfidf, jaccard_with_bag, CollectionStats, ScoringConfig, SourceKind};
use crate::stattests::welch_t;

/// Handling of clicked or ranked documents whose text is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocstorePolicy {
    /// Exclude the impression from any document-based source.
    #[default]
    Drop,
    /// Treat the missing document as contributing no terms.
    Empty,
}

impl std::str::FromStr for DocstorePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "drop" => Ok(DocstorePolicy::Drop),
            "empty" => Ok(DocstorePolicy::Empty),
            other => Err(format!("unknown docstore policy {other:?} (expected drop or empty)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermSourceView {
    pub kind: SourceKind,
    pub instances: Vec<TermBag>,
}

impl TermSourceView {
    pub fn total_terms(&self) -> u64 {
        self.instances.iter().map(TermBag::len).sum()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.instances.iter().any(|b| b.contains(term))
    }

    pub fn merged(&self) -> TermBag {
        let mut bag = TermBag::new();
        for b in &self.instances {
            bag.merge(b);
        }
        bag
    }
}

/// A corpus together with its normalized documents.
pub struct SourceIndex<'a> {
    corpus: &'a Corpus,
    docs: Option<DocumentBags>,
    policy: DocstorePolicy,
}

impl<'a> SourceIndex<'a> {
    pub fn new(corpus: &'a Corpus, policy: DocstorePolicy) -> Self {
        SourceIndex {
            corpus,
            docs: corpus.docstore.as_ref().map(|_| corpus.document_bags()),
            policy,
        }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn policy(&self) -> DocstorePolicy {
        self.policy
    }

    pub fn has_documents(&self) -> bool {
        self.docs.is_some()
    }

    pub fn document(&self, docid: &str) -> Option<&TermBag> {
        self.docs.as_ref()?.get(docid)
    }

    fn require_docs(&self, kind: SourceKind) -> Result<&DocumentBags> {
        self.docs.as_ref().ok_or(Error::MissingDocstore(kind))
    }

    /// Documents of the selected ranks; `None` under `Drop` when one is missing.
    fn documents(&self, imp: &Impression, kind: SourceKind, select: impl Fn(u32) -> bool) -> Result<Option<Vec<TermBag>>> {
        let docs = self.require_docs(kind)?;
        let mut out = Vec::new();
        for r in imp.results.iter().filter(|r| select(r.rank)) {
            match docs.get(&r.docid) {
                Some(bag) => out.push(bag.clone()),
                None if self.policy == DocstorePolicy::Drop => return Ok(None),
                None => {}
            }
        }
        Ok(Some(out))
    }

    /// The instances of `kind` in impression `position` (1-based) of a
    /// session. `None` when the impression is excluded under `Drop`.
    pub fn extract_source(&self, session: &Session, position: u32, kind: SourceKind) -> Result<Option<TermSourceView>> {
        let imp = &session.impressions[position as usize - 1];
        let snippets = |select: &dyn Fn(u32) -> bool| -> Vec<TermBag> {
            imp.results
                .iter()
                .filter(|r| select(r.rank))
                .map(|r| r.terms.clone())
                .collect()
        };
        let instances = match kind {
            SourceKind::AllSnippets => snippets(&|_| true),
            SourceKind::ClickedSnippets => snippets(&|r| imp.is_clicked(r)),
            SourceKind::NonClickedSnippets => snippets(&|r| !imp.is_clicked(r)),
            SourceKind::AllDocuments => match self.documents(imp, kind, |_| true)? {
                Some(d) => d,
                None => return Ok(None),
            },
            SourceKind::ClickedDocuments => match self.documents(imp, kind, |r| imp.is_clicked(r))? {
                Some(d) => d,
                None => return Ok(None),
            },
            SourceKind::NonClickedDocuments => match self.documents(imp, kind, |r| !imp.is_clicked(r))? {
                Some(d) => d,
                None => return Ok(None),
            },
            SourceKind::Impression => match self.impression_terms(imp)? {
                Some(bag) => vec![bag],
                None => return Ok(None),
            },
            SourceKind::Historical => match self.historical_terms(session, position)? {
                Some(bag) => vec![bag],
                None => return Ok(None),
            },
        };
        Ok(Some(TermSourceView { kind, instances }))
    }

    /// All snippets plus clicked documents, excluding the query itself.
    pub fn impression_terms(&self, imp: &Impression) -> Result<Option<TermBag>> {
        let Some(docs) = self.documents(imp, SourceKind::Impression, |r| imp.is_clicked(r))? else {
            return Ok(None);
        };
        let mut bag = TermBag::new();
        for r in &imp.results {
            bag.merge(&r.terms);
        }
        for d in &docs {
            bag.merge(d);
        }
        Ok(Some(bag))
    }

    /// Count-summed impression terms of positions 1..=n.
    pub fn historical_terms(&self, session: &Session, n: u32) -> Result<Option<TermBag>> {
        let mut bag = TermBag::new();
        for imp in &session.impressions[..n as usize] {
            match self.impression_terms(imp)? {
                Some(b) => bag.merge(&b),
                None => return Ok(None),
            }
        }
        Ok(Some(bag))
    }

    /// One document per instance of `kind` over every ranked impression.
    pub fn stats(&self, kind: SourceKind) -> Result<CollectionStats> {
        if kind.needs_documents() {
            self.require_docs(kind)?;
        }
        let per_session: Vec<Vec<TermBag>> = self
            .corpus
            .sessions
            .par_iter()
            .map(|s| -> Result<Vec<TermBag>> {
                let mut out = Vec::new();
                for imp in s.ranked_impressions() {
                    if let Some(view) = self.extract_source(s, imp.position, kind)? {
                        out.extend(view.instances);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(CollectionStats::from_instances(kind, per_session.iter().flatten()))
    }

    fn predecessor_view(&self, pair: &QueryPair, kind: SourceKind) -> Result<Option<TermSourceView>> {
        let session = &self.corpus.sessions[pair.session_index];
        self.extract_source(session, pair.position, kind)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub jaccard: f64,
    pub cosine: f64,
    pub bm25: f64,
    /// Mean instance length in terms.
    pub length: f64,
}

impl Scores {
    fn add(&mut self, o: &Scores) {
        self.jaccard += o.jaccard;
        self.cosine += o.cosine;
        self.bm25 += o.bm25;
        self.length += o.length;
    }

    fn get(&self, measure: Measure) -> f64 {
        match measure {
            Measure::Jaccard => self.jaccard,
            Measure::Cosine => self.cosine,
            Measure::Bm25 => self.bm25,
            Measure::Length => self.length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Measure {
    Jaccard,
    Cosine,
    Bm25,
    Length,
}

const SIMILARITY_ROWS: [(&str, Measure); 4] = [
    ("Jaccard", Measure::Jaccard),
    ("Cosine", Measure::Cosine),
    ("BM25", Measure::Bm25),
    ("Length", Measure::Length),
];

/// Mean scores of the added terms against each instance. An empty added set
/// scores 0 on every measure. `None` when there are no instances.
pub fn score_instances(
    pair: &QueryPair,
    instances: &[TermBag],
    stats: &CollectionStats,
    cfg: &ScoringConfig,
) -> Option<Scores> {
    if instances.is_empty() {
        return None;
    }
    let added_bag = pair.added_bag();
    let mut total = Scores::default();
    for inst in instances {
        let mut s = Scores {
            length: inst.len() as f64,
            ..Scores::default()
        };
        if !pair.added.is_empty() {
            s.jaccard = jaccard_with_bag(&pair.added, inst);
            s.cosine = cosine_tfidf(&added_bag, inst, stats, cfg.tfidf_idf);
            s.bm25 = bm25(&pair.added, inst, stats, cfg);
        }
        total.add(&s);
    }
    let n = instances.len() as f64;
    Some(Scores {
        jaccard: total.jaccard / n,
        cosine: total.cosine / n,
        bm25: total.bm25 / n,
        length: total.length / n,
    })
}

fn mean_table(title: &str, columns: Vec<String>, per_column: &[Vec<Scores>]) -> ReportTable {
    let mut table = ReportTable::new(title, columns);
    for (label, measure) in SIMILARITY_ROWS {
        let cells = per_column
            .iter()
            .map(|scores| Cell::mean(scores.iter().map(|s| s.get(measure)).sum(), scores.len()))
            .collect();
        table.push_row(label, cells);
    }
    table
}

/// Scores of the snippets at ranks 1..=cutoff(pair) per pair, skipping pairs
/// whose earlier impression has no ranking.
fn prefix_scores(
    pairs: &[QueryPair],
    index: &SourceIndex,
    stats: &CollectionStats,
    cfg: &ScoringConfig,
    cutoff: impl Fn(&Impression) -> usize + Sync,
) -> Vec<Scores> {
    let corpus = index.corpus();
    let scored: Vec<Option<Scores>> = pairs
        .par_iter()
        .map(|p| {
            let imp = p.predecessor(corpus);
            if !imp.is_ranked() {
                return None;
            }
            let k = cutoff(imp).clamp(1, imp.m());
            let instances: Vec<TermBag> = imp.results[..k].iter().map(|r| r.terms.clone()).collect();
            score_instances(p, &instances, stats, cfg)
        })
        .collect();
    scored.into_iter().flatten().collect()
}

/// Similarity of added terms to the snippets up to rank k, k = 1..=k_max.
pub fn rank_prefix_similarity(
    pairs: &[QueryPair],
    index: &SourceIndex,
    k_max: usize,
    cfg: &ScoringConfig,
) -> Result<ReportTable> {
    let stats = index.stats(SourceKind::AllSnippets)?;
    let columns = (1..=k_max).map(|k| format!("k={k}")).collect();
    let per_k: Vec<Vec<Scores>> = (1..=k_max)
        .map(|k| prefix_scores(pairs, index, &stats, cfg, |_| k))
        .collect();
    Ok(mean_table("Added-term similarity to snippets up to rank k", columns, &per_k))
}

pub const LAST_CLICK_COLUMNS: [&str; 5] = ["LC-1", "LC", "LC+1", "LC+2", "M"];

/// Similarity of added terms to the snippets up to and around the last
/// click. Impressions without a click use all M snippets in every column.
pub fn last_click_similarity(pairs: &[QueryPair], index: &SourceIndex, cfg: &ScoringConfig) -> Result<ReportTable> {
    let stats = index.stats(SourceKind::AllSnippets)?;
    let offsets: [Option<i64>; 5] = [Some(-1), Some(0), Some(1), Some(2), None];
    let per_col: Vec<Vec<Scores>> = offsets
        .iter()
        .map(|offset| {
            prefix_scores(pairs, index, &stats, cfg, |imp| match (imp.last_click(), offset) {
                (Some(lc), Some(o)) => (i64::from(lc) + o).max(1) as usize,
                _ => imp.m(),
            })
        })
        .collect();
    let columns = LAST_CLICK_COLUMNS.iter().map(|s| s.to_string()).collect();
    Ok(mean_table("Added-term similarity to snippets around the last click", columns, &per_col))
}

pub const SOURCE_ROWS: [SourceKind; 8] = SourceKind::ALL;

/// Per-pair scores of one source kind, `None` entries for pairs that do not
/// contribute.
pub fn source_scores(
    pairs: &[QueryPair],
    index: &SourceIndex,
    kind: SourceKind,
    cfg: &ScoringConfig,
) -> Result<Vec<Option<Scores>>> {
    let stats = index.stats(kind)?;
    pairs
        .par_iter()
        .map(|p| {
            Ok(index
                .predecessor_view(p, kind)?
                .and_then(|view| score_instances(p, &view.instances, &stats, cfg)))
        })
        .collect()
}

/// Added-term similarity to every source kind. Clicked snippets are tested
/// against non-clicked and all snippets, clicked documents against
/// non-clicked and all documents (Welch, p < 0.01 against both).
pub fn source_comparison(pairs: &[QueryPair], index: &SourceIndex, cfg: &ScoringConfig) -> Result<ReportTable> {
    let columns = vec!["Terms".to_string(), "Jaccard".into(), "Cosine".into(), "BM25".into()];
    let measures = [Measure::Length, Measure::Jaccard, Measure::Cosine, Measure::Bm25];
    let mut table = ReportTable::new("Added-term similarity by term source", columns);

    let mut scores: Vec<Option<Vec<Scores>>> = Vec::new();
    for kind in SOURCE_ROWS {
        if kind.needs_documents() && !index.has_documents() {
            scores.push(None);
            continue;
        }
        let s = source_scores(pairs, index, kind, cfg)?;
        scores.push(Some(s.into_iter().flatten().collect()));
    }
    let find = |k: SourceKind| scores[SOURCE_ROWS.iter().position(|x| *x == k).unwrap()].as_ref();
    let tests: [(SourceKind, [SourceKind; 2]); 2] = [
        (SourceKind::ClickedSnippets, [SourceKind::NonClickedSnippets, SourceKind::AllSnippets]),
        (SourceKind::ClickedDocuments, [SourceKind::NonClickedDocuments, SourceKind::AllDocuments]),
    ];

    let mut omitted = Vec::new();
    for (kind, row_scores) in SOURCE_ROWS.iter().zip(&scores) {
        let Some(row_scores) = row_scores else {
            omitted.push(kind.code());
            continue;
        };
        let against = tests.iter().find(|(k, _)| k == kind).map(|(_, others)| others);
        let cells = measures
            .iter()
            .map(|&m| {
                let values: Vec<f64> = row_scores.iter().map(|s| s.get(m)).collect();
                let cell = Cell::mean(values.iter().sum(), values.len());
                match against {
                    Some(others) if m != Measure::Length && cell.value.is_some() => {
                        let p = others
                            .iter()
                            .map(|o| {
                                let other: Vec<f64> = find(*o)?.iter().map(|s| s.get(m)).collect();
                                welch_t(&values, &other).map(|r| r.p_value)
                            })
                            .try_fold(0.0f64, |acc, p| p.map(|p| acc.max(p)));
                        cell.with_test(p, 0.01)
                    }
                    _ => cell,
                }
            })
            .collect();
        table.push_row(source_row_label(*kind), cells);
    }
    table.footnote("cs and cd rows carry the larger Welch p-value of their two comparisons; flagged at p < 0.01");
    if !omitted.is_empty() {
        table.footnote(format!("rows {} omitted: no docstore attached", omitted.join(", ")));
    }
    Ok(table)
}

pub fn source_row_label(kind: SourceKind) -> String {
    format!("{} ({})", kind.label(), kind.code())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellPoint {
    pub threshold: f64,
    pub cosine: f64,
    pub pairs: usize,
    pub documents: usize,
}

/// Cosine (TFIDF) of added terms against clicked documents whose summed
/// dwell is at least each threshold. Thresholds with no surviving document
/// are omitted.
pub fn dwell_threshold_curve(
    pairs: &[QueryPair],
    index: &SourceIndex,
    thresholds: &[f64],
    cfg: &ScoringConfig,
) -> Result<Vec<DwellPoint>> {
    let stats = index.stats(SourceKind::ClickedDocuments)?;
    let corpus = index.corpus();
    let mut points = Vec::new();
    for &tau in thresholds {
        let per_pair: Vec<Option<(f64, usize)>> = pairs
            .par_iter()
            .map(|p| {
                let imp = p.predecessor(corpus);
                let dwell = imp.dwell_by_rank();
                let keep: BTreeSet<u32> = dwell.iter().filter(|(_, d)| **d >= tau).map(|(r, _)| *r).collect();
                let docs = index
                    .documents(imp, SourceKind::ClickedDocuments, |r| keep.contains(&r))
                    .ok()??;
                let s = score_instances(p, &docs, &stats, cfg)?;
                Some((s.cosine, docs.len()))
            })
            .collect();
        let (mut sum, mut n, mut docs) = (0.0, 0usize, 0usize);
        for (c, d) in per_pair.into_iter().flatten() {
            sum += c;
            n += 1;
            docs += d;
        }
        if n > 0 {
            points.push(DwellPoint {
                threshold: tau,
                cosine: sum / n as f64,
                pairs: n,
                documents: docs,
            });
        }
    }
    Ok(points)
}

/// Mean summed dwell per clicked document over ranked impressions.
pub fn mean_dwell(corpus: &Corpus) -> Option<f64> {
    let dwell: Vec<f64> = corpus
        .sessions
        .iter()
        .flat_map(|s| s.ranked_impressions())
        .flat_map(|imp| imp.dwell_by_rank().into_values())
        .collect();
    (!dwell.is_empty()).then(|| dwell.iter().sum::<f64>() / dwell.len() as f64)
}

pub fn default_dwell_thresholds() -> Vec<f64> {
    (0..=12).map(|i| f64::from(i * 5)).collect()
}
