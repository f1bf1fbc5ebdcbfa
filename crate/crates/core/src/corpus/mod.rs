//! Session data model and ingestion.
//!
//! A [`Corpus`] is built once (from TREC XML, canonical JSON or the synthetic
//! generator) and is read-only afterwards, so analyses can share it freely
//! across threads.

mod docs;
mod json;
mod qrels;
mod termbag;
mod trec;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::{self, NormalizationConfig};

pub use docs::{attach_documents, AttachReport};
pub use json::{from_canonical_json, to_canonical_json, SCHEMA_VERSION};
pub use qrels::{ingest_qrels, parse_qrels};
pub use termbag::TermBag;
pub use trec::{ingest_trec_xml, parse_trec_xml};

/// Normalized term bags for every document in the docstore.
pub type DocumentBags = HashMap<String, TermBag>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub provenance: String,
    pub normalization: NormalizationConfig,
    pub sessions: Vec<Session>,
    pub qrels: Option<RelevanceJudgments>,
    pub docstore: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    /// Which log the session came from (e.g. the track year); reports break
    /// statistics down by this label.
    pub dataset: String,
    pub topic_id: Option<String>,
    pub impressions: Vec<Impression>,
    /// The final query has no ranking.
    pub has_test_query: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impression {
    pub position: u32,
    pub raw_query: String,
    pub query_terms: TermBag,
    pub results: Vec<SnippetEntry>,
    pub clicks: Vec<ClickEvent>,
    /// Set by [`attach_documents`] when a clicked document has no text.
    #[serde(default)]
    pub document_incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetEntry {
    pub rank: u32,
    pub url: String,
    pub docid: String,
    pub title: String,
    pub snippet: String,
    /// Normalized `title + " " + snippet`.
    pub terms: TermBag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub rank: u32,
    pub order: u32,
    pub start_time: f64,
    pub end_time: f64,
    pub dwell: f64,
}

impl ClickEvent {
    pub fn new(rank: u32, order: u32, start_time: f64, end_time: f64) -> Self {
        ClickEvent {
            rank,
            order,
            start_time,
            end_time,
            dwell: end_time - start_time,
        }
    }
}

/// Graded judgments, topic -> docid -> grade in 0..=4.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgments {
    pub grades: BTreeMap<String, BTreeMap<String, u8>>,
}

impl RelevanceJudgments {
    pub fn insert(&mut self, topic: impl Into<String>, docid: impl Into<String>, grade: u8) {
        self.grades
            .entry(topic.into())
            .or_default()
            .insert(docid.into(), grade);
    }

    /// Unjudged pairs are grade 0.
    pub fn grade(&self, topic: &str, docid: &str) -> u8 {
        self.grades
            .get(topic)
            .and_then(|docs| docs.get(docid))
            .copied()
            .unwrap_or(0)
    }

    pub fn has_topic(&self, topic: &str) -> bool {
        self.grades.contains_key(topic)
    }

    /// Every grade judged for the topic, in docid order.
    pub fn pool(&self, topic: &str) -> Vec<u8> {
        self.grades
            .get(topic)
            .map(|docs| docs.values().copied().collect())
            .unwrap_or_default()
    }

    pub fn relevant_count(&self, topic: &str) -> usize {
        self.grades
            .get(topic)
            .map_or(0, |docs| docs.values().filter(|&&g| g > 0).count())
    }

    /// Merges `other` into `self`; later judgments win.
    pub fn extend(&mut self, other: RelevanceJudgments) {
        for (topic, docs) in other.grades {
            self.grades.entry(topic).or_default().extend(docs);
        }
    }
}

impl Impression {
    /// Number of ranked results.
    pub fn m(&self) -> usize {
        self.results.len()
    }

    pub fn is_ranked(&self) -> bool {
        !self.results.is_empty()
    }

    pub fn clicked_ranks(&self) -> BTreeSet<u32> {
        self.clicks.iter().map(|c| c.rank).collect()
    }

    pub fn is_clicked(&self, rank: u32) -> bool {
        self.clicks.iter().any(|c| c.rank == rank)
    }

    /// Largest clicked rank, if any click exists.
    pub fn last_click(&self) -> Option<u32> {
        self.clicks.iter().map(|c| c.rank).max()
    }

    /// Total dwell per clicked rank (repeated clicks sum).
    pub fn dwell_by_rank(&self) -> BTreeMap<u32, f64> {
        let mut dwell = BTreeMap::new();
        for click in &self.clicks {
            *dwell.entry(click.rank).or_insert(0.0) += click.dwell;
        }
        dwell
    }

    pub fn result(&self, rank: u32) -> Option<&SnippetEntry> {
        self.results.get((rank as usize).checked_sub(1)?)
    }
}

impl Session {
    pub fn is_test_query(&self, index: usize) -> bool {
        self.has_test_query && index + 1 == self.impressions.len()
    }

    /// Impressions that carry a ranking (the test query excluded).
    pub fn ranked_impressions(&self) -> impl Iterator<Item = &Impression> + '_ {
        let n = self.impressions.len() - usize::from(self.has_test_query);
        self.impressions[..n].iter()
    }
}

impl Corpus {
    pub fn new(provenance: impl Into<String>, normalization: NormalizationConfig) -> Self {
        Corpus {
            provenance: provenance.into(),
            normalization,
            sessions: Vec::new(),
            qrels: None,
            docstore: None,
        }
    }

    /// Dataset labels in first-seen order.
    pub fn datasets(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for s in &self.sessions {
            if !seen.contains(&s.dataset) {
                seen.push(s.dataset.clone());
            }
        }
        seen
    }

    /// Appends the sessions of `other`. Session ids must stay unique.
    pub fn merge(&mut self, other: Corpus) -> Result<()> {
        if other.normalization != self.normalization {
            return Err(Error::Invariant(
                "cannot merge corpora normalized with different configurations".into(),
            ));
        }
        self.sessions.extend(other.sessions);
        if !other.provenance.is_empty() {
            if !self.provenance.is_empty() {
                self.provenance.push_str("; ");
            }
            self.provenance.push_str(&other.provenance);
        }
        if let Some(q) = other.qrels {
            self.qrels.get_or_insert_with(Default::default).extend(q);
        }
        if let Some(d) = other.docstore {
            self.docstore.get_or_insert_with(Default::default).extend(d);
        }
        self.validate()
    }

    /// Re-derives every term bag from the raw text under `config`.
    pub fn renormalize(&mut self, config: NormalizationConfig) {
        self.sessions.par_iter_mut().for_each(|session| {
            for imp in &mut session.impressions {
                imp.query_terms = config.normalize(&imp.raw_query);
                for r in &mut imp.results {
                    r.terms = snippet_terms(&r.title, &r.snippet, &config);
                }
            }
        });
        self.normalization = config;
    }

    /// Normalizes every stored document (HTML stripped first).
    pub fn document_bags(&self) -> DocumentBags {
        let Some(store) = &self.docstore else {
            return DocumentBags::new();
        };
        let cfg = &self.normalization;
        store
            .par_iter()
            .map(|(id, text)| (id.clone(), textnorm::normalize_html(text, cfg)))
            .collect()
    }

    pub fn pair_count(&self, include_test_queries: bool) -> usize {
        self.sessions
            .iter()
            .map(|s| {
                let n = s.impressions.len();
                let n = if include_test_queries { n } else { n - usize::from(s.has_test_query) };
                n.saturating_sub(1)
            })
            .sum()
    }

    /// Checks every structural invariant of the data model.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for s in &self.sessions {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Invariant(format!("duplicate session id {}", s.id)));
            }
            validate_session(s, &self.normalization)?;
        }
        if let Some(q) = &self.qrels {
            for (topic, docs) in &q.grades {
                if let Some((doc, g)) = docs.iter().find(|(_, &g)| g > 4) {
                    return Err(Error::Invariant(format!(
                        "qrels grade {g} for ({topic}, {doc}) exceeds 4"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn snippet_terms(title: &str, snippet: &str, cfg: &NormalizationConfig) -> TermBag {
    cfg.normalize(&format!("{title} {snippet}"))
}

fn validate_session(s: &Session, cfg: &NormalizationConfig) -> Result<()> {
    let fail = |message: String| Error::Ingest {
        session: s.id.clone(),
        message,
    };
    if s.impressions.is_empty() {
        return Err(fail("session has no queries".into()));
    }
    if s.has_test_query {
        let last = s.impressions.last().expect("nonempty");
        if last.is_ranked() || !last.clicks.is_empty() {
            return Err(fail("test query carries a ranking or clicks".into()));
        }
    }
    for (i, imp) in s.impressions.iter().enumerate() {
        if imp.position as usize != i + 1 {
            return Err(fail(format!(
                "impression {} has position {}, expected {}",
                i,
                imp.position,
                i + 1
            )));
        }
        if imp.query_terms != cfg.normalize(&imp.raw_query) {
            return Err(fail(format!("query terms of position {} are stale", imp.position)));
        }
        for (k, r) in imp.results.iter().enumerate() {
            if r.rank as usize != k + 1 {
                return Err(fail(format!(
                    "position {}: result ranks must be 1..M without gaps (found {} at index {})",
                    imp.position, r.rank, k
                )));
            }
            if r.terms != snippet_terms(&r.title, &r.snippet, cfg) {
                return Err(fail(format!(
                    "position {} rank {}: snippet terms are stale",
                    imp.position, r.rank
                )));
            }
        }
        for c in &imp.clicks {
            if c.rank == 0 || c.rank as usize > imp.m() {
                return Err(fail(format!(
                    "position {}: click on rank {} but only {} results",
                    imp.position,
                    c.rank,
                    imp.m()
                )));
            }
            if c.dwell.is_nan() || c.dwell < 0.0 || (c.end_time - c.start_time - c.dwell).abs() > 1e-9 {
                return Err(fail(format!(
                    "position {}: click on rank {} has invalid interval [{}, {}]",
                    imp.position, c.rank, c.start_time, c.end_time
                )));
            }
        }
    }
    Ok(())
}
