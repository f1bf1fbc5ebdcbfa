//! Set and vector similarity between term sources.
//!
//! `jaccard` and `cosine_tf` compare queries with each other. When the
//! target is a longer term source, `cosine_tfidf` and `bm25` weight terms by
//! collection statistics gathered over every instance of that source kind.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TermBag};
use crate::error::Result;
use crate::sources::{DocstorePolicy, SourceIndex};

/// Term sources an impression can be split into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceKind {
    AllSnippets,
    ClickedSnippets,
    NonClickedSnippets,
    AllDocuments,
    ClickedDocuments,
    NonClickedDocuments,
    Impression,
    Historical,
}

impl SourceKind {
    pub const ALL: [SourceKind; 8] = [
        SourceKind::AllSnippets,
        SourceKind::ClickedSnippets,
        SourceKind::NonClickedSnippets,
        SourceKind::AllDocuments,
        SourceKind::ClickedDocuments,
        SourceKind::NonClickedDocuments,
        SourceKind::Impression,
        SourceKind::Historical,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SourceKind::AllSnippets => "s(M)",
            SourceKind::ClickedSnippets => "cs",
            SourceKind::NonClickedSnippets => "ncs",
            SourceKind::AllDocuments => "ad",
            SourceKind::ClickedDocuments => "cd",
            SourceKind::NonClickedDocuments => "ncd",
            SourceKind::Impression => "i",
            SourceKind::Historical => "h",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SourceKind::AllSnippets => "All Snippets",
            SourceKind::ClickedSnippets => "Clicked Snippets",
            SourceKind::NonClickedSnippets => "Non-Clicked Snippets",
            SourceKind::AllDocuments => "All Documents",
            SourceKind::ClickedDocuments => "Clicked Documents",
            SourceKind::NonClickedDocuments => "Non-Clicked Documents",
            SourceKind::Impression => "Impression",
            SourceKind::Historical => "Historical",
        }
    }

    pub fn needs_documents(self) -> bool {
        matches!(
            self,
            SourceKind::AllDocuments
                | SourceKind::ClickedDocuments
                | SourceKind::NonClickedDocuments
                | SourceKind::Impression
                | SourceKind::Historical
        )
    }
}

/// Document-collection statistics for one source kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub kind: SourceKind,
    pub n_docs: usize,
    pub df: BTreeMap<String, u32>,
    pub avgdl: f64,
}

impl CollectionStats {
    pub fn from_instances<'a>(kind: SourceKind, instances: impl IntoIterator<Item = &'a TermBag>) -> Self {
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        let mut n_docs = 0usize;
        let mut total_len = 0u64;
        for bag in instances {
            n_docs += 1;
            total_len += bag.len();
            for term in bag.terms() {
                *df.entry(term.to_string()).or_insert(0) += 1;
            }
        }
        let avgdl = if n_docs == 0 { 0.0 } else { total_len as f64 / n_docs as f64 };
        CollectionStats {
            kind,
            n_docs,
            df,
            avgdl,
        }
    }

    pub fn df(&self, term: &str) -> u32 {
        self.df.get(term).copied().unwrap_or(0)
    }
}

/// IDF used for TFIDF weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TfidfIdf {
    /// ln(N / df)
    #[default]
    Plain,
    /// ln(1 + N / df)
    Smooth,
}

/// IDF used inside BM25.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bm25Idf {
    /// ln(1 + (N - df + 0.5) / (df + 0.5)), never negative.
    #[default]
    Lucene,
    /// ln((N - df + 0.5) / (df + 0.5)), negative for df > N/2.
    Robertson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub k1: f64,
    pub b: f64,
    pub bm25_idf: Bm25Idf,
    pub tfidf_idf: TfidfIdf,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            k1: 1.2,
            b: 0.75,
            bm25_idf: Bm25Idf::Lucene,
            tfidf_idf: TfidfIdf::Plain,
        }
    }
}

/// |A ∩ B| / |A ∪ B|, with jaccard(∅, ∅) = 1.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|t| large.contains(*t)).count();
    ratio(inter, a.len() + b.len() - inter)
}

/// Jaccard between a term set and the term set of a bag.
pub fn jaccard_with_bag(a: &BTreeSet<String>, b: &TermBag) -> f64 {
    let inter = a.iter().filter(|t| b.contains(t)).count();
    ratio(inter, a.len() + b.distinct() - inter)
}

fn ratio(inter: usize, union: usize) -> f64 {
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Cosine of raw term-frequency vectors; 0 when either bag is empty.
pub fn cosine_tf(a: &TermBag, b: &TermBag) -> f64 {
    cosine_weighted(a, b, |_| 1.0)
}

/// Cosine of tf·idf vectors, both weighted by `stats`.
pub fn cosine_tfidf(a: &TermBag, b: &TermBag, stats: &CollectionStats, variant: TfidfIdf) -> f64 {
    let n = stats.n_docs as f64;
    cosine_weighted(a, b, |term| {
        let df = stats.df(term);
        if df == 0 {
            return 0.0;
        }
        let df = f64::from(df);
        match variant {
            TfidfIdf::Plain => (n / df).ln(),
            TfidfIdf::Smooth => (1.0 + n / df).ln(),
        }
    })
}

fn cosine_weighted(a: &TermBag, b: &TermBag, idf: impl Fn(&str) -> f64) -> f64 {
    let norm2 = |bag: &TermBag| {
        bag.iter()
            .map(|(t, c)| (f64::from(c) * idf(t)).powi(2))
            .sum::<f64>()
    };
    let (small, large) = if a.distinct() <= b.distinct() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter(|(t, _)| large.contains(t))
        .map(|(t, c)| {
            let w = idf(t);
            f64::from(c) * w * f64::from(large.count(t)) * w
        })
        .sum();
    if dot == 0.0 {
        return 0.0;
    }
    // sqrt(x * x) == x exactly, so identical bags score exactly 1
    let denom = (norm2(a) * norm2(b)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (dot / denom).min(1.0)
    }
}

/// Okapi BM25 of a query term set against one instance.
pub fn bm25(query: &BTreeSet<String>, doc: &TermBag, stats: &CollectionStats, cfg: &ScoringConfig) -> f64 {
    if stats.n_docs == 0 {
        return 0.0;
    }
    let n = stats.n_docs as f64;
    let length_ratio = if stats.avgdl > 0.0 {
        doc.len() as f64 / stats.avgdl
    } else {
        1.0
    };
    let norm = cfg.k1 * (1.0 - cfg.b + cfg.b * length_ratio);
    query
        .iter()
        .map(|term| {
            let tf = f64::from(doc.count(term));
            let df = stats.df(term);
            if tf == 0.0 || df == 0 {
                return 0.0;
            }
            let df = f64::from(df);
            let idf = match cfg.bm25_idf {
                Bm25Idf::Lucene => (1.0 + (n - df + 0.5) / (df + 0.5)).ln(),
                Bm25Idf::Robertson => ((n - df + 0.5) / (df + 0.5)).ln(),
            };
            idf * tf * (cfg.k1 + 1.0) / (tf + norm)
        })
        .sum()
}

/// Collection statistics over every instance of `kind` in the corpus.
pub fn build_stats(corpus: &Corpus, kind: SourceKind) -> Result<CollectionStats> {
    SourceIndex::new(corpus, DocstorePolicy::Drop).stats(kind)
}
