//! Term-based analysis of query reformulation in session search logs.
//!
//! The crate ingests session logs (TREC Session Track XML, qrels, optional
//! document text), splits every adjacent query pair into retained, removed and
//! added terms, attributes terms to click-differentiated term sources, assigns
//! the eight term scenarios and evaluates reformulations with click outcomes and
//! graded-relevance metrics.
//!
//! Module map:
//!
//! - [`textnorm`]: HTML stripping, tokenization, stopwords, Porter stemming.
//! - [`corpus`]: the session data model and its readers/writers.
//! - [`similarity`]: Jaccard, cosine, TFIDF cosine, BM25 and collection statistics.
//! - [`actions`]: query pairs and term-action statistics.
//! - [`sources`]: impression term sources and the added-term analyses.
//! - [`scenarios`]: the eight source-membership scenarios and click outcomes.
//! - [`ireval`]: NDCG, NERR and AP, plus metric deltas per scenario.
//! - [`stattests`]: Welch's t-test and the Wilcoxon signed-rank test.
//! - [`synthgen`]: deterministic synthetic sessions with planted behavior.
//! - [`report`]: the table type every analysis emits.

pub mod actions;
pub mod corpus;
pub mod error;
pub mod ireval;
pub mod report;
pub mod scenarios;
pub mod similarity;
pub mod sources;
pub mod stattests;
pub mod synthgen;
pub mod textnorm;

pub use corpus::{ClickEvent, Corpus, Impression, RelevanceJudgments, Session, SnippetEntry, TermBag};
pub use error::{Error, Result};
pub use report::ReportTable;
pub use textnorm::NormalizationConfig;
