//! Canonical JSON interchange format.
//!
//! ```text
//! {
//!   "schema": 1,
//!   "provenance": "...",
//!   "normalization": {"stoplist": [...], "stemming_enabled": true, "keep_numeric_tokens": true},
//!   "sessions": [{"id", "dataset", "topic_id", "has_test_query", "impressions": [
//!       {"position", "raw_query", "query_terms": {term: count},
//!        "results": [{"rank", "url", "docid", "title", "snippet", "terms"}],
//!        "clicks": [{"rank", "order", "start_time", "end_time", "dwell"}],
//!        "document_incomplete"}]}],
//!   "qrels": {"grades": {topic: {docid: grade}}} | null,
//!   "docstore": {docid: text} | null
//! }
//! ```
//!
//! All maps are key-sorted, so encoding a corpus is deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, RelevanceJudgments, Session};
use crate::error::{Error, Result};
use crate::textnorm::NormalizationConfig;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize)]
struct Encode<'a> {
    schema: u64,
    provenance: &'a str,
    normalization: &'a NormalizationConfig,
    sessions: &'a [Session],
    qrels: &'a Option<RelevanceJudgments>,
    docstore: &'a Option<BTreeMap<String, String>>,
}

#[derive(Deserialize)]
struct Decode {
    schema: u64,
    provenance: String,
    normalization: NormalizationConfig,
    sessions: Vec<Session>,
    qrels: Option<RelevanceJudgments>,
    docstore: Option<BTreeMap<String, String>>,
}

#[derive(Deserialize)]
struct Probe {
    schema: u64,
}

pub fn to_canonical_json(corpus: &Corpus) -> Vec<u8> {
    let envelope = Encode {
        schema: SCHEMA_VERSION,
        provenance: &corpus.provenance,
        normalization: &corpus.normalization,
        sessions: &corpus.sessions,
        qrels: &corpus.qrels,
        docstore: &corpus.docstore,
    };
    let mut bytes = serde_json::to_vec(&envelope).expect("corpus serializes");
    bytes.push(b'\n');
    bytes
}

pub fn from_canonical_json(bytes: &[u8]) -> Result<Corpus> {
    let probe: Probe = serde_json::from_slice(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    if probe.schema != SCHEMA_VERSION {
        return Err(Error::UnsupportedSchema {
            found: probe.schema,
            expected: SCHEMA_VERSION,
        });
    }
    let decoded: Decode = serde_json::from_slice(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    debug_assert_eq!(decoded.schema, SCHEMA_VERSION);
    let corpus = Corpus {
        provenance: decoded.provenance,
        normalization: decoded.normalization,
        sessions: decoded.sessions,
        qrels: decoded.qrels,
        docstore: decoded.docstore,
    };
    corpus.validate()?;
    Ok(corpus)
}
