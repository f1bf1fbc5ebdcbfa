//! TREC Session Track XML reader.
//!
//! Layout handled (2011-2014 tracks):
//!
//! ```text
//! <sessiontrackYYYY>
//!   <session num=".." [topic=".."]>
//!     <topic num=".."> ... </topic>
//!     <interaction num=".." starttime="..">
//!       <query>..</query>
//!       <results>
//!         <result rank="1"><url/><clueweb12id/><title/><snippet/></result>
//!       </results>
//!       <clicked>
//!         <click num="1" starttime=".." endtime=".."><rank>3</rank>..</click>
//!       </clicked>
//!     </interaction>
//!     <currentquery><query>..</query></currentquery>
//!   </session>
//! </sessiontrackYYYY>
//! ```

use std::path::Path;

use roxmltree::{Document, Node};

use super::{snippet_terms, ClickEvent, Corpus, Impression, Session, SnippetEntry};
use crate::error::{Error, Result};
use crate::textnorm::{strip_html, NormalizationConfig};

const DOCID_TAGS: [&str; 4] = ["clueweb12id", "clueweb09id", "docid", "docno"];

pub fn ingest_trec_xml(path: &Path, config: &NormalizationConfig) -> Result<Corpus> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trec".into());
    let mut corpus = parse_trec_xml(&text, &fallback, config)?;
    corpus.provenance = path.display().to_string();
    Ok(corpus)
}

/// Parses one Session Track file. The dataset label is the year found in the
/// root element name (`sessiontrack2013` -> `2013`), else `fallback_label`.
pub fn parse_trec_xml(text: &str, fallback_label: &str, config: &NormalizationConfig) -> Result<Corpus> {
    let doc = Document::parse(text).map_err(|e| {
        // a truncated file is reported at the root; the last session is the culprit
        let offset = match e {
            roxmltree::Error::UnclosedRootNode => text.len(),
            _ => text_offset(text, e.pos().row, e.pos().col),
        };
        Error::Xml {
            session: enclosing_session(&text[..offset]),
            message: e.to_string(),
        }
    })?;

    let root = doc.root_element();
    let year: String = root
        .tag_name()
        .name()
        .chars()
        .filter(char::is_ascii_digit)
        .collect();
    let dataset = if year.is_empty() { fallback_label.to_string() } else { year };

    let mut corpus = Corpus::new(String::new(), config.clone());
    for node in root.descendants().filter(|n| n.has_tag_name("session")) {
        corpus.sessions.push(parse_session(node, &dataset, config)?);
    }
    corpus.validate()?;
    Ok(corpus)
}

fn parse_session(node: Node, dataset: &str, config: &NormalizationConfig) -> Result<Session> {
    let num = node
        .attribute("num")
        .or_else(|| node.attribute("id"))
        .unwrap_or("?")
        .to_string();
    let id = format!("{dataset}-{num}");
    let err = |message: String| Error::Ingest {
        session: id.clone(),
        message,
    };

    let topic_id = node
        .attribute("topic")
        .or_else(|| node.attribute("topicid"))
        .or_else(|| {
            child(node, "topic").and_then(|t| t.attribute("num").or_else(|| t.attribute("id")))
        })
        .map(str::to_string);

    let mut impressions = Vec::new();
    for interaction in node.children().filter(|n| n.has_tag_name("interaction")) {
        let position = impressions.len() as u32 + 1;
        let raw_query = child(interaction, "query").map(element_text).unwrap_or_default();

        let mut results = Vec::new();
        if let Some(list) = child(interaction, "results") {
            for r in list.children().filter(|n| n.has_tag_name("result")) {
                let rank = r
                    .attribute("rank")
                    .ok_or_else(|| err(format!("position {position}: result without rank attribute")))?
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| err(format!("position {position}: bad result rank: {e}")))?;
                let url = child_text(r, "url");
                let docid = DOCID_TAGS
                    .iter()
                    .find_map(|tag| child(r, tag).map(element_text))
                    .unwrap_or_else(|| url.clone());
                let title = strip_html(&child_text(r, "title"));
                let snippet = strip_html(&child_text(r, "snippet"));
                let terms = snippet_terms(&title, &snippet, config);
                results.push(SnippetEntry {
                    rank,
                    url,
                    docid,
                    title,
                    snippet,
                    terms,
                });
            }
        }
        results.sort_by_key(|r| r.rank);

        let mut clicks = Vec::new();
        if let Some(list) = child(interaction, "clicked") {
            for (i, c) in list.children().filter(|n| n.has_tag_name("click")).enumerate() {
                let rank_text = c
                    .attribute("rank")
                    .map(str::to_string)
                    .or_else(|| child(c, "rank").map(element_text))
                    .ok_or_else(|| err(format!("position {position}: click without rank")))?;
                let rank = rank_text
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| err(format!("position {position}: bad click rank: {e}")))?;
                let order = c
                    .attribute("num")
                    .and_then(|s| s.trim().parse().ok())
                    .unwrap_or(i as u32 + 1);
                let time = |name: &str| -> Result<f64> {
                    c.attribute(name)
                        .ok_or_else(|| err(format!("position {position}: click without {name}")))?
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| err(format!("position {position}: bad {name}: {e}")))
                };
                let (start, end) = (time("starttime")?, time("endtime")?);
                if end < start {
                    return Err(err(format!(
                        "position {position}: click on rank {rank} ends ({end}) before it starts ({start})"
                    )));
                }
                clicks.push(ClickEvent::new(rank, order, start, end));
            }
        }

        impressions.push(Impression {
            position,
            query_terms: config.normalize(&raw_query),
            raw_query,
            results,
            clicks,
            document_incomplete: false,
        });
    }

    let mut has_test_query = false;
    if let Some(current) = child(node, "currentquery") {
        let raw_query = child(current, "query")
            .map(element_text)
            .unwrap_or_else(|| element_text(current));
        impressions.push(Impression {
            position: impressions.len() as u32 + 1,
            query_terms: config.normalize(&raw_query),
            raw_query,
            results: Vec::new(),
            clicks: Vec::new(),
            document_incomplete: false,
        });
        has_test_query = true;
    }

    if impressions.is_empty() {
        return Err(err("session has no interactions".into()));
    }

    Ok(Session {
        id,
        dataset: dataset.to_string(),
        topic_id,
        impressions,
        has_test_query,
    })
}

fn child<'a, 'i>(node: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(tag))
}

fn child_text(node: Node, tag: &str) -> String {
    child(node, tag).map(element_text).unwrap_or_default()
}

/// All descendant text, trimmed.
fn element_text(node: Node) -> String {
    let text: String = node
        .descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect();
    text.trim().to_string()
}

fn text_offset(text: &str, row: u32, col: u32) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == row as usize {
            let col_bytes: usize = line
                .chars()
                .take(col.saturating_sub(1) as usize)
                .map(char::len_utf8)
                .sum();
            return offset + col_bytes;
        }
        offset += line.len();
    }
    text.len()
}

/// Label of the last `<session ...>` opened before the error position.
fn enclosing_session(prefix: &str) -> String {
    let Some(start) = prefix.rfind("<session") else {
        return "(before first session)".into();
    };
    let tag = &prefix[start..];
    let tag = &tag[..tag.find('>').unwrap_or(tag.len())];
    for attr in ["num=\"", "id=\""] {
        if let Some(i) = tag.find(attr) {
            let rest = &tag[i + attr.len()..];
            if let Some(end) = rest.find('"') {
                return rest[..end].to_string();
            }
        }
    }
    "(unnumbered)".into()
}
