use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use super::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttachReport {
    pub loaded: usize,
    pub flagged_impressions: usize,
    pub warnings: Vec<String>,
}

/// Loads document text for every docid the corpus ranks. Files are named by
/// docid, optionally with an extension (`clueweb12-0000.html`). Impressions
/// with a clicked document that has no text are flagged
/// `document_incomplete`.
pub fn attach_documents(mut corpus: Corpus, dir: &Path) -> Result<(Corpus, AttachReport)> {
    let mut by_name: HashMap<String, PathBuf> = HashMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    for path in paths {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            by_name.entry(stem.to_string()).or_insert_with(|| path.clone());
        }
        if let Some(name) = path.file_name().and_then(|s| s.to_str()) {
            by_name.insert(name.to_string(), path.clone());
        }
    }

    let wanted: BTreeSet<&str> = corpus
        .sessions
        .iter()
        .flat_map(|s| s.ranked_impressions())
        .flat_map(|imp| imp.results.iter().map(|r| r.docid.as_str()))
        .collect();

    let mut report = AttachReport::default();
    let mut store = corpus.docstore.take().unwrap_or_default();
    for docid in wanted {
        if store.contains_key(docid) {
            continue;
        }
        let Some(path) = by_name.get(docid) else {
            continue;
        };
        match std::fs::read(path) {
            Ok(bytes) => {
                store.insert(docid.to_string(), String::from_utf8_lossy(&bytes).into_owned());
                report.loaded += 1;
            }
            Err(e) => report
                .warnings
                .push(format!("{}: {e}; document {docid} skipped", path.display())),
        }
    }

    report.flagged_impressions = flag_incomplete(&mut corpus, &store);
    corpus.docstore = Some(store);
    Ok((corpus, report))
}

/// Marks impressions whose clicked documents are not all in `store`.
pub(crate) fn flag_incomplete(corpus: &mut Corpus, store: &BTreeMap<String, String>) -> usize {
    let mut flagged = 0;
    for session in &mut corpus.sessions {
        for imp in &mut session.impressions {
            let clicked = imp.clicked_ranks();
            imp.document_incomplete = clicked.iter().any(|&rank| {
                imp.result(rank)
                    .is_some_and(|r| !store.contains_key(&r.docid))
            });
            flagged += usize::from(imp.document_incomplete);
        }
    }
    flagged
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::textnorm::NormalizationConfig;

    fn corpus() -> Corpus {
        let cfg = NormalizationConfig::default();
        let mut c = Corpus::new("fixture", cfg.clone());
        let mut s = session("s1", &["a", "b", "c"], true, &cfg);
        s.impressions[0] = impression(1, "a", &["x", "y"], &[1], &cfg);
        s.impressions[1] = impression(2, "b", &["x", "y"], &[2], &cfg);
        c.sessions.push(s);
        c
    }

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn all_clicked_present_flags_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        for d in ["d1-1", "d1-2", "d2-1", "d2-2"] {
            write(tmp.path(), d, "<p>text</p>");
        }
        let (c, report) = attach_documents(corpus(), tmp.path()).unwrap();
        assert_eq!(report.loaded, 4);
        assert_eq!(report.flagged_impressions, 0);
        assert_eq!(c.docstore.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn one_clicked_absent_flags_that_impression() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "d1-1.html", "<p>text</p>");
        write(tmp.path(), "d2-1", "text");
        let (c, report) = attach_documents(corpus(), tmp.path()).unwrap();
        assert_eq!(report.flagged_impressions, 1);
        let flags: Vec<bool> = c.sessions[0]
            .impressions
            .iter()
            .map(|i| i.document_incomplete)
            .collect();
        assert_eq!(flags, [false, true, false]);
    }

    #[test]
    fn empty_directory_flags_every_clicked_impression() {
        let tmp = tempfile::tempdir().unwrap();
        let (c, report) = attach_documents(corpus(), tmp.path()).unwrap();
        assert_eq!(report.flagged_impressions, 2);
        assert!(c.docstore.unwrap().is_empty());
    }

    #[test]
    fn missing_directory_is_an_error() {
        assert!(attach_documents(corpus(), Path::new("/nonexistent/qreform")).is_err());
    }
}
