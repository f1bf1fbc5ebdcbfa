use std::path::Path;

use super::RelevanceJudgments;
use crate::error::{Error, Result};

pub fn ingest_qrels(path: &Path) -> Result<RelevanceJudgments> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_qrels(&text)
}

/// `topic iteration docid grade` per line. Negative grades clamp to 0,
/// grades above 4 are rejected.
pub fn parse_qrels(text: &str) -> Result<RelevanceJudgments> {
    let mut judgments = RelevanceJudgments::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |message: String| Error::Qrels {
            line: line_no,
            message,
        };
        let [topic, _iteration, docid, grade] = fields[..] else {
            return Err(err(format!("expected 4 columns, found {}", fields.len())));
        };
        let grade: i64 = grade
            .parse()
            .map_err(|_| err(format!("grade {grade:?} is not an integer")))?;
        if grade > 4 {
            return Err(err(format!("grade {grade} outside 0..=4")));
        }
        judgments.insert(topic, docid, grade.max(0) as u8);
    }
    Ok(judgments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_parse() {
        let q = parse_qrels("101 0 clueweb09-en0001-02-21241 2\n").unwrap();
        assert_eq!(q.grade("101", "clueweb09-en0001-02-21241"), 2);
    }

    #[test]
    fn negative_grades_clamp_to_zero() {
        let q = parse_qrels("101 0 docA -2\n101 0 docB -1\n").unwrap();
        assert_eq!(q.grade("101", "docA"), 0);
        assert_eq!(q.grades["101"].len(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_qrels("101 0 docA 1\n\n101 0 docA seven\n") {
            Err(Error::Qrels { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_qrels("1 0 d 5"), Err(Error::Qrels { line: 1, .. })));
        assert!(matches!(parse_qrels("1 0 d"), Err(Error::Qrels { line: 1, .. })));
    }
}
