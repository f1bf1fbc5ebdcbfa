//! Tabular results and their CSV / Markdown encodings.
//!
//! CSV is written in long form, one line per cell:
//!
//! ```text
//! # <header line>...
//! # title: "<json string>"
//! # columns: ["<json string>", ...]
//! # footnote: "<json string>"
//! row,column,value,p_value,significant,population
//! ```
//!
//! Values use the shortest representation that reads back to the same
//! `f64`, so [`ReportTable::from_csv`] restores every cell exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
    pub population: Option<usize>,
}

impl Cell {
    pub fn value(value: f64) -> Self {
        Cell {
            value: Some(value),
            ..Cell::default()
        }
    }

    pub fn empty() -> Self {
        Cell::default()
    }

    pub fn with_population(mut self, n: usize) -> Self {
        self.population = Some(n);
        self
    }

    /// Records `p` and flags the cell when `p < alpha`.
    pub fn with_test(mut self, p: Option<f64>, alpha: f64) -> Self {
        self.p_value = p;
        self.significant = p.is_some_and(|p| p < alpha);
        self
    }

    /// A mean with its population, or an empty cell when nothing was averaged.
    pub fn mean(sum: f64, n: usize) -> Self {
        if n == 0 {
            Cell::empty().with_population(0)
        } else {
            Cell::value(sum / n as f64).with_population(n)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub footnotes: Vec<String>,
}

const CSV_FIELDS: [&str; 6] = ["row", "column", "value", "p_value", "significant", "population"];

impl ReportTable {
    pub fn new(title: impl Into<String>, columns: Vec<String>) -> Self {
        ReportTable {
            title: title.into(),
            columns,
            rows: Vec::new(),
            footnotes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, label: impl Into<String>, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match columns");
        self.rows.push(Row {
            label: label.into(),
            cells,
        });
    }

    pub fn footnote(&mut self, note: impl Into<String>) {
        self.footnotes.push(note.into());
    }

    pub fn cell(&self, row: &str, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|l| l == column)?;
        self.rows.iter().find(|r| r.label == row).map(|r| &r.cells[c])
    }

    pub fn value(&self, row: &str, column: &str) -> Option<f64> {
        self.cell(row, column).and_then(|c| c.value)
    }

    /// Checks that every flagged cell carries its p-value.
    pub fn validate(&self) -> Result<()> {
        for row in &self.rows {
            if row.cells.len() != self.columns.len() {
                return Err(Error::Report(format!("row {:?} has wrong width", row.label)));
            }
            if row.cells.iter().any(|c| c.significant && c.p_value.is_none()) {
                return Err(Error::Report(format!(
                    "row {:?} flags a cell without a p-value",
                    row.label
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            writeln!(out, "# {line}").unwrap();
        }
        writeln!(out, "# title: {}", json_string(&self.title)).unwrap();
        writeln!(out, "# columns: {}", serde_json::to_string(&self.columns).unwrap()).unwrap();
        for note in &self.footnotes {
            writeln!(out, "# footnote: {}", json_string(note)).unwrap();
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_FIELDS).unwrap();
        for row in &self.rows {
            for (column, cell) in self.columns.iter().zip(&row.cells) {
                writer
                    .write_record([
                        row.label.clone(),
                        column.clone(),
                        opt(cell.value),
                        opt(cell.p_value),
                        cell.significant.to_string(),
                        cell.population.map(|n| n.to_string()).unwrap_or_default(),
                    ])
                    .unwrap();
            }
        }
        out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
        out
    }

    pub fn from_csv(text: &str) -> Result<ReportTable> {
        let bad = |m: String| Error::Report(m);
        let mut title: Option<String> = None;
        let mut columns: Option<Vec<String>> = None;
        let mut footnotes = Vec::new();
        let mut body_start = text.len();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let Some(comment) = line.strip_prefix('#') else {
                body_start = offset;
                break;
            };
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("title: ") {
                title = Some(serde_json::from_str(v).map_err(|e| bad(format!("title: {e}")))?);
            } else if let Some(v) = comment.strip_prefix("columns: ") {
                columns = Some(serde_json::from_str(v).map_err(|e| bad(format!("columns: {e}")))?);
            } else if let Some(v) = comment.strip_prefix("footnote: ") {
                footnotes.push(serde_json::from_str(v).map_err(|e| bad(format!("footnote: {e}")))?);
            }
            offset += line.len();
        }
        let mut table = ReportTable::new(
            title.ok_or_else(|| bad("missing title line".into()))?,
            columns.ok_or_else(|| bad("missing columns line".into()))?,
        );
        table.footnotes = footnotes;

        let mut reader = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
        for record in reader.records() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            if record.len() != CSV_FIELDS.len() {
                return Err(bad(format!("expected {} fields, found {}", CSV_FIELDS.len(), record.len())));
            }
            let col = table
                .columns
                .iter()
                .position(|c| c == &record[1])
                .ok_or_else(|| bad(format!("unknown column {:?}", &record[1])))?;
            let cell = Cell {
                value: parse_opt(&record[2])?,
                p_value: parse_opt(&record[3])?,
                significant: record[4]
                    .parse()
                    .map_err(|_| bad(format!("bad flag {:?}", &record[4])))?,
                population: if record[5].is_empty() {
                    None
                } else {
                    Some(record[5].parse().map_err(|_| bad(format!("bad population {:?}", &record[5])))?)
                },
            };
            if table.rows.last().is_none_or(|r| r.label != record[0] || r.cells.len() == table.columns.len()) {
                table.rows.push(Row {
                    label: record[0].to_string(),
                    cells: Vec::with_capacity(table.columns.len()),
                });
            }
            let row = table.rows.last_mut().expect("row pushed");
            if row.cells.len() != col {
                return Err(bad(format!("row {:?}: cells out of column order", row.label)));
            }
            row.cells.push(cell);
        }
        table.validate()?;
        Ok(table)
    }

    /// Wide Markdown table; significant cells are bold.
    pub fn to_markdown(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            writeln!(out, "<!-- {line} -->").unwrap();
        }
        writeln!(out, "## {}\n", self.title).unwrap();
        write!(out, "| |").unwrap();
        for c in &self.columns {
            write!(out, " {} |", c.replace('|', "\\|")).unwrap();
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.columns {
            out.push_str("---:|");
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "| {} |", row.label.replace('|', "\\|")).unwrap();
            for cell in &row.cells {
                let text = match cell.value {
                    None => "n/a".to_string(),
                    Some(v) if cell.significant => format!("**{v:.4}**"),
                    Some(v) => format!("{v:.4}"),
                };
                write!(out, " {text} |").unwrap();
            }
            out.push('\n');
        }
        if !self.footnotes.is_empty() {
            out.push('\n');
            for note in &self.footnotes {
                writeln!(out, "- {note}").unwrap();
            }
        }
        out
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::Report(format!("bad number {field:?}")))
}
