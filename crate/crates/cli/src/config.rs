//! Analysis settings: defaults, then a JSON config file, then flags.

use std::path::{Path, PathBuf};

use qreform::ireval::DEFAULT_CUTOFF;
use qreform::similarity::{Bm25Idf, ScoringConfig, TfidfIdf};
use qreform::sources::{default_dwell_thresholds, DocstorePolicy};
use qreform::stattests::WilcoxonOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Md,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn md(self) -> bool {
        matches!(self, Format::Md | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Count pairs whose later query is the test query (pairs, positions).
    pub include_test_queries: bool,
    pub k1: f64,
    pub b: f64,
    pub bm25_idf: Bm25Idf,
    pub tfidf_idf: TfidfIdf,
    pub cutoff: usize,
    pub dwell_thresholds: Vec<f64>,
    pub docstore_policy: DocstorePolicy,
    pub format: Format,
    pub strict: bool,
    /// `None` keeps the corpus's own stemming setting.
    pub stem: Option<bool>,
    pub stoplist: Option<PathBuf>,
    pub max_position: u32,
    pub k_max: usize,
    /// Reference position for the fixed-query similarity series.
    pub fixed_query: u32,
    pub exact_max_n: usize,
    pub continuity_correction: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let scoring = ScoringConfig::default();
        let wilcoxon = WilcoxonOptions::default();
        AnalysisConfig {
            include_test_queries: true,
            k1: scoring.k1,
            b: scoring.b,
            bm25_idf: scoring.bm25_idf,
            tfidf_idf: scoring.tfidf_idf,
            cutoff: DEFAULT_CUTOFF,
            dwell_thresholds: default_dwell_thresholds(),
            docstore_policy: DocstorePolicy::Drop,
            format: Format::Csv,
            strict: false,
            stem: None,
            stoplist: None,
            max_position: 10,
            k_max: 10,
            fixed_query: 1,
            exact_max_n: wilcoxon.exact_max_n,
            continuity_correction: wilcoxon.continuity_correction,
        }
    }
}

/// Flag values that override the config file when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub include_test_queries: Option<bool>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub cutoff: Option<usize>,
    pub dwell_thresholds: Option<Vec<f64>>,
    pub docstore_policy: Option<DocstorePolicy>,
    pub format: Option<Format>,
    pub strict: bool,
    pub no_stem: bool,
    pub stoplist: Option<PathBuf>,
    pub max_position: Option<u32>,
    pub k_max: Option<usize>,
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<AnalysisConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn apply(mut self, o: Overrides) -> AnalysisConfig {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        set(&mut self.include_test_queries, o.include_test_queries);
        set(&mut self.k1, o.k1);
        set(&mut self.b, o.b);
        set(&mut self.cutoff, o.cutoff);
        set(&mut self.dwell_thresholds, o.dwell_thresholds);
        set(&mut self.docstore_policy, o.docstore_policy);
        set(&mut self.format, o.format);
        set(&mut self.max_position, o.max_position);
        set(&mut self.k_max, o.k_max);
        self.strict |= o.strict;
        if o.no_stem {
            self.stem = Some(false);
        }
        if o.stoplist.is_some() {
            self.stoplist = o.stoplist;
        }
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(format!("k1 must be a non-negative number, got {}", self.k1));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(format!("b must lie in [0, 1], got {}", self.b));
        }
        if self.cutoff == 0 {
            return Err("cutoff must be at least 1".into());
        }
        if self.k_max == 0 || self.max_position == 0 || self.fixed_query == 0 {
            return Err("k_max, max_position and fixed_query must be at least 1".into());
        }
        if self.dwell_thresholds.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err("dwell thresholds must be non-negative numbers".into());
        }
        Ok(())
    }

    pub fn scoring(&self) -> ScoringConfig {
        ScoringConfig {
            k1: self.k1,
            b: self.b,
            bm25_idf: self.bm25_idf,
            tfidf_idf: self.tfidf_idf,
        }
    }

    pub fn wilcoxon(&self) -> WilcoxonOptions {
        WilcoxonOptions {
            exact_max_n: self.exact_max_n,
            continuity_correction: self.continuity_correction,
        }
    }
}
