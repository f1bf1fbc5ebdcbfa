//! Analysis groups and the tables each one emits.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use qreform::actions::{
    extract_pairs, fixed_query_similarity, length_by_position, pair_summary, similarity_by_position, QueryPair,
};
use qreform::ireval::{impression_metric_table, metrics_by_position, scenario_metric_eval, Metric};
use qreform::report::Cell;
use qreform::scenarios::{assign_scenarios, click_outcome_eval, overall_retention, retention_by_scenario, scenario_distribution, ScenarioRecord};
use qreform::sources::{
    dwell_threshold_curve, last_click_similarity, mean_dwell, rank_prefix_similarity, source_comparison, SourceIndex,
};
use qreform::{Corpus, Error, ReportTable, Result};

use crate::config::AnalysisConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Group {
    Pairs,
    Positions,
    Sources,
    Scenarios,
    Metrics,
    All,
}

impl Group {
    pub const EACH: [Group; 5] = [Group::Pairs, Group::Positions, Group::Sources, Group::Scenarios, Group::Metrics];

    pub fn expand(self) -> Vec<Group> {
        match self {
            Group::All => Group::EACH.to_vec(),
            g => vec![g],
        }
    }
}

#[derive(Debug)]
pub enum Output {
    Table { name: &'static str, table: ReportTable },
    Skipped { name: &'static str, reason: String },
}

/// Inputs shared by every group. Scenario records are built once on demand.
pub struct Context<'a> {
    pub corpus: &'a Corpus,
    pub cfg: &'a AnalysisConfig,
    index: SourceIndex<'a>,
    ranked_pairs: Vec<QueryPair>,
    records: OnceLock<Vec<ScenarioRecord>>,
}

impl<'a> Context<'a> {
    pub fn new(corpus: &'a Corpus, cfg: &'a AnalysisConfig) -> Self {
        Context {
            corpus,
            cfg,
            index: SourceIndex::new(corpus, cfg.docstore_policy),
            ranked_pairs: extract_pairs(corpus, false),
            records: OnceLock::new(),
        }
    }

    fn records(&self) -> &[ScenarioRecord] {
        self.records.get_or_init(|| assign_scenarios(&self.ranked_pairs, &self.index))
    }

    pub fn run(&self, group: Group) -> Result<Vec<Output>> {
        match group {
            Group::Pairs => self.pairs(),
            Group::Positions => self.positions(),
            Group::Sources => self.sources(),
            Group::Scenarios => self.scenarios(),
            Group::Metrics => self.metrics(),
            Group::All => {
                let mut out = Vec::new();
                for g in Group::EACH {
                    out.extend(self.run(g)?);
                }
                Ok(out)
            }
        }
    }

    fn pairs(&self) -> Result<Vec<Output>> {
        let pairs = extract_pairs(self.corpus, self.cfg.include_test_queries);
        Ok(vec![attempt("pairs", pair_summary(&pairs))?])
    }

    fn positions(&self) -> Result<Vec<Output>> {
        let cfg = self.cfg;
        let include = cfg.include_test_queries;
        let max = cfg.max_position as usize;

        let lengths: BTreeSet<usize> = self
            .corpus
            .sessions
            .iter()
            .map(|s| s.impressions.len() - usize::from(!include && s.has_test_query))
            .filter(|l| (2..=max).contains(l))
            .collect();
        let width = lengths.last().copied().unwrap_or(0);
        let mut by_length = ReportTable::new(
            "Mean query length by position, per session length",
            (1..=width).map(|n| n.to_string()).collect(),
        );
        for &l in &lengths {
            let mut cells = vec![Cell::empty(); width];
            for p in length_by_position(self.corpus, l, include) {
                cells[p.position as usize - 1] = Cell::value(p.mean_length).with_population(p.count);
            }
            by_length.push_row(format!("length {l}"), cells);
        }

        let pairs = extract_pairs(self.corpus, include);
        let mut similarity = ReportTable::new(
            "Pair similarity by position of the earlier query",
            vec!["Jaccard".into(), "Cosine".into()],
        );
        for p in similarity_by_position(&pairs, cfg.max_position) {
            similarity.push_row(
                p.position.to_string(),
                vec![
                    Cell::value(p.jaccard).with_population(p.count),
                    Cell::value(p.cosine).with_population(p.count),
                ],
            );
        }

        let x = cfg.fixed_query;
        let mut fixed = ReportTable::new(format!("Cosine between query {x} and query n"), vec!["Cosine".into()]);
        for p in fixed_query_similarity(self.corpus, x, cfg.max_position, include) {
            fixed.push_row(p.position.to_string(), vec![Cell::value(p.cosine).with_population(p.count)]);
        }

        Ok(vec![
            Output::Table { name: "positions_length", table: by_length },
            Output::Table { name: "positions_similarity", table: similarity },
            Output::Table { name: "positions_fixed_query", table: fixed },
        ])
    }

    fn sources(&self) -> Result<Vec<Output>> {
        let (pairs, index, scoring) = (&self.ranked_pairs, &self.index, self.cfg.scoring());
        let dwell = dwell_threshold_curve(pairs, index, &self.cfg.dwell_thresholds, &scoring).map(|points| {
            let mut t = ReportTable::new(
                "Added-term cosine to clicked documents by minimum dwell time",
                vec!["Cosine".into(), "Pairs".into(), "Documents".into()],
            );
            for p in points {
                t.push_row(
                    format!("{}", p.threshold),
                    vec![
                        Cell::value(p.cosine).with_population(p.pairs),
                        Cell::value(p.pairs as f64),
                        Cell::value(p.documents as f64),
                    ],
                );
            }
            if let Some(d) = mean_dwell(self.corpus) {
                t.footnote(format!("mean dwell per clicked document: {d:.2}s"));
            }
            t
        });
        Ok(vec![
            attempt("sources_by_kind", source_comparison(pairs, index, &scoring))?,
            attempt("sources_rank_prefix", rank_prefix_similarity(pairs, index, self.cfg.k_max, &scoring))?,
            attempt("sources_last_click", last_click_similarity(pairs, index, &scoring))?,
            attempt("sources_dwell", dwell)?,
        ])
    }

    fn scenarios(&self) -> Result<Vec<Output>> {
        let records = self.records();
        let mut retention = ReportTable::new(
            "Query-term retention by scenario",
            vec!["Retained".into(), "Removed".into()],
        );
        for p in retention_by_scenario(records) {
            retention.push_row(
                p.scenario.to_string(),
                vec![
                    Cell::value(p.retained).with_population(p.population),
                    Cell::value(p.removed).with_population(p.population),
                ],
            );
        }
        if let Some(r) = overall_retention(records) {
            retention.footnote(format!("overall retention: {r:.4}"));
        }
        Ok(vec![
            attempt("scenarios_distribution", scenario_distribution(records))?,
            Output::Table { name: "scenarios_retention", table: retention },
            Output::Table { name: "scenarios_click_outcome", table: click_outcome_eval(records) },
        ])
    }

    fn metrics(&self) -> Result<Vec<Output>> {
        let cutoff = self.cfg.cutoff;
        let by_position = metrics_by_position(self.corpus, cutoff, self.cfg.max_position).map(|points| {
            let columns = Metric::ALL.iter().map(|m| m.label(cutoff)).collect();
            let mut t = ReportTable::new("Mean metrics by impression position", columns);
            for p in points {
                let cells = Metric::ALL
                    .iter()
                    .map(|m| {
                        let v = match m {
                            Metric::Ndcg => p.ndcg,
                            Metric::Nerr => p.nerr,
                            Metric::Map => p.map,
                        };
                        Cell::value(v).with_population(p.count)
                    })
                    .collect();
                t.push_row(p.position.to_string(), cells);
            }
            t
        });
        Ok(vec![
            attempt("metrics_by_position", by_position)?,
            attempt(
                "metrics_scenario_delta",
                scenario_metric_eval(self.records(), self.corpus, cutoff, self.cfg.wilcoxon()),
            )?,
            attempt("metrics_per_impression", impression_metric_table(self.corpus, cutoff))?,
        ])
    }
}

/// Missing documents or judgments skip a table; anything else is a failure.
fn attempt(name: &'static str, result: Result<ReportTable>) -> Result<Output> {
    match result {
        Ok(table) => Ok(Output::Table { name, table }),
        Err(e @ (Error::MissingDocstore(_) | Error::EmptyInput("relevance judgments"))) => Ok(Output::Skipped {
            name,
            reason: e.to_string(),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qreform::synthgen::{generate, GeneratorSpec};

    fn spec() -> GeneratorSpec {
        GeneratorSpec::from_json(
            r#"{"seed": 5, "sessions": 30, "session_length": {"min": 2, "max": 4}, "test_query": true,
                "vocabulary": 300, "query_length": 3, "p_keep": 0.6, "drift": 0.1, "add_slots": 2, "p_add": 0.5,
                "added": {"ncs": 0.3, "cs": 0.4, "cd": 0.6, "ncd": 0.1},
                "query": {"ncs": 0.6, "cs": 0.5, "cd": 0.5, "ncd": 0.2},
                "click_probs": [0.5, 0.3, 0.2], "snippet_length": 4, "document_length": 10,
                "filler_vocabulary": 100}"#,
        )
        .unwrap()
    }

    fn names(out: &[Output]) -> Vec<(&str, bool)> {
        out.iter()
            .map(|o| match o {
                Output::Table { name, .. } => (*name, true),
                Output::Skipped { name, .. } => (*name, false),
            })
            .collect()
    }

    #[test]
    fn every_group_emits_on_a_full_corpus() {
        let corpus = generate(&spec()).unwrap();
        let cfg = AnalysisConfig::default();
        let out = Context::new(&corpus, &cfg).run(Group::All).unwrap();
        let n = names(&out);
        assert_eq!(n.len(), 14);
        // no judgments in this spec
        assert!(n.iter().all(|(name, ok)| *ok != name.starts_with("metrics")));
    }

    #[test]
    fn document_tables_skip_without_a_docstore() {
        let mut corpus = generate(&spec()).unwrap();
        corpus.docstore = None;
        let cfg = AnalysisConfig::default();
        let out = Context::new(&corpus, &cfg).run(Group::Sources).unwrap();
        assert_eq!(
            names(&out),
            vec![
                ("sources_by_kind", true),
                ("sources_rank_prefix", true),
                ("sources_last_click", true),
                ("sources_dwell", false)
            ]
        );
    }
}
