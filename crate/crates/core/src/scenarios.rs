//! Term behavior scenarios.
//!
//! A term of q_n (or an added term of q_{n+1}) is classified by whether it
//! occurs in the non-clicked snippets, clicked snippets and clicked documents
//! of impression n. With the three flags read as a binary number
//! (ncs, cs, cd), the scenario is that number plus one.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::QueryPair;
use crate::error::{Error, Result};
use crate::report::{Cell, ReportTable};
use crate::similarity::SourceKind;
use crate::sources::{DocstorePolicy, SourceIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Query,
    Added,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Retained,
    Removed,
    Added,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Retained, Action::Removed, Action::Added];

    pub fn label(self) -> &'static str {
        match self {
            Action::Retained => "retained",
            Action::Removed => "removed",
            Action::Added => "added",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Membership {
    pub ncs: bool,
    pub cs: bool,
    pub cd: bool,
}

/// Scenario number 1..=8 of a membership triple.
pub fn scenario_index(m: Membership) -> u8 {
    1 + 4 * u8::from(m.ncs) + 2 * u8::from(m.cs) + u8::from(m.cd)
}

/// Inverse of [`scenario_index`].
pub fn membership_of(scenario: u8) -> Option<Membership> {
    if !(1..=8).contains(&scenario) {
        return None;
    }
    let bits = scenario - 1;
    Some(Membership {
        ncs: bits & 4 != 0,
        cs: bits & 2 != 0,
        cd: bits & 1 != 0,
    })
}

/// Scenarios kept for the outcome analyses; 3 and 7 need a term in a clicked
/// snippet but not in its document.
pub const OUTCOME_SCENARIOS: [u8; 6] = [1, 2, 4, 5, 6, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub term: String,
    pub session_id: String,
    pub session_index: usize,
    pub position: u32,
    pub origin: Origin,
    pub membership: Membership,
    pub scenario: u8,
    pub action: Action,
    pub next_impression_clicked: bool,
    /// Ranked results and clicks of impression n.
    pub m: usize,
    pub clicks: usize,
    /// The cd flag could not be observed (no docstore, or a missing clicked
    /// document under the `empty` policy).
    pub cd_unavailable: bool,
}

/// Records for every query term and added term of each pair. Pairs that
/// involve a test query are skipped; so are pairs with missing clicked
/// documents under the `drop` policy.
pub fn assign_scenarios(pairs: &[QueryPair], index: &SourceIndex) -> Vec<ScenarioRecord> {
    let corpus = index.corpus();
    let per_pair: Vec<Vec<ScenarioRecord>> = pairs
        .par_iter()
        .filter(|p| !p.involves_test_query)
        .map(|p| {
            let session = &corpus.sessions[p.session_index];
            let imp = p.predecessor(corpus);
            let union = |kind: SourceKind| -> BTreeSet<&str> {
                imp.results
                    .iter()
                    .filter(|r| imp.is_clicked(r.rank) == (kind == SourceKind::ClickedSnippets))
                    .flat_map(|r| r.terms.terms())
                    .collect()
            };
            let ncs = union(SourceKind::NonClickedSnippets);
            let cs = union(SourceKind::ClickedSnippets);

            let mut cd_unavailable = !index.has_documents();
            let mut cd: BTreeSet<String> = BTreeSet::new();
            if index.has_documents() {
                for rank in imp.clicked_ranks() {
                    let docid = &imp.result(rank).expect("validated click").docid;
                    match index.document(docid) {
                        Some(bag) => cd.extend(bag.terms().map(str::to_string)),
                        None if index.policy() == DocstorePolicy::Drop => return Vec::new(),
                        None => cd_unavailable = true,
                    }
                }
            }

            let next_clicked = !p.successor(corpus).clicks.is_empty();
            let make = |term: &String, origin: Origin, action: Action| {
                let membership = Membership {
                    ncs: ncs.contains(term.as_str()),
                    cs: cs.contains(term.as_str()),
                    cd: cd.contains(term),
                };
                ScenarioRecord {
                    term: term.clone(),
                    session_id: session.id.clone(),
                    session_index: p.session_index,
                    position: p.position,
                    origin,
                    membership,
                    scenario: scenario_index(membership),
                    action,
                    next_impression_clicked: next_clicked,
                    m: imp.m(),
                    clicks: imp.clicks.len(),
                    cd_unavailable,
                }
            };
            let mut out: Vec<ScenarioRecord> = p
                .qn
                .iter()
                .map(|t| {
                    let action = if p.retained.contains(t) { Action::Retained } else { Action::Removed };
                    make(t, Origin::Query, action)
                })
                .collect();
            out.extend(p.added.iter().map(|t| make(t, Origin::Added, Action::Added)));
            out
        })
        .collect();
    per_pair.into_iter().flatten().collect()
}

/// Row groups of the distribution table. Without clicked documents the cd
/// bit is unobservable, so scenarios differing only in it share a row.
fn scenario_groups(snippet_only: bool) -> Vec<(String, Vec<u8>)> {
    if snippet_only {
        (0..4)
            .map(|i| (format!("{}/{}", 2 * i + 1, 2 * i + 2), vec![2 * i + 1, 2 * i + 2]))
            .collect()
    } else {
        (1..=8).map(|s| (s.to_string(), vec![s])).collect()
    }
}

/// Share of records per scenario and origin, with the mean ranking size and
/// click count of the owning impressions.
pub fn scenario_distribution(records: &[ScenarioRecord]) -> Result<ReportTable> {
    if records.is_empty() {
        return Err(Error::EmptyInput("scenario records"));
    }
    let snippet_only = records.iter().all(|r| r.cd_unavailable);
    let columns = ["Query %", "Query M", "Query clicks", "Added %", "Added M", "Added clicks"]
        .map(String::from)
        .to_vec();
    let mut table = ReportTable::new("Term scenario distribution", columns);
    let totals = [Origin::Query, Origin::Added].map(|o| records.iter().filter(|r| r.origin == o).count());
    for (label, members) in scenario_groups(snippet_only) {
        let mut cells = Vec::new();
        for (oi, origin) in [Origin::Query, Origin::Added].into_iter().enumerate() {
            let group: Vec<&ScenarioRecord> = records
                .iter()
                .filter(|r| r.origin == origin && members.contains(&r.scenario))
                .collect();
            let n = group.len();
            let share = if totals[oi] == 0 {
                Cell::empty().with_population(0)
            } else {
                Cell::value(100.0 * n as f64 / totals[oi] as f64).with_population(n)
            };
            cells.push(share);
            cells.push(Cell::mean(group.iter().map(|r| r.m as f64).sum(), n));
            cells.push(Cell::mean(group.iter().map(|r| r.clicks as f64).sum(), n));
        }
        table.push_row(label, cells);
    }
    table.footnote(format!("{} query-term records, {} added-term records", totals[0], totals[1]));
    if snippet_only {
        table.footnote("clicked documents unavailable: scenarios differing only in the cd bit are merged");
    } else if records.iter().any(|r| r.cd_unavailable) {
        table.footnote("some impressions lack clicked-document text; their cd bit reads as absent");
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionPoint {
    pub scenario: u8,
    pub retained: f64,
    pub removed: f64,
    pub population: usize,
}

/// Retained and removed fractions of query terms per scenario.
pub fn retention_by_scenario(records: &[ScenarioRecord]) -> Vec<RetentionPoint> {
    let mut counts = [(0usize, 0usize); 8];
    for r in records.iter().filter(|r| r.origin == Origin::Query) {
        let c = &mut counts[r.scenario as usize - 1];
        match r.action {
            Action::Retained => c.0 += 1,
            _ => c.1 += 1,
        }
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, (k, d))| k + d > 0)
        .map(|(i, &(k, d))| {
            let n = (k + d) as f64;
            RetentionPoint {
                scenario: i as u8 + 1,
                retained: k as f64 / n,
                removed: d as f64 / n,
                population: k + d,
            }
        })
        .collect()
}

/// Overall fraction of query terms retained.
pub fn overall_retention(records: &[ScenarioRecord]) -> Option<f64> {
    let q: Vec<_> = records.iter().filter(|r| r.origin == Origin::Query).collect();
    (!q.is_empty()).then(|| q.iter().filter(|r| r.action == Action::Retained).count() as f64 / q.len() as f64)
}

/// Percentage of records whose next impression has at least one click, per
/// scenario and action.
pub fn click_outcome_eval(records: &[ScenarioRecord]) -> ReportTable {
    let columns = Action::ALL.iter().map(|a| a.label().to_string()).collect();
    let mut table = ReportTable::new("Click in the next impression by scenario and action", columns);
    for s in OUTCOME_SCENARIOS {
        let cells = Action::ALL
            .iter()
            .map(|&a| {
                let group: Vec<&ScenarioRecord> =
                    records.iter().filter(|r| r.scenario == s && r.action == a).collect();
                let clicked = group.iter().filter(|r| r.next_impression_clicked).count();
                Cell::mean(100.0 * clicked as f64, group.len())
            })
            .collect();
        table.push_row(s.to_string(), cells);
    }
    table
}
