//! Synthetic sessions with planted term behavior.
//!
//! Queries draw from a pool of tokens `t00000, t00001, ...`; snippet and
//! document filler draws from a disjoint pool `f00000, ...`. For each
//! impression n the generator
//!
//! 1. samples a click for each rank r with probability `click_probs[r]`,
//! 2. plants every query term into a random non-clicked snippet, clicked
//!    snippet, clicked document and non-clicked document, each independently
//!    with the `query` planting probabilities (when such a result exists),
//! 3. evolves q_n into q_{n+1}: each term is kept with `p_keep` (or the
//!    per-scenario override), a kept term is replaced by a fresh term with
//!    probability `drift`, and Binomial(`add_slots`, `p_add`) fresh terms are
//!    appended,
//! 4. plants the added terms of q_{n+1} into impression n with the `added`
//!    probabilities.
//!
//! Every session uses its own random stream, so sessions can be generated in
//! parallel and the output depends only on the spec.

mod expected;
pub mod rng;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{snippet_terms, ClickEvent, Corpus, Impression, RelevanceJudgments, Session, SnippetEntry};
use crate::error::{Error, Result};
use crate::scenarios::{scenario_index, Membership};
use crate::textnorm::NormalizationConfig;

pub use expected::{expected_statistics, ActionExpectation, ClickClasses, ExpectedStatistics};
pub use rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Planting {
    pub ncs: f64,
    pub cs: f64,
    pub cd: f64,
    pub ncd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelevanceSpec {
    /// Relative frequency of grades 0..=4 among ranked documents.
    pub grade_weights: [f64; 5],
    /// When a query term in this scenario is retained, every document of the
    /// next ranking is judged 0.
    #[serde(default)]
    pub penalty_scenario: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub sessions: usize,
    /// Queries per session, uniform over the inclusive range.
    pub session_length: LengthRange,
    /// The last query of each session has no ranking.
    #[serde(default)]
    pub test_query: bool,
    #[serde(default = "default_dataset")]
    pub dataset: String,
    pub vocabulary: usize,
    pub query_length: usize,
    pub p_keep: f64,
    #[serde(default)]
    pub p_keep_by_scenario: Option<[f64; 8]>,
    #[serde(default)]
    pub drift: f64,
    pub add_slots: usize,
    pub p_add: f64,
    pub added: Planting,
    #[serde(default)]
    pub query: Planting,
    pub click_probs: Vec<f64>,
    pub snippet_length: usize,
    pub document_length: usize,
    pub filler_vocabulary: usize,
    #[serde(default = "default_max_dwell")]
    pub max_dwell: u32,
    /// Filler drawn from the query pool instead of its own pool. Planted
    /// memberships then no longer follow the planting probabilities alone.
    #[serde(default)]
    pub shared_filler: bool,
    #[serde(default)]
    pub relevance: Option<RelevanceSpec>,
}

fn default_dataset() -> String {
    "synthetic".into()
}

fn default_max_dwell() -> u32 {
    60
}

impl GeneratorSpec {
    pub fn from_json(text: &str) -> Result<GeneratorSpec> {
        let spec: GeneratorSpec = serde_json::from_str(text).map_err(|e| Error::spec("spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<GeneratorSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GeneratorSpec::from_json(&text)
    }

    /// Number of ranked results per impression.
    pub fn results(&self) -> usize {
        self.click_probs.len()
    }

    /// Largest query size the evolution can reach.
    pub fn max_query_size(&self) -> usize {
        self.query_length + self.session_length.max.saturating_sub(1) * self.add_slots
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |field: &str, p: f64| -> Result<()> {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::spec(field, format!("probability {p} outside [0, 1]")))
            }
        };
        prob("p_keep", self.p_keep)?;
        prob("drift", self.drift)?;
        prob("p_add", self.p_add)?;
        if let Some(ps) = &self.p_keep_by_scenario {
            for (i, p) in ps.iter().enumerate() {
                prob(&format!("p_keep_by_scenario[{i}]"), *p)?;
            }
        }
        for (name, pl) in [("added", &self.added), ("query", &self.query)] {
            prob(&format!("{name}.ncs"), pl.ncs)?;
            prob(&format!("{name}.cs"), pl.cs)?;
            prob(&format!("{name}.cd"), pl.cd)?;
            prob(&format!("{name}.ncd"), pl.ncd)?;
        }
        for (i, p) in self.click_probs.iter().enumerate() {
            prob(&format!("click_probs[{i}]"), *p)?;
        }
        if self.vocabulary == 0 {
            return Err(Error::spec("vocabulary", "must be positive"));
        }
        if self.sessions == 0 {
            return Err(Error::spec("sessions", "must be positive"));
        }
        let LengthRange { min, max } = self.session_length;
        if min == 0 || min > max {
            return Err(Error::spec("session_length", format!("need 1 <= min <= max, got {min}..={max}")));
        }
        if self.test_query && min < 2 {
            return Err(Error::spec("session_length", "sessions with a test query need at least 2 queries"));
        }
        if self.click_probs.is_empty() {
            return Err(Error::spec("click_probs", "need at least one ranked result"));
        }
        let needed = 2 * self.max_query_size() + self.add_slots;
        if self.vocabulary < needed {
            return Err(Error::spec(
                "vocabulary",
                format!("{} tokens cannot supply fresh terms for queries of up to {} terms (need {needed})", self.vocabulary, self.max_query_size()),
            ));
        }
        if self.filler_vocabulary == 0 && (self.snippet_length > 0 || self.document_length > 0) {
            return Err(Error::spec("filler_vocabulary", "must be positive when filler is requested"));
        }
        if self.max_dwell == 0 {
            return Err(Error::spec("max_dwell", "must be positive"));
        }
        if let Some(rel) = &self.relevance {
            if rel.grade_weights.iter().any(|w| w.is_nan() || *w < 0.0) || rel.grade_weights.iter().sum::<f64>() <= 0.0 {
                return Err(Error::spec("relevance.grade_weights", "weights must be non-negative with a positive sum"));
            }
            if rel.penalty_scenario.is_some_and(|s| !(1..=8).contains(&s)) {
                return Err(Error::spec("relevance.penalty_scenario", "scenario must be in 1..=8"));
            }
        }
        Ok(())
    }

    fn keep_probability(&self, scenario: u8) -> f64 {
        match &self.p_keep_by_scenario {
            Some(ps) => ps[scenario as usize - 1],
            None => self.p_keep,
        }
    }
}

fn query_token(i: usize) -> String {
    format!("t{i:05}")
}

fn filler_token(i: usize) -> String {
    format!("f{i:05}")
}

/// Where one term is planted in an impression.
#[derive(Debug, Clone, Copy, Default)]
struct Placement {
    ncs: Option<usize>,
    cs: Option<usize>,
    cd: Option<usize>,
    ncd: Option<usize>,
}

impl Placement {
    fn membership(&self) -> Membership {
        Membership {
            ncs: self.ncs.is_some(),
            cs: self.cs.is_some(),
            cd: self.cd.is_some(),
        }
    }
}

fn place(rng: &mut Rng, p: &Planting, clicked: &[usize], unclicked: &[usize]) -> Placement {
    let mut pick = |prob: f64, ranks: &[usize]| {
        let hit = rng.bernoulli(prob);
        let idx = rng.below(ranks.len().max(1));
        (hit && !ranks.is_empty()).then(|| ranks[idx])
    };
    Placement {
        ncs: pick(p.ncs, unclicked),
        cs: pick(p.cs, clicked),
        cd: pick(p.cd, clicked),
        ncd: pick(p.ncd, unclicked),
    }
}

/// Fresh query tokens not in `exclude`.
fn fresh_terms(rng: &mut Rng, spec: &GeneratorSpec, exclude: &BTreeSet<String>, count: usize) -> Vec<String> {
    let mut chosen = Vec::with_capacity(count);
    while chosen.len() < count {
        let t = query_token(rng.below(spec.vocabulary));
        if !exclude.contains(&t) && !chosen.contains(&t) {
            chosen.push(t);
        }
    }
    chosen
}

struct GeneratedSession {
    session: Session,
    documents: Vec<(String, String)>,
    grades: Vec<(String, u8)>,
}

fn filler(rng: &mut Rng, spec: &GeneratorSpec, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            if spec.shared_filler {
                query_token(rng.below(spec.vocabulary))
            } else {
                filler_token(rng.below(spec.filler_vocabulary))
            }
        })
        .collect()
}

fn generate_session(spec: &GeneratorSpec, root: &Rng, index: usize, cfg: &NormalizationConfig) -> GeneratedSession {
    let mut rng = root.split(index as u64);
    let id = format!("{}-{:06}", spec.dataset, index + 1);
    let LengthRange { min, max } = spec.session_length;
    let length = min + rng.below(max - min + 1);
    let m = spec.results();

    let mut query: Vec<String> = fresh_terms(&mut rng, spec, &BTreeSet::new(), spec.query_length);
    let mut impressions = Vec::with_capacity(length);
    let mut documents = Vec::new();
    let mut grades = Vec::new();
    let mut penalize_next = false;

    for n in 1..=length {
        let position = n as u32;
        let ranked = !(spec.test_query && n == length);
        let raw_query = query.join(" ");
        if !ranked {
            impressions.push(Impression {
                position,
                query_terms: cfg.normalize(&raw_query),
                raw_query,
                results: Vec::new(),
                clicks: Vec::new(),
                document_incomplete: false,
            });
            break;
        }

        let clicked_flags: Vec<bool> = spec.click_probs.iter().map(|&p| rng.bernoulli(p)).collect();
        let clicked: Vec<usize> = (0..m).filter(|&r| clicked_flags[r]).collect();
        let unclicked: Vec<usize> = (0..m).filter(|&r| !clicked_flags[r]).collect();

        let mut placements: Vec<(String, Placement)> = query
            .iter()
            .map(|t| (t.clone(), place(&mut rng, &spec.query, &clicked, &unclicked)))
            .collect();

        let mut next_query = Vec::new();
        let mut retained_penalized = false;
        if n < length {
            let current: BTreeSet<String> = query.iter().cloned().collect();
            let mut replaced = 0;
            for (t, pl) in &placements {
                let scenario = scenario_index(pl.membership());
                if rng.bernoulli(spec.keep_probability(scenario)) {
                    if rng.bernoulli(spec.drift) {
                        replaced += 1;
                    } else {
                        next_query.push(t.clone());
                        if spec.relevance.as_ref().and_then(|r| r.penalty_scenario) == Some(scenario) {
                            retained_penalized = true;
                        }
                    }
                }
            }
            let extra = rng.binomial(spec.add_slots, spec.p_add);
            let added = fresh_terms(&mut rng, spec, &current, replaced + extra);
            for t in &added {
                placements.push((t.clone(), place(&mut rng, &spec.added, &clicked, &unclicked)));
            }
            next_query.extend(added);
        }

        let mut snippet_words: Vec<Vec<String>> = (0..m).map(|_| filler(&mut rng, spec, spec.snippet_length)).collect();
        let mut doc_words: Vec<Vec<String>> = (0..m).map(|_| filler(&mut rng, spec, spec.document_length)).collect();
        for (t, pl) in &placements {
            for r in [pl.ncs, pl.cs].into_iter().flatten() {
                snippet_words[r].push(t.clone());
            }
            for r in [pl.cd, pl.ncd].into_iter().flatten() {
                doc_words[r].push(t.clone());
            }
        }

        let mut results = Vec::with_capacity(m);
        for r in 0..m {
            let docid = format!("{id}-{n}-{}", r + 1);
            let snippet = snippet_words[r].join(" ");
            results.push(SnippetEntry {
                rank: r as u32 + 1,
                url: format!("http://synthetic.invalid/{docid}"),
                terms: snippet_terms("", &snippet, cfg),
                docid: docid.clone(),
                title: String::new(),
                snippet,
            });
            documents.push((docid.clone(), doc_words[r].join(" ")));
            if let Some(rel) = &spec.relevance {
                let g = rng.categorical(&rel.grade_weights) as u8;
                grades.push((docid, if penalize_next { 0 } else { g }));
            }
        }

        let mut clicks = Vec::with_capacity(clicked.len());
        let mut clock = 0.0;
        for (order, &r) in clicked.iter().enumerate() {
            let dwell = f64::from(1 + rng.below(spec.max_dwell as usize) as u32);
            clicks.push(ClickEvent::new(r as u32 + 1, order as u32 + 1, clock, clock + dwell));
            clock += dwell + 1.0;
        }

        impressions.push(Impression {
            position,
            query_terms: cfg.normalize(&raw_query),
            raw_query,
            results,
            clicks,
            document_incomplete: false,
        });
        penalize_next = retained_penalized;
        query = next_query;
    }

    GeneratedSession {
        session: Session {
            topic_id: spec.relevance.as_ref().map(|_| id.clone()),
            id,
            dataset: spec.dataset.clone(),
            impressions,
            has_test_query: spec.test_query,
        },
        documents,
        grades,
    }
}

/// Builds the corpus described by `spec`, with every document in the
/// docstore and judgments when `relevance` is set.
pub fn generate(spec: &GeneratorSpec) -> Result<Corpus> {
    spec.validate()?;
    let cfg = NormalizationConfig::default();
    let root = Rng::new(spec.seed);
    let generated: Vec<GeneratedSession> = (0..spec.sessions)
        .into_par_iter()
        .map(|i| generate_session(spec, &root, i, &cfg))
        .collect();

    let mut corpus = Corpus::new(
        format!("synthetic seed={} sessions={}", spec.seed, spec.sessions),
        cfg,
    );
    let mut store = BTreeMap::new();
    let mut qrels = spec.relevance.as_ref().map(|_| RelevanceJudgments::default());
    for g in generated {
        if let Some(q) = &mut qrels {
            for (docid, grade) in g.grades {
                q.insert(g.session.id.clone(), docid, grade);
            }
        }
        store.extend(g.documents);
        corpus.sessions.push(g.session);
    }
    corpus.docstore = Some(store);
    corpus.qrels = qrels;
    corpus.validate()?;
    Ok(corpus)
}
