//! Closed-form expectations for generator specs.
//!
//! With click probabilities p_r, an impression has no click with probability
//! Π(1 − p_r), only clicks with Π p_r, and both kinds of results otherwise.
//! A planted term is in the non-clicked snippets with probability `ncs`
//! given a non-clicked result exists, and in the clicked snippets or
//! documents with `cs` / `cd` given a click exists, all independently.
//!
//! Query sizes follow E|Q_1| = query_length and
//! E|Q_{n+1}| = k̄ E|Q_n| + λ, where k̄ is the mean keep probability over the
//! query-term scenario distribution and λ = add_slots · p_add. Per pair,
//! E retained = k̄ (1 − drift) E|Q_n| and E added = λ + k̄ drift E|Q_n|.
//! Means over pairs are ratios of expectations over the session-length
//! distribution.

use serde::{Deserialize, Serialize};

use super::{GeneratorSpec, Planting};
use crate::error::{Error, Result};
use crate::scenarios::membership_of;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickClasses {
    pub none: f64,
    pub all: f64,
    pub mixed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionExpectation {
    pub pairs_per_session: f64,
    pub length_n: f64,
    pub length_n1: f64,
    pub retained: f64,
    pub removed: f64,
    pub added: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedStatistics {
    pub click_classes: ClickClasses,
    /// Pairs including those that end in a test query.
    pub all_pairs: ActionExpectation,
    /// Pairs whose later query is ranked (the scenario population).
    pub ranked_pairs: ActionExpectation,
    /// Probability of scenarios 1..=8 for a query term and an added term.
    pub query_scenarios: [f64; 8],
    pub added_scenarios: [f64; 8],
    /// Probability that a query term in each scenario is retained.
    pub retention_by_scenario: [f64; 8],
    pub mean_keep: f64,
}

fn scenario_distribution(classes: &ClickClasses, p: &Planting) -> [f64; 8] {
    // (has non-clicked, has clicked, probability)
    let cases = [(true, false, classes.none), (false, true, classes.all), (true, true, classes.mixed)];
    let mut out = [0.0; 8];
    for (s, slot) in out.iter_mut().enumerate() {
        let m = membership_of(s as u8 + 1).expect("scenario in range");
        *slot = cases
            .iter()
            .map(|&(u, c, w)| {
                let bit = |present: bool, prob: f64| if present { prob } else { 1.0 - prob };
                w * bit(m.ncs, if u { p.ncs } else { 0.0 })
                    * bit(m.cs, if c { p.cs } else { 0.0 })
                    * bit(m.cd, if c { p.cd } else { 0.0 })
            })
            .sum();
    }
    out
}

/// Expected pair-level and scenario statistics. Specs whose filler shares
/// the query pool are intractable: memberships then depend on chance
/// collisions with filler.
pub fn expected_statistics(spec: &GeneratorSpec) -> Result<ExpectedStatistics> {
    spec.validate()?;
    if spec.shared_filler {
        return Err(Error::Intractable(
            "filler drawn from the query vocabulary makes memberships depend on collisions".into(),
        ));
    }
    let none: f64 = spec.click_probs.iter().map(|p| 1.0 - p).product();
    let all: f64 = spec.click_probs.iter().product();
    let classes = ClickClasses {
        none,
        all,
        mixed: (1.0 - none - all).max(0.0),
    };
    let query_scenarios = scenario_distribution(&classes, &spec.query);
    let added_scenarios = scenario_distribution(&classes, &spec.added);
    let keep: Vec<f64> = (1..=8).map(|s| spec.keep_probability(s)).collect();
    let mean_keep: f64 = query_scenarios.iter().zip(&keep).map(|(p, k)| p * k).sum();
    let mut retention_by_scenario = [0.0; 8];
    for (r, k) in retention_by_scenario.iter_mut().zip(&keep) {
        *r = k * (1.0 - spec.drift);
    }

    let lambda = spec.add_slots as f64 * spec.p_add;
    let max = spec.session_length.max;
    let mut sizes = vec![spec.query_length as f64];
    for n in 1..max {
        sizes.push(mean_keep * sizes[n - 1] + lambda);
    }

    let summarize = |ranked_only: bool| {
        let lengths = spec.session_length.min..=spec.session_length.max;
        let weight = 1.0 / lengths.clone().count() as f64;
        let mut acc = [0.0f64; 6];
        for l in lengths {
            let pairs = l - 1 - usize::from(ranked_only && spec.test_query);
            acc[0] += weight * pairs as f64;
            for q in &sizes[..pairs] {
                acc[1] += weight * q;
                acc[2] += weight * (mean_keep * q + lambda);
                acc[3] += weight * mean_keep * (1.0 - spec.drift) * q;
                acc[5] += weight * (lambda + mean_keep * spec.drift * q);
            }
        }
        acc[4] = acc[1] - acc[3];
        let per_pair = |x: f64| if acc[0] > 0.0 { x / acc[0] } else { 0.0 };
        ActionExpectation {
            pairs_per_session: acc[0],
            length_n: per_pair(acc[1]),
            length_n1: per_pair(acc[2]),
            retained: per_pair(acc[3]),
            removed: per_pair(acc[4]),
            added: per_pair(acc[5]),
        }
    };

    Ok(ExpectedStatistics {
        click_classes: classes,
        all_pairs: summarize(false),
        ranked_pairs: summarize(true),
        query_scenarios,
        added_scenarios,
        retention_by_scenario,
        mean_keep,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::base_spec;
    use super::*;

    #[test]
    fn full_retention_removes_nothing() {
        let spec = GeneratorSpec { p_keep: 1.0, ..base_spec() };
        let e = expected_statistics(&spec).unwrap();
        assert_eq!(e.all_pairs.removed, 0.0);
    }

    #[test]
    fn non_clicked_only_planting_is_scenario_five() {
        let spec = GeneratorSpec {
            added: Planting { ncs: 1.0, cs: 0.0, cd: 0.0, ncd: 0.0 },
            click_probs: vec![0.0, 0.0],
            ..base_spec()
        };
        let e = expected_statistics(&spec).unwrap();
        assert_eq!(e.added_scenarios[4], 1.0);
    }

    #[test]
    fn distributions_sum_to_one() {
        let e = expected_statistics(&base_spec()).unwrap();
        for d in [e.query_scenarios, e.added_scenarios] {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let c = e.click_classes;
        assert!((c.none + c.all + c.mixed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_length_recursion() {
        let spec = GeneratorSpec {
            p_keep: 2.0 / 3.0,
            add_slots: 0,
            session_length: super::super::LengthRange { min: 2, max: 2 },
            ..base_spec()
        };
        let e = expected_statistics(&spec).unwrap();
        assert!((e.all_pairs.retained - 2.0).abs() < 1e-12);
        assert!((e.all_pairs.removed - 1.0).abs() < 1e-12);
        assert_eq!(e.all_pairs.added, 0.0);
    }

    #[test]
    fn shared_filler_is_intractable() {
        let spec = GeneratorSpec { shared_filler: true, ..base_spec() };
        assert!(matches!(expected_statistics(&spec), Err(Error::Intractable(_))));
    }
}
