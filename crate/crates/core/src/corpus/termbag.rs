use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Bag of words: term to positive count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, u32>", into = "BTreeMap<String, u32>")]
pub struct TermBag {
    counts: BTreeMap<String, u32>,
}

impl TermBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: impl Into<String>, count: u32) {
        if count > 0 {
            *self.counts.entry(term.into()).or_insert(0) += count;
        }
    }

    /// Count-summed union.
    pub fn merge(&mut self, other: &TermBag) {
        for (term, &count) in &other.counts {
            self.add(term.clone(), count);
        }
    }

    pub fn count(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.counts.contains_key(term)
    }

    /// Total number of tokens (sum of counts).
    pub fn len(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> + '_ {
        self.counts.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn to_set(&self) -> BTreeSet<String> {
        self.counts.keys().cloned().collect()
    }

    /// Bag with count 1 for every term of `set`.
    pub fn from_set<'a>(set: impl IntoIterator<Item = &'a String>) -> Self {
        set.into_iter().map(|t| (t.clone(), 1)).collect()
    }
}

impl TryFrom<BTreeMap<String, u32>> for TermBag {
    type Error = String;

    fn try_from(counts: BTreeMap<String, u32>) -> Result<Self, Self::Error> {
        if let Some((term, _)) = counts.iter().find(|(_, &c)| c == 0) {
            return Err(format!("term bag holds zero count for {term:?}"));
        }
        Ok(TermBag { counts })
    }
}

impl From<TermBag> for BTreeMap<String, u32> {
    fn from(bag: TermBag) -> Self {
        bag.counts
    }
}

impl FromIterator<String> for TermBag {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        let mut bag = TermBag::new();
        for term in iter {
            bag.add(term, 1);
        }
        bag
    }
}

impl FromIterator<(String, u32)> for TermBag {
    fn from_iter<I: IntoIterator<Item = (String, u32)>>(iter: I) -> Self {
        let mut bag = TermBag::new();
        for (term, count) in iter {
            bag.add(term, count);
        }
        bag
    }
}
