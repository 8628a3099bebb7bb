use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Named, ordered list of `(pair_id, score)` with unique ids and scores in
/// `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    name: String,
    ids: Vec<String>,
    scores: Vec<f64>,
    index: HashMap<String, usize>,
}

impl PredictionSet {
    pub fn new(
        name: impl Into<String>,
        entries: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let mut set = PredictionSet {
            name: name.into(),
            ids: Vec::new(),
            scores: Vec::new(),
            index: HashMap::new(),
        };
        for (id, score) in entries {
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::Range { id, value: score });
            }
            if set.index.contains_key(&id) {
                return Err(Error::Duplicate(id));
            }
            set.index.insert(id.clone(), set.ids.len());
            set.ids.push(id);
            set.scores.push(score);
        }
        Ok(set)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.index.get(id).map(|&i| self.scores[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().copied())
    }
}

/// Ground-truth kin labels keyed by pair id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelSet {
    labels: HashMap<String, u8>,
}

impl LabelSet {
    pub fn new(entries: impl IntoIterator<Item = (String, u8)>) -> Result<Self> {
        let mut labels = HashMap::new();
        for (id, label) in entries {
            if label > 1 {
                return Err(Error::Contract(format!(
                    "label for '{id}' must be 0 or 1, got {label}"
                )));
            }
            if labels.insert(id.clone(), label).is_some() {
                return Err(Error::Duplicate(id));
            }
        }
        Ok(LabelSet { labels })
    }

    pub fn get(&self, id: &str) -> Option<u8> {
        self.labels.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.labels.values().filter(|&&l| l == 1).count();
        pos > 0 && pos < self.labels.len()
    }
}

/// Fails with a join error when `b` lacks ids of `a` or vice versa.
pub(crate) fn require_same_ids(a: &PredictionSet, b: &PredictionSet) -> Result<()> {
    let missing_in_b: Vec<&str> = a
        .ids()
        .iter()
        .filter(|id| !b.contains(id))
        .map(String::as_str)
        .collect();
    let missing_in_a: Vec<&str> = b
        .ids()
        .iter()
        .filter(|id| !a.contains(id))
        .map(String::as_str)
        .collect();
    if missing_in_a.is_empty() && missing_in_b.is_empty() {
        return Ok(());
    }
    let mut msg = String::new();
    if !missing_in_b.is_empty() {
        msg += &format!(
            "ids in '{}' missing from '{}': {}",
            a.name(),
            b.name(),
            preview(&missing_in_b)
        );
    }
    if !missing_in_a.is_empty() {
        if !msg.is_empty() {
            msg += "; ";
        }
        msg += &format!(
            "ids in '{}' missing from '{}': {}",
            b.name(),
            a.name(),
            preview(&missing_in_a)
        );
    }
    Err(Error::Join(msg))
}

pub(crate) fn preview(ids: &[&str]) -> String {
    const SHOWN: usize = 10;
    let head = ids
        .iter()
        .take(SHOWN)
        .copied()
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        format!("{head} (+{} more)", ids.len() - SHOWN)
    } else {
        head
    }
}

/// Ids present in every set, in the order of the first set.
pub(crate) fn common_ids(sets: &[&PredictionSet]) -> Vec<String> {
    let Some(first) = sets.first() else {
        return Vec::new();
    };
    let rest: Vec<HashSet<&str>> = sets[1..]
        .iter()
        .map(|s| s.ids().iter().map(String::as_str).collect())
        .collect();
    first
        .ids()
        .iter()
        .filter(|id| rest.iter().all(|r| r.contains(id.as_str())))
        .cloned()
        .collect()
}
