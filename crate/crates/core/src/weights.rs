//! Phase 1 choices and weight tallies.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::dimension::{DimensionId, DimensionSet};
use crate::error::{ChoiceIssue, Issues, ScoringError};
use crate::pairs::{generate_pairs, DimensionPair, WeightingMode};

/// One forced-choice answer: which member of `pair` carries more load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairwiseChoice {
    pair: DimensionPair,
    chosen: DimensionId,
}

impl PairwiseChoice {
    pub fn new(a: DimensionId, b: DimensionId, chosen: DimensionId) -> Result<Self, ChoiceIssue> {
        let pair = DimensionPair::new(a, b).ok_or(ChoiceIssue::SelfPair(a))?;
        if !pair.contains(chosen) {
            return Err(ChoiceIssue::ChosenNotInPair { pair, chosen });
        }
        Ok(PairwiseChoice { pair, chosen })
    }

    pub fn pair(&self) -> DimensionPair {
        self.pair
    }

    pub fn chosen(&self) -> DimensionId {
        self.chosen
    }
}

impl Serialize for PairwiseChoice {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("PairwiseChoice", 2)?;
        s.serialize_field("pair", &self.pair)?;
        s.serialize_field("chosen", &self.chosen)?;
        s.end()
    }
}

/// Per-dimension win counts. Every dimension in the weighting scope is
/// present, including those that never won.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct WeightVector {
    weights: BTreeMap<DimensionId, u32>,
}

impl WeightVector {
    pub fn from_counts(counts: impl IntoIterator<Item = (DimensionId, u32)>) -> Self {
        WeightVector {
            weights: counts.into_iter().collect(),
        }
    }

    pub fn get(&self, d: DimensionId) -> u32 {
        self.weights.get(&d).copied().unwrap_or(0)
    }

    pub fn sum_over(&self, dims: &[DimensionId]) -> u64 {
        dims.iter().map(|d| u64::from(self.get(*d))).sum()
    }

    pub fn total(&self) -> u64 {
        self.weights.values().map(|w| u64::from(*w)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DimensionId, u32)> + '_ {
        self.weights.iter().map(|(d, w)| (*d, *w))
    }
}

/// Resolves string-keyed choices (as they arrive on the wire) and tallies
/// them. Every problem is reported, including unknown ids.
pub fn resolve_choices<'a, I>(
    raw: I,
    set: DimensionSet,
    mode: WeightingMode,
) -> Result<(Vec<PairwiseChoice>, WeightVector), ScoringError>
where
    I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
{
    mode.check_compatible(set.variant())?;
    let mut issues = Vec::new();
    let mut resolved = Vec::new();
    for (a, b, chosen) in raw {
        let mut ids = [a, b, chosen].map(|s| (s, s.parse::<DimensionId>()));
        let mut unknown = false;
        for (s, parsed) in &mut ids {
            if parsed.is_err() {
                unknown = true;
                let issue = ChoiceIssue::UnknownDimension(s.to_string());
                if !issues.contains(&issue) {
                    issues.push(issue);
                }
            }
        }
        if unknown {
            continue;
        }
        let [a, b, chosen] = ids.map(|(_, p)| p.unwrap());
        match PairwiseChoice::new(a, b, chosen) {
            Ok(c) => resolved.push(c),
            Err(issue) => issues.push(issue),
        }
    }
    match check_choices(&resolved, set, mode) {
        Ok(weights) if issues.is_empty() => Ok((resolved, weights)),
        Ok(_) => Err(ScoringError::InvalidChoices(Issues(issues))),
        Err(mut more) => {
            issues.append(&mut more);
            Err(ScoringError::InvalidChoices(Issues(issues)))
        }
    }
}

/// Counts wins per dimension after checking that `choices` cover exactly the
/// pair set of `mode`, in any order.
pub fn tally_weights(
    choices: &[PairwiseChoice],
    set: DimensionSet,
    mode: WeightingMode,
) -> Result<WeightVector, ScoringError> {
    mode.check_compatible(set.variant())?;
    check_choices(choices, set, mode).map_err(|issues| ScoringError::InvalidChoices(Issues(issues)))
}

fn check_choices(
    choices: &[PairwiseChoice],
    set: DimensionSet,
    mode: WeightingMode,
) -> Result<WeightVector, Vec<ChoiceIssue>> {
    let expected = generate_pairs(set, mode, None).expect("mode checked by caller");
    let expected_set: BTreeSet<DimensionPair> = expected.iter().copied().collect();

    let mut issues = Vec::new();
    let mut seen = BTreeSet::new();
    let mut weights: BTreeMap<DimensionId, u32> = BTreeMap::new();
    for p in &expected {
        weights.insert(p.first(), 0);
        weights.insert(p.second(), 0);
    }

    for c in choices {
        if !expected_set.contains(&c.pair) {
            issues.push(ChoiceIssue::OutOfScope(c.pair));
        } else if !seen.insert(c.pair) {
            issues.push(ChoiceIssue::Duplicate(c.pair));
        } else {
            *weights.entry(c.chosen).or_insert(0) += 1;
        }
    }
    issues.extend(
        expected
            .iter()
            .filter(|p| !seen.contains(*p))
            .map(|p| ChoiceIssue::Missing(*p)),
    );

    if issues.is_empty() {
        Ok(WeightVector { weights })
    } else {
        Err(issues)
    }
}
