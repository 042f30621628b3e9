//! Phase 2 ratings.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::Serialize;

use crate::dimension::{DimensionId, DimensionSet};
use crate::error::{Issues, RatingIssue, ScoringError};

pub const RATING_MAX: i64 = 100;
/// Ratings sit on the 21 boundary ticks of a 20-segment scale.
pub const RATING_STEP: i64 = 5;

/// One rating per dimension of a set, each a multiple of 5 in `0..=100`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct RatingVector {
    ratings: BTreeMap<DimensionId, u8>,
}

impl RatingVector {
    /// Validates string-keyed ratings against `set`, reporting every issue.
    pub fn from_entries<I, S>(entries: I, set: DimensionSet) -> Result<Self, ScoringError>
    where
        I: IntoIterator<Item = (S, i64)>,
        S: AsRef<str>,
    {
        let mut issues = Vec::new();
        let mut ratings = BTreeMap::new();
        let mut seen = Vec::new();
        for (key, value) in entries {
            let key = key.as_ref();
            let Ok(dimension) = key.parse::<DimensionId>() else {
                issues.push(RatingIssue::UnknownDimension(key.to_string()));
                continue;
            };
            if seen.contains(&dimension) {
                issues.push(RatingIssue::Duplicate(dimension));
                continue;
            }
            seen.push(dimension);
            if !set.contains(dimension) {
                issues.push(RatingIssue::NotInSet(dimension));
            } else if !(0..=RATING_MAX).contains(&value) {
                issues.push(RatingIssue::OutOfRange { dimension, value });
            } else if value % RATING_STEP != 0 {
                issues.push(RatingIssue::NotMultipleOfFive { dimension, value });
            } else {
                ratings.insert(dimension, value as u8);
            }
        }
        issues.extend(
            set.ids()
                .iter()
                .filter(|d| !seen.contains(d))
                .map(|d| RatingIssue::Missing(*d)),
        );
        if issues.is_empty() {
            Ok(RatingVector { ratings })
        } else {
            Err(ScoringError::InvalidRatings(Issues(issues)))
        }
    }

    pub fn from_ids<I>(entries: I, set: DimensionSet) -> Result<Self, ScoringError>
    where
        I: IntoIterator<Item = (DimensionId, i64)>,
    {
        Self::from_entries(entries.into_iter().map(|(d, v)| (d.as_str(), v)), set)
    }

    /// Every dimension of `set` rated `value`.
    pub fn uniform(set: DimensionSet, value: i64) -> Result<Self, ScoringError> {
        Self::from_ids(set.ids().iter().map(|d| (*d, value)), set)
    }

    pub fn get(&self, d: DimensionId) -> Option<u8> {
        self.ratings.get(&d).copied()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DimensionId, u8)> + '_ {
        self.ratings.iter().map(|(d, v)| (*d, *v))
    }

    /// Checks that exactly the dimensions of `set` are rated.
    pub fn check_covers(&self, set: DimensionSet) -> Result<(), ScoringError> {
        let mut issues: Vec<RatingIssue> = self
            .ratings
            .keys()
            .filter(|d| !set.contains(**d))
            .map(|d| RatingIssue::NotInSet(*d))
            .collect();
        issues.extend(
            set.ids()
                .iter()
                .filter(|d| !self.ratings.contains_key(d))
                .map(|d| RatingIssue::Missing(*d)),
        );
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ScoringError::InvalidRatings(Issues(issues)))
        }
    }
}
