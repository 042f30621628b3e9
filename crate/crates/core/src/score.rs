//! Raw and weighted workload scores.
//!
//! Scores are kept as reduced fractions so that reordering inputs can never
//! change a result and the 15/10/55 divisors introduce no rounding until a
//! value is rendered.

use core::cmp::Ordering;
use core::fmt;

use crate::dimension::{DimensionGroup, DimensionId, DimensionSet};
use crate::error::{Issues, RatingIssue, ScoringError};
use crate::pairs::{pair_count, WeightingMode};
use crate::ratings::RatingVector;
use crate::weights::{tally_weights, PairwiseChoice, WeightVector};

/// An exact non-negative rational score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Score {
    num: u64,
    den: u64,
}

const fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Score {
    pub const ZERO: Score = Score { num: 0, den: 1 };

    /// Panics if `den` is zero.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "score denominator must be non-zero");
        let g = gcd(num, den);
        Score {
            num: num / g,
            den: den / g,
        }
    }

    pub fn from_integer(v: u64) -> Self {
        Score { num: v, den: 1 }
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Value in hundredths, rounded half away from zero.
    pub fn hundredths(self) -> u64 {
        let scaled = u128::from(self.num) * 200 + u128::from(self.den);
        (scaled / (2 * u128::from(self.den))) as u64
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.num) * u128::from(other.den))
            .cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

/// Renders with exactly two decimals.
impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hundredths();
        write!(f, "{}.{:02}", h / 100, h % 100)
    }
}

/// Result of scoring one completed questionnaire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WorkloadScore {
    pub mode: WeightingMode,
    /// Unweighted mean of the task ratings.
    pub raw_task: Score,
    /// Task-group weighted score; in `xr_full` mode, the score over all
    /// eleven dimensions.
    pub weighted_task: Score,
    /// Absent in classic mode.
    pub weighted_technology: Option<Score>,
}

fn missing_ratings(ratings: &RatingVector, dims: &[DimensionId]) -> Result<(), ScoringError> {
    let missing: alloc::vec::Vec<RatingIssue> = dims
        .iter()
        .filter(|d| ratings.get(**d).is_none())
        .map(|d| RatingIssue::Missing(*d))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ScoringError::InvalidRatings(Issues(missing)))
    }
}

fn weighted_sum(weights: &WeightVector, ratings: &RatingVector, dims: &[DimensionId]) -> u64 {
    dims.iter()
        .map(|d| u64::from(weights.get(*d)) * u64::from(ratings.get(*d).unwrap_or(0)))
        .sum()
}

/// `Σ weight × rating / C(n, 2)` over `dims`.
pub fn compute_weighted_score(
    weights: &WeightVector,
    ratings: &RatingVector,
    dims: &[DimensionId],
) -> Result<Score, ScoringError> {
    if dims.len() < 2 {
        return Err(ScoringError::NotEnoughDimensions {
            needed: 2,
            found: dims.len(),
        });
    }
    let divisor = pair_count(dims.len()) as u64;
    let actual = weights.sum_over(dims);
    if actual != divisor {
        return Err(ScoringError::InconsistentWeights {
            expected: divisor,
            actual,
        });
    }
    missing_ratings(ratings, dims)?;
    Ok(Score::new(weighted_sum(weights, ratings, dims), divisor))
}

/// Weighted mean over `dims` using the weights' own sum as divisor; zero
/// when that sum is zero. Used for the technology sub-score in full mode.
pub fn compute_renormalized_score(
    weights: &WeightVector,
    ratings: &RatingVector,
    dims: &[DimensionId],
) -> Result<Score, ScoringError> {
    missing_ratings(ratings, dims)?;
    let total = weights.sum_over(dims);
    if total == 0 {
        return Ok(Score::ZERO);
    }
    Ok(Score::new(weighted_sum(weights, ratings, dims), total))
}

/// Arithmetic mean of the ratings over `dims`.
pub fn compute_raw_score(ratings: &RatingVector, dims: &[DimensionId]) -> Result<Score, ScoringError> {
    if dims.is_empty() {
        return Err(ScoringError::NotEnoughDimensions { needed: 1, found: 0 });
    }
    missing_ratings(ratings, dims)?;
    let sum: u64 = dims.iter().map(|d| u64::from(ratings.get(*d).unwrap_or(0))).sum();
    Ok(Score::new(sum, dims.len() as u64))
}

/// Scores a complete two-phase submission.
pub fn score_session(
    choices: &[PairwiseChoice],
    ratings: &RatingVector,
    set: DimensionSet,
    mode: WeightingMode,
) -> Result<WorkloadScore, ScoringError> {
    let weights = tally_weights(choices, set, mode)?;
    score_with_weights(&weights, ratings, set, mode)
}

/// Like [`score_session`] for an already tallied weight vector.
pub fn score_with_weights(
    weights: &WeightVector,
    ratings: &RatingVector,
    set: DimensionSet,
    mode: WeightingMode,
) -> Result<WorkloadScore, ScoringError> {
    mode.check_compatible(set.variant())?;
    ratings.check_covers(set)?;
    let task = set.group_ids(DimensionGroup::Task);
    let tech = set.group_ids(DimensionGroup::Technology);
    let raw_task = compute_raw_score(ratings, task)?;
    let (weighted_task, weighted_technology) = match mode {
        WeightingMode::Classic => (compute_weighted_score(weights, ratings, task)?, None),
        WeightingMode::XrGrouped => (
            compute_weighted_score(weights, ratings, task)?,
            Some(compute_weighted_score(weights, ratings, tech)?),
        ),
        WeightingMode::XrFull => (
            compute_weighted_score(weights, ratings, set.ids())?,
            Some(compute_renormalized_score(weights, ratings, tech)?),
        ),
    };
    Ok(WorkloadScore {
        mode,
        raw_task,
        weighted_task,
        weighted_technology,
    })
}
