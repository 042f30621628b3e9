use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dimension::{DimensionId, Variant};
use crate::pairs::{DimensionPair, WeightingMode};

/// A non-empty list of problems found while validating one submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issues<T>(pub Vec<T>);

impl<T> Issues<T> {
    pub fn iter(&self) -> core::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T: fmt::Display> fmt::Display for Issues<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// One problem with a pairwise-choice submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChoiceIssue {
    UnknownDimension(String),
    SelfPair(DimensionId),
    ChosenNotInPair {
        pair: DimensionPair,
        chosen: DimensionId,
    },
    OutOfScope(DimensionPair),
    Duplicate(DimensionPair),
    Missing(DimensionPair),
}

impl fmt::Display for ChoiceIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoiceIssue::UnknownDimension(s) => write!(f, "unknown dimension `{s}`"),
            ChoiceIssue::SelfPair(d) => write!(f, "pair ({d}, {d}) compares a dimension with itself"),
            ChoiceIssue::ChosenNotInPair { pair, chosen } => {
                write!(f, "pair {pair}: chosen `{chosen}` is not a member of the pair")
            }
            ChoiceIssue::OutOfScope(pair) => {
                write!(f, "pair {pair} is not part of this questionnaire")
            }
            ChoiceIssue::Duplicate(pair) => write!(f, "duplicate pair {pair}"),
            ChoiceIssue::Missing(pair) => write!(f, "missing pair {pair}"),
        }
    }
}

/// One problem with a rating submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RatingIssue {
    UnknownDimension(String),
    NotInSet(DimensionId),
    OutOfRange { dimension: DimensionId, value: i64 },
    NotMultipleOfFive { dimension: DimensionId, value: i64 },
    Duplicate(DimensionId),
    Missing(DimensionId),
}

impl fmt::Display for RatingIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatingIssue::UnknownDimension(s) => write!(f, "unknown dimension `{s}`"),
            RatingIssue::NotInSet(d) => write!(f, "`{d}` is not rated in this questionnaire"),
            RatingIssue::OutOfRange { dimension, value } => {
                write!(f, "`{dimension}`: rating {value} is outside 0..=100")
            }
            RatingIssue::NotMultipleOfFive { dimension, value } => {
                write!(f, "`{dimension}`: rating {value} is not a multiple of 5")
            }
            RatingIssue::Duplicate(d) => write!(f, "`{d}` rated more than once"),
            RatingIssue::Missing(d) => write!(f, "missing rating for `{d}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("weighting mode `{mode}` is not available for the `{variant}` dimension set")]
    InvalidMode {
        variant: Variant,
        mode: WeightingMode,
    },
    #[error("invalid choices: {0}")]
    InvalidChoices(Issues<ChoiceIssue>),
    #[error("invalid ratings: {0}")]
    InvalidRatings(Issues<RatingIssue>),
    #[error("weights sum to {actual}, expected {expected}")]
    InconsistentWeights { expected: u64, actual: u64 },
    #[error("at least {needed} dimension(s) required, got {found}")]
    NotEnoughDimensions { needed: usize, found: usize },
}
