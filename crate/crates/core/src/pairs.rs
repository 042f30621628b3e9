//! Phase 1 pair generation.
//!
//! Unseeded generation yields canonical order: pairs `(i, j)` with `i < j`
//! over the set's canonical dimension order, sorted lexicographically by
//! `(i, j)`. A seed shuffles each block of pairs independently, so grouped
//! mode still presents every task pair before any technology pair.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dimension::{DimensionGroup, DimensionId, DimensionSet, Variant};
use crate::error::ScoringError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Task dimensions only.
    Classic,
    /// Task pairs, then technology pairs; one weighted score per group.
    XrGrouped,
    /// Every dimension against every other; one combined score.
    XrFull,
}

impl WeightingMode {
    pub const fn as_str(self) -> &'static str {
        match self {
            WeightingMode::Classic => "classic",
            WeightingMode::XrGrouped => "xr_grouped",
            WeightingMode::XrFull => "xr_full",
        }
    }

    /// The default mode for a variant.
    pub const fn default_for(variant: Variant) -> Self {
        match variant {
            Variant::Classic6 => WeightingMode::Classic,
            Variant::Xr11 => WeightingMode::XrGrouped,
        }
    }

    pub fn check_compatible(self, variant: Variant) -> Result<(), ScoringError> {
        let ok = matches!(
            (variant, self),
            (Variant::Classic6, WeightingMode::Classic)
                | (Variant::Xr11, WeightingMode::XrGrouped)
                | (Variant::Xr11, WeightingMode::XrFull)
        );
        if ok {
            Ok(())
        } else {
            Err(ScoringError::InvalidMode {
                variant,
                mode: self,
            })
        }
    }
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightingMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(WeightingMode::Classic),
            "xr_grouped" => Ok(WeightingMode::XrGrouped),
            "xr_full" => Ok(WeightingMode::XrFull),
            _ => Err(()),
        }
    }
}

/// An unordered pair of distinct dimensions, stored in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DimensionPair(DimensionId, DimensionId);

impl DimensionPair {
    /// Returns `None` for a self-pair.
    pub fn new(a: DimensionId, b: DimensionId) -> Option<Self> {
        match a.cmp(&b) {
            core::cmp::Ordering::Less => Some(DimensionPair(a, b)),
            core::cmp::Ordering::Greater => Some(DimensionPair(b, a)),
            core::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> DimensionId {
        self.0
    }

    pub fn second(&self) -> DimensionId {
        self.1
    }

    pub fn contains(&self, d: DimensionId) -> bool {
        self.0 == d || self.1 == d
    }
}

impl fmt::Display for DimensionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// Every unordered pair of `items`, in `(i, j)` index order.
pub fn all_pairs<T: Copy>(items: &[T]) -> Vec<(T, T)> {
    let n = items.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((items[i], items[j]));
        }
    }
    out
}

/// `C(n, 2)`.
pub const fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// The dimension lists whose internal pairs make up the mode's comparisons.
pub(crate) fn pair_scopes(set: DimensionSet, mode: WeightingMode) -> Vec<&'static [DimensionId]> {
    match mode {
        WeightingMode::Classic => alloc::vec![set.group_ids(DimensionGroup::Task)],
        WeightingMode::XrGrouped => alloc::vec![
            set.group_ids(DimensionGroup::Task),
            set.group_ids(DimensionGroup::Technology),
        ],
        WeightingMode::XrFull => alloc::vec![set.ids()],
    }
}

fn scope_pairs(scope: &[DimensionId]) -> impl Iterator<Item = DimensionPair> + '_ {
    all_pairs(scope)
        .into_iter()
        .filter_map(|(a, b)| DimensionPair::new(a, b))
}

/// Generates the comparison sequence for Phase 1.
pub fn generate_pairs(
    set: DimensionSet,
    mode: WeightingMode,
    seed: Option<u64>,
) -> Result<Vec<DimensionPair>, ScoringError> {
    mode.check_compatible(set.variant())?;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut out = Vec::new();
    for scope in pair_scopes(set, mode) {
        let mut block: Vec<DimensionPair> = scope_pairs(scope).collect();
        if let Some(rng) = rng.as_mut() {
            block.shuffle(rng);
        }
        out.extend(block);
    }
    Ok(out)
}
