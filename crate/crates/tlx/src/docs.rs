//! JSON documents shared by the store, the service and the CLI.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use tlx_core::{
    resolve_choices, score_with_weights, DimensionSet, PairwiseChoice, RatingVector, Score,
    ScoringError, Variant, WeightingMode, WorkloadScore,
};

/// A score rendered with exactly two decimals, e.g. `73.33` or `50.00`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed2(pub u64);

impl From<Score> for Fixed2 {
    fn from(s: Score) -> Self {
        Fixed2(s.hundredths())
    }
}

impl fmt::Display for Fixed2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Fixed2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(self.to_string()).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fixed2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(0.0..=100.0).contains(&v) {
            return Err(serde::de::Error::custom(format!("score {v} outside 0..=100")));
        }
        Ok(Fixed2((v * 100.0).round() as u64))
    }
}

/// Wire and on-disk form of a computed score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreDocument {
    pub mode: WeightingMode,
    pub raw_task: Fixed2,
    pub weighted_task: Fixed2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_technology: Option<Fixed2>,
}

impl From<&WorkloadScore> for ScoreDocument {
    fn from(s: &WorkloadScore) -> Self {
        ScoreDocument {
            mode: s.mode,
            raw_task: s.raw_task.into(),
            weighted_task: s.weighted_task.into(),
            weighted_technology: s.weighted_technology.map(Fixed2::from),
        }
    }
}

/// One Phase 1 answer as submitted: `{"pair": [a, b], "chosen": a}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChoice {
    pub pair: [String; 2],
    pub chosen: String,
}

impl From<&PairwiseChoice> for RawChoice {
    fn from(c: &PairwiseChoice) -> Self {
        RawChoice {
            pair: [c.pair().first().as_str().into(), c.pair().second().as_str().into()],
            chosen: c.chosen().as_str().into(),
        }
    }
}

/// Phase 2 answers as submitted: a JSON object of dimension id to rating.
/// Keys are kept in arrival order and duplicates are preserved so that
/// validation can report them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawRatings(pub Vec<(String, i64)>);

impl From<&RatingVector> for RawRatings {
    fn from(r: &RatingVector) -> Self {
        RawRatings(r.iter().map(|(d, v)| (d.as_str().to_owned(), i64::from(v))).collect())
    }
}

impl Serialize for RawRatings {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for RawRatings {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RatingsVisitor;

        impl<'de> Visitor<'de> for RatingsVisitor {
            type Value = RawRatings;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping dimension ids to integer ratings")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawRatings, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, i64>()? {
                    out.push((k, v));
                }
                Ok(RawRatings(out))
            }
        }

        d.deserialize_map(RatingsVisitor)
    }
}

pub fn resolve_raw_choices(
    raw: &[RawChoice],
    set: DimensionSet,
    mode: WeightingMode,
) -> Result<(Vec<PairwiseChoice>, tlx_core::WeightVector), ScoringError> {
    resolve_choices(
        raw.iter()
            .map(|c| (c.pair[0].as_str(), c.pair[1].as_str(), c.chosen.as_str())),
        set,
        mode,
    )
}

pub fn resolve_raw_ratings(raw: &RawRatings, set: DimensionSet) -> Result<RatingVector, ScoringError> {
    RatingVector::from_entries(raw.0.iter().map(|(k, v)| (k.as_str(), *v)), set)
}

/// A complete offline questionnaire response, as read by `tlx score`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseFile {
    pub dimension_set: Variant,
    /// Defaults to the variant's default mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting_mode: Option<WeightingMode>,
    pub choices: Vec<RawChoice>,
    pub ratings: RawRatings,
}

impl ResponseFile {
    pub fn mode(&self) -> WeightingMode {
        self.weighting_mode
            .unwrap_or_else(|| WeightingMode::default_for(self.dimension_set))
    }

    pub fn score(&self) -> Result<WorkloadScore, ScoringError> {
        let set = self.dimension_set.dimension_set();
        let mode = self.mode();
        mode.check_compatible(self.dimension_set)?;
        let (_, weights) = resolve_raw_choices(&self.choices, set, mode)?;
        let ratings = resolve_raw_ratings(&self.ratings, set)?;
        score_with_weights(&weights, &ratings, set, mode)
    }
}
