//! Workload dimensions and the two questionnaire variants.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which panel a dimension belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionGroup {
    Task,
    Technology,
}

/// Canonical dimension identifiers. The declaration order is the canonical
/// presentation order: six task dimensions followed by five technology ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionId {
    MentalDemand,
    PhysicalDemand,
    TemporalDemand,
    Effort,
    Performance,
    Frustration,
    PhysicalComfort,
    VisualComfort,
    GeneralComfort,
    EaseOfUse,
    AppUsability,
}

impl DimensionId {
    pub const ALL: [DimensionId; 11] = [
        DimensionId::MentalDemand,
        DimensionId::PhysicalDemand,
        DimensionId::TemporalDemand,
        DimensionId::Effort,
        DimensionId::Performance,
        DimensionId::Frustration,
        DimensionId::PhysicalComfort,
        DimensionId::VisualComfort,
        DimensionId::GeneralComfort,
        DimensionId::EaseOfUse,
        DimensionId::AppUsability,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            DimensionId::MentalDemand => "mental_demand",
            DimensionId::PhysicalDemand => "physical_demand",
            DimensionId::TemporalDemand => "temporal_demand",
            DimensionId::Effort => "effort",
            DimensionId::Performance => "performance",
            DimensionId::Frustration => "frustration",
            DimensionId::PhysicalComfort => "physical_comfort",
            DimensionId::VisualComfort => "visual_comfort",
            DimensionId::GeneralComfort => "general_comfort",
            DimensionId::EaseOfUse => "ease_of_use",
            DimensionId::AppUsability => "app_usability",
        }
    }

    pub const fn group(self) -> DimensionGroup {
        match self {
            DimensionId::MentalDemand
            | DimensionId::PhysicalDemand
            | DimensionId::TemporalDemand
            | DimensionId::Effort
            | DimensionId::Performance
            | DimensionId::Frustration => DimensionGroup::Task,
            _ => DimensionGroup::Technology,
        }
    }

    pub fn dimension(self) -> Dimension {
        let (label, prompt) = match self {
            DimensionId::MentalDemand => (
                "Mental demand",
                "How much mental activity was necessary? (e.g.: thinking, deciding, calculating, remembering, etc.)",
            ),
            DimensionId::PhysicalDemand => (
                "Physical demand",
                "How much physical activity was required? (e.g. pushing, pulling, turning, etc.)",
            ),
            DimensionId::TemporalDemand => (
                "Temporal demand",
                "How much time pressure did you feel? Was the pace slow and leisurely or fast and frantic?",
            ),
            DimensionId::Effort => (
                "Effort",
                "To what extent did you have to work (physically or mentally) to achieve your level of results?",
            ),
            DimensionId::Performance => (
                "Performance",
                "To what extent do you think you have succeeded in the objectives established by the researchers (or by yourself)?",
            ),
            DimensionId::Frustration => (
                "Frustration level",
                "During the task, to what extent did you feel insecure, discouraged, irritated, tense or worried or, on the contrary, did you feel secure, content, relaxed and satisfied?",
            ),
            DimensionId::PhysicalComfort => (
                "Physical comfort",
                "Are the glasses comfortable to wear or do you experience any physical discomfort? (e.g. headache, excessive weight, etc.)",
            ),
            DimensionId::VisualComfort => (
                "Visual comfort",
                "Is it comfortable to see the objects projected by the glasses or do you experience any discomfort? (e.g., eye discomfort or irritation, field of view, image sharpness, etc.)",
            ),
            DimensionId::GeneralComfort => (
                "General comfort",
                "Overall, are the glasses comfortable to wear or do you experience any discomfort? (e.g., dizziness, disorientation, loss of balance, etc.)",
            ),
            DimensionId::EaseOfUse => (
                "Ease of use",
                "Is the application easy to use? Is it intuitive? Are the menus well understood? Are the necessary items found quickly?",
            ),
            DimensionId::AppUsability => (
                "Application usability",
                "Do you consider that the application is useful as a substitute for paper blueprints?",
            ),
        };
        Dimension {
            id: self,
            label,
            prompt,
            group: self.group(),
        }
    }
}

impl fmt::Display for DimensionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Returned when a string is not one of the canonical dimension ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownDimension;

impl FromStr for DimensionId {
    type Err = UnknownDimension;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DimensionId::ALL
            .iter()
            .copied()
            .find(|d| d.as_str() == s)
            .ok_or(UnknownDimension)
    }
}

/// Display metadata for one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dimension {
    pub id: DimensionId,
    pub label: &'static str,
    pub prompt: &'static str,
    pub group: DimensionGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The six classic task dimensions.
    Classic6,
    /// Task dimensions plus the five technology dimensions.
    Xr11,
}

impl Variant {
    pub const fn as_str(self) -> &'static str {
        match self {
            Variant::Classic6 => "classic6",
            Variant::Xr11 => "xr11",
        }
    }

    pub fn dimension_set(self) -> DimensionSet {
        DimensionSet { variant: self }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic6" => Ok(Variant::Classic6),
            "xr11" => Ok(Variant::Xr11),
            _ => Err(()),
        }
    }
}

/// An ordered set of dimensions for one questionnaire variant.
///
/// The sets are fixed, so this is a thin view over [`DimensionId::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DimensionSet {
    variant: Variant,
}

impl DimensionSet {
    pub const CLASSIC6: DimensionSet = DimensionSet {
        variant: Variant::Classic6,
    };
    pub const XR11: DimensionSet = DimensionSet {
        variant: Variant::Xr11,
    };

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn ids(&self) -> &'static [DimensionId] {
        match self.variant {
            Variant::Classic6 => &DimensionId::ALL[..6],
            Variant::Xr11 => &DimensionId::ALL[..],
        }
    }

    pub fn len(&self) -> usize {
        self.ids().len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids().is_empty()
    }

    pub fn contains(&self, id: DimensionId) -> bool {
        self.ids().contains(&id)
    }

    /// Ids of the given group, in canonical order.
    pub fn group_ids(&self, group: DimensionGroup) -> &'static [DimensionId] {
        let ids = self.ids();
        let split = ids
            .iter()
            .position(|d| d.group() == DimensionGroup::Technology)
            .unwrap_or(ids.len());
        match group {
            DimensionGroup::Task => &ids[..split],
            DimensionGroup::Technology => &ids[split..],
        }
    }

    pub fn dimensions(&self) -> impl Iterator<Item = Dimension> {
        self.ids().iter().map(|d| d.dimension())
    }
}

impl From<Variant> for DimensionSet {
    fn from(variant: Variant) -> Self {
        variant.dimension_set()
    }
}
