//! Participant profiles and cohort grouping of per-session report rows.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::{ObjectGazeSummary, SessionMetrics};

/// Familiarity with the application. Declaration order is report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppKnowledge {
    High,
    Medium,
    Low,
}

/// Prior experience with the headset. Declaration order is report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceExperience {
    High,
    LowNone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskExperience {
    High,
    Low,
}

impl AppKnowledge {
    pub const ALL: [AppKnowledge; 3] = [AppKnowledge::High, AppKnowledge::Medium, AppKnowledge::Low];

    pub const fn as_str(self) -> &'static str {
        match self {
            AppKnowledge::High => "high",
            AppKnowledge::Medium => "medium",
            AppKnowledge::Low => "low",
        }
    }
}

impl DeviceExperience {
    pub const ALL: [DeviceExperience; 2] = [DeviceExperience::High, DeviceExperience::LowNone];

    pub const fn as_str(self) -> &'static str {
        match self {
            DeviceExperience::High => "high",
            DeviceExperience::LowNone => "low_none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserProfile {
    pub app_knowledge: AppKnowledge,
    pub device_experience: DeviceExperience,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_experience: Option<TaskExperience>,
}

/// Attribute a cohort report is grouped by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortKey {
    AppKnowledge,
    DeviceExperience,
}

impl CohortKey {
    pub const fn as_str(self) -> &'static str {
        match self {
            CohortKey::AppKnowledge => "app_knowledge",
            CohortKey::DeviceExperience => "device_experience",
        }
    }

    /// Group labels in report order.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            CohortKey::AppKnowledge => &["high", "medium", "low"],
            CohortKey::DeviceExperience => &["high", "low_none"],
        }
    }

    fn label_of(self, profile: &UserProfile) -> &'static str {
        match self {
            CohortKey::AppKnowledge => profile.app_knowledge.as_str(),
            CohortKey::DeviceExperience => profile.device_experience.as_str(),
        }
    }
}

impl fmt::Display for CohortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown group key `{0}` (expected app_knowledge or device_experience)")]
pub struct UnknownCohortKey(pub String);

impl FromStr for CohortKey {
    type Err = UnknownCohortKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "app_knowledge" => Ok(CohortKey::AppKnowledge),
            "device_experience" => Ok(CohortKey::DeviceExperience),
            other => Err(UnknownCohortKey(other.into())),
        }
    }
}

/// One session's line in a metrics report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub session_id: String,
    pub user_id: Option<String>,
    pub profile: Option<UserProfile>,
    pub metrics: SessionMetrics,
}

/// Builds the report row for one session. `summaries` must come from the
/// same event log as `metrics`.
pub fn metrics_report(
    metrics: SessionMetrics,
    summaries: &[ObjectGazeSummary],
    user_id: Option<String>,
    profile: Option<UserProfile>,
) -> ReportRow {
    debug_assert_eq!(
        metrics.focused_objects,
        summaries.iter().filter(|s| s.focused).count() as u64
    );
    ReportRow {
        session_id: metrics.session_id.clone(),
        user_id,
        profile,
        metrics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortGroup {
    /// `None` for an ungrouped report.
    pub label: Option<&'static str>,
    pub rows: Vec<ReportRow>,
}

/// Orders rows by session id and, when `key` is given, splits them into the
/// key's groups in fixed order. Empty groups are kept so the shape of the
/// report never depends on the data; rows without a profile are dropped
/// from grouped reports.
pub fn group_rows(mut rows: Vec<ReportRow>, key: Option<CohortKey>) -> Vec<CohortGroup> {
    rows.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    let Some(key) = key else {
        return alloc::vec![CohortGroup { label: None, rows }];
    };
    key.labels()
        .iter()
        .map(|label| CohortGroup {
            label: Some(*label),
            rows: rows
                .iter()
                .filter(|r| r.profile.as_ref().map(|p| key.label_of(p)) == Some(*label))
                .cloned()
                .collect(),
        })
        .collect()
}
