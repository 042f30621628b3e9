//! Session-level usage indicators derived from an event log.
//!
//! Usage time spans from the earliest event start to the latest effective
//! end (a click ends where it starts). Rates use exact fractional minutes
//! and are zero for zero-length sessions. An object counts as focused when a
//! single continuous gaze on it lasts at least the threshold; cumulative
//! dwell is reported alongside but never decides focus.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::event::{EventKind, InteractionEvent};

pub const DEFAULT_FOCUS_THRESHOLD_MS: u64 = 1_000;

const MS_PER_MINUTE: f64 = 60_000.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no events")]
    EmptySession,
    #[error("events from more than one session (`{0}` and `{1}`)")]
    MixedSessions(String, String),
    #[error("focus threshold must be positive")]
    InvalidThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_id: String,
    pub total_interactions: u64,
    pub clicks: u64,
    pub gazes: u64,
    pub usage_time_ms: u64,
    pub clicks_per_minute: f64,
    pub gazes_per_minute: f64,
    pub focused_objects: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectGazeSummary {
    pub object_id: String,
    pub gaze_count: u64,
    pub total_dwell_ms: u64,
    pub longest_dwell_ms: u64,
    pub focused: bool,
}

fn check_session(events: &[InteractionEvent]) -> Result<&str, MetricsError> {
    let first = events.first().ok_or(MetricsError::EmptySession)?;
    let id = first.session_id();
    if let Some(other) = events.iter().find(|e| e.session_id() != id) {
        return Err(MetricsError::MixedSessions(id.into(), other.session_id().into()));
    }
    Ok(id)
}

/// Per-minute rate of `count` events over `usage_ms`.
pub fn per_minute(count: u64, usage_ms: u64) -> f64 {
    if usage_ms == 0 {
        0.0
    } else {
        count as f64 * MS_PER_MINUTE / usage_ms as f64
    }
}

/// One summary per distinct gazed object, sorted by object id.
pub fn compute_focused_objects(
    events: &[InteractionEvent],
    threshold_ms: u64,
) -> Result<Vec<ObjectGazeSummary>, MetricsError> {
    check_session(events)?;
    if threshold_ms == 0 {
        return Err(MetricsError::InvalidThreshold);
    }
    let mut by_object: BTreeMap<&str, ObjectGazeSummary> = BTreeMap::new();
    for e in events.iter().filter(|e| e.kind() == EventKind::Gaze) {
        let d = e.duration_ms();
        let s = by_object
            .entry(e.object_id())
            .or_insert_with(|| ObjectGazeSummary {
                object_id: e.object_id().into(),
                gaze_count: 0,
                total_dwell_ms: 0,
                longest_dwell_ms: 0,
                focused: false,
            });
        s.gaze_count += 1;
        s.total_dwell_ms += d;
        s.longest_dwell_ms = s.longest_dwell_ms.max(d);
    }
    Ok(by_object
        .into_values()
        .map(|mut s| {
            s.focused = s.longest_dwell_ms >= threshold_ms;
            s
        })
        .collect())
}

pub fn compute_session_metrics(events: &[InteractionEvent]) -> Result<SessionMetrics, MetricsError> {
    compute_session_metrics_with_threshold(events, DEFAULT_FOCUS_THRESHOLD_MS)
}

pub fn compute_session_metrics_with_threshold(
    events: &[InteractionEvent],
    threshold_ms: u64,
) -> Result<SessionMetrics, MetricsError> {
    let summaries = compute_focused_objects(events, threshold_ms)?;
    Ok(metrics_from_summaries(events, &summaries))
}

/// Assembles the indicators given summaries already computed for `events`.
pub fn metrics_from_summaries(
    events: &[InteractionEvent],
    summaries: &[ObjectGazeSummary],
) -> SessionMetrics {
    let session_id = events.first().map(|e| e.session_id()).unwrap_or_default();
    let clicks = events.iter().filter(|e| e.kind() == EventKind::Click).count() as u64;
    let gazes = events.len() as u64 - clicks;
    let first = events.iter().map(|e| e.start()).min();
    let last = events.iter().map(|e| e.effective_end()).max();
    let usage_time_ms = match (first, last) {
        (Some(a), Some(b)) => (b.0 - a.0) as u64,
        _ => 0,
    };
    SessionMetrics {
        session_id: session_id.into(),
        total_interactions: clicks + gazes,
        clicks,
        gazes,
        usage_time_ms,
        clicks_per_minute: per_minute(clicks, usage_time_ms),
        gazes_per_minute: per_minute(gazes, usage_time_ms),
        focused_objects: summaries.iter().filter(|s| s.focused).count() as u64,
    }
}
