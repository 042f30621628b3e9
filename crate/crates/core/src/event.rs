//! Interaction events captured from a headset session.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub const fn as_millis(self) -> i64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Click,
    Gaze,
}

impl EventKind {
    pub const fn as_str(self) -> &'static str {
        match self {
            EventKind::Click => "click",
            EventKind::Gaze => "gaze",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid `{field}`: {reason}")]
pub struct EventError {
    pub field: &'static str,
    pub reason: &'static str,
}

impl EventError {
    const fn new(field: &'static str, reason: &'static str) -> Self {
        EventError { field, reason }
    }
}

/// One click or one continuous gaze interval on a scene object.
///
/// Clicks carry no end time; gazes always do, and it is never before the
/// start.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InteractionEvent {
    session_id: String,
    kind: EventKind,
    object_id: String,
    start: Timestamp,
    end: Option<Timestamp>,
}

impl InteractionEvent {
    pub fn new(
        session_id: impl Into<String>,
        kind: EventKind,
        object_id: impl Into<String>,
        start: Timestamp,
        end: Option<Timestamp>,
    ) -> Result<Self, EventError> {
        let session_id = session_id.into();
        let object_id = object_id.into();
        if session_id.is_empty() {
            return Err(EventError::new("session_id", "must not be empty"));
        }
        if object_id.is_empty() {
            return Err(EventError::new("object_id", "must not be empty"));
        }
        match (kind, end) {
            (EventKind::Click, Some(_)) => {
                return Err(EventError::new("end", "click events have no end time"))
            }
            (EventKind::Gaze, None) => {
                return Err(EventError::new("end", "gaze events require an end time"))
            }
            (EventKind::Gaze, Some(e)) if e < start => {
                return Err(EventError::new("end", "end is before start"))
            }
            _ => {}
        }
        Ok(InteractionEvent {
            session_id,
            kind,
            object_id,
            start,
            end,
        })
    }

    pub fn click(
        session_id: impl Into<String>,
        object_id: impl Into<String>,
        at: Timestamp,
    ) -> Result<Self, EventError> {
        Self::new(session_id, EventKind::Click, object_id, at, None)
    }

    pub fn gaze(
        session_id: impl Into<String>,
        object_id: impl Into<String>,
        start: Timestamp,
        end: Timestamp,
    ) -> Result<Self, EventError> {
        Self::new(session_id, EventKind::Gaze, object_id, start, Some(end))
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn object_id(&self) -> &str {
        &self.object_id
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn end(&self) -> Option<Timestamp> {
        self.end
    }

    /// End for gazes, start for clicks.
    pub fn effective_end(&self) -> Timestamp {
        self.end.unwrap_or(self.start)
    }

    /// Gaze duration in milliseconds; zero for clicks.
    pub fn duration_ms(&self) -> u64 {
        (self.effective_end().0 - self.start.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    File,
    Network,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event {index} belongs to session `{found}`, expected `{expected}`")]
pub struct MixedSessionError {
    pub index: usize,
    pub expected: String,
    pub found: String,
}

/// Events from one ingest call, all for the same session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventBatch {
    events: Vec<InteractionEvent>,
    source: EventSource,
}

impl EventBatch {
    pub fn new(events: Vec<InteractionEvent>, source: EventSource) -> Result<Self, MixedSessionError> {
        if let Some(first) = events.first() {
            if let Some((index, e)) = events
                .iter()
                .enumerate()
                .find(|(_, e)| e.session_id != first.session_id)
            {
                return Err(MixedSessionError {
                    index,
                    expected: first.session_id.clone(),
                    found: e.session_id.clone(),
                });
            }
        }
        Ok(EventBatch { events, source })
    }

    pub fn session_id(&self) -> Option<&str> {
        self.events.first().map(|e| e.session_id())
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn source(&self) -> EventSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<InteractionEvent> {
        self.events
    }
}
