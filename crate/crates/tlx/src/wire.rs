//! Line-delimited event records.
//!
//! One JSON object per line with keys in canonical order
//! `session_id, kind, object_id, start, end`; `end` appears only on gaze
//! records. Timestamps are UTC with exactly millisecond precision,
//! `YYYY-MM-DDTHH:MM:SS.mmmZ`.

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize};
use tlx_core::{EventBatch, EventKind, EventSource, InteractionEvent, Timestamp};

/// File suffix for event logs.
pub const EVENT_LOG_EXTENSION: &str = ".events.ndjson";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LineError {
    #[error("malformed record at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid timestamp in `{field}`: `{value}` (expected YYYY-MM-DDTHH:MM:SS.mmmZ)")]
    Timestamp { field: &'static str, value: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: &'static str, message: String },
}

impl LineError {
    /// The offending field for schema violations.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            LineError::Syntax { .. } => None,
            LineError::Timestamp { field, .. } | LineError::Validation { field, .. } => Some(field),
        }
    }
}

/// A rejected batch: every bad line with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", render_line_errors(.lines))]
pub struct BatchError {
    pub lines: Vec<(usize, LineError)>,
}

fn render_line_errors(lines: &[(usize, LineError)]) -> String {
    lines
        .iter()
        .map(|(n, e)| format!("line {n}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

fn is_digit_at(b: &[u8], positions: &[usize]) -> bool {
    positions.iter().all(|&i| b[i].is_ascii_digit())
}

/// Parses `YYYY-MM-DDTHH:MM:SS.mmmZ`; anything else is rejected.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let b = s.as_bytes();
    if b.len() != 24 {
        return None;
    }
    let shape = is_digit_at(b, &[0, 1, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18, 20, 21, 22])
        && b[4] == b'-'
        && b[7] == b'-'
        && b[10] == b'T'
        && b[13] == b':'
        && b[16] == b':'
        && b[19] == b'.'
        && b[23] == b'Z';
    // chrono maps :60 onto a leap-second representation that cannot round-trip
    if !shape || &b[17..19] == b"60" {
        return None;
    }
    let naive = NaiveDateTime::parse_from_str(&s[..23], "%Y-%m-%dT%H:%M:%S%.3f").ok()?;
    Some(Timestamp(naive.and_utc().timestamp_millis()))
}

/// Renders a timestamp in wire form.
///
/// Panics for instants outside years 0000-9999, which the parser never
/// produces.
pub fn format_timestamp(t: Timestamp) -> String {
    let dt = DateTime::from_timestamp_millis(t.as_millis()).expect("timestamp within chrono range");
    let s = dt.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string();
    assert_eq!(s.len(), 24, "timestamp outside years 0000-9999");
    s
}

/// Serde adapter for timestamps in wire form.
pub mod timestamp_serde {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(t: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let s = String::deserialize(d)?;
        parse_timestamp(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid timestamp `{s}`")))
    }
}

fn present_string<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    String::deserialize(d).map(Some)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireIn {
    session_id: String,
    kind: EventKind,
    object_id: String,
    start: String,
    #[serde(default, deserialize_with = "present_string")]
    end: Option<String>,
}

#[derive(Serialize)]
struct WireOut<'a> {
    session_id: &'a str,
    kind: EventKind,
    object_id: &'a str,
    start: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    end: Option<String>,
}

/// Parses and validates one record.
pub fn parse_event_line(line: &str) -> Result<InteractionEvent, LineError> {
    if let Some(offset) = line.find(['\n', '\r']) {
        return Err(LineError::Syntax {
            offset,
            message: "embedded line break".into(),
        });
    }
    let wire: WireIn = serde_json::from_str(line).map_err(|e| LineError::Syntax {
        offset: e.column().saturating_sub(1).min(line.len()),
        message: e.to_string(),
    })?;
    let start = parse_timestamp(&wire.start).ok_or(LineError::Timestamp {
        field: "start",
        value: wire.start.clone(),
    })?;
    let end = match &wire.end {
        Some(s) => Some(parse_timestamp(s).ok_or(LineError::Timestamp {
            field: "end",
            value: s.clone(),
        })?),
        None => None,
    };
    InteractionEvent::new(wire.session_id, wire.kind, wire.object_id, start, end).map_err(|e| {
        LineError::Validation {
            field: e.field,
            message: e.reason.into(),
        }
    })
}

/// Canonical single-line form, without a trailing newline.
pub fn serialize_event(e: &InteractionEvent) -> String {
    let out = WireOut {
        session_id: e.session_id(),
        kind: e.kind(),
        object_id: e.object_id(),
        start: format_timestamp(e.start()),
        end: e.end().map(format_timestamp),
    };
    serde_json::to_string(&out).expect("event serialization is infallible")
}

/// Parses a newline-delimited body. Blank lines are skipped; any bad line
/// rejects the whole batch, as does a second session id.
pub fn parse_event_lines(text: &str, source: EventSource) -> Result<EventBatch, BatchError> {
    let mut events = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        match parse_event_line(line) {
            Ok(e) => events.push((i + 1, e)),
            Err(err) => errors.push((i + 1, err)),
        }
    }
    if let Some((_, first)) = events.first() {
        let expected = first.session_id().to_owned();
        for (n, e) in &events {
            if e.session_id() != expected {
                errors.push((
                    *n,
                    LineError::Validation {
                        field: "session_id",
                        message: format!("`{}` differs from `{expected}` earlier in the batch", e.session_id()),
                    },
                ));
            }
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|(n, _)| *n);
        return Err(BatchError { lines: errors });
    }
    Ok(EventBatch::new(events.into_iter().map(|(_, e)| e).collect(), source)
        .expect("session ids checked above"))
}
