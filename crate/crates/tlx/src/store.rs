//! File-backed study store.
//!
//! Layout under the store root:
//!
//! ```text
//! studies/<study_id>/study.json
//! sessions/<session_id>/session.json
//! sessions/<session_id>/response.json
//! sessions/<session_id>/events.ndjson
//! ```
//!
//! JSON documents are replaced by write-then-rename. The event log is
//! append-only; `session.json` records how many of its bytes are committed,
//! and readers never look past that mark. A writer that dies mid-append
//! leaves an uncommitted tail, which the next append truncates before
//! writing.
//!
//! Mutations of one session are serialized through a per-session lock.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tlx_core::{
    compute_focused_objects, generate_pairs, metrics::metrics_from_summaries, metrics_report,
    score_with_weights, Dimension, DimensionPair, EventBatch, EventSource, InteractionEvent,
    MetricsError, ObjectGazeSummary, PairwiseChoice, RatingVector, ReportRow, ScoringError,
    SessionMetrics, Timestamp, UserProfile, Variant, WeightingMode,
};

use crate::docs::{resolve_raw_choices, resolve_raw_ratings, RawChoice, RawRatings, ScoreDocument};
use crate::wire::{self, parse_event_line, serialize_event, timestamp_serde, BatchError};

const ID_ALPHABET: &[u8; 32] = b"abcdefghijklmnopqrstuvwxyz234567";
const ID_LEN: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("invalid event batch: {0}")]
    Events(#[from] BatchError),
    #[error("{0}")]
    Validation(String),
    #[error("{kind} `{id}` not found")]
    NotFound { kind: &'static str, id: String },
    #[error("no events")]
    NoEvents,
    #[error("session `{session_id}` is `{state}`; {action} requires `{required}`")]
    State {
        session_id: String,
        state: SessionState,
        required: SessionState,
        action: &'static str,
    },
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: corrupt document: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
}

impl From<MetricsError> for StoreError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::EmptySession => StoreError::NoEvents,
            other => StoreError::Validation(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    WeightingDone,
    RatingDone,
    Scored,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Created => "created",
            SessionState::WeightingDone => "weighting_done",
            SessionState::RatingDone => "rating_done",
            SessionState::Scored => "scored",
        }
    }
}

impl std::fmt::Display for SessionState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    pub study_id: String,
    pub name: String,
    pub dimension_set: Variant,
    pub weighting_mode: WeightingMode,
    #[serde(with = "timestamp_serde")]
    pub created_at: Timestamp,
}

impl Study {
    pub fn dimensions(&self) -> Vec<Dimension> {
        self.dimension_set.dimension_set().dimensions().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    pub session_id: String,
    pub study_id: String,
    pub user_id: String,
    pub profile: UserProfile,
    pub state: SessionState,
    #[serde(with = "timestamp_serde")]
    pub created_at: Timestamp,
    /// Length of the committed prefix of `events.ndjson`.
    pub events_committed_bytes: u64,
    pub event_count: u64,
}

/// Questionnaire answers and the resulting score for one session.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Response {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<RawChoice>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<RawRatings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreDocument>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendOutcome {
    pub appended: u64,
    pub deduplicated: u64,
}

/// Session metrics plus per-object gaze summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionMetricsReport {
    pub metrics: SessionMetrics,
    pub objects: Vec<ObjectGazeSummary>,
}

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn now() -> Timestamp {
    let ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0);
    Timestamp(ms)
}

/// Fresh 8-character lowercase base-32 token.
pub fn new_id() -> String {
    let mut rng = rand::rng();
    (0..ID_LEN)
        .map(|_| ID_ALPHABET[rng.random_range(0..ID_ALPHABET.len())] as char)
        .collect()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().expect("documents live in a directory");
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| StoreError::Io {
        path: path.to_owned(),
        source: e.error,
    })?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("documents serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| StoreError::Corrupt {
            path: path.to_owned(),
            message: e.to_string(),
        }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["studies", "sessions"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Store {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn study_dir(&self, id: &str) -> PathBuf {
        self.root.join("studies").join(id)
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(id)
    }

    fn lock_for(&self, session_id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(session_id.to_owned()).or_default().clone()
    }

    /// Creates a fresh directory under `parent`, retrying on id collision.
    fn fresh_dir(&self, parent: &str) -> Result<(String, PathBuf)> {
        loop {
            let id = new_id();
            let dir = self.root.join(parent).join(&id);
            match fs::create_dir(&dir) {
                Ok(()) => return Ok((id, dir)),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(io_err(&dir)(e)),
            }
        }
    }

    pub fn create_study(&self, name: &str, variant: Variant, mode: WeightingMode) -> Result<Study> {
        mode.check_compatible(variant)?;
        let (study_id, dir) = self.fresh_dir("studies")?;
        let study = Study {
            study_id,
            name: name.to_owned(),
            dimension_set: variant,
            weighting_mode: mode,
            created_at: now(),
        };
        write_json(&dir.join("study.json"), &study)?;
        Ok(study)
    }

    pub fn study(&self, study_id: &str) -> Result<Study> {
        let not_found = || StoreError::NotFound {
            kind: "study",
            id: study_id.to_owned(),
        };
        if !valid_id(study_id) {
            return Err(not_found());
        }
        read_json(&self.study_dir(study_id).join("study.json"))?.ok_or_else(not_found)
    }

    pub fn list_studies(&self) -> Result<Vec<Study>> {
        let mut out: Vec<Study> = self
            .child_ids("studies")?
            .into_iter()
            .filter_map(|id| read_json(&self.study_dir(&id).join("study.json")).transpose())
            .collect::<Result<_>>()?;
        out.sort_by(|a, b| a.study_id.cmp(&b.study_id));
        Ok(out)
    }

    fn child_ids(&self, parent: &str) -> Result<Vec<String>> {
        let dir = self.root.join(parent);
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if let Some(name) = entry.file_name().to_str() {
                if valid_id(name) {
                    ids.push(name.to_owned());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn create_session(&self, study_id: &str, user_id: &str, profile: UserProfile) -> Result<Session> {
        self.study(study_id)?;
        if user_id.is_empty() {
            return Err(StoreError::Validation("user_id must not be empty".into()));
        }
        let (session_id, dir) = self.fresh_dir("sessions")?;
        let session = Session {
            session_id,
            study_id: study_id.to_owned(),
            user_id: user_id.to_owned(),
            profile,
            state: SessionState::Created,
            created_at: now(),
            events_committed_bytes: 0,
            event_count: 0,
        };
        write_json(&dir.join("session.json"), &session)?;
        Ok(session)
    }

    pub fn session(&self, session_id: &str) -> Result<Session> {
        let not_found = || StoreError::NotFound {
            kind: "session",
            id: session_id.to_owned(),
        };
        if !valid_id(session_id) {
            return Err(not_found());
        }
        read_json(&self.session_dir(session_id).join("session.json"))?.ok_or_else(not_found)
    }

    /// Sessions of one study, or of the whole store, sorted by id.
    pub fn list_sessions(&self, study_id: Option<&str>) -> Result<Vec<Session>> {
        if let Some(id) = study_id {
            self.study(id)?;
        }
        let mut out = Vec::new();
        for id in self.child_ids("sessions")? {
            // a directory without session.json is a creation that never finished
            if let Some(s) = read_json::<Session>(&self.session_dir(&id).join("session.json"))? {
                if study_id.is_none_or(|sid| s.study_id == sid) {
                    out.push(s);
                }
            }
        }
        Ok(out)
    }

    pub fn response(&self, session_id: &str) -> Result<Response> {
        self.session(session_id)?;
        Ok(read_json(&self.session_dir(session_id).join("response.json"))?.unwrap_or_default())
    }

    fn save_session(&self, session: &Session) -> Result<()> {
        write_json(&self.session_dir(&session.session_id).join("session.json"), session)
    }

    fn save_response(&self, session_id: &str, response: &Response) -> Result<()> {
        write_json(&self.session_dir(session_id).join("response.json"), response)
    }

    fn study_of(&self, session: &Session) -> Result<Study> {
        self.study(&session.study_id)
    }

    /// Phase 1 comparison sequence for the session's study.
    pub fn pairs(&self, session_id: &str, seed: Option<u64>) -> Result<Vec<DimensionPair>> {
        let session = self.session(session_id)?;
        let study = self.study_of(&session)?;
        Ok(generate_pairs(study.dimension_set.dimension_set(), study.weighting_mode, seed)?)
    }

    /// Records Phase 1. Resubmitting the identical choice set is a no-op.
    pub fn record_choices(&self, session_id: &str, raw: &[RawChoice]) -> Result<Session> {
        let lock = self.lock_for(session_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut session = self.session(session_id)?;
        let study = self.study_of(&session)?;
        let set = study.dimension_set.dimension_set();
        let (choices, _) = resolve_raw_choices(raw, set, study.weighting_mode)?;
        let canonical = canonical_choices(&choices);

        if session.state != SessionState::Created {
            let stored = self.response(session_id)?.choices.unwrap_or_default();
            return if stored == canonical {
                Ok(session)
            } else {
                Err(StoreError::Conflict(
                    "choices already recorded with different answers".into(),
                ))
            };
        }
        let response = Response {
            choices: Some(canonical),
            ..Response::default()
        };
        self.save_response(session_id, &response)?;
        session.state = SessionState::WeightingDone;
        self.save_session(&session)?;
        Ok(session)
    }

    /// Records Phase 2; moves the session to `rating_done`.
    pub fn record_ratings(&self, session_id: &str, raw: &RawRatings) -> Result<Session> {
        let lock = self.lock_for(session_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.record_ratings_locked(session_id, raw)
    }

    fn record_ratings_locked(&self, session_id: &str, raw: &RawRatings) -> Result<Session> {
        let mut session = self.session(session_id)?;
        if session.state == SessionState::Created {
            return Err(StoreError::State {
                session_id: session_id.to_owned(),
                state: session.state,
                required: SessionState::WeightingDone,
                action: "recording ratings",
            });
        }
        let study = self.study_of(&session)?;
        let ratings = resolve_raw_ratings(raw, study.dimension_set.dimension_set())?;
        let mut response = self.response(session_id)?;
        if session.state >= SessionState::RatingDone {
            let stored = response
                .ratings
                .as_ref()
                .map(|r| resolve_raw_ratings(r, study.dimension_set.dimension_set()))
                .transpose()?;
            return if stored.as_ref() == Some(&ratings) {
                Ok(session)
            } else {
                Err(StoreError::Conflict(
                    "ratings already recorded with different values".into(),
                ))
            };
        }
        response.ratings = Some(RawRatings::from(&ratings));
        self.save_response(session_id, &response)?;
        session.state = SessionState::RatingDone;
        self.save_session(&session)?;
        Ok(session)
    }

    /// Scores a `rating_done` session and persists the result. On an already
    /// scored session, returns the persisted score.
    pub fn score_and_persist(&self, session_id: &str) -> Result<ScoreDocument> {
        let lock = self.lock_for(session_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.score_locked(session_id)
    }

    fn score_locked(&self, session_id: &str) -> Result<ScoreDocument> {
        let mut session = self.session(session_id)?;
        let mut response = self.response(session_id)?;
        match session.state {
            SessionState::Scored => {
                return response.score.ok_or_else(|| StoreError::Corrupt {
                    path: self.session_dir(session_id).join("response.json"),
                    message: "scored session without a score".into(),
                })
            }
            SessionState::RatingDone => {}
            state => {
                return Err(StoreError::State {
                    session_id: session_id.to_owned(),
                    state,
                    required: SessionState::RatingDone,
                    action: "scoring",
                })
            }
        }
        let study = self.study_of(&session)?;
        let set = study.dimension_set.dimension_set();
        let (_, weights) = resolve_raw_choices(
            response.choices.as_deref().unwrap_or_default(),
            set,
            study.weighting_mode,
        )?;
        let ratings: RatingVector = resolve_raw_ratings(&response.ratings.clone().unwrap_or_default(), set)?;
        let score = score_with_weights(&weights, &ratings, set, study.weighting_mode)?;
        let doc = ScoreDocument::from(&score);
        response.score = Some(doc);
        self.save_response(session_id, &response)?;
        session.state = SessionState::Scored;
        self.save_session(&session)?;
        Ok(doc)
    }

    /// Records Phase 2 and scores in one step.
    pub fn submit_ratings(&self, session_id: &str, raw: &RawRatings) -> Result<(Session, ScoreDocument)> {
        let lock = self.lock_for(session_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.record_ratings_locked(session_id, raw)?;
        let score = self.score_locked(session_id)?;
        Ok((self.session(session_id)?, score))
    }

    /// The persisted score of a scored session.
    pub fn score(&self, session_id: &str) -> Result<ScoreDocument> {
        let session = self.session(session_id)?;
        if session.state != SessionState::Scored {
            return Err(StoreError::State {
                session_id: session_id.to_owned(),
                state: session.state,
                required: SessionState::Scored,
                action: "reading the score",
            });
        }
        self.response(session_id)?.score.ok_or_else(|| StoreError::Corrupt {
            path: self.session_dir(session_id).join("response.json"),
            message: "scored session without a score".into(),
        })
    }

    /// Parses a newline-delimited body and appends it as one batch.
    pub fn ingest_lines(&self, session_id: &str, body: &str) -> Result<AppendOutcome> {
        self.session(session_id)?;
        let batch = wire::parse_event_lines(body, EventSource::Network)?;
        self.append_events(session_id, &batch)
    }

    /// Appends a batch atomically. Events whose canonical line is already in
    /// the log, or earlier in the batch, are dropped and counted.
    pub fn append_events(&self, session_id: &str, batch: &EventBatch) -> Result<AppendOutcome> {
        let lock = self.lock_for(session_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut session = self.session(session_id)?;
        if let Some(other) = batch.session_id().filter(|id| *id != session_id) {
            return Err(StoreError::Validation(format!(
                "batch carries session `{other}`, expected `{session_id}`"
            )));
        }

        let path = self.session_dir(session_id).join("events.ndjson");
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let committed = session.events_committed_bytes;
        let len = file.metadata().map_err(io_err(&path))?.len();
        if len > committed {
            file.set_len(committed).map_err(io_err(&path))?;
        }

        let existing = read_prefix(&mut file, committed).map_err(io_err(&path))?;
        let mut seen: HashSet<&str> = existing.lines().collect();
        let mut out = String::new();
        let mut appended = 0;
        let mut deduplicated = 0;
        let lines: Vec<String> = batch.events().iter().map(serialize_event).collect();
        for line in &lines {
            if seen.insert(line) {
                out.push_str(line);
                out.push('\n');
                appended += 1;
            } else {
                deduplicated += 1;
            }
        }
        if appended > 0 {
            file.write_all(out.as_bytes()).map_err(io_err(&path))?;
            file.sync_data().map_err(io_err(&path))?;
            session.events_committed_bytes = committed + out.len() as u64;
            session.event_count += appended;
            self.save_session(&session)?;
        }
        Ok(AppendOutcome {
            appended,
            deduplicated,
        })
    }

    /// Committed events of a session, in log order.
    pub fn events(&self, session_id: &str) -> Result<Vec<InteractionEvent>> {
        let session = self.session(session_id)?;
        let path = self.session_dir(session_id).join("events.ndjson");
        if session.events_committed_bytes == 0 {
            return Ok(Vec::new());
        }
        let mut file = File::open(&path).map_err(io_err(&path))?;
        let text = read_prefix(&mut file, session.events_committed_bytes).map_err(io_err(&path))?;
        text.lines()
            .enumerate()
            .map(|(i, line)| {
                parse_event_line(line).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    message: format!("line {}: {e}", i + 1),
                })
            })
            .collect()
    }

    /// Metrics recomputed from the committed log.
    pub fn session_metrics(&self, session_id: &str, threshold_ms: u64) -> Result<SessionMetricsReport> {
        let events = self.events(session_id)?;
        let objects = compute_focused_objects(&events, threshold_ms)?;
        let metrics = metrics_from_summaries(&events, &objects);
        Ok(SessionMetricsReport { metrics, objects })
    }

    /// One report row per session with at least one event.
    pub fn report_rows(&self, study_id: Option<&str>, threshold_ms: u64) -> Result<Vec<ReportRow>> {
        let mut rows = Vec::new();
        for session in self.list_sessions(study_id)? {
            if session.event_count == 0 {
                continue;
            }
            let report = self.session_metrics(&session.session_id, threshold_ms)?;
            rows.push(metrics_report(
                report.metrics,
                &report.objects,
                Some(session.user_id.clone()),
                Some(session.profile),
            ));
        }
        Ok(rows)
    }
}

fn read_prefix(file: &mut File, len: u64) -> io::Result<String> {
    file.seek(SeekFrom::Start(0))?;
    let mut buf = String::with_capacity(len as usize);
    Read::take(&mut *file, len).read_to_string(&mut buf)?;
    if (buf.len() as u64) < len {
        return Err(io::Error::new(
            io::ErrorKind::UnexpectedEof,
            "event log shorter than its committed length",
        ));
    }
    Ok(buf)
}

fn canonical_choices(choices: &[PairwiseChoice]) -> Vec<RawChoice> {
    let mut sorted = choices.to_vec();
    sorted.sort_by_key(|c| (c.pair(), c.chosen()));
    sorted.iter().map(RawChoice::from).collect()
}
