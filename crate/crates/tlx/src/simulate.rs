//! Synthetic session generator used as a stand-in for human test sessions.
//!
//! Output depends only on the simulation spec and its seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tlx_core::{AppKnowledge, DeviceExperience, InteractionEvent, Timestamp, UserProfile};

use crate::wire::{parse_timestamp, serialize_event, EVENT_LOG_EXTENSION};

/// 2024-03-01T09:00:00.000Z
const DEFAULT_START_MS: i64 = 1_709_283_600_000;
const SESSION_SPACING_MS: i64 = 3_600_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Behavior {
    #[serde(default = "one")]
    pub clicks_rate: f64,
    #[serde(default = "one")]
    pub gazes_rate: f64,
    #[serde(default = "one")]
    pub focus_probability: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Behavior {
    fn default() -> Self {
        Behavior {
            clicks_rate: 1.0,
            gazes_rate: 1.0,
            focus_probability: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Multipliers {
    #[serde(default)]
    pub app_knowledge: BTreeMap<AppKnowledge, Behavior>,
    #[serde(default)]
    pub device_experience: BTreeMap<DeviceExperience, Behavior>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileShare {
    pub profile: UserProfile,
    pub share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinutesRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub users: u32,
    #[serde(default)]
    pub seed: u64,
    pub profile_mix: Vec<ProfileShare>,
    pub duration_minutes: MinutesRange,
    pub clicks_per_minute: f64,
    pub gazes_per_minute: f64,
    /// Focus probability before multipliers.
    #[serde(default = "half")]
    pub focus_probability: f64,
    #[serde(default = "default_objects")]
    pub objects: u32,
    #[serde(default)]
    pub multipliers: Multipliers,
    /// First session start; later sessions follow at one-hour spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
}

fn half() -> f64 {
    0.5
}

fn default_objects() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid simulation spec: {0}")]
pub struct SpecError(pub String);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), SpecError> {
    if ok {
        Ok(())
    } else {
        Err(SpecError(msg()))
    }
}

fn non_negative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn probability(x: f64) -> bool {
    non_negative(x) && x <= 1.0
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        check(self.users > 0, || "users must be at least 1".into())?;
        check(self.users <= 999_999, || "users must be below 1000000".into())?;
        check(!self.profile_mix.is_empty(), || "profile_mix is empty".into())?;
        for p in &self.profile_mix {
            check(non_negative(p.share), || format!("share {} is not a proportion", p.share))?;
        }
        let total: f64 = self.profile_mix.iter().map(|p| p.share).sum();
        check((total - 1.0).abs() <= 1e-9, || format!("profile shares sum to {total}, not 1"))?;
        let d = self.duration_minutes;
        check(d.min.is_finite() && d.max.is_finite() && d.min > 0.0, || {
            "duration minimum must be positive".into()
        })?;
        check(d.min <= d.max, || format!("duration min {} exceeds max {}", d.min, d.max))?;
        check(d.max <= 24.0 * 60.0, || "duration max must be at most a day".into())?;
        check(non_negative(self.clicks_per_minute), || "clicks_per_minute must be >= 0".into())?;
        check(non_negative(self.gazes_per_minute), || "gazes_per_minute must be >= 0".into())?;
        check(self.clicks_per_minute <= 600.0 && self.gazes_per_minute <= 600.0, || {
            "rates must be at most 600 per minute".into()
        })?;
        check(probability(self.focus_probability), || "focus_probability must be in [0, 1]".into())?;
        check(self.objects > 0, || "objects must be at least 1".into())?;
        let behaviors = self
            .multipliers
            .app_knowledge
            .values()
            .chain(self.multipliers.device_experience.values());
        for b in behaviors {
            check(non_negative(b.clicks_rate) && b.clicks_rate <= 10.0, || {
                format!("clicks_rate multiplier {} outside [0, 10]", b.clicks_rate)
            })?;
            check(non_negative(b.gazes_rate) && b.gazes_rate <= 10.0, || {
                format!("gazes_rate multiplier {} outside [0, 10]", b.gazes_rate)
            })?;
            check(probability(b.focus_probability), || {
                format!("focus_probability multiplier {} outside [0, 1]", b.focus_probability)
            })?;
        }
        if let Some(s) = &self.start {
            check(parse_timestamp(s).is_some(), || format!("bad start timestamp `{s}`"))?;
        }
        Ok(())
    }

    fn behavior(&self, p: &UserProfile) -> Behavior {
        let a = self.multipliers.app_knowledge.get(&p.app_knowledge).copied().unwrap_or_default();
        let d = self
            .multipliers
            .device_experience
            .get(&p.device_experience)
            .copied()
            .unwrap_or_default();
        Behavior {
            clicks_rate: a.clicks_rate * d.clicks_rate,
            gazes_rate: a.gazes_rate * d.gazes_rate,
            focus_probability: a.focus_probability * d.focus_probability,
        }
    }

    fn start_ms(&self) -> i64 {
        self.start
            .as_deref()
            .and_then(parse_timestamp)
            .map_or(DEFAULT_START_MS, Timestamp::as_millis)
    }
}

/// One generated participant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedUser {
    pub index: u32,
    pub session_id: String,
    pub user_id: String,
    pub profile: UserProfile,
    pub events: Vec<InteractionEvent>,
}

pub fn session_id(seed: u64, index: u32) -> String {
    format!("sim-{seed}-{index:03}")
}

/// Generates all users. `name_session` picks the session id stamped on each
/// user's events; pass [`session_id`] for the file layout.
pub fn generate_with(
    spec: &SimulationSpec,
    mut name_session: impl FnMut(u32, &UserProfile) -> String,
) -> Result<Vec<SimulatedUser>, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = spec.start_ms();
    let mut out = Vec::with_capacity(spec.users as usize);
    for index in 0..spec.users {
        let profile = pick_profile(&spec.profile_mix, &mut rng);
        let sid = name_session(index, &profile);
        let t0 = base + i64::from(index) * SESSION_SPACING_MS;
        let events = user_events(spec, &profile, &sid, t0, &mut rng);
        out.push(SimulatedUser {
            index,
            session_id: sid,
            user_id: format!("user-{index:03}"),
            profile,
            events,
        });
    }
    Ok(out)
}

pub fn generate(spec: &SimulationSpec) -> Result<Vec<SimulatedUser>, SpecError> {
    let seed = spec.seed;
    generate_with(spec, |i, _| session_id(seed, i))
}

fn pick_profile(mix: &[ProfileShare], rng: &mut ChaCha8Rng) -> UserProfile {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for p in mix {
        acc += p.share;
        if x < acc {
            return p.profile;
        }
    }
    // rounding slack in the cumulative sum
    mix.iter().rev().find(|p| p.share > 0.0).unwrap_or(&mix[0]).profile
}

/// Expected `mean` jittered by ±20%, rounded.
fn jittered_count(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    let factor: f64 = rng.random_range(0.8..=1.2);
    (mean * factor).round() as u64
}

fn user_events(
    spec: &SimulationSpec,
    profile: &UserProfile,
    sid: &str,
    t0: i64,
    rng: &mut ChaCha8Rng,
) -> Vec<InteractionEvent> {
    let b = spec.behavior(profile);
    let d = spec.duration_minutes;
    let minutes = if d.min == d.max { d.min } else { rng.random_range(d.min..=d.max) };
    let span_ms = (minutes * 60_000.0).round() as i64;
    let clicks = jittered_count(spec.clicks_per_minute * b.clicks_rate * minutes, rng);
    let gazes = jittered_count(spec.gazes_per_minute * b.gazes_rate * minutes, rng);
    let focus_p = (spec.focus_probability * b.focus_probability).clamp(0.0, 1.0);

    let object = |rng: &mut ChaCha8Rng| format!("obj_{:02}", rng.random_range(0..spec.objects));
    let mut events = Vec::with_capacity((clicks + gazes) as usize);
    for _ in 0..clicks {
        let at = t0 + rng.random_range(0..=span_ms);
        let obj = object(rng);
        events.push(InteractionEvent::click(sid, obj, Timestamp(at)).expect("generated click is valid"));
    }
    for _ in 0..gazes {
        let len = if rng.random_bool(focus_p) {
            rng.random_range(1_000..=4_000)
        } else {
            rng.random_range(100..1_000)
        };
        let start = t0 + rng.random_range(0..=(span_ms - len).max(0));
        let obj = object(rng);
        events.push(
            InteractionEvent::gaze(sid, obj, Timestamp(start), Timestamp(start + len))
                .expect("generated gaze is valid"),
        );
    }
    events.sort_by(|a, b| {
        (a.start(), a.kind(), a.object_id(), a.end()).cmp(&(b.start(), b.kind(), b.object_id(), b.end()))
    });
    events
}

#[derive(Debug, Serialize)]
struct ManifestEntry<'a> {
    session_id: &'a str,
    user_id: &'a str,
    profile: UserProfile,
    file: String,
    events: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    spec: &'a SimulationSpec,
    sessions: Vec<ManifestEntry<'a>>,
}

pub fn event_log_text(events: &[InteractionEvent]) -> String {
    let mut text = String::new();
    for e in events {
        text.push_str(&serialize_event(e));
        text.push('\n');
    }
    text
}

/// Writes one `<session_id>.events.ndjson` per user plus `manifest.json`.
/// Returns the paths written, manifest last.
pub fn write_tree(spec: &SimulationSpec, users: &[SimulatedUser], out: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    for u in users {
        let file = format!("{}{EVENT_LOG_EXTENSION}", u.session_id);
        let path = out.join(&file);
        fs::write(&path, event_log_text(&u.events))?;
        written.push(path);
        entries.push(ManifestEntry {
            session_id: &u.session_id,
            user_id: &u.user_id,
            profile: u.profile,
            file,
            events: u.events.len(),
        });
    }
    let manifest = Manifest { spec, sessions: entries };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    let path = out.join("manifest.json");
    fs::write(&path, json)?;
    written.push(path);
    Ok(written)
}
