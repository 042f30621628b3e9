//! Shared helpers for the integration tests: fixture paths, independent
//! oracles, random generators and a throwaway HTTP server.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tlx::store::Store;
use tlx_core::{InteractionEvent, Timestamp};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

// ---- scoring oracle ----

pub const TASK: [&str; 6] = [
    "mental_demand",
    "physical_demand",
    "temporal_demand",
    "effort",
    "performance",
    "frustration",
];
pub const TECH: [&str; 5] = [
    "physical_comfort",
    "visual_comfort",
    "general_comfort",
    "ease_of_use",
    "app_usability",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveScore {
    pub raw_task: f64,
    pub weighted_task: f64,
    pub weighted_technology: Option<f64>,
}

/// (a, b, chosen) triples.
pub type Choices = Vec<(String, String, String)>;

fn dims_for(mode: &str) -> Vec<&'static str> {
    if mode == "classic" {
        TASK.to_vec()
    } else {
        TASK.iter().chain(TECH.iter()).copied().collect()
    }
}

/// Pairs a respondent is asked about, as index pairs into `dims_for(mode)`.
pub fn naive_pair_list(mode: &str) -> Vec<(&'static str, &'static str)> {
    let dims = dims_for(mode);
    let mut out = Vec::new();
    for i in 0..dims.len() {
        for j in i + 1..dims.len() {
            let same_group = (i < 6) == (j < 6);
            if mode != "xr_grouped" || same_group {
                out.push((dims[i], dims[j]));
            }
        }
    }
    out
}

/// Straight-line recomputation of a workload score.
pub fn naive_score(mode: &str, choices: &Choices, ratings: &BTreeMap<String, i64>) -> NaiveScore {
    let mut weight: BTreeMap<&str, f64> = BTreeMap::new();
    for (_, _, chosen) in choices {
        *weight.entry(chosen.as_str()).or_default() += 1.0;
    }
    let w = |d: &str| weight.get(d).copied().unwrap_or(0.0);
    let r = |d: &str| ratings[d] as f64;

    let mut raw = 0.0;
    for d in TASK {
        raw += r(d);
    }
    raw /= 6.0;

    let mut task_sum = 0.0;
    for d in TASK {
        task_sum += w(d) * r(d);
    }
    let mut tech_sum = 0.0;
    let mut tech_weight = 0.0;
    for d in TECH {
        if ratings.contains_key(d) {
            tech_sum += w(d) * r(d);
            tech_weight += w(d);
        }
    }
    match mode {
        "classic" => NaiveScore {
            raw_task: raw,
            weighted_task: task_sum / 15.0,
            weighted_technology: None,
        },
        "xr_grouped" => NaiveScore {
            raw_task: raw,
            weighted_task: task_sum / 15.0,
            weighted_technology: Some(tech_sum / 10.0),
        },
        "xr_full" => NaiveScore {
            raw_task: raw,
            weighted_task: (task_sum + tech_sum) / 55.0,
            weighted_technology: Some(if tech_weight == 0.0 { 0.0 } else { tech_sum / tech_weight }),
        },
        other => panic!("unknown mode {other}"),
    }
}

/// Random complete response: coin-flip winner per pair, random multiples of 5.
pub fn random_response(rng: &mut ChaCha8Rng, mode: &str) -> (Choices, BTreeMap<String, i64>) {
    let mut choices: Choices = naive_pair_list(mode)
        .into_iter()
        .map(|(a, b)| {
            let chosen = if rng.random_bool(0.5) { a } else { b };
            (a.to_string(), b.to_string(), chosen.to_string())
        })
        .collect();
    choices.shuffle(rng);
    let ratings = dims_for(mode)
        .into_iter()
        .map(|d| (d.to_string(), 5 * rng.random_range(0..=20i64)))
        .collect();
    (choices, ratings)
}

// ---- metrics oracle ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub gaze: bool,
    pub object: String,
    pub start: i64,
    /// Equal to `start` for clicks.
    pub end: i64,
}

impl RawEvent {
    pub fn click(object: &str, at: i64) -> Self {
        RawEvent {
            gaze: false,
            object: object.into(),
            start: at,
            end: at,
        }
    }

    pub fn gaze(object: &str, start: i64, end: i64) -> Self {
        RawEvent {
            gaze: true,
            object: object.into(),
            start,
            end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scan {
    pub clicks: u64,
    pub gazes: u64,
    pub usage_ms: u64,
    pub focused: u64,
    /// object -> (gaze count, total dwell, longest dwell)
    pub objects: BTreeMap<String, (u64, u64, u64)>,
}

/// Brute-force pass over the raw events.
pub fn scan(events: &[RawEvent], threshold: i64) -> Scan {
    let mut s = Scan::default();
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    let mut focused = BTreeSet::new();
    for e in events {
        lo = lo.min(e.start);
        hi = hi.max(e.end);
        if e.gaze {
            s.gazes += 1;
            let len = (e.end - e.start) as u64;
            let o = s.objects.entry(e.object.clone()).or_default();
            o.0 += 1;
            o.1 += len;
            o.2 = o.2.max(len);
            if e.end - e.start >= threshold {
                focused.insert(e.object.clone());
            }
        } else {
            s.clicks += 1;
        }
    }
    s.usage_ms = (hi - lo) as u64;
    s.focused = focused.len() as u64;
    s
}

pub fn to_events(session_id: &str, raw: &[RawEvent]) -> Vec<InteractionEvent> {
    raw.iter()
        .map(|r| {
            if r.gaze {
                InteractionEvent::gaze(session_id, r.object.clone(), Timestamp(r.start), Timestamp(r.end)).unwrap()
            } else {
                InteractionEvent::click(session_id, r.object.clone(), Timestamp(r.start)).unwrap()
            }
        })
        .collect()
}

pub fn random_log(rng: &mut ChaCha8Rng, max_events: usize) -> Vec<RawEvent> {
    let n = rng.random_range(1..=max_events);
    let base: i64 = rng.random_range(1_600_000_000_000..1_800_000_000_000);
    (0..n)
        .map(|_| {
            let object = format!("obj_{:02}", rng.random_range(0..50));
            let start = base + rng.random_range(0..3_600_000);
            if rng.random_bool(0.5) {
                // bias durations around the focus boundary
                let len = match rng.random_range(0..4) {
                    0 => rng.random_range(995..1_005),
                    _ => rng.random_range(0..3_000),
                };
                RawEvent::gaze(&object, start, start + len)
            } else {
                RawEvent::click(&object, start)
            }
        })
        .collect()
}

// ---- report oracle ----

fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// `YYYY-MM-DDTHH:MM:SS.mmmZ` to epoch milliseconds, by hand.
pub fn oracle_millis(s: &str) -> i64 {
    let n = |a: usize, b: usize| s[a..b].parse::<i64>().unwrap();
    let days = days_from_civil(n(0, 4), n(5, 7), n(8, 10));
    ((days * 24 + n(11, 13)) * 60 + n(14, 16)) * 60_000 + n(17, 19) * 1000 + n(20, 23)
}

/// Reads an event log with `serde_json::Value` and the hand-rolled clock.
pub fn oracle_read_log(text: &str) -> (String, Vec<RawEvent>) {
    let mut sid = String::new();
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        sid = v["session_id"].as_str().unwrap().to_owned();
        let start = oracle_millis(v["start"].as_str().unwrap());
        let object = v["object_id"].as_str().unwrap();
        out.push(match v["kind"].as_str().unwrap() {
            "gaze" => RawEvent::gaze(object, start, oracle_millis(v["end"].as_str().unwrap())),
            _ => RawEvent::click(object, start),
        });
    }
    (sid, out)
}

/// Per-minute rate in hundredths, rounded half up, rendered `X.YY`.
pub fn oracle_rate(count: u64, usage_ms: u64) -> String {
    if usage_ms == 0 {
        return "0.00".into();
    }
    let scaled = count as u128 * 60_000 * 100;
    let q = scaled / usage_ms as u128;
    let rem = scaled % usage_ms as u128;
    let h = if rem * 2 >= usage_ms as u128 { q + 1 } else { q };
    format!("{}.{:02}", h / 100, h % 100)
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub const CSV_HEADER: &str = "session_id,user_id,app_knowledge,device_experience,total_interactions,clicks,gazes,usage_time_ms,clicks_per_minute,gazes_per_minute,focused_objects";

pub fn oracle_csv_row(session_id: &str, user_id: &str, app: &str, device: &str, raw: &[RawEvent]) -> String {
    let s = scan(raw, 1_000);
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        csv_field(session_id),
        csv_field(user_id),
        app,
        device,
        s.clicks + s.gazes,
        s.clicks,
        s.gazes,
        s.usage_ms,
        oracle_rate(s.clicks, s.usage_ms),
        oracle_rate(s.gazes, s.usage_ms),
        s.focused
    )
}

/// Report rows of a store directory computed from its raw files.
/// Returns (session_id, user_id, app_knowledge, device_experience, row).
pub fn oracle_store_rows(root: &Path) -> Vec<(String, String, String, String, String)> {
    let mut rows = Vec::new();
    let sessions = root.join("sessions");
    let mut dirs: Vec<_> = std::fs::read_dir(&sessions).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    for dir in dirs {
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("session.json")).unwrap()).unwrap();
        let committed = meta["events_committed_bytes"].as_u64().unwrap() as usize;
        if committed == 0 {
            continue;
        }
        let text = std::fs::read_to_string(dir.join("events.ndjson")).unwrap();
        let (_, raw) = oracle_read_log(&text[..committed]);
        let sid = meta["session_id"].as_str().unwrap().to_owned();
        let uid = meta["user_id"].as_str().unwrap().to_owned();
        let app = meta["profile"]["app_knowledge"].as_str().unwrap().to_owned();
        let dev = meta["profile"]["device_experience"].as_str().unwrap().to_owned();
        let row = oracle_csv_row(&sid, &uid, &app, &dev, &raw);
        rows.push((sid, uid, app, dev, row));
    }
    rows
}

/// Oracle CSV report; `group_by` is None, "app_knowledge" or "device_experience".
pub fn oracle_report_csv(root: &Path, group_by: Option<&str>) -> String {
    let rows = oracle_store_rows(root);
    let mut out = format!("{CSV_HEADER}\n");
    let order: Vec<Option<&str>> = match group_by {
        None => vec![None],
        Some("app_knowledge") => vec![Some("high"), Some("medium"), Some("low")],
        Some("device_experience") => vec![Some("high"), Some("low_none")],
        Some(other) => panic!("unknown key {other}"),
    };
    for label in order {
        for (_, _, app, dev, row) in &rows {
            let value = match group_by {
                Some("app_knowledge") => Some(app.as_str()),
                Some(_) => Some(dev.as_str()),
                None => None,
            };
            if value == label {
                out.push_str(row);
                out.push('\n');
            }
        }
    }
    out
}

// ---- HTTP ----

pub struct TestServer {
    pub base: String,
    shutdown: Option<oneshot::Sender<()>>,
    handle: JoinHandle<std::io::Result<()>>,
}

pub async fn start_server(root: &Path) -> TestServer {
    let store = std::sync::Arc::new(Store::open(root).unwrap());
    let (listener, addr) = tlx::service::bind("127.0.0.1:0").await.unwrap();
    let (tx, rx) = oneshot::channel::<()>();
    let handle = tokio::spawn(tlx::service::serve_on(listener, store, async {
        let _ = rx.await;
    }));
    TestServer {
        base: format!("http://{addr}"),
        shutdown: Some(tx),
        handle,
    }
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.handle.await.unwrap().unwrap();
    }
}

pub struct Reply {
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.body))
    }
}

async fn reply(resp: reqwest::Response) -> Reply {
    let status = resp.status().as_u16();
    let content_type = resp
        .headers()
        .get(reqwest::header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_owned();
    let body = resp.text().await.unwrap();
    Reply {
        status,
        content_type,
        body,
    }
}

pub async fn get(client: &reqwest::Client, url: &str) -> Reply {
    reply(client.get(url).send().await.unwrap()).await
}

pub async fn post(client: &reqwest::Client, url: &str, content_type: &str, body: impl Into<String>) -> Reply {
    let resp = client
        .post(url)
        .header(reqwest::header::CONTENT_TYPE, content_type)
        .body(body.into())
        .send()
        .await
        .unwrap();
    reply(resp).await
}

pub async fn post_json(client: &reqwest::Client, url: &str, body: &serde_json::Value) -> Reply {
    post(client, url, "application/json", body.to_string()).await
}

/// Body for the choices endpoint where the first id of every served pair wins.
pub fn first_wins_body(pairs: &serde_json::Value) -> serde_json::Value {
    let choices: Vec<_> = pairs
        .as_array()
        .unwrap()
        .iter()
        .map(|p| serde_json::json!({"pair": p, "chosen": p[0]}))
        .collect();
    serde_json::json!({ "choices": choices })
}

/// Copies a fixture tree so tests can mutate it.
pub fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

// ---- kill-during-write harness ----

pub struct KillReport {
    pub rounds: usize,
    pub batches: usize,
    pub torn_tails: usize,
}

fn spawn_server_process(bin: &Path, store: &Path) -> (std::process::Child, String) {
    use std::io::{BufRead, BufReader};
    let mut child = std::process::Command::new(bin)
        .args(["--store", store.to_str().unwrap(), "serve", "--bind", "127.0.0.1:0"])
        .env("RUST_LOG", "warn")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let base = lines
        .by_ref()
        .map(|l| l.unwrap())
        .find_map(|l| l.strip_prefix("listening on ").map(str::to_owned))
        .expect("server announces its address");
    // keep draining so the child never blocks on a full pipe
    std::thread::spawn(move || lines.for_each(drop));
    (child, base)
}

fn kill_batch(sid: &str, round: usize, writer: usize, n: usize, size: usize) -> String {
    (0..size)
        .map(|i| {
            format!(
                "{{\"session_id\":\"{sid}\",\"kind\":\"gaze\",\"object_id\":\"r{round}w{writer}b{n}e{i:03}\",\"start\":\"2024-03-01T10:00:00.000Z\",\"end\":\"2024-03-01T10:00:01.000Z\"}}\n"
            )
        })
        .collect()
}

/// Starts the real server binary, streams batches at it from several
/// writers, SIGKILLs it mid-stream, and checks what a fresh store sees.
/// Repeats for `rounds` rounds on the same store.
pub fn kill_during_write(bin: &Path, rounds: usize) -> Result<KillReport, String> {
    const BATCH: usize = 200;
    let dir = tempfile::tempdir().unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let client = reqwest::Client::new();
    let mut sid = String::new();
    let mut committed_prefix: Vec<u8> = Vec::new();
    let mut torn_tails = 0;
    let log = |sid: &str| dir.path().join("sessions").join(sid).join("events.ndjson");

    for round in 0..rounds {
        let (mut child, base) = spawn_server_process(bin, dir.path());
        if sid.is_empty() {
            sid = rt.block_on(async {
                let study = post_json(
                    &client,
                    &format!("{base}/v1/studies"),
                    &serde_json::json!({"name": "kill", "dimension_set": "classic6"}),
                )
                .await
                .json()["study_id"]
                    .as_str()
                    .unwrap()
                    .to_owned();
                post_json(
                    &client,
                    &format!("{base}/v1/studies/{study}/sessions"),
                    &serde_json::json!({"user_id": "k", "profile": {"app_knowledge": "low", "device_experience": "high"}}),
                )
                .await
                .json()["session_id"]
                    .as_str()
                    .unwrap()
                    .to_owned()
            });
        }
        rt.block_on(async {
            let writers: Vec<_> = (0..3)
                .map(|w| {
                    let client = client.clone();
                    let url = format!("{base}/v1/sessions/{sid}/events");
                    let sid = sid.clone();
                    tokio::spawn(async move {
                        for n in 0.. {
                            let body = kill_batch(&sid, round, w, n, BATCH);
                            let sent = client
                                .post(&url)
                                .header(reqwest::header::CONTENT_TYPE, "application/x-ndjson")
                                .body(body)
                                .send()
                                .await;
                            if sent.is_err() {
                                break;
                            }
                        }
                    })
                })
                .collect();
            tokio::time::sleep(std::time::Duration::from_millis(40 + 37 * round as u64)).await;
            child.kill().unwrap();
            child.wait().unwrap();
            for w in writers {
                let _ = w.await;
            }
        });

        let bytes = std::fs::read(log(&sid)).unwrap_or_default();
        if !bytes.starts_with(&committed_prefix) {
            return Err(format!("round {round}: committed bytes changed"));
        }
        let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
        let session = store.session(&sid).map_err(|e| e.to_string())?;
        if (bytes.len() as u64) > session.events_committed_bytes {
            torn_tails += 1;
        }
        let events = store.events(&sid).map_err(|e| format!("round {round}: {e}"))?;
        if events.len() as u64 != session.event_count {
            return Err(format!("round {round}: count {} vs {}", events.len(), session.event_count));
        }
        let mut per_batch: BTreeMap<String, usize> = BTreeMap::new();
        for e in &events {
            let tag = e.object_id().split('e').next().unwrap().to_owned();
            *per_batch.entry(tag).or_default() += 1;
        }
        if let Some((tag, n)) = per_batch.iter().find(|(_, n)| **n != BATCH) {
            return Err(format!("round {round}: batch {tag} partially visible ({n} of {BATCH})"));
        }
        committed_prefix = bytes[..session.events_committed_bytes as usize].to_vec();
    }

    // one more clean append truncates whatever tail the last kill left
    let (mut child, base) = spawn_server_process(bin, dir.path());
    let outcome = rt.block_on(post(
        &client,
        &format!("{base}/v1/sessions/{sid}/events"),
        "application/x-ndjson",
        kill_batch(&sid, rounds, 9, 0, BATCH),
    ));
    child.kill().unwrap();
    child.wait().unwrap();
    if outcome.status != 200 {
        return Err(format!("final append failed: {}", outcome.body));
    }
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    let session = store.session(&sid).map_err(|e| e.to_string())?;
    let bytes = std::fs::read(log(&sid)).unwrap();
    if bytes.len() as u64 != session.events_committed_bytes || !bytes.starts_with(&committed_prefix) {
        return Err("final append did not land right after the committed prefix".into());
    }
    Ok(KillReport {
        rounds,
        batches: session.event_count as usize / BATCH,
        torn_tails,
    })
}
