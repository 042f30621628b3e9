//! Tabular exports of session metrics: the cohort CSV/JSON report and the
//! plain-text table printed by `tlx metrics`.

use std::fmt::Write as _;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use tlx_core::{group_rows, CohortGroup, CohortKey, ObjectGazeSummary, ReportRow, SessionMetrics};

pub const CSV_HEADER: [&str; 11] = [
    "session_id",
    "user_id",
    "app_knowledge",
    "device_experience",
    "total_interactions",
    "clicks",
    "gazes",
    "usage_time_ms",
    "clicks_per_minute",
    "gazes_per_minute",
    "focused_objects",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl ReportFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ReportFormat::Csv => "text/csv; charset=utf-8",
            ReportFormat::Json => "application/json",
        }
    }
}

/// `count` per minute over `usage_ms`, in hundredths, rounded half up.
/// Computed on integers so the rendering never depends on float formatting.
pub fn rate_hundredths(count: u64, usage_ms: u64) -> u64 {
    if usage_ms == 0 {
        return 0;
    }
    let num = u128::from(count) * 6_000_000;
    let den = u128::from(usage_ms);
    ((num * 2 + den) / (den * 2)) as u64
}

pub fn format_hundredths(h: u64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

struct Rate(u64);

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawValue::from_string(format_hundredths(self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

fn rates(m: &SessionMetrics) -> (u64, u64) {
    (
        rate_hundredths(m.clicks, m.usage_time_ms),
        rate_hundredths(m.gazes, m.usage_time_ms),
    )
}

fn csv_record(row: &ReportRow) -> [String; 11] {
    let m = &row.metrics;
    let (cpm, gpm) = rates(m);
    [
        row.session_id.clone(),
        row.user_id.clone().unwrap_or_default(),
        row.profile.map(|p| p.app_knowledge.as_str()).unwrap_or("").into(),
        row.profile.map(|p| p.device_experience.as_str()).unwrap_or("").into(),
        m.total_interactions.to_string(),
        m.clicks.to_string(),
        m.gazes.to_string(),
        m.usage_time_ms.to_string(),
        format_hundredths(cpm),
        format_hundredths(gpm),
        m.focused_objects.to_string(),
    ]
}

/// One flat JSON row; same columns as the CSV.
struct JsonRow<'a>(&'a ReportRow);

impl Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let row = self.0;
        let m = &row.metrics;
        let (cpm, gpm) = rates(m);
        let mut st = s.serialize_struct("Row", 11)?;
        st.serialize_field("session_id", &row.session_id)?;
        st.serialize_field("user_id", &row.user_id)?;
        st.serialize_field("app_knowledge", &row.profile.map(|p| p.app_knowledge))?;
        st.serialize_field("device_experience", &row.profile.map(|p| p.device_experience))?;
        st.serialize_field("total_interactions", &m.total_interactions)?;
        st.serialize_field("clicks", &m.clicks)?;
        st.serialize_field("gazes", &m.gazes)?;
        st.serialize_field("usage_time_ms", &m.usage_time_ms)?;
        st.serialize_field("clicks_per_minute", &Rate(cpm))?;
        st.serialize_field("gazes_per_minute", &Rate(gpm))?;
        st.serialize_field("focused_objects", &m.focused_objects)?;
        st.end()
    }
}

#[derive(Serialize)]
struct JsonGroup<'a> {
    group: Option<&'static str>,
    rows: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    group_by: Option<CohortKey>,
    groups: Vec<JsonGroup<'a>>,
}

pub fn render_csv(groups: &[CohortGroup]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in groups.iter().flat_map(|g| &g.rows) {
        w.write_record(csv_record(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
}

pub fn render_json(groups: &[CohortGroup], key: Option<CohortKey>) -> String {
    let report = JsonReport {
        group_by: key,
        groups: groups
            .iter()
            .map(|g| JsonGroup {
                group: g.label,
                rows: g.rows.iter().map(JsonRow).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&report).expect("report serializes");
    out.push('\n');
    out
}

/// Sorts, groups and renders report rows. Shared by the CLI and the service
/// so both emit identical bytes for identical stores.
pub fn render_report(rows: Vec<ReportRow>, key: Option<CohortKey>, format: ReportFormat) -> String {
    let groups = group_rows(rows, key);
    match format {
        ReportFormat::Csv => render_csv(&groups),
        ReportFormat::Json => render_json(&groups, key),
    }
}

/// Human-readable metrics table for one session.
pub fn render_metrics_table(m: &SessionMetrics, objects: &[ObjectGazeSummary]) -> String {
    let (cpm, gpm) = rates(m);
    let mut out = String::new();
    let _ = writeln!(out, "session_id          {}", m.session_id);
    let _ = writeln!(
        out,
        "total_interactions  {} ({} clicks, {} gazes)",
        m.total_interactions, m.clicks, m.gazes
    );
    let _ = writeln!(out, "usage_time_ms       {}", m.usage_time_ms);
    let _ = writeln!(out, "clicks_per_minute   {}", format_hundredths(cpm));
    let _ = writeln!(out, "gazes_per_minute    {}", format_hundredths(gpm));
    let _ = writeln!(out, "focused_objects     {}", m.focused_objects);
    if objects.is_empty() {
        return out;
    }
    let width = objects
        .iter()
        .map(|o| o.object_id.chars().count())
        .max()
        .unwrap_or(0)
        .max("object_id".len());
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<width$}  {:>6}  {:>14}  {:>16}  focused",
        "object_id", "gazes", "total_dwell_ms", "longest_dwell_ms"
    );
    for o in objects {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>14}  {:>16}  {}",
            o.object_id,
            o.gaze_count,
            o.total_dwell_ms,
            o.longest_dwell_ms,
            if o.focused { "yes" } else { "no" }
        );
    }
    out
}
