//! Workload questionnaire scoring and interaction-session metrics.
//!
//! Everything here is pure computation over owned values: Phase 1 pair
//! generation and weight tallies, Phase 2 rating validation, exact raw and
//! weighted scores, the interaction event model, session usage indicators,
//! and cohort grouping for reports. IO, wire formats and persistence live in
//! the `tlx` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cohort;
pub mod dimension;
pub mod error;
pub mod event;
pub mod metrics;
pub mod pairs;
pub mod ratings;
pub mod score;
pub mod weights;

pub use cohort::{
    group_rows, metrics_report, AppKnowledge, CohortGroup, CohortKey, DeviceExperience, ReportRow,
    TaskExperience, UserProfile,
};
pub use dimension::{Dimension, DimensionGroup, DimensionId, DimensionSet, Variant};
pub use error::{ChoiceIssue, Issues, RatingIssue, ScoringError};
pub use event::{EventBatch, EventError, EventKind, EventSource, InteractionEvent, Timestamp};
pub use metrics::{
    compute_focused_objects, compute_session_metrics, compute_session_metrics_with_threshold,
    MetricsError, ObjectGazeSummary, SessionMetrics, DEFAULT_FOCUS_THRESHOLD_MS,
};
pub use pairs::{all_pairs, generate_pairs, pair_count, DimensionPair, WeightingMode};
pub use ratings::RatingVector;
pub use score::{
    compute_raw_score, compute_renormalized_score, compute_weighted_score, score_session,
    score_with_weights, Score, WorkloadScore,
};
pub use weights::{resolve_choices, tally_weights, PairwiseChoice, WeightVector};
