//! Closed-loop simulation harness: world configs, scripted/reactive agents,
//! a tree-tracking controller, episode and batch runners, metrics, and
//! JSON/CSV/SVG export for the `branchplan` binary.

pub mod agents;
pub mod batch;
pub mod config;
pub mod controller;
pub mod episode;
pub mod export;
pub mod metrics;
pub mod scenario_lib;

pub use batch::{ablation_modes, batch_run, BatchResult, EpisodeRow};
pub use config::{ConfigError, WorldConfig, SCHEMA_VERSION};
pub use controller::{comfort_braking, controller_track, TrackerOutput};
pub use episode::{run_episode, AblationMode, EpisodeOutcome, SimError, Trace, TraceStep};
pub use export::{
    ablation_csv, episodes_csv, metrics_csv, profile_svg, read_trace_json, write_trace_json,
    ExportError,
};
pub use metrics::{aggregate, metrics_from_trace, Aggregate, EpisodeMetrics};
