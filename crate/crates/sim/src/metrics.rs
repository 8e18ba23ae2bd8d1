//! Episode metrics and batch aggregates.

use crate::episode::{EpisodeOutcome, Trace};
use branchplan_core::geometry::Polygon;
use branchplan_core::map::{Point2d, Polygon2d};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Wall-clock episode duration in simulated seconds.
    pub completion_time: f64,
    pub avg_speed: f64,
    pub rms_accel: f64,
    pub max_abs_accel: f64,
    /// Minimum footprint-to-footprint distance to any agent, meters.
    pub min_distance: f64,
    /// Largest braking magnitude, m/s² (0 if the ego never braked).
    pub max_decel: f64,
    /// No collision occurred.
    pub success: bool,
}

/// Recompute every metric from a recorded trace.
///
/// This is the authoritative definition; the episode loop streams the same
/// quantities and the two must agree to float precision.
pub fn metrics_from_trace(trace: &Trace) -> EpisodeMetrics {
    let n = trace.steps.len().max(1) as f64;
    let mut speed_sum = 0.0;
    let mut accel_sq_sum = 0.0;
    let mut max_abs_accel: f64 = 0.0;
    let mut max_decel: f64 = 0.0;
    let mut min_distance = f64::INFINITY;

    for step in &trace.steps {
        speed_sum += step.ego.speed;
        accel_sq_sum += step.ego.accel * step.ego.accel;
        max_abs_accel = max_abs_accel.max(step.ego.accel.abs());
        max_decel = max_decel.max(-step.ego.accel);
        if let Some(d) = step_min_distance(trace, step) {
            min_distance = min_distance.min(d);
        }
    }

    EpisodeMetrics {
        completion_time: trace.steps.last().map_or(0.0, |s| s.t + trace.control_dt),
        avg_speed: speed_sum / n,
        rms_accel: (accel_sq_sum / n).sqrt(),
        max_abs_accel,
        max_decel: max_decel.max(0.0),
        min_distance: if min_distance.is_finite() { min_distance } else { f64::INFINITY },
        success: trace.outcome != EpisodeOutcome::Collision,
    }
}

fn step_min_distance(trace: &Trace, step: &crate::episode::TraceStep) -> Option<f64> {
    if step.agents.is_empty() {
        return None;
    }
    let ego = Polygon::rectangle(
        Point2d::new(step.ego.x, step.ego.y),
        step.ego.heading,
        trace.ego_half_length,
        trace.ego_half_width,
    )
    .expect("positive vehicle dimensions");
    let mut min = f64::INFINITY;
    for sample in &step.agents {
        let info = trace
            .agents
            .iter()
            .find(|a| a.id == sample.id)
            .expect("trace agent table covers samples");
        let poly: Polygon2d = Polygon::rectangle(
            Point2d::new(sample.x, sample.y),
            sample.heading,
            info.half_length,
            info.half_width,
        )
        .expect("positive agent dimensions");
        min = min.min(ego.distance_to(&poly));
    }
    Some(min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub episodes: usize,
    pub mean_max_decel: f64,
    pub mean_min_distance: f64,
    /// Fraction of non-collision episodes in [0, 1].
    pub success_rate: f64,
}

pub fn aggregate(metrics: &[EpisodeMetrics]) -> Aggregate {
    let n = metrics.len().max(1) as f64;
    // Collisions leave a 0 m distance; keep them in the mean so the
    // aggregate reflects outcome severity, but skip runs that never met
    // another vehicle.
    let with_distance: Vec<f64> =
        metrics.iter().map(|m| m.min_distance).filter(|d| d.is_finite()).collect();
    let mean_min_distance = if with_distance.is_empty() {
        f64::INFINITY
    } else {
        with_distance.iter().sum::<f64>() / with_distance.len() as f64
    };
    Aggregate {
        episodes: metrics.len(),
        mean_max_decel: metrics.iter().map(|m| m.max_decel).sum::<f64>() / n,
        mean_min_distance,
        success_rate: metrics.iter().filter(|m| m.success).count() as f64 / n,
    }
}
