//! File outputs: JSON traces, CSV metric tables, and SVG dynamic profiles.
//! All exports are timestamp-free so identical runs produce identical bytes.

use crate::batch::BatchResult;
use crate::episode::Trace;
use crate::metrics::EpisodeMetrics;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    std::fs::write(path, bytes)
        .map_err(|source| ExportError::Io { path: path.display().to_string(), source })
}

pub fn write_trace_json(trace: &Trace, path: &Path) -> Result<(), ExportError> {
    let mut bytes = serde_json::to_vec_pretty(trace)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

pub fn read_trace_json(path: &Path) -> Result<Trace, ExportError> {
    let bytes = std::fs::read(path)
        .map_err(|source| ExportError::Io { path: path.display().to_string(), source })?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Single-run metrics table.
pub fn metrics_csv(metrics: &EpisodeMetrics) -> String {
    let mut out = String::from("Time,Avg Spd,RMS Acc,Max Abs Acc,Min Dist,Max Dec,Success\n");
    let _ = writeln!(
        out,
        "{:.3},{:.3},{:.3},{:.3},{},{:.3},{}",
        metrics.completion_time,
        metrics.avg_speed,
        metrics.rms_accel,
        metrics.max_abs_accel,
        fmt_distance(metrics.min_distance),
        metrics.max_decel,
        metrics.success,
    );
    out
}

/// Per-episode rows of one batch.
pub fn episodes_csv(batch: &BatchResult) -> String {
    let mut out =
        String::from("Episode,Seed,Time,Avg Spd,RMS Acc,Max Abs Acc,Min Dist,Max Dec,Success\n");
    for row in &batch.rows {
        let m = &row.metrics;
        let _ = writeln!(
            out,
            "{},{},{:.3},{:.3},{:.3},{:.3},{},{:.3},{}",
            row.episode,
            row.seed,
            m.completion_time,
            m.avg_speed,
            m.rms_accel,
            m.max_abs_accel,
            fmt_distance(m.min_distance),
            m.max_decel,
            m.success,
        );
    }
    out
}

/// Ablation summary, one row per mode.
pub fn ablation_csv(batches: &[BatchResult]) -> String {
    let mut out = String::from("Mode,Avg Max Dec,Avg Min Dis,Suc Rate\n");
    for batch in batches {
        let a = &batch.aggregate;
        let _ = writeln!(
            out,
            "{},{:.3},{},{:.1}",
            batch.mode.row_name(),
            a.mean_max_decel,
            fmt_distance(a.mean_min_distance),
            a.success_rate * 100.0,
        );
    }
    out
}

fn fmt_distance(d: f64) -> String {
    if d.is_finite() {
        format!("{d:.3}")
    } else {
        "inf".to_string()
    }
}

/// Dynamic-profile figure: speed and acceleration panels over time plus a
/// top-down overlay of the executed path against the planned trees.
pub fn profile_svg(trace: &Trace) -> String {
    let width = 860.0;
    let panel_h = 200.0;
    let margin = 50.0;
    let gap = 36.0;
    let height = 3.0 * panel_h + 2.0 * gap + 2.0 * margin;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);

    let ts: Vec<f64> = trace.steps.iter().map(|s| s.t).collect();
    let speeds: Vec<f64> = trace.steps.iter().map(|s| s.ego.speed).collect();
    let accels: Vec<f64> = trace.steps.iter().map(|s| s.ego.accel).collect();

    let mut y0 = margin;
    line_panel(&mut svg, &ts, &speeds, margin, y0, width - 2.0 * margin, panel_h, "speed [m/s]", "#1f77b4");
    y0 += panel_h + gap;
    line_panel(&mut svg, &ts, &accels, margin, y0, width - 2.0 * margin, panel_h, "acceleration [m/s²]", "#d62728");
    y0 += panel_h + gap;
    path_panel(&mut svg, trace, margin, y0, width - 2.0 * margin, panel_h);

    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn polyline_attr(points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.2},{y:.2}");
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn line_panel(
    svg: &mut String,
    ts: &[f64],
    values: &[f64],
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    label: &str,
    color: &str,
) {
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{x0}" y="{}">{label}</text>"#, y0 - 8.0);
    if ts.is_empty() {
        return;
    }
    let (t_lo, t_hi) = bounds(ts);
    let (v_lo, v_hi) = bounds(values);
    // Zero line for signed quantities.
    if v_lo < 0.0 && v_hi > 0.0 {
        let zero_y = y0 + h - (0.0 - v_lo) / (v_hi - v_lo) * h;
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{zero_y:.2}" x2="{}" y2="{zero_y:.2}" stroke="#ccc" stroke-dasharray="4 3"/>"#,
            x0 + w
        );
    }
    let points: Vec<(f64, f64)> = ts
        .iter()
        .zip(values)
        .map(|(&t, &v)| {
            let x = x0 + (t - t_lo) / (t_hi - t_lo) * w;
            let y = y0 + h - (v - v_lo) / (v_hi - v_lo) * h;
            (x, y)
        })
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        polyline_attr(&points)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">t ∈ [{t_lo:.1}, {t_hi:.1}] s, range [{v_lo:.2}, {v_hi:.2}]</text>"#,
        x0 + w,
        y0 + h + 16.0
    );
}

/// Executed xy path with the planned trees underlaid.
fn path_panel(svg: &mut String, trace: &Trace, x0: f64, y0: f64, w: f64, h: f64) {
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{x0}" y="{}">planned (grey) vs executed (black) path</text>"#, y0 - 8.0);

    let mut xs: Vec<f64> = trace.steps.iter().map(|s| s.ego.x).collect();
    let mut ys: Vec<f64> = trace.steps.iter().map(|s| s.ego.y).collect();
    for plan in &trace.plans {
        for branch in &plan.branches {
            xs.extend(branch.iter().map(|p| p[0]));
            ys.extend(branch.iter().map(|p| p[1]));
        }
    }
    if xs.is_empty() {
        return;
    }
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let to_px = |x: f64, y: f64| {
        (
            x0 + (x - x_lo) / (x_hi - x_lo) * w,
            y0 + h - (y - y_lo) / (y_hi - y_lo) * h,
        )
    };

    for plan in &trace.plans {
        for branch in &plan.branches {
            let points: Vec<(f64, f64)> = branch.iter().map(|p| to_px(p[0], p[1])).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="#bbb" stroke-width="0.8"/>"#,
                polyline_attr(&points)
            );
        }
    }
    let executed: Vec<(f64, f64)> =
        trace.steps.iter().map(|s| to_px(s.ego.x, s.ego.y)).collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.8"/>"#,
        polyline_attr(&executed)
    );
}

pub fn write_metrics_csv(metrics: &EpisodeMetrics, path: &Path) -> Result<(), ExportError> {
    write_file(path, metrics_csv(metrics).as_bytes())
}

pub fn write_episodes_csv(batch: &BatchResult, path: &Path) -> Result<(), ExportError> {
    write_file(path, episodes_csv(batch).as_bytes())
}

pub fn write_ablation_csv(batches: &[BatchResult], path: &Path) -> Result<(), ExportError> {
    write_file(path, ablation_csv(batches).as_bytes())
}

pub fn write_profile_svg(trace: &Trace, path: &Path) -> Result<(), ExportError> {
    write_file(path, profile_svg(trace).as_bytes())
}
