//! Deterministic SVG rendering of traced trajectories and zone maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scanner::{ZoneLegend, ZoneMap};
use crate::vecmath::dot2;

const COMPACT_COLOR: &str = "#1f77b4";
const UNRESOLVED_COLOR: &str = "#888888";
/// Hue palette for canonical normals.
const PALETTE: [&str; 10] = [
    "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
    "#7f7f7f", "#aec7e8",
];

/// Rendering settings. Identical inputs produce byte-identical SVG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub canvas_px: u32,
    pub stroke_width: f64,
    /// Draw the two fitted parallel strip-boundary lines for open components.
    pub strip_boundaries: bool,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self { canvas_px: 800, stroke_width: 1.5, strip_boundaries: true }
    }
}

/// Flat label summary attached to a serialized trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction2: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_sign: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Serialized trajectory: decimated interior points, exact endpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub level: f64,
    pub termination: String,
    pub arc_length: f64,
    pub points: Vec<[f64; 2]>,
    pub endpoints: [[f64; 2]; 2],
    pub label: LabelJson,
}

fn palette_color(normal: &[i64]) -> &'static str {
    // FNV-style fold over the entries; stable across runs.
    let mut h: u64 = 0xcbf29ce484222325;
    for &e in normal {
        h ^= e as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    PALETTE[(h % PALETTE.len() as u64) as usize]
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn trajectory_color(label: &LabelJson) -> &'static str {
    match label.kind.as_str() {
        "Compact" => COMPACT_COLOR,
        "OpenStrip" => label.normal.as_deref().map(palette_color).unwrap_or(PALETTE[0]),
        _ => UNRESOLVED_COLOR,
    }
}

/// Render trajectories to an SVG 1.1 document.
pub fn render_trajectories(records: &[TrajectoryRecord], spec: &RenderSpec) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no trajectories to render"));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for r in records {
        for p in &r.points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let margin = 0.05 * span;
    let scale = spec.canvas_px as f64 / (span + 2.0 * margin);
    let px = |p: [f64; 2]| -> [f64; 2] {
        [
            (p[0] - lo[0] + margin) * scale,
            spec.canvas_px as f64 - (p[1] - lo[1] + margin) * scale,
        ]
    };
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
        spec.canvas_px
    ));
    for r in records {
        if r.points.is_empty() {
            continue;
        }
        let color = trajectory_color(&r.label);
        let mut d = String::new();
        for (k, p) in r.points.iter().enumerate() {
            let q = px(*p);
            d.push_str(if k == 0 { "M" } else { " L" });
            d.push_str(&format!("{} {}", fmt(q[0]), fmt(q[1])));
        }
        if r.termination == "Closed" {
            d.push_str(" Z");
        }
        svg.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
            d, color, spec.stroke_width
        ));
        if spec.strip_boundaries && r.label.kind == "OpenStrip" {
            if let (Some(dir), Some(width)) = (r.label.direction2, r.label.width) {
                svg.push_str(&strip_boundary_lines(r, dir, width, &px, span));
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn strip_boundary_lines(
    r: &TrajectoryRecord,
    dir: [f64; 2],
    width: f64,
    px: &impl Fn([f64; 2]) -> [f64; 2],
    span: f64,
) -> String {
    let normal = [-dir[1], dir[0]];
    // Center line through the midpoint of the projections onto the normal.
    let projs: Vec<f64> = r.points.iter().map(|p| dot2(*p, normal)).collect();
    let lo = projs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = projs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    debug_assert!((hi - lo - width).abs() < 1e-6 + 0.01 * width.max(1.0));
    let center_t = r.points.iter().map(|p| dot2(*p, dir)).sum::<f64>() / r.points.len() as f64;
    let half_len = 0.6 * span;
    let mut out = String::new();
    for offset in [lo, hi] {
        let base = [
            normal[0] * (mid + (offset - mid)) + dir[0] * center_t,
            normal[1] * (mid + (offset - mid)) + dir[1] * center_t,
        ];
        let a = px([base[0] - dir[0] * half_len, base[1] - dir[1] * half_len]);
        let b = px([base[0] + dir[0] * half_len, base[1] + dir[1] * half_len]);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#444444\" stroke-width=\"0.75\" stroke-dasharray=\"4 3\"/>\n",
            fmt(a[0]),
            fmt(a[1]),
            fmt(b[0]),
            fmt(b[1])
        ));
    }
    out
}

fn legend_color(legend: &ZoneLegend) -> &'static str {
    match legend {
        ZoneLegend::AllCompact => COMPACT_COLOR,
        ZoneLegend::Normal(n) => palette_color(&n.0),
        ZoneLegend::Other => UNRESOLVED_COLOR,
    }
}

/// Render a zone map as a colored cell grid.
pub fn render_zone_map(map: &ZoneMap, spec: &RenderSpec) -> Result<String> {
    if map.zone_ids.is_empty() {
        return Err(Error::EmptyInput("empty zone map"));
    }
    let res = map.resolution;
    let cell = spec.canvas_px as f64 / res as f64;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
        spec.canvas_px
    ));
    for i in 0..res {
        for j in 0..res {
            let idx = i * res + j;
            let color = legend_color(&map.legend[map.zone_ids[idx]]);
            // i indexes the s axis (horizontal), j the t axis (vertical, up).
            let x = i as f64 * cell;
            let y = (res - 1 - j) as f64 * cell;
            let stroke = if map.boundary[idx] { " stroke=\"#000000\" stroke-width=\"0.5\"" } else { "" };
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"{}/>\n",
                fmt(x),
                fmt(y),
                fmt(cell),
                fmt(cell),
                color,
                stroke
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
