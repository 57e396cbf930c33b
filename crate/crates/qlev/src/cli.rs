//! Command implementations behind the `qlev` binary: trace, scan, crit,
//! render. Exit-code contract: 0 ok, 1 config, 2 empty level, 3 degenerate
//! plane.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classifier::{classify, StripLabel, UnresolvedReason};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lattice::PlaneSpec;
use crate::qpfunction::{find_critical_points, restrict};
use crate::render::{render_trajectories, render_zone_map, LabelJson, TrajectoryRecord};
use crate::scanner::{build_zone_map, scan_directions, ScanCfg, ScanRecord, ZoneMap};
use crate::tracer::{extract_components, Termination, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_EMPTY_LEVEL: i32 = 2;
pub const EXIT_DEGENERATE_PLANE: i32 = 3;

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::EmptyLevel { .. } => EXIT_EMPTY_LEVEL,
        Error::DegeneratePlane { .. } => EXIT_DEGENERATE_PLANE,
        _ => EXIT_CONFIG,
    }
}

/// Run a command body, mapping errors to the exit-code contract.
pub fn run(body: impl FnOnce() -> Result<()>) -> i32 {
    match body() {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Closed => "Closed",
        Termination::BudgetExhausted => "BudgetExhausted",
        Termination::NearCritical => "NearCritical",
        Termination::LeftWindow => "LeftWindow",
    }
}

fn label_json(label: &StripLabel) -> LabelJson {
    match label {
        StripLabel::Compact => LabelJson {
            kind: "Compact".into(),
            width: None,
            direction2: None,
            lifted_direction: None,
            normal: None,
            residual: None,
            orientation_sign: None,
            reason: None,
        },
        StripLabel::OpenStrip { fit, normals, orientation_sign } => LabelJson {
            kind: "OpenStrip".into(),
            width: Some(fit.width),
            direction2: Some(fit.direction2),
            lifted_direction: fit.lifted_direction.clone(),
            normal: normals.first().map(|c| c.normal.0.clone()),
            residual: normals.first().map(|c| c.residual),
            orientation_sign: Some(*orientation_sign),
            reason: None,
        },
        StripLabel::Unresolved { reason } => LabelJson {
            kind: "Unresolved".into(),
            width: None,
            direction2: None,
            lifted_direction: None,
            normal: None,
            residual: None,
            orientation_sign: None,
            reason: Some(unresolved_name(reason)),
        },
    }
}

fn unresolved_name(reason: &UnresolvedReason) -> String {
    match reason {
        UnresolvedReason::NearCritical => "NearCritical".into(),
        UnresolvedReason::WidthNotConverged { .. } => "WidthNotConverged".into(),
        UnresolvedReason::TooShort { .. } => "TooShort".into(),
        UnresolvedReason::LeftWindow => "LeftWindow".into(),
        UnresolvedReason::DegeneratePoints => "DegeneratePoints".into(),
    }
}

/// Decimate interior points, always keeping both endpoints.
fn decimate(points: &[[f64; 2]], every: usize) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = points.iter().step_by(every.max(1)).copied().collect();
    if let (Some(last), Some(tail)) = (points.last(), out.last()) {
        if tail != last {
            out.push(*last);
        }
    }
    out
}

pub fn trajectory_record(
    traj: &Trajectory,
    plane: &PlaneSpec,
    cfg: &RunConfig,
) -> TrajectoryRecord {
    let label = classify(traj, plane, &cfg.classifier);
    TrajectoryRecord {
        level: traj.level,
        termination: termination_name(traj.termination).into(),
        arc_length: traj.arc_length,
        points: decimate(&traj.points, cfg.decimation),
        endpoints: [traj.points[0], *traj.points.last().unwrap()],
        label: label_json(&label),
    }
}

/// Apply the seeded offset jitter: shifts the plane parallel to itself by a
/// uniform [0,1) offset per form. Returns the plane and the jittered offsets.
fn jittered_plane(cfg: &RunConfig) -> Result<(PlaneSpec, Option<Vec<f64>>)> {
    let plane_cfg = cfg
        .plane
        .as_ref()
        .ok_or_else(|| Error::Config("missing field `plane`".into()))?;
    match cfg.seed {
        None => Ok((plane_cfg.build()?, None)),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let offsets: Vec<f64> =
                plane_cfg.offsets.iter().map(|b| b + rng.gen_range(0.0..1.0)).collect();
            let jittered = crate::config::PlaneConfig {
                forms: plane_cfg.forms.clone(),
                offsets: offsets.clone(),
            };
            Ok((jittered.build()?, Some(offsets)))
        }
    }
}

fn out_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(name)
}

/// `qlev trace`: trace and classify every configured level on one plane.
pub fn command_trace(cfg: &RunConfig, out_dir: &Path, svg: bool) -> Result<()> {
    let f = cfg.load_function()?;
    let (plane, jittered_offsets) = jittered_plane(cfg)?;
    if cfg.levels.is_empty() {
        return Err(Error::Config("missing field `levels`".into()));
    }
    let g = restrict(&f, &plane)?;
    let mut all_records: Vec<TrajectoryRecord> = Vec::new();
    for &c in &cfg.levels {
        let set = extract_components(&g, c, cfg.window, cfg.grid_step, &cfg.tracer)?;
        for traj in &set.trajectories {
            all_records.push(trajectory_record(traj, &plane, cfg));
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let doc = json!({
        "plane": plane,
        "jittered_offsets": jittered_offsets,
        "seed": cfg.seed,
        "trajectories": all_records,
    });
    std::fs::write(out_path(out_dir, "trajectories.json"), serde_json::to_string_pretty(&doc)?)?;
    if svg {
        let svg_doc = render_trajectories(&all_records, &cfg.render)?;
        std::fs::write(out_path(out_dir, "trace.svg"), svg_doc)?;
    }
    Ok(())
}

/// Frozen CSV schema for scan records.
pub const CSV_HEADER: &str = "i,j,s,t,level,kind,n1,n2,n3,n4,residual,orientationSign,seeds,unresolved";

fn kind_name(record: &ScanRecord) -> &'static str {
    use crate::scanner::SampleKind::*;
    match record.kind {
        Invalid => "invalid",
        Empty => "empty",
        Compact => "compact",
        Open => "open",
        Unlabeled => "unlabeled",
        Mixed => "mixed",
    }
}

/// Serialize scan records to the frozen CSV layout (n3/n4 empty for m = 3).
pub fn records_to_csv(records: &[ScanRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let mut n = [String::new(), String::new(), String::new(), String::new()];
        if let Some(normal) = &r.normal {
            for (slot, &e) in n.iter_mut().zip(&normal.0) {
                *slot = e.to_string();
            }
        }
        let residual = r.residual.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.i,
            r.j,
            r.s,
            r.t,
            r.level,
            kind_name(r),
            n[0],
            n[1],
            n[2],
            n[3],
            residual,
            r.orientation_sum,
            r.seeds,
            r.unresolved
        )
        .unwrap();
    }
    out
}

/// `qlev scan`: direction sweep to CSV plus zone-map JSON.
pub fn command_scan(cfg: &RunConfig, out_dir: &Path, svg: bool) -> Result<()> {
    let f = cfg.load_function()?;
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::Config("missing field `grid`".into()))?;
    if cfg.levels.is_empty() {
        return Err(Error::Config("missing field `levels`".into()));
    }
    let scan_cfg = ScanCfg {
        classifier: cfg.classifier.clone(),
        trace: cfg.tracer.clone(),
        window: cfg.window,
        grid_step: cfg.grid_step,
        workers: cfg.workers,
    };
    let records = scan_directions(&f, grid, &cfg.levels, &scan_cfg)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_path(out_dir, "scan.csv"), records_to_csv(&records))?;
    let maps: Vec<ZoneMap> = cfg
        .levels
        .iter()
        .map(|&level| build_zone_map(&records, level))
        .collect::<Result<_>>()?;
    std::fs::write(out_path(out_dir, "zones.json"), serde_json::to_string_pretty(&maps)?)?;
    if svg {
        for (k, map) in maps.iter().enumerate() {
            let doc = render_zone_map(map, &cfg.render)?;
            std::fs::write(out_path(out_dir, &format!("zones_{k}.svg")), doc)?;
        }
    }
    Ok(())
}

/// `qlev crit`: critical values of the restriction, sorted, with Morse data.
pub fn command_crit(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let f = cfg.load_function()?;
    let (plane, jittered_offsets) = jittered_plane(cfg)?;
    let g = restrict(&f, &plane)?;
    let scan = find_critical_points(&g, cfg.window, cfg.grid_step)?;
    std::fs::create_dir_all(out_dir)?;
    let doc = json!({
        "degenerate": scan.constant,
        "jittered_offsets": jittered_offsets,
        "critical_points": scan.points,
        "non_morse": scan.non_morse,
    });
    std::fs::write(out_path(out_dir, "critical_points.json"), serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct TraceDoc {
    trajectories: Vec<TrajectoryRecord>,
}

/// `qlev render`: re-render a previously written trajectories or zone-map
/// JSON file to SVG.
pub fn command_render(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let input = cfg
        .render_input
        .as_ref()
        .ok_or_else(|| Error::Config("missing field `render_input`".into()))?;
    let text = std::fs::read_to_string(input)?;
    let svg = if let Ok(doc) = serde_json::from_str::<TraceDoc>(&text) {
        render_trajectories(&doc.trajectories, &cfg.render)?
    } else if let Ok(maps) = serde_json::from_str::<Vec<ZoneMap>>(&text) {
        let map = maps.first().ok_or(Error::EmptyInput("no zone maps in input"))?;
        render_zone_map(map, &cfg.render)?
    } else {
        return Err(Error::Config(
            "render_input is neither a trajectories nor a zone-map JSON file".into(),
        ));
    };
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_path(out_dir, "render.svg"), svg)?;
    Ok(())
}
