//! Level-set component extraction: adaptive predictor-corrector continuation
//! along the rotated-gradient direction, plus an independent marching-squares
//! grid extractor used as an oracle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qpfunction::RestrictedFunction;
use crate::vecmath::{dot2, norm2, rot90};

/// Every emitted point satisfies |g(y) - c| below this bound.
pub const LEVEL_TOL: f64 = 1e-10;
/// Seed bisection tolerance.
const SEED_TOL: f64 = 1e-10;
const CORRECTION_MAX_ITERS: usize = 12;
const MAX_CONSECUTIVE_STALLS: usize = 5;
const MAX_STEP_HALVINGS: usize = 6;

/// Why a trace stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Returned to the seed: a compact component.
    Closed,
    /// Ran out of arc-length budget: treated as open.
    BudgetExhausted,
    /// Gradient fell below the floor: near a critical point.
    NearCritical,
    /// Left the tracing window.
    LeftWindow,
}

/// One traced connected component of the level set {g = c}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub level: f64,
    pub points: Vec<[f64; 2]>,
    pub lifted_points: Vec<Vec<f64>>,
    pub arc_length: f64,
    pub termination: Termination,
}

/// Continuation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub step: f64,
    pub closure_tol: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub grad_floor: f64,
    /// Optional tracing window half-width; leaving it terminates the trace.
    #[serde(default)]
    pub window: Option<f64>,
}

impl Default for TraceParams {
    fn default() -> Self {
        let step = 0.01;
        Self {
            step,
            closure_tol: 1e-5,
            s_min: 3.0 * step,
            s_max: 1e4,
            grad_floor: 1e-6,
            window: None,
        }
    }
}

/// One connected polyline recovered by the grid oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridComponent {
    pub polyline: Vec<[f64; 2]>,
    pub closed: bool,
    pub touches_boundary: bool,
}

/// Locate one on-level point per sign-change grid edge in [-window, window]^2.
/// Seeds are refined by bisection; components are deduplicated later, after
/// tracing.
pub fn find_seeds(
    g: &RestrictedFunction,
    c: f64,
    window: f64,
    grid_step: f64,
) -> Result<Vec<[f64; 2]>> {
    if !(grid_step > 0.0 && grid_step < window) {
        return Err(Error::Config(format!(
            "need 0 < grid_step < window, got {grid_step}, {window}"
        )));
    }
    let n = (2.0 * window / grid_step).ceil() as usize + 1;
    // Clamp the last row/column so the grid never samples outside the window
    // when the step does not divide the range evenly.
    let coord = |i: usize| (-window + i as f64 * grid_step).min(window);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = g.evaluate([coord(i), coord(j)]);
        }
    }
    let mut seeds = Vec::new();
    let mut bisect = |p0: [f64; 2], p1: [f64; 2], v0: f64, v1: f64| {
        if (v0 - c) * (v1 - c) > 0.0 {
            return;
        }
        let (mut a, mut b) = (p0, p1);
        let mut va = v0 - c;
        for _ in 0..80 {
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let vm = g.evaluate(mid) - c;
            if vm.abs() < SEED_TOL {
                seeds.push(mid);
                return;
            }
            if va * vm <= 0.0 {
                b = mid;
            } else {
                a = mid;
                va = vm;
            }
        }
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if (g.evaluate(mid) - c).abs() < 1e-8 {
            seeds.push(mid);
        }
    };
    for i in 0..n {
        for j in 0..n {
            let p = [coord(i), coord(j)];
            let v = values[i * n + j];
            if i + 1 < n {
                bisect(p, [coord(i + 1), coord(j)], v, values[(i + 1) * n + j]);
            }
            if j + 1 < n {
                bisect(p, [coord(i), coord(j + 1)], v, values[i * n + j + 1]);
            }
        }
    }
    if seeds.is_empty() {
        return Err(Error::EmptyLevel { level: c });
    }
    Ok(seeds)
}

struct FlowState {
    y: [f64; 2],
    dir: [f64; 2],
}

/// Flow direction rot90(grad)/|grad| at y, sign-aligned with `reference`.
/// Returns the gradient norm alongside.
fn flow_dir(
    g: &RestrictedFunction,
    y: [f64; 2],
    rot_sign: f64,
    reference: Option<[f64; 2]>,
) -> ([f64; 2], f64) {
    let grad = g.gradient(y);
    let gn = norm2(grad);
    if gn == 0.0 {
        return ([0.0, 0.0], 0.0);
    }
    let mut d = rot90([grad[0] / gn, grad[1] / gn]);
    d = [d[0] * rot_sign, d[1] * rot_sign];
    if let Some(r) = reference {
        if dot2(d, r) < 0.0 {
            d = [-d[0], -d[1]];
        }
    }
    (d, gn)
}

/// Newton correction back onto the level along the gradient direction.
fn correct(g: &RestrictedFunction, mut y: [f64; 2], c: f64, grad_floor: f64) -> Option<[f64; 2]> {
    for _ in 0..CORRECTION_MAX_ITERS {
        let err = g.evaluate(y) - c;
        if err.abs() < LEVEL_TOL {
            return Some(y);
        }
        let grad = g.gradient(y);
        let gn2 = dot2(grad, grad);
        if gn2.sqrt() < 0.1 * grad_floor {
            return None;
        }
        y = [y[0] - err * grad[0] / gn2, y[1] - err * grad[1] / gn2];
    }
    if (g.evaluate(y) - c).abs() < LEVEL_TOL {
        Some(y)
    } else {
        None
    }
}

/// One RK4 predictor step of length `h` through the unit flow field, stages
/// sign-aligned with the step's starting direction, followed by correction.
fn predict_correct(
    g: &RestrictedFunction,
    c: f64,
    state: &FlowState,
    h: f64,
    grad_floor: f64,
) -> Option<FlowState> {
    let d0 = state.dir;
    let y = state.y;
    let stage = |p: [f64; 2]| flow_dir(g, p, 1.0, Some(d0)).0;
    let k1 = d0;
    let k2 = stage([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = stage([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = stage([y[0] + h * k3[0], y[1] + h * k3[1]]);
    let pred = [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ];
    let corrected = correct(g, pred, c, grad_floor)?;
    let (dir, gn) = flow_dir(g, corrected, 1.0, Some(d0));
    if gn == 0.0 {
        return None;
    }
    Some(FlowState { y: corrected, dir })
}

/// Trace one component of {g = c} from a seed by unit-speed continuation of
/// the rotated-gradient flow with level correction after each step.
///
/// `rot_sign` selects the traversal orientation (+1 follows rot90(grad)).
pub fn trace(
    g: &RestrictedFunction,
    c: f64,
    seed: [f64; 2],
    params: &TraceParams,
    rot_sign: f64,
) -> Result<Trajectory> {
    let residual = (g.evaluate(seed) - c).abs();
    if residual >= 1e-8 {
        return Err(Error::SeedOffLevel { residual });
    }
    let mut traj = Trajectory {
        level: c,
        points: vec![seed],
        lifted_points: vec![g.plane.lift(seed)],
        arc_length: 0.0,
        termination: Termination::BudgetExhausted,
    };
    let (dir0, gn0) = flow_dir(g, seed, rot_sign, None);
    if gn0 <= params.grad_floor {
        traj.termination = Termination::NearCritical;
        return Ok(traj);
    }
    let initial_dir = dir0;
    let mut state = FlowState { y: seed, dir: dir0 };
    let mut stalls = 0;
    let mut closing_blocked = false;

    loop {
        if traj.arc_length >= params.s_max {
            traj.termination = Termination::BudgetExhausted;
            return Ok(traj);
        }
        // Attempt a step, shrinking on correction failure.
        let mut h = params.step;
        let next = loop {
            match predict_correct(g, c, &state, h, params.grad_floor) {
                Some(next) => break Some(next),
                None => {
                    stalls += 1;
                    if stalls >= MAX_CONSECUTIVE_STALLS {
                        break None;
                    }
                    h *= 0.5;
                }
            }
        };
        let Some(next) = next else {
            return Err(Error::StalledCorrection { attempts: stalls });
        };
        stalls = 0;
        let chord = norm2([next.y[0] - state.y[0], next.y[1] - state.y[1]]);
        traj.arc_length += chord;
        traj.points.push(next.y);
        traj.lifted_points.push(g.plane.lift(next.y));
        let gn = norm2(g.gradient(next.y));
        state = next;
        if gn < params.grad_floor {
            traj.termination = Termination::NearCritical;
            return Ok(traj);
        }
        if let Some(w) = params.window {
            if state.y[0].abs() > w || state.y[1].abs() > w {
                traj.termination = Termination::LeftWindow;
                return Ok(traj);
            }
        }
        let dist = norm2([state.y[0] - seed[0], state.y[1] - seed[1]]);
        if dist > 2.0 * params.step {
            closing_blocked = false;
        }
        if !closing_blocked
            && traj.arc_length >= params.s_min
            && dist < 1.5 * params.step
            && dot2(state.dir, initial_dir) > 0.0
        {
            match try_close(g, c, seed, &mut state, &mut traj, params) {
                CloseOutcome::Closed => {
                    traj.termination = Termination::Closed;
                    return Ok(traj);
                }
                CloseOutcome::Missed => {
                    closing_blocked = true;
                }
            }
        }
    }
}

enum CloseOutcome {
    Closed,
    Missed,
}

/// Mini-steps of length equal to the remaining gap; converges when the curve
/// actually passes through the seed.
fn try_close(
    g: &RestrictedFunction,
    c: f64,
    seed: [f64; 2],
    state: &mut FlowState,
    traj: &mut Trajectory,
    params: &TraceParams,
) -> CloseOutcome {
    let mut best = norm2([state.y[0] - seed[0], state.y[1] - seed[1]]);
    for _ in 0..40 {
        let dist = norm2([state.y[0] - seed[0], state.y[1] - seed[1]]);
        if dist < params.closure_tol {
            return CloseOutcome::Closed;
        }
        let h = dist.min(params.step);
        let Some(next) = predict_correct(g, c, state, h, params.grad_floor) else {
            return CloseOutcome::Missed;
        };
        let chord = norm2([next.y[0] - state.y[0], next.y[1] - state.y[1]]);
        traj.arc_length += chord;
        traj.points.push(next.y);
        traj.lifted_points.push(g.plane.lift(next.y));
        *state = next;
        let new_dist = norm2([state.y[0] - seed[0], state.y[1] - seed[1]]);
        if new_dist < best {
            best = new_dist;
        } else if new_dist > 2.0 * best + params.step {
            return CloseOutcome::Missed;
        }
    }
    CloseOutcome::Missed
}

/// `trace` with step halving on stalled correction, at most 6 halvings.
pub fn trace_adaptive(
    g: &RestrictedFunction,
    c: f64,
    seed: [f64; 2],
    params: &TraceParams,
    rot_sign: f64,
) -> Result<Trajectory> {
    let mut p = params.clone();
    for _ in 0..=MAX_STEP_HALVINGS {
        match trace(g, c, seed, &p, rot_sign) {
            Err(Error::StalledCorrection { .. }) => p.step *= 0.5,
            other => return other,
        }
    }
    Err(Error::StalledCorrection { attempts: MAX_STEP_HALVINGS })
}

/// All components of {g = c} intersecting the window: seeds, bidirectional
/// tracing, and on-component seed deduplication.
#[derive(Debug, Clone)]
pub struct ComponentSet {
    pub trajectories: Vec<Trajectory>,
    pub seed_count: usize,
    pub failed_seeds: usize,
}

pub fn extract_components(
    g: &RestrictedFunction,
    c: f64,
    window: f64,
    grid_step: f64,
    params: &TraceParams,
) -> Result<ComponentSet> {
    let seeds = find_seeds(g, c, window, grid_step)?;
    let dist_tol = grid_step.max(2.0 * params.step);
    let mut consumed = vec![false; seeds.len()];
    let mut out = ComponentSet {
        trajectories: Vec::new(),
        seed_count: seeds.len(),
        failed_seeds: 0,
    };
    for idx in 0..seeds.len() {
        if consumed[idx] {
            continue;
        }
        consumed[idx] = true;
        let seed = seeds[idx];
        let forward = match trace_adaptive(g, c, seed, params, 1.0) {
            Ok(t) => t,
            Err(_) => {
                out.failed_seeds += 1;
                continue;
            }
        };
        let traj = if forward.termination == Termination::Closed {
            forward
        } else {
            match trace_adaptive(g, c, seed, params, -1.0) {
                Ok(backward) => merge_bidirectional(backward, forward),
                Err(_) => {
                    out.failed_seeds += 1;
                    forward
                }
            }
        };
        for (j, s) in seeds.iter().enumerate() {
            if !consumed[j] && near_polyline(*s, &traj.points, dist_tol) {
                consumed[j] = true;
            }
        }
        out.trajectories.push(traj);
    }
    Ok(out)
}

fn merge_bidirectional(backward: Trajectory, forward: Trajectory) -> Trajectory {
    let mut points: Vec<[f64; 2]> = backward.points.iter().rev().copied().collect();
    let mut lifted: Vec<Vec<f64>> = backward.lifted_points.iter().rev().cloned().collect();
    points.extend_from_slice(&forward.points[1..]);
    lifted.extend_from_slice(&forward.lifted_points[1..]);
    let termination = match (backward.termination, forward.termination) {
        (Termination::NearCritical, _) | (_, Termination::NearCritical) => Termination::NearCritical,
        (Termination::LeftWindow, _) | (_, Termination::LeftWindow) => Termination::LeftWindow,
        _ => Termination::BudgetExhausted,
    };
    Trajectory {
        level: forward.level,
        points,
        lifted_points: lifted,
        arc_length: backward.arc_length + forward.arc_length,
        termination,
    }
}

fn near_polyline(p: [f64; 2], polyline: &[[f64; 2]], tol: f64) -> bool {
    polyline
        .iter()
        .any(|q| (p[0] - q[0]).abs() < tol && (p[1] - q[1]).abs() < tol && norm2([p[0] - q[0], p[1] - q[1]]) < tol)
}

/// Symmetric Hausdorff distance between two point sequences.
pub fn hausdorff_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let directed = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| norm2([p[0] - q[0], p[1] - q[1]]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0_f64, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKind {
    Horizontal,
    Vertical,
}

type EdgeKey = (EdgeKind, usize, usize);

/// Standard cell-by-cell contour extraction with linear edge interpolation.
/// Ambiguous saddle cells are resolved by the cell-center sample; components
/// are assembled by edge adjacency.
pub fn marching_squares(
    g: &RestrictedFunction,
    c: f64,
    window: f64,
    grid_step: f64,
) -> Result<Vec<GridComponent>> {
    if !(grid_step > 0.0 && grid_step < window) {
        return Err(Error::Config(format!(
            "need 0 < grid_step < window, got {grid_step}, {window}"
        )));
    }
    let n = (2.0 * window / grid_step).ceil() as usize + 1;
    // Clamp the last row/column so the grid never samples outside the window
    // when the step does not divide the range evenly.
    let coord = |i: usize| (-window + i as f64 * grid_step).min(window);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = g.evaluate([coord(i), coord(j)]);
        }
    }
    let inside = |i: usize, j: usize| values[i * n + j] >= c;
    let mut crossings: BTreeMap<EdgeKey, [f64; 2]> = BTreeMap::new();
    let mut interp = |kind: EdgeKind, i: usize, j: usize| -> EdgeKey {
        let key = (kind, i, j);
        crossings.entry(key).or_insert_with(|| {
            let (p0, p1, v0, v1) = match kind {
                EdgeKind::Horizontal => (
                    [coord(i), coord(j)],
                    [coord(i + 1), coord(j)],
                    values[i * n + j],
                    values[(i + 1) * n + j],
                ),
                EdgeKind::Vertical => (
                    [coord(i), coord(j)],
                    [coord(i), coord(j + 1)],
                    values[i * n + j],
                    values[i * n + j + 1],
                ),
            };
            let t = if (v1 - v0).abs() < 1e-300 { 0.5 } else { (c - v0) / (v1 - v0) };
            let t = t.clamp(0.0, 1.0);
            [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])]
        });
        key
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let c00 = inside(i, j);
            let c10 = inside(i + 1, j);
            let c01 = inside(i, j + 1);
            let c11 = inside(i + 1, j + 1);
            let mut crossed = Vec::with_capacity(4);
            if c00 != c10 {
                crossed.push(interp(EdgeKind::Horizontal, i, j));
            }
            if c01 != c11 {
                crossed.push(interp(EdgeKind::Horizontal, i, j + 1));
            }
            if c00 != c01 {
                crossed.push(interp(EdgeKind::Vertical, i, j));
            }
            if c10 != c11 {
                crossed.push(interp(EdgeKind::Vertical, i + 1, j));
            }
            match crossed.len() {
                0 => {}
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let bottom = (EdgeKind::Horizontal, i, j);
                    let top = (EdgeKind::Horizontal, i, j + 1);
                    let left = (EdgeKind::Vertical, i, j);
                    let right = (EdgeKind::Vertical, i + 1, j);
                    let center = [coord(i) + 0.5 * grid_step, coord(j) + 0.5 * grid_step];
                    let center_inside = g.evaluate(center) >= c;
                    if center_inside == c00 {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((bottom, left));
                        segments.push((top, right));
                    }
                }
                _ => {}
            }
        }
    }

    // Assemble chains by edge adjacency.
    let mut adjacency: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (si, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(si);
        adjacency.entry(*b).or_default().push(si);
    }
    let mut used = vec![false; segments.len()];
    let mut components = Vec::new();
    // Open chains start at degree-1 edges, then remaining cycles.
    let starts: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(k, _)| *k)
        .chain(adjacency.keys().copied())
        .collect();
    for start in starts {
        let chain = walk_chain(start, &segments, &adjacency, &mut used);
        if chain.len() < 2 {
            continue;
        }
        let polyline: Vec<[f64; 2]> = chain.iter().map(|k| crossings[k]).collect();
        let closed = chain[0] == *chain.last().unwrap();
        let touches_boundary =
            !closed && (boundary_edge(chain[0], n) || boundary_edge(*chain.last().unwrap(), n));
        let polyline = if closed {
            let mut p = polyline;
            p.pop();
            p
        } else {
            polyline
        };
        components.push(GridComponent { polyline, closed, touches_boundary });
    }
    Ok(components)
}

fn boundary_edge(key: EdgeKey, n: usize) -> bool {
    match key {
        (EdgeKind::Horizontal, _, j) => j == 0 || j == n - 1,
        (EdgeKind::Vertical, i, _) => i == 0 || i == n - 1,
    }
}

fn walk_chain(
    start: EdgeKey,
    segments: &[(EdgeKey, EdgeKey)],
    adjacency: &BTreeMap<EdgeKey, Vec<usize>>,
    used: &mut [bool],
) -> Vec<EdgeKey> {
    let mut chain = vec![start];
    let mut current = start;
    loop {
        let Some(segs) = adjacency.get(&current) else { break };
        let Some(&si) = segs.iter().find(|&&si| !used[si]) else { break };
        used[si] = true;
        let (a, b) = segments[si];
        let next = if a == current { b } else { a };
        chain.push(next);
        current = next;
    }
    chain
}
