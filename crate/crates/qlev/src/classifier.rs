//! Topological classification of traced components: compact vs strip-confined
//! open, minimal bounding strip, integral-hyperplane labels, and per-level
//! consistency checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    primitive_normalize, rationalize_common_normal, IntegerHyperplane, IntegerVector,
    NormalCandidate, PlaneSpec,
};
use crate::qpfunction::{restrict, TrigPolynomial};
use crate::tracer::{extract_components, Termination, TraceParams, Trajectory};
use crate::vecmath::{dot, dot2, norm2};

/// Minimum arc length before a budget-exhausted trajectory may be called open.
pub const MIN_OPEN_ARC: f64 = 100.0;
/// Allowed growth of the <n, x> range from the first half to the full run.
const BOUNDEDNESS_GROWTH: f64 = 1.1;
/// Widths below this are numerical zero (exactly straight components); the
/// half/full ratio is meaningless noise there and counts as saturated.
const WIDTH_FLOOR: f64 = 1e-7;

/// Classification settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierCfg {
    /// Width saturation ratio: full/half width must stay at or below this.
    pub ratio_tol: f64,
    /// Enumeration box for integer normals.
    pub max_norm: i64,
    /// Orthogonality residual tolerance for integer normals.
    pub tol: f64,
}

impl Default for ClassifierCfg {
    fn default() -> Self {
        Self { ratio_tol: 1.1, max_norm: crate::lattice::DEFAULT_MAX_NORM, tol: 1e-6 }
    }
}

/// Minimal bounding strip of a planar point set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StripFit {
    /// Unit strip direction in plane coordinates, angle canonical in [0, pi).
    pub direction2: [f64; 2],
    /// Extent of projections onto the direction's normal.
    pub width: f64,
    /// Unit lifted direction d1*u1 + d2*u2; set once a plane is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_direction: Option<Vec<f64>>,
}

/// Why a trajectory could not be classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UnresolvedReason {
    NearCritical,
    WidthNotConverged { width_half: f64, width_full: f64 },
    TooShort { arc_length: f64 },
    LeftWindow,
    DegeneratePoints,
}

/// Dichotomy verdict for one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum StripLabel {
    Compact,
    OpenStrip {
        fit: StripFit,
        /// Integer normal candidates orthogonal to the lifted direction,
        /// ordered by residual.
        normals: Vec<NormalCandidate>,
        /// Sign of the traversal direction against the canonical strip
        /// direction.
        orientation_sign: i8,
    },
    Unresolved {
        reason: UnresolvedReason,
    },
}

impl StripLabel {
    pub fn best_normal(&self) -> Option<&IntegerHyperplane> {
        match self {
            StripLabel::OpenStrip { normals, .. } => normals.first().map(|c| &c.normal),
            _ => None,
        }
    }

    /// Deterministic per-trajectory normal: among candidates whose residuals
    /// are within a factor of 10 of the smallest, the least (norm, lexicographic)
    /// entry. Residuals at numerical zero sort unstably, so the integer
    /// ordering, not the float one, must break the tie.
    pub fn canonical_normal(&self) -> Option<IntegerHyperplane> {
        let StripLabel::OpenStrip { normals, .. } = self else {
            return None;
        };
        let lowest = normals.first()?.residual;
        let norm_sq = |n: &IntegerVector| -> i64 { n.0.iter().map(|k| k * k).sum() };
        normals
            .iter()
            .take_while(|c| c.residual <= 10.0 * lowest.max(1e-15))
            .map(|c| &c.normal)
            .min_by(|a, b| norm_sq(a).cmp(&norm_sq(b)).then(a.0.cmp(&b.0)))
            .and_then(|n| primitive_normalize(n).ok())
    }
}

/// Per-level aggregation of labels and their mutual consistency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: f64,
    pub labels: Vec<StripLabel>,
    /// True iff every open label's best normal coincides after
    /// canonicalization.
    pub consistent: bool,
    pub shared_normal: Option<IntegerHyperplane>,
    /// Count of +1 orientation signs equals count of -1.
    pub sign_balanced: bool,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull, counterclockwise, no repeated endpoint.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let n = pts.len();
    if n <= 2 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn canonical_angle_direction(d: [f64; 2]) -> [f64; 2] {
    // Angle in [0, pi): flip so that d[1] > 0, or d[1] == 0 and d[0] > 0.
    if d[1] < 0.0 || (d[1] == 0.0 && d[0] < 0.0) {
        [-d[0], -d[1]]
    } else {
        d
    }
}

fn direction_angle(d: [f64; 2]) -> f64 {
    let d = canonical_angle_direction(d);
    let a = d[1].atan2(d[0]);
    if a < 0.0 {
        a + std::f64::consts::PI
    } else {
        a
    }
}

/// Minimum-width strip over all directions, exact via convex hull plus
/// rotating calipers. Ties are broken by the smallest direction angle in
/// [0, pi).
pub fn strip_fit(points: &[[f64; 2]]) -> Result<StripFit> {
    let hull = convex_hull(points);
    if hull.is_empty() || hull.len() == 1 {
        return Err(Error::DegeneratePointSet);
    }
    if hull.len() == 2 {
        let d = [hull[1][0] - hull[0][0], hull[1][1] - hull[0][1]];
        let n = norm2(d);
        if n == 0.0 {
            return Err(Error::DegeneratePointSet);
        }
        return Ok(StripFit {
            direction2: canonical_angle_direction([d[0] / n, d[1] / n]),
            width: 0.0,
            lifted_direction: None,
        });
    }
    let h = hull.len();
    let mut best_width = f64::INFINITY;
    let mut best_angle = f64::INFINITY;
    let mut best_dir = [1.0, 0.0];
    let mut far = 1;
    for i in 0..h {
        let a = hull[i];
        let b = hull[(i + 1) % h];
        let e = [b[0] - a[0], b[1] - a[1]];
        let elen = norm2(e);
        if elen == 0.0 {
            continue;
        }
        // Advance the antipodal pointer while the distance to the edge grows.
        let dist = |j: usize| cross(a, b, hull[j % h]).abs() / elen;
        while dist(far + 1) > dist(far) {
            far = (far + 1) % h;
        }
        let width = dist(far);
        let dir = canonical_angle_direction([e[0] / elen, e[1] / elen]);
        let angle = direction_angle(dir);
        let better = width < best_width - 1e-12
            || (width <= best_width + 1e-12 && angle < best_angle);
        if better {
            best_width = best_width.min(width);
            best_angle = angle;
            best_dir = dir;
        }
    }
    Ok(StripFit { direction2: best_dir, width: best_width, lifted_direction: None })
}

/// Width-saturation diagnostics for an open-candidate trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WidthDiagnostics {
    pub width_half: f64,
    pub width_full: f64,
    pub converged: bool,
}

/// Operationalizes "finite width": the strip width over the whole run must not
/// exceed the width over the first half by more than the ratio tolerance.
pub fn width_converged(trajectory: &Trajectory, ratio_tol: f64) -> Result<WidthDiagnostics> {
    let half = &trajectory.points[..trajectory.points.len() / 2];
    let width_half = strip_fit(half)?.width;
    let width_full = strip_fit(&trajectory.points)?.width;
    let converged = width_full < WIDTH_FLOOR || width_full / width_half.max(1e-9) <= ratio_tol;
    Ok(WidthDiagnostics { width_half, width_full, converged })
}

/// Decide the dichotomy verdict for one trajectory.
pub fn classify(trajectory: &Trajectory, plane: &PlaneSpec, cfg: &ClassifierCfg) -> StripLabel {
    match trajectory.termination {
        Termination::Closed => StripLabel::Compact,
        Termination::NearCritical => {
            StripLabel::Unresolved { reason: UnresolvedReason::NearCritical }
        }
        Termination::LeftWindow => StripLabel::Unresolved { reason: UnresolvedReason::LeftWindow },
        Termination::BudgetExhausted => {
            if trajectory.arc_length < MIN_OPEN_ARC {
                return StripLabel::Unresolved {
                    reason: UnresolvedReason::TooShort { arc_length: trajectory.arc_length },
                };
            }
            let diag = match width_converged(trajectory, cfg.ratio_tol) {
                Ok(d) => d,
                Err(_) => {
                    return StripLabel::Unresolved { reason: UnresolvedReason::DegeneratePoints }
                }
            };
            if !diag.converged {
                return StripLabel::Unresolved {
                    reason: UnresolvedReason::WidthNotConverged {
                        width_half: diag.width_half,
                        width_full: diag.width_full,
                    },
                };
            }
            let mut fit = match strip_fit(&trajectory.points) {
                Ok(f) => f,
                Err(_) => {
                    return StripLabel::Unresolved { reason: UnresolvedReason::DegeneratePoints }
                }
            };
            let lifted = plane.lift_direction(fit.direction2);
            fit.lifted_direction = Some(lifted.clone());
            let normals =
                rationalize_common_normal(&[lifted], cfg.max_norm, cfg.tol).unwrap_or_default();
            let first = trajectory.points[0];
            let last = *trajectory.points.last().unwrap();
            let travel = [last[0] - first[0], last[1] - first[1]];
            let orientation_sign = if dot2(travel, fit.direction2) >= 0.0 { 1 } else { -1 };
            StripLabel::OpenStrip { fit, normals, orientation_sign }
        }
    }
}

/// Range of <n, x> over a slice of lifted points.
fn normal_range(normal: &IntegerHyperplane, lifted: &[Vec<f64>]) -> f64 {
    let nf = normal.as_f64();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in lifted {
        let v = dot(&nf, x);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Boundedness certificate: the full-run range of <n, x> must not exceed the
/// first-half range by more than 10%.
pub fn boundedness_certificate(normal: &IntegerHyperplane, trajectory: &Trajectory) -> (bool, f64) {
    let half = &trajectory.lifted_points[..trajectory.lifted_points.len() / 2];
    let r_half = normal_range(normal, half);
    let r_full = normal_range(normal, &trajectory.lifted_points);
    let ratio = r_full / r_half.max(1e-9);
    (ratio < BOUNDEDNESS_GROWTH, ratio)
}

/// Settings for perturbation-based labeling.
#[derive(Debug, Clone)]
pub struct LabelCfg {
    pub classifier: ClassifierCfg,
    pub trace: TraceParams,
    pub window: f64,
    pub grid_step: f64,
}

/// Directions closer than this to a common line carry no transverse
/// information and cannot isolate a unique hyperplane.
const COLLINEAR_TOL: f64 = 1e-7;
/// Below this, |<n, u>| counts as exact containment of a basis vector.
const CONTAINMENT_TOL: f64 = 1e-9;

fn contains_plane(normal: &IntegerHyperplane, plane: &PlaneSpec) -> bool {
    let nf = normal.as_f64();
    let scale = norm2f(&nf);
    dot(&nf, &plane.u1).abs() < CONTAINMENT_TOL * scale
        && dot(&nf, &plane.u2).abs() < CONTAINMENT_TOL * scale
}

fn norm2f(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Pick the unique integral hyperplane compatible with a family of measured
/// strip directions, one or more per sample plane.
///
/// A valid label must assign a direction to every sample: candidates whose
/// hyperplane contains one of the sample planes outright are discarded, since
/// for that sample they meet the plane in no line and explain nothing. Among
/// the survivors, residual decides first; among candidates whose residuals are
/// numerically indistinguishable (within a factor of 10), the smallest integer
/// norm is canonical, and a rival of equal norm makes the data genuinely
/// ambiguous.
pub fn select_unique_normal(
    dirs: &[Vec<f64>],
    planes: &[PlaneSpec],
    max_norm: i64,
    tol: f64,
) -> Result<IntegerHyperplane> {
    let d0 = &dirs[0];
    let collinear = dirs.iter().all(|d| {
        let proj = dot(d, d0);
        let transverse: f64 = d
            .iter()
            .zip(d0)
            .map(|(a, b)| {
                let r = a - proj * b;
                r * r
            })
            .sum();
        transverse.sqrt() < COLLINEAR_TOL
    });
    if collinear {
        return Err(Error::AmbiguousLabel { best: 0.0, second: 0.0 });
    }
    let candidates = rationalize_common_normal(dirs, max_norm, tol)?;
    let surviving: Vec<&NormalCandidate> = candidates
        .iter()
        .filter(|c| !planes.iter().any(|p| contains_plane(&c.normal, p)))
        .collect();
    let lowest = surviving.first().ok_or(Error::NoCandidate)?.residual;
    // Candidates indistinguishable from the lowest residual form one group;
    // the group's minimal-norm member is the canonical hyperplane.
    let norm_sq = |c: &NormalCandidate| -> i64 { c.normal.0.iter().map(|k| k * k).sum() };
    let group: Vec<&NormalCandidate> = surviving
        .iter()
        .take_while(|c| c.residual <= 10.0 * lowest.max(1e-15))
        .copied()
        .collect();
    let best = group
        .iter()
        .min_by(|a, b| norm_sq(a).cmp(&norm_sq(b)).then(a.normal.0.cmp(&b.normal.0)))
        .unwrap();
    for rival in &group {
        if rival.normal != best.normal && norm_sq(rival) == norm_sq(best) {
            return Err(Error::AmbiguousLabel { best: best.residual, second: rival.residual });
        }
    }
    primitive_normalize(&best.normal)
}

/// Isolate the unique integral hyperplane from open-trajectory directions
/// collected across several perturbed planes.
///
/// A single direction has an (m-1)-dimensional orthogonal complement full of
/// spurious integer vectors; multiple perturbed planes cut it down to one.
pub fn label_by_perturbation(
    f: &TrigPolynomial,
    c: f64,
    perturbations: &[PlaneSpec],
    cfg: &LabelCfg,
) -> Result<IntegerHyperplane> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut open_trajectories: Vec<Trajectory> = Vec::new();
    let mut planes_with_open = 0usize;
    for plane in perturbations {
        let g = restrict(f, plane)?;
        let set = extract_components(&g, c, cfg.window, cfg.grid_step, &cfg.trace)?;
        let mut any_open = false;
        for traj in set.trajectories {
            if let StripLabel::OpenStrip { fit, .. } = classify(&traj, plane, &cfg.classifier) {
                if let Some(v) = fit.lifted_direction {
                    dirs.push(v);
                    any_open = true;
                    open_trajectories.push(traj);
                }
            }
        }
        if any_open {
            planes_with_open += 1;
        }
    }
    if planes_with_open < 3 {
        return Err(Error::InsufficientOpenSamples { got: planes_with_open });
    }
    let normal =
        select_unique_normal(&dirs, perturbations, cfg.classifier.max_norm, cfg.classifier.tol)?;
    for traj in &open_trajectories {
        let (ok, ratio) = boundedness_certificate(&normal, traj);
        if !ok {
            return Err(Error::BoundednessFailed { ratio });
        }
    }
    Ok(normal)
}

/// Check that all open labels on one level share the same canonical normal and
/// report the orientation-sign balance.
pub fn level_consistency(level: f64, labels: Vec<StripLabel>) -> LevelReport {
    let mut shared: Option<IntegerHyperplane> = None;
    let mut consistent = true;
    let mut plus = 0usize;
    let mut minus = 0usize;
    for label in &labels {
        if let StripLabel::OpenStrip { orientation_sign, .. } = label {
            if *orientation_sign > 0 {
                plus += 1;
            } else {
                minus += 1;
            }
            let Some(canon) = label.canonical_normal() else {
                consistent = false;
                continue;
            };
            match &shared {
                None => shared = Some(canon),
                Some(existing) => {
                    if *existing != canon {
                        consistent = false;
                    }
                }
            }
        }
    }
    LevelReport {
        level,
        labels,
        consistent,
        shared_normal: shared,
        sign_balanced: plus == minus,
    }
}
