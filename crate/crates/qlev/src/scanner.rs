//! Direction-space and level sweeps: classify trajectories over a grid of
//! perturbed plane directions, aggregate into stability-zone maps, and flag
//! near-singular levels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    classify, level_consistency, select_unique_normal, ClassifierCfg, LevelReport, StripLabel,
};
use crate::error::{Error, Result};
use crate::lattice::{build_plane, IntegerHyperplane, LinearForm, PlaneSpec};
use crate::qpfunction::{find_critical_points, restrict, TrigPolynomial};
use crate::tracer::{extract_components, TraceParams};

/// Margin around critical values within which a level counts as near-singular.
pub const SINGULAR_EPS: f64 = 1e-3;

/// 2-parameter grid of perturbed plane directions around a rational base pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    pub base_forms: Vec<LinearForm>,
    pub perturb_generators: Vec<LinearForm>,
    pub offsets: Vec<f64>,
    pub radius: f64,
    /// Samples per axis; total samples = resolution^2.
    pub resolution: usize,
}

impl DirectionGrid {
    pub fn param(&self, index: usize) -> f64 {
        if self.resolution == 1 {
            0.0
        } else {
            -self.radius + 2.0 * self.radius * index as f64 / (self.resolution - 1) as f64
        }
    }

    /// Perturbed forms at sample (i, j). With two base forms, s perturbs the
    /// first and t the second; with one (m = 3), both generators perturb it.
    pub fn forms_at(&self, i: usize, j: usize) -> Vec<LinearForm> {
        let s = self.param(i);
        let t = self.param(j);
        let perturb = |base: &LinearForm, gen: &LinearForm, amount: f64| {
            let coefficients: Vec<f64> = base
                .coefficients
                .iter()
                .zip(&gen.coefficients)
                .map(|(b, p)| b + amount * p)
                .collect();
            LinearForm::new(coefficients)
        };
        match self.base_forms.len() {
            2 => vec![
                perturb(&self.base_forms[0], &self.perturb_generators[0], s),
                perturb(&self.base_forms[1], &self.perturb_generators[1], t),
            ],
            1 => {
                let one = perturb(&self.base_forms[0], &self.perturb_generators[0], s);
                vec![perturb(&one, &self.perturb_generators[1], t)]
            }
            _ => Vec::new(),
        }
    }

    pub fn plane_at(&self, i: usize, j: usize) -> Result<PlaneSpec> {
        build_plane(&self.forms_at(i, j), &self.offsets)
    }
}

/// Coarse verdict for one (sample, level) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// Dependent forms at this sample.
    Invalid,
    /// No seeds at the level.
    Empty,
    /// Every component compact.
    Compact,
    /// Open components present, labeled.
    Open,
    /// Open components present but no common integer normal found.
    Unlabeled,
    /// Some components unresolved.
    Mixed,
}

/// One record per (sample, level), totally ordered by (i, j, level index).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRecord {
    pub i: usize,
    pub j: usize,
    pub s: f64,
    pub t: f64,
    pub level: f64,
    pub kind: SampleKind,
    pub normal: Option<IntegerHyperplane>,
    pub residual: Option<f64>,
    /// Sum of orientation signs over open components.
    pub orientation_sum: i64,
    pub seeds: usize,
    pub unresolved: usize,
}

/// Zone legend entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneLegend {
    AllCompact,
    Normal(IntegerHyperplane),
    Other,
}

/// Flood-filled map of constant-label regions for one level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneMap {
    pub resolution: usize,
    pub level: f64,
    /// Row-major zone ids, indexed i * resolution + j.
    pub zone_ids: Vec<usize>,
    pub legend: Vec<ZoneLegend>,
    /// True where a 4-neighbor belongs to a different zone.
    pub boundary: Vec<bool>,
}

/// Sweep settings shared by scans.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanCfg {
    pub classifier: ClassifierCfg,
    pub trace: TraceParams,
    pub window: f64,
    pub grid_step: f64,
    /// Worker threads; 1 and N must produce identical records.
    pub workers: usize,
}

impl Default for ScanCfg {
    fn default() -> Self {
        Self {
            classifier: ClassifierCfg::default(),
            trace: TraceParams { s_max: 150.0, ..Default::default() },
            window: 1.0,
            grid_step: 0.05,
            workers: 1,
        }
    }
}

struct SampleOutcome {
    labels: Vec<StripLabel>,
    open_dirs: Vec<Vec<f64>>,
    seeds: usize,
    unresolved: usize,
    valid: bool,
    empty: bool,
}

fn classify_sample(
    f: &TrigPolynomial,
    grid: &DirectionGrid,
    i: usize,
    j: usize,
    level: f64,
    cfg: &ScanCfg,
) -> SampleOutcome {
    let mut out = SampleOutcome {
        labels: Vec::new(),
        open_dirs: Vec::new(),
        seeds: 0,
        unresolved: 0,
        valid: true,
        empty: false,
    };
    let plane = match grid.plane_at(i, j) {
        Ok(p) => p,
        Err(_) => {
            out.valid = false;
            return out;
        }
    };
    let g = match restrict(f, &plane) {
        Ok(g) => g,
        Err(_) => {
            out.valid = false;
            return out;
        }
    };
    let set = match extract_components(&g, level, cfg.window, cfg.grid_step, &cfg.trace) {
        Ok(s) => s,
        Err(Error::EmptyLevel { .. }) => {
            out.empty = true;
            return out;
        }
        Err(_) => {
            out.valid = false;
            return out;
        }
    };
    out.seeds = set.seed_count;
    out.unresolved = set.failed_seeds;
    for traj in &set.trajectories {
        let label = classify(traj, &plane, &cfg.classifier);
        match &label {
            StripLabel::OpenStrip { fit, .. } => {
                if let Some(v) = &fit.lifted_direction {
                    out.open_dirs.push(v.clone());
                }
            }
            StripLabel::Unresolved { .. } => out.unresolved += 1,
            StripLabel::Compact => {}
        }
        out.labels.push(label);
    }
    out
}

/// Classify every (sample, level) pair of the grid. Per-sample labeling uses
/// the sample's 4 grid neighbors as the perturbation family. Records are
/// emitted in (i, j, level) order regardless of worker count.
pub fn scan_directions(
    f: &TrigPolynomial,
    grid: &DirectionGrid,
    levels: &[f64],
    cfg: &ScanCfg,
) -> Result<Vec<ScanRecord>> {
    if levels.is_empty() {
        return Err(Error::EmptyInput("no levels to scan"));
    }
    let res = grid.resolution;
    let tasks: Vec<(usize, usize, usize)> = (0..res)
        .flat_map(|i| (0..res).flat_map(move |j| (0..levels.len()).map(move |l| (i, j, l))))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<SampleOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, j, l)| classify_sample(f, grid, i, j, levels[l], cfg))
            .collect()
    });

    let idx = |i: usize, j: usize, l: usize| (i * res + j) * levels.len() + l;
    let mut records = Vec::with_capacity(tasks.len());
    for &(i, j, l) in &tasks {
        let here = &outcomes[idx(i, j, l)];
        let mut record = ScanRecord {
            i,
            j,
            s: grid.param(i),
            t: grid.param(j),
            level: levels[l],
            kind: SampleKind::Invalid,
            normal: None,
            residual: None,
            orientation_sum: 0,
            seeds: here.seeds,
            unresolved: here.unresolved,
        };
        if !here.valid {
            records.push(record);
            continue;
        }
        if here.empty {
            record.kind = SampleKind::Empty;
            records.push(record);
            continue;
        }
        let open_count = here.open_dirs.len();
        record.orientation_sum = here
            .labels
            .iter()
            .map(|lab| match lab {
                StripLabel::OpenStrip { orientation_sign, .. } => *orientation_sign as i64,
                _ => 0,
            })
            .sum();
        if open_count == 0 {
            record.kind = if here.unresolved > 0 { SampleKind::Mixed } else { SampleKind::Compact };
            records.push(record);
            continue;
        }
        // Perturbation family: this sample plus its 4 grid neighbors.
        let mut dirs = here.open_dirs.clone();
        let mut family = Vec::new();
        if let Ok(p) = grid.plane_at(i, j) {
            family.push(p);
        }
        for (ni, nj) in neighbors(i, j, res) {
            dirs.extend(outcomes[idx(ni, nj, l)].open_dirs.iter().cloned());
            if !outcomes[idx(ni, nj, l)].open_dirs.is_empty() {
                if let Ok(p) = grid.plane_at(ni, nj) {
                    family.push(p);
                }
            }
        }
        let labeled = select_unique_normal(&dirs, &family, cfg.classifier.max_norm, cfg.classifier.tol)
            .ok()
            .map(|normal| {
                let nf = normal.as_f64();
                let scale = crate::vecmath::dot(&nf, &nf).sqrt();
                let residual = dirs
                    .iter()
                    .map(|d| crate::vecmath::dot(&nf, d).abs() / scale)
                    .fold(0.0_f64, f64::max);
                (normal, residual)
            });
        match labeled {
            Some((normal, residual)) => {
                record.kind =
                    if here.unresolved > 0 { SampleKind::Mixed } else { SampleKind::Open };
                record.normal = Some(normal);
                record.residual = Some(residual);
            }
            None => {
                record.kind =
                    if here.unresolved > 0 { SampleKind::Mixed } else { SampleKind::Unlabeled };
            }
        }
        records.push(record);
    }
    Ok(records)
}

fn neighbors(i: usize, j: usize, res: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(4);
    if i > 0 {
        out.push((i - 1, j));
    }
    if i + 1 < res {
        out.push((i + 1, j));
    }
    if j > 0 {
        out.push((i, j - 1));
    }
    if j + 1 < res {
        out.push((i, j + 1));
    }
    out
}

fn record_legend(record: &ScanRecord) -> ZoneLegend {
    match (&record.kind, &record.normal) {
        (SampleKind::Compact, _) => ZoneLegend::AllCompact,
        (SampleKind::Open, Some(n)) => ZoneLegend::Normal(n.clone()),
        _ => ZoneLegend::Other,
    }
}

/// Flood-fill 4-connected regions of equal legend for one level.
pub fn build_zone_map(records: &[ScanRecord], level: f64) -> Result<ZoneMap> {
    let slice: Vec<&ScanRecord> = records.iter().filter(|r| r.level == level).collect();
    let res = (slice.len() as f64).sqrt().round() as usize;
    if res * res != slice.len() || slice.is_empty() {
        return Err(Error::IncompleteGrid { level });
    }
    let mut cells: Vec<Option<&ScanRecord>> = vec![None; res * res];
    for r in &slice {
        if r.i >= res || r.j >= res {
            return Err(Error::IncompleteGrid { level });
        }
        cells[r.i * res + r.j] = Some(r);
    }
    if cells.iter().any(|c| c.is_none()) {
        return Err(Error::IncompleteGrid { level });
    }
    let legend_of: Vec<ZoneLegend> = cells.iter().map(|c| record_legend(c.unwrap())).collect();

    let mut zone_ids = vec![usize::MAX; res * res];
    let mut legend = Vec::new();
    for start in 0..res * res {
        if zone_ids[start] != usize::MAX {
            continue;
        }
        let id = legend.len();
        legend.push(legend_of[start].clone());
        let mut stack = vec![start];
        zone_ids[start] = id;
        while let Some(cell) = stack.pop() {
            let (i, j) = (cell / res, cell % res);
            for (ni, nj) in neighbors(i, j, res) {
                let ncell = ni * res + nj;
                if zone_ids[ncell] == usize::MAX && legend_of[ncell] == legend_of[start] {
                    zone_ids[ncell] = id;
                    stack.push(ncell);
                }
            }
        }
    }
    let boundary: Vec<bool> = (0..res * res)
        .map(|cell| {
            let (i, j) = (cell / res, cell % res);
            neighbors(i, j, res)
                .into_iter()
                .any(|(ni, nj)| zone_ids[ni * res + nj] != zone_ids[cell])
        })
        .collect();
    Ok(ZoneMap { resolution: res, level, zone_ids, legend, boundary })
}

/// Per-level entry of a level sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelEntry {
    pub level: f64,
    pub near_singular: bool,
    /// Present for regular levels with at least one traced component.
    pub report: Option<LevelReport>,
    pub empty: bool,
}

/// Outcome of sweeping a range of levels on one plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelScan {
    pub critical_values: Vec<f64>,
    pub degenerate: bool,
    pub entries: Vec<LevelEntry>,
}

/// Range of levels to sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LevelRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LevelRange {
    pub fn levels(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| {
                self.min + (self.max - self.min) * k as f64 / (self.count - 1).max(1) as f64
            })
            .collect()
    }
}

/// Sweep levels on a fixed plane: detect critical values, flag near-singular
/// levels, and check label consistency on the regular ones.
pub fn scan_levels(
    f: &TrigPolynomial,
    plane: &PlaneSpec,
    range: LevelRange,
    cfg: &ScanCfg,
) -> Result<LevelScan> {
    if range.count < 2 {
        return Err(Error::Config("level range needs count >= 2".into()));
    }
    let g = restrict(f, plane)?;
    let crit_step = (0.02 / f.max_freq_norm().max(1) as f64).min(cfg.grid_step);
    let crit = find_critical_points(&g, cfg.window, crit_step)?;
    let critical_values: Vec<f64> = crit.points.iter().map(|p| p.value).collect();
    let mut entries = Vec::new();
    for level in range.levels() {
        let near_singular = critical_values.iter().any(|cv| (cv - level).abs() < SINGULAR_EPS);
        if near_singular {
            entries.push(LevelEntry { level, near_singular, report: None, empty: false });
            continue;
        }
        match extract_components(&g, level, cfg.window, cfg.grid_step, &cfg.trace) {
            Err(Error::EmptyLevel { .. }) => {
                entries.push(LevelEntry { level, near_singular, report: None, empty: true });
            }
            Err(e) => return Err(e),
            Ok(set) => {
                let labels: Vec<StripLabel> = set
                    .trajectories
                    .iter()
                    .map(|t| classify(t, plane, &cfg.classifier))
                    .collect();
                entries.push(LevelEntry {
                    level,
                    near_singular,
                    report: Some(level_consistency(level, labels)),
                    empty: false,
                });
            }
        }
    }
    Ok(LevelScan { critical_values, degenerate: crit.constant, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::IntegerVector;
    use crate::qpfunction::Harmonic;

    fn separable_f() -> TrigPolynomial {
        let mk = |axis: usize| {
            let mut k = vec![0; 4];
            k[axis] = 1;
            Harmonic { k: IntegerVector(k), a: 1.0, phi: 0.0 }
        };
        TrigPolynomial::new(4, vec![mk(0), mk(1)]).unwrap()
    }

    fn coord_grid(resolution: usize, radius: f64) -> DirectionGrid {
        DirectionGrid {
            base_forms: vec![
                LinearForm::rational(vec![0, 0, 1, 0]),
                LinearForm::rational(vec![0, 0, 0, 1]),
            ],
            perturb_generators: vec![
                LinearForm::new(vec![1.0, 0.0, 0.0, 0.0]),
                LinearForm::new(vec![0.0, 1.0, 0.0, 0.0]),
            ],
            offsets: vec![0.0, 0.0],
            radius,
            resolution,
        }
    }

    #[test]
    fn separable_near_maximum_all_compact() {
        let records =
            scan_directions(&separable_f(), &coord_grid(3, 0.02), &[1.9], &ScanCfg::default())
                .unwrap();
        assert_eq!(records.len(), 9);
        for r in &records {
            assert_eq!(r.kind, SampleKind::Compact, "record {:?}", r);
            assert_eq!(r.unresolved, 0);
        }
    }

    #[test]
    fn dependent_sample_marked_invalid_sweep_completes() {
        // Perturbing the first form toward the second makes (s = radius) rows
        // approach dependence; force exact dependence with a degenerate base.
        let mut grid = coord_grid(3, 1.0);
        grid.base_forms[0] = LinearForm::rational(vec![0, 0, 0, 1]);
        grid.perturb_generators[0] = LinearForm::new(vec![0.0, 0.0, 0.0, 1.0]);
        // At s = -1 the first form vanishes entirely.
        let records =
            scan_directions(&separable_f(), &grid, &[1.9], &ScanCfg::default()).unwrap();
        assert_eq!(records.len(), 9);
        assert!(records.iter().any(|r| r.kind == SampleKind::Invalid));
        assert!(records.iter().any(|r| r.kind != SampleKind::Invalid));
    }

    #[test]
    fn records_total_order_and_completeness() {
        let records =
            scan_directions(&separable_f(), &coord_grid(3, 0.02), &[1.9, 1.5], &ScanCfg::default())
                .unwrap();
        assert_eq!(records.len(), 18);
        let mut expected = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for level in [1.9, 1.5] {
                    expected.push((i, j, level));
                }
            }
        }
        let got: Vec<(usize, usize, f64)> =
            records.iter().map(|r| (r.i, r.j, r.level)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn zone_map_single_zone_when_uniform() {
        let records =
            scan_directions(&separable_f(), &coord_grid(3, 0.02), &[1.9], &ScanCfg::default())
                .unwrap();
        let map = build_zone_map(&records, 1.9).unwrap();
        assert_eq!(map.legend.len(), 1);
        assert_eq!(map.legend[0], ZoneLegend::AllCompact);
        assert!(map.boundary.iter().all(|&b| !b));
    }

    #[test]
    fn zone_map_two_halves() {
        let mut records =
            scan_directions(&separable_f(), &coord_grid(3, 0.02), &[1.9], &ScanCfg::default())
                .unwrap();
        for r in records.iter_mut().filter(|r| r.i >= 2) {
            r.kind = SampleKind::Open;
            r.normal = Some(IntegerVector(vec![1, 0, 0, 0]));
        }
        let map = build_zone_map(&records, 1.9).unwrap();
        assert_eq!(map.legend.len(), 2);
        // Boundary flagged along the dividing rows.
        let res = map.resolution;
        assert!(map.boundary[1 * res] && map.boundary[2 * res]);
    }

    #[test]
    fn zone_map_rejects_incomplete_grid() {
        let records =
            scan_directions(&separable_f(), &coord_grid(3, 0.02), &[1.9], &ScanCfg::default())
                .unwrap();
        let partial = &records[..7];
        assert!(matches!(
            build_zone_map(partial, 1.9),
            Err(Error::IncompleteGrid { .. })
        ));
    }

    #[test]
    fn level_scan_flags_saddle_level() {
        let plane = build_plane(
            &[
                LinearForm::rational(vec![0, 0, 1, 0]),
                LinearForm::rational(vec![0, 0, 0, 1]),
            ],
            &[0.0, 0.0],
        )
        .unwrap();
        let range = LevelRange { min: -1.5, max: 1.5, count: 5 };
        let scan = scan_levels(&separable_f(), &plane, range, &ScanCfg::default()).unwrap();
        assert!(!scan.degenerate);
        // Critical values of cos + cos within the window: -2, 0, 2.
        assert!(scan.critical_values.iter().any(|v| v.abs() < 1e-8));
        let at_zero = scan.entries.iter().find(|e| e.level.abs() < 1e-12).unwrap();
        assert!(at_zero.near_singular);
        for e in scan.entries.iter().filter(|e| !e.near_singular && !e.empty) {
            let report = e.report.as_ref().unwrap();
            assert!(report.consistent, "level {} inconsistent", e.level);
        }
    }

    #[test]
    fn determinism_across_worker_counts() {
        let grid = coord_grid(3, 0.02);
        let mut cfg1 = ScanCfg::default();
        cfg1.workers = 1;
        let mut cfg8 = ScanCfg::default();
        cfg8.workers = 8;
        let r1 = scan_directions(&separable_f(), &grid, &[1.9, 1.5], &cfg1).unwrap();
        let r8 = scan_directions(&separable_f(), &grid, &[1.9, 1.5], &cfg8).unwrap();
        let s1 = serde_json::to_string(&r1).unwrap();
        let s8 = serde_json::to_string(&r8).unwrap();
        assert_eq!(s1, s8);
    }
}
