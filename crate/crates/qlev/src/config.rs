//! Run configuration: JSON ingestion for the CLI and fixture loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierCfg;
use crate::error::{Error, Result};
use crate::lattice::{build_plane, LinearForm, PlaneSpec};
use crate::qpfunction::{Harmonic, TrigPolynomial};
use crate::render::RenderSpec;
use crate::scanner::DirectionGrid;
use crate::tracer::TraceParams;

/// Plane given by raw form coefficients and offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneConfig {
    pub forms: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl PlaneConfig {
    pub fn build(&self) -> Result<PlaneSpec> {
        let forms: Vec<LinearForm> =
            self.forms.iter().map(|c| LinearForm::new(c.clone())).collect();
        build_plane(&forms, &self.offsets)
    }
}

fn default_window() -> f64 {
    1.0
}
fn default_grid_step() -> f64 {
    0.05
}
fn default_workers() -> usize {
    1
}
fn default_decimation() -> usize {
    10
}

/// Top-level run configuration, shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path to the function fixture JSON.
    pub function: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<PlaneConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<DirectionGrid>,
    #[serde(default)]
    pub levels: Vec<f64>,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub tracer: TraceParams,
    #[serde(default)]
    pub classifier: ClassifierCfg,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Every K-th trajectory point is serialized.
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    /// Seed for the offset jitter; absent means no jitter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub render: RenderSpec,
    /// Input for the render subcommand: a trajectories or zone-map JSON file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render_input: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) {
            return Err(Error::Config(format!("window must be positive, got {}", self.window)));
        }
        if !(self.grid_step > 0.0 && self.grid_step < self.window) {
            return Err(Error::Config(format!(
                "grid_step must satisfy 0 < grid_step < window, got {}",
                self.grid_step
            )));
        }
        if self.decimation == 0 {
            return Err(Error::Config("decimation must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_function(&self) -> Result<TrigPolynomial> {
        load_fixture(&self.function)
    }
}

#[derive(Debug, Deserialize)]
struct FixtureFile {
    m: usize,
    harmonics: Vec<Harmonic>,
}

/// Load a function fixture: {"m": 4, "harmonics": [{"k": [...], "a": .., "phi": ..}]}.
pub fn load_fixture(path: &Path) -> Result<TrigPolynomial> {
    let text = std::fs::read_to_string(path)?;
    let raw: FixtureFile =
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    TrigPolynomial::new(raw.m, raw.harmonics)
}
