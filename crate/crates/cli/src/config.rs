//! Pipeline configuration: a single JSON document that drives every
//! command and is echoed verbatim into every output for auditability.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use modal_sentinel::beam::{BeamSpec, DamageSpec, DEFAULT_FREQUENCY_SENSITIVITY};
use modal_sentinel::error::{Error, Result};
use modal_sentinel::features::{FeatureKind, MatchThresholds};
use modal_sentinel::snapshots::PixelRoi;

/// Default truncation rank for pixel-frame data.
pub const FRAME_RANK_DEFAULT: usize = 150;

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Run name; report rows are ordered by it.
    pub name: String,
    pub beam: BeamSpec,
    /// Damage sites; absent means the healthy state.
    pub damage: Option<DamageConfig>,
    pub simulation: SimulationConfig,
    pub identification: IdentificationConfig,
    pub scoring: ScoringConfig,
    /// Frame-ingestion settings; required by `ingest` only.
    pub frames: Option<FramesConfig>,
    pub io: IoConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            name: "run".into(),
            beam: BeamSpec::default(),
            damage: None,
            simulation: SimulationConfig::default(),
            identification: IdentificationConfig::default(),
            scoring: ScoringConfig::default(),
            frames: None,
            io: IoConfig::default(),
        }
    }
}

/// Damage sites plus the frequency-knockdown sensitivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageConfig {
    pub locations: Vec<f64>,
    pub severities: Vec<f64>,
    #[serde(default = "default_influence_width")]
    pub influence_width: f64,
    #[serde(default = "default_sensitivity")]
    pub frequency_sensitivity: f64,
}

fn default_influence_width() -> f64 {
    0.05
}

fn default_sensitivity() -> f64 {
    DEFAULT_FREQUENCY_SENSITIVITY
}

impl DamageConfig {
    pub fn to_spec(&self) -> DamageSpec {
        DamageSpec {
            locations: self.locations.clone(),
            severities: self.severities.clone(),
            influence_width: self.influence_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Spatial channels along the span.
    pub grid_points: usize,
    /// Total duration (s).
    pub duration: f64,
    /// Sample interval (s).
    pub dt: f64,
    /// Retained beam modes.
    pub mode_count: usize,
    /// Initial tip displacement of the static release shape (m).
    pub tip_displacement: f64,
    /// Gaussian measurement noise, standard deviation in metres.
    pub noise_std: f64,
    /// Noise seed.
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            grid_points: 41,
            duration: 2.7,
            dt: 1e-3,
            mode_count: 6,
            tip_displacement: 0.05,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn sample_count(&self) -> Result<usize> {
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(Error::validation(format!(
                "simulation duration must be positive, got {}",
                self.duration
            )));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::validation(format!(
                "simulation dt must be positive, got {}",
                self.dt
            )));
        }
        let count = (self.duration / self.dt).round() as usize;
        if count < 2 {
            return Err(Error::validation("duration/dt yields fewer than 2 samples"));
        }
        Ok(count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentificationConfig {
    /// Hankel embedding dimension; absent selects 2 for simulation/CSV
    /// sources and 1 for frames.
    pub embedding_dimension: Option<usize>,
    /// Truncation rank; absent selects 2 x mode_count for simulation/CSV
    /// sources and 150 for frames, clamped to the feasible maximum.
    pub rank: Option<usize>,
    pub train_fraction: f64,
    /// Modes retained for features and matching.
    pub dominant_modes: usize,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        IdentificationConfig {
            embedding_dimension: None,
            rank: None,
            train_fraction: 0.6,
            dominant_modes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    /// Baseline scaling constant C.
    pub scaling_constant: f64,
    /// Regularization epsilon; absent selects the trace-relative default.
    pub regularization: Option<f64>,
    pub matching: MatchThresholds,
    /// Feature kinds reported; the baseline always stores all four.
    pub feature_kinds: Vec<FeatureKind>,
    /// Directory holding the healthy baseline; absent means self-scoring
    /// against this run's own output directory.
    pub baseline_dir: Option<PathBuf>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            scaling_constant: 1.0,
            regularization: None,
            matching: MatchThresholds::default(),
            feature_kinds: FeatureKind::all().to_vec(),
            baseline_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesConfig {
    pub directory: PathBuf,
    pub fps: f64,
    pub roi: PixelRoi,
    #[serde(default)]
    pub mean_subtract: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Where artifacts are written; `--out` overrides it.
    pub output_dir: PathBuf,
    /// Explicit snapshot CSV to fit on instead of the run directory's.
    pub snapshot_csv: Option<PathBuf>,
    /// Metadata sidecar of `snapshot_csv`.
    pub snapshot_meta: Option<PathBuf>,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig {
            output_dir: PathBuf::from("out"),
            snapshot_csv: None,
            snapshot_meta: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        if let Some(d) = &self.damage {
            d.to_spec().validate(self.beam.length)?;
            if !d.frequency_sensitivity.is_finite() || d.frequency_sensitivity < 0.0 {
                return Err(Error::validation(
                    "damage frequency_sensitivity must be non-negative",
                ));
            }
        }
        if self.simulation.grid_points < 3 {
            return Err(Error::validation(format!(
                "grid_points must be at least 3, got {}",
                self.simulation.grid_points
            )));
        }
        if self.simulation.mode_count == 0 {
            return Err(Error::validation("mode_count must be at least 1"));
        }
        self.simulation.sample_count()?;
        if !self.simulation.tip_displacement.is_finite() {
            return Err(Error::validation("tip_displacement must be finite"));
        }
        if !self.simulation.noise_std.is_finite() || self.simulation.noise_std < 0.0 {
            return Err(Error::validation("noise_std must be non-negative"));
        }
        let ident = &self.identification;
        if !(0.0..1.0).contains(&ident.train_fraction) || ident.train_fraction <= 0.0 {
            return Err(Error::validation(format!(
                "train_fraction must lie in (0, 1), got {}",
                ident.train_fraction
            )));
        }
        if ident.dominant_modes == 0 {
            return Err(Error::validation("dominant_modes must be at least 1"));
        }
        if let Some(p) = ident.embedding_dimension {
            if p == 0 {
                return Err(Error::validation("embedding_dimension must be at least 1"));
            }
        }
        if let Some(r) = ident.rank {
            if r == 0 {
                return Err(Error::validation("rank must be at least 1"));
            }
        }
        let scoring = &self.scoring;
        if !scoring.scaling_constant.is_finite() || scoring.scaling_constant <= 0.0 {
            return Err(Error::validation("scaling_constant must be positive"));
        }
        if let Some(e) = scoring.regularization {
            if !e.is_finite() || e < 0.0 {
                return Err(Error::validation("regularization must be non-negative"));
            }
        }
        if scoring.feature_kinds.is_empty() {
            return Err(Error::validation("feature_kinds must not be empty"));
        }
        if let Some(f) = &self.frames {
            if !f.fps.is_finite() || f.fps <= 0.0 {
                return Err(Error::validation("frames fps must be positive"));
            }
        }
        Ok(())
    }

    /// Spatial grid of the simulated beam.
    pub fn simulation_grid(&self) -> Vec<f64> {
        let n = self.simulation.grid_points;
        (0..n)
            .map(|i| self.beam.length * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Worker-thread cap from MODAL_SENTINEL_THREADS, defaulting to the
/// machine's available parallelism.
pub fn thread_cap() -> Result<usize> {
    match std::env::var("MODAL_SENTINEL_THREADS") {
        Ok(raw) => {
            let n: usize = raw.trim().parse().map_err(|_| {
                Error::validation(format!(
                    "MODAL_SENTINEL_THREADS must be a positive integer, got `{raw}`"
                ))
            })?;
            if n == 0 {
                return Err(Error::validation(
                    "MODAL_SENTINEL_THREADS must be at least 1",
                ));
            }
            Ok(n)
        }
        Err(_) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}
