//! JSON scenario files.

use std::path::Path;

use pseudolat_core::geometry::revolution_period;
use pseudolat_core::ranging::samples_per_revolution;
use pseudolat_core::waveform::{EnsembleParams, WaveformConfig};
use pseudolat_core::{NoiseModel, Obstacle, Position3, RelocationPolicy, SolveOptions, TrajectorySpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const CONFIG_VERSION: u32 = 1;

/// Reads and parses a JSON config, reporting the offending field path.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::config(path.display().to_string(), e))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        SimError::config(field, e.into_inner())
    })
}

fn check_version(version: u32) -> Result<()> {
    if version != CONFIG_VERSION {
        return Err(SimError::config(
            "version",
            format!("unsupported version {version}, expected {CONFIG_VERSION}"),
        ));
    }
    Ok(())
}

fn field<T>(name: &str, r: pseudolat_core::Result<T>) -> Result<T> {
    r.map_err(|e| SimError::config(name, e))
}

/// Fixed-width histogram bins over `[0, max_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramSpec {
    pub bin_width_m: f64,
    pub max_m: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            bin_width_m: 0.5,
            max_m: 100.0,
        }
    }
}

impl HistogramSpec {
    fn validate(&self) -> Result<()> {
        if !(self.bin_width_m > 0.0 && self.max_m > 0.0 && self.max_m.is_finite()) {
            return Err(SimError::config("histogram", "bin_width_m and max_m must be > 0"));
        }
        if self.max_m / self.bin_width_m > 1e6 {
            return Err(SimError::config("histogram", "more than 10^6 bins"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Static { position: Position3 },
    Linear { start: Position3, velocity: Position3 },
}

impl TargetSpec {
    pub fn position_at(&self, t: f64) -> Position3 {
        match *self {
            TargetSpec::Static { position } => position,
            TargetSpec::Linear { start, velocity } => start + velocity * t,
        }
    }
}

/// Scattered paths added to each waveform-backed reading.
///
/// Blocked links carry at least one scattered path and no direct one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterSpec {
    pub paths_min: usize,
    pub paths_max: usize,
    pub excess_mean_m: f64,
    pub snr_db: Option<f64>,
}

impl Default for ScatterSpec {
    fn default() -> Self {
        Self {
            paths_min: 0,
            paths_max: 2,
            excess_mean_m: 20.0,
            snr_db: Some(10.0),
        }
    }
}

impl ScatterSpec {
    pub(crate) fn ensemble(&self, speed_mps: f64, blocked: bool) -> EnsembleParams {
        EnsembleParams {
            speed_mps,
            paths_min: if blocked { self.paths_min.max(1) } else { self.paths_min },
            paths_max: if blocked { self.paths_max.max(1) } else { self.paths_max },
            excess_mean_m: self.excess_mean_m,
            los: false,
            snr_db: self.snr_db,
            ..EnsembleParams::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementBackend {
    /// Affine Gaussian noise plus exponential bias on blocked links.
    Statistical { noise: NoiseModel },
    /// Every reading runs a full pilot/channel/estimator chain.
    Waveform {
        waveform: WaveformConfig,
        #[serde(default)]
        scatter: ScatterSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub trajectory: TrajectorySpec,
    pub dt_s: f64,
    pub target: TargetSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub measurement: MeasurementBackend,
    #[serde(default)]
    pub solver: SolveOptions,
    pub n_revolutions: usize,
    #[serde(default)]
    pub relocation: Option<RelocationPolicy>,
    pub runs: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub histogram: HistogramSpec,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        field("trajectory", self.trajectory.validate())?;
        field("trajectory", revolution_period(&self.trajectory))?;
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(SimError::config("dt_s", "must be a positive number"));
        }
        let per_rev = field("dt_s", samples_per_revolution(&self.trajectory, self.dt_s))?;
        if per_rev < 3 {
            return Err(SimError::config("dt_s", "fewer than 3 samples per revolution"));
        }
        let target_ok = match self.target {
            TargetSpec::Static { position } => position.is_finite(),
            TargetSpec::Linear { start, velocity } => start.is_finite() && velocity.is_finite(),
        };
        if !target_ok {
            return Err(SimError::config("target", "coordinates must be finite"));
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            field(&format!("obstacles[{i}]"), ob.validate())?;
        }
        match &self.measurement {
            MeasurementBackend::Statistical { noise } => field("measurement.noise", noise.validate())?,
            MeasurementBackend::Waveform { waveform, scatter } => {
                field("measurement.waveform", waveform.validate())?;
                field("measurement.scatter", scatter.ensemble(0.0, true).validate())?;
            }
        }
        field("solver", self.solver.validate())?;
        if self.n_revolutions == 0 {
            return Err(SimError::config("n_revolutions", "must be >= 1"));
        }
        if let Some(policy) = &self.relocation {
            field("relocation", policy.validate())?;
        }
        if self.runs == 0 {
            return Err(SimError::config("runs", "must be >= 1"));
        }
        self.histogram.validate()
    }
}

/// One subcarrier spacing and the symbol count used with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerology {
    pub subcarrier_spacing_hz: f64,
    pub n_symbols: usize,
}

fn default_numerologies() -> Vec<Numerology> {
    // Same frame duration at both spacings.
    vec![
        Numerology {
            subcarrier_spacing_hz: 30e3,
            n_symbols: 32,
        },
        Numerology {
            subcarrier_spacing_hz: 120e3,
            n_symbols: 128,
        },
    ]
}

/// Paired OFDM/OTFS ranging trials over a random channel ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformStudyConfig {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    /// Shared numerology; `scheme`, `subcarrier_spacing_hz` and
    /// `n_symbols` are taken from `numerologies`.
    #[serde(default)]
    pub waveform: WaveformConfig,
    #[serde(default = "default_numerologies")]
    pub numerologies: Vec<Numerology>,
    #[serde(default)]
    pub ensemble: EnsembleParams,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub histogram: HistogramSpec,
}

impl WaveformStudyConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        field("waveform", self.waveform.validate())?;
        if self.numerologies.is_empty() {
            return Err(SimError::config("numerologies", "at least one entry required"));
        }
        for (i, n) in self.numerologies.iter().enumerate() {
            field(&format!("numerologies[{i}]"), self.numerology(n).validate())?;
        }
        field("ensemble", self.ensemble.validate())?;
        if self.trials == 0 {
            return Err(SimError::config("trials", "must be >= 1"));
        }
        self.histogram.validate()
    }

    pub fn numerology(&self, n: &Numerology) -> WaveformConfig {
        WaveformConfig {
            subcarrier_spacing_hz: n.subcarrier_spacing_hz,
            n_symbols: n.n_symbols,
            ..self.waveform
        }
    }
}
