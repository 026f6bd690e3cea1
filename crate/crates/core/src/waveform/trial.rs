//! End-to-end single-link ranging trials and the random channel ensemble
//! used to compare the two schemes.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::engine::WaveformEngine;
use super::{Path, PathSet, WaveformConfig};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// A propagation path described by its excess length over the direct one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessPath {
    pub excess_m: f64,
    pub doppler_hz: f64,
    pub gain: Complex64,
}

/// One link realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialGeometry {
    /// Direct anchor-target distance.
    pub d_true: f64,
    pub paths: Vec<ExcessPath>,
    pub snr_db: Option<f64>,
    /// Distance below which no arrival is expected (e.g. the flight
    /// altitude for a ground target). The receive window opens there.
    pub gate_m: f64,
}

impl TrialGeometry {
    /// Receive-window offset in samples and the channel relative to it.
    pub fn path_set(&self, cfg: &WaveformConfig) -> Result<(usize, PathSet)> {
        if !(self.d_true >= 0.0 && self.gate_m >= 0.0 && self.gate_m <= self.d_true) {
            return Err(Error::invalid("need 0 <= gate_m <= d_true"));
        }
        let fs = cfg.sample_rate();
        let gate = (self.gate_m / SPEED_OF_LIGHT * fs).floor() as usize;
        let offset = gate as f64 / fs;
        let paths = self
            .paths
            .iter()
            .map(|p| {
                if p.excess_m < 0.0 {
                    return Err(Error::invalid("excess path length must be >= 0"));
                }
                Ok(Path {
                    delay: ((self.d_true + p.excess_m) / SPEED_OF_LIGHT - offset).max(0.0),
                    doppler: p.doppler_hz,
                    gain: p.gain,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            gate,
            PathSet {
                paths,
                snr_db: self.snr_db,
            },
        ))
    }
}

impl WaveformEngine {
    /// Pilot -> channel -> first-arrival estimate, as a distance `c·toa`.
    pub fn range_estimate<R: Rng + ?Sized>(&self, geometry: &TrialGeometry, rng: &mut R) -> Result<f64> {
        let (gate, paths) = geometry.path_set(self.config())?;
        // Path delays are already relative to the window start.
        let received = self.propagate(&paths, rng)?;
        let est = self.estimate(&received, 0)?;
        let toa = est.toa + gate as f64 / self.config().sample_rate();
        Ok(SPEED_OF_LIGHT * toa)
    }

    /// `|c·toa − d_true|` for one trial.
    pub fn ranging_error<R: Rng + ?Sized>(&self, geometry: &TrialGeometry, rng: &mut R) -> Result<f64> {
        Ok((self.range_estimate(geometry, rng)? - geometry.d_true).abs())
    }
}

pub fn ranging_error_trial<R: Rng + ?Sized>(
    cfg: &WaveformConfig,
    geometry: &TrialGeometry,
    rng: &mut R,
) -> Result<f64> {
    WaveformEngine::new(*cfg)?.ranging_error(geometry, rng)
}

/// Random air-to-ground links: anchor at `altitude_m` moving at
/// `speed_mps`, target on the ground at a uniform horizontal offset, and
/// `paths_min..=paths_max` scattered paths with exponential excess length,
/// Rayleigh gain and a Doppler shift from a uniform departure angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    pub altitude_m: f64,
    pub speed_mps: f64,
    pub horizontal_min_m: f64,
    pub horizontal_max_m: f64,
    pub paths_min: usize,
    pub paths_max: usize,
    pub excess_mean_m: f64,
    /// Adds a unit-gain direct path.
    pub los: bool,
    pub snr_db: Option<f64>,
    /// Rounds `d_true` to a whole number of samples.
    pub snap_to_samples: bool,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            altitude_m: 100.0,
            speed_mps: 10.0,
            horizontal_min_m: 0.0,
            horizontal_max_m: 100.0,
            paths_min: 3,
            paths_max: 6,
            excess_mean_m: 20.0,
            los: false,
            snr_db: Some(10.0),
            snap_to_samples: false,
        }
    }
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.altitude_m,
            self.speed_mps,
            self.horizontal_min_m,
            self.horizontal_max_m,
            self.excess_mean_m,
        ];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("ensemble lengths and speed must be finite and >= 0"));
        }
        if self.horizontal_min_m > self.horizontal_max_m {
            return Err(Error::invalid("horizontal_min_m > horizontal_max_m"));
        }
        if self.paths_min > self.paths_max {
            return Err(Error::invalid("paths_min > paths_max"));
        }
        if self.paths_max == 0 && !self.los {
            return Err(Error::invalid("ensemble has no paths"));
        }
        Ok(())
    }

    /// `paths_min..=paths_max` scattered paths only.
    pub fn scatter<R: Rng + ?Sized>(&self, cfg: &WaveformConfig, rng: &mut R) -> Vec<ExcessPath> {
        let fd = cfg.doppler_for_speed(self.speed_mps);
        let count = rng.random_range(self.paths_min..=self.paths_max);
        (0..count)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                let angle: f64 = TAU * rng.random::<f64>();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                ExcessPath {
                    excess_m: self.excess_mean_m * e,
                    doppler_hz: fd * angle.cos(),
                    gain: Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2,
                }
            })
            .collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, cfg: &WaveformConfig, rng: &mut R) -> TrialGeometry {
        let rho = self.horizontal_min_m + (self.horizontal_max_m - self.horizontal_min_m) * rng.random::<f64>();
        let mut d_true = self.altitude_m.hypot(rho);
        if self.snap_to_samples {
            let sample_m = SPEED_OF_LIGHT / cfg.sample_rate();
            d_true = (d_true / sample_m).round() * sample_m;
        }
        let mut paths = Vec::with_capacity(self.paths_max + 1);
        if self.los {
            let heading: f64 = TAU * rng.random::<f64>();
            // Closing speed along the line of sight, level flight.
            let radial = self.speed_mps * heading.cos() * rho / d_true.max(f64::MIN_POSITIVE);
            paths.push(ExcessPath {
                excess_m: 0.0,
                doppler_hz: cfg.doppler_for_speed(radial),
                gain: Complex64::new(1.0, 0.0),
            });
        }
        paths.extend(self.scatter(cfg, rng));
        TrialGeometry {
            d_true,
            paths,
            snr_db: self.snr_db,
            gate_m: self.altitude_m.min(d_true),
        }
    }
}
