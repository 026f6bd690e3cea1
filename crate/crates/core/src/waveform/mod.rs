//! Waveform-level time-of-arrival estimation with OFDM and OTFS pilots.
//!
//! Both schemes share one numerology: `N` subcarriers spaced `Δf` apart,
//! `M` symbols per frame, a cyclic prefix per symbol, and a sample rate of
//! `N·Δf·oversample`. They differ in the pilot and in how the receiver
//! integrates the frame:
//!
//! - OFDM sends a known QPSK grid and assumes the channel is constant over
//!   the frame. Per-symbol channel estimates are summed (or their delay
//!   profiles power-averaged) before the earliest-peak search.
//! - OTFS sends a single delay-Doppler impulse and correlates the received
//!   grid over every Doppler hypothesis, so paths that rotate at different
//!   rates stay coherent in their own Doppler bin.
//!
//! Distances follow from `c · toa`.

mod channel;
mod engine;
mod estimate;
mod grid;
mod pilot;
mod trial;

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

pub use channel::apply_channel;
pub use engine::WaveformEngine;
pub use estimate::{estimate_toa, estimate_toa_gated};
pub use grid::{isfft, sfft, Grid};
pub use pilot::{make_pilot, Frame};
pub use trial::{ranging_error_trial, EnsembleParams, ExcessPath, TrialGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ofdm,
    Otfs,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ofdm => "ofdm",
            Scheme::Otfs => "otfs",
        }
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the OFDM receiver combines its per-symbol channel estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OfdmCombining {
    /// Sum the estimates, i.e. assume a time-invariant channel.
    #[default]
    Coherent,
    /// Average per-symbol delay-profile power.
    NonCoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    pub scheme: Scheme,
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub subcarrier_spacing_hz: f64,
    pub carrier_freq_hz: f64,
    pub cp_fraction: f64,
    pub oversample: usize,
    /// First-arrival threshold below the global peak, in dB of power.
    pub threshold_db: f64,
    pub ofdm_combining: OfdmCombining,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Otfs,
            n_subcarriers: 256,
            n_symbols: 32,
            subcarrier_spacing_hz: 30e3,
            carrier_freq_hz: 28e9,
            cp_fraction: 1.0 / 16.0,
            oversample: 1,
            threshold_db: 6.0,
            ofdm_combining: OfdmCombining::Coherent,
        }
    }
}

impl WaveformConfig {
    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn with_spacing(self, subcarrier_spacing_hz: f64) -> Self {
        Self {
            subcarrier_spacing_hz,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 2 || !self.n_subcarriers.is_power_of_two() {
            return Err(Error::invalid("n_subcarriers must be a power of two >= 2"));
        }
        if self.n_symbols == 0 {
            return Err(Error::invalid("n_symbols must be >= 1"));
        }
        if !(self.subcarrier_spacing_hz > 0.0 && self.subcarrier_spacing_hz.is_finite()) {
            return Err(Error::invalid("subcarrier spacing must be > 0"));
        }
        if !(self.carrier_freq_hz > 0.0 && self.carrier_freq_hz.is_finite()) {
            return Err(Error::invalid("carrier frequency must be > 0"));
        }
        if !(0.0..1.0).contains(&self.cp_fraction) {
            return Err(Error::invalid("cp_fraction must be in [0, 1)"));
        }
        if self.oversample == 0 {
            return Err(Error::invalid("oversample must be >= 1"));
        }
        if !(self.threshold_db > 0.0 && self.threshold_db.is_finite()) {
            return Err(Error::invalid("threshold_db must be > 0"));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing_hz * self.oversample as f64
    }

    pub fn fft_len(&self) -> usize {
        self.n_subcarriers * self.oversample
    }

    pub fn cp_len(&self) -> usize {
        (self.cp_fraction * self.fft_len() as f64).round() as usize
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_len() + self.cp_len()
    }

    pub fn frame_len(&self) -> usize {
        self.symbol_len() * self.n_symbols
    }

    /// Frame duration in seconds.
    pub fn frame_duration(&self) -> f64 {
        self.frame_len() as f64 / self.sample_rate()
    }

    /// Doppler shift for a closing speed `v` (m/s).
    pub fn doppler_for_speed(&self, v: f64) -> f64 {
        self.carrier_freq_hz * v / SPEED_OF_LIGHT
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub delay: f64,
    pub doppler: f64,
    pub gain: Complex64,
}

/// Multipath description with the receiver SNR (`None` for noiseless).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub snr_db: Option<f64>,
}

impl PathSet {
    pub fn noiseless(paths: Vec<Path>) -> Self {
        Self { paths, snr_db: None }
    }

    pub fn single(delay: f64) -> Self {
        Self::noiseless(vec![Path {
            delay,
            doppler: 0.0,
            gain: Complex64::new(1.0, 0.0),
        }])
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::invalid("path set is empty"));
        }
        if !self.paths.iter().any(|p| p.gain.norm() > 0.0) {
            return Err(Error::invalid("every path has zero gain"));
        }
        for p in &self.paths {
            if !(p.delay >= 0.0 && p.delay.is_finite()) {
                return Err(Error::invalid("path delays must be finite and >= 0"));
            }
            if !p.doppler.is_finite() || !p.gain.re.is_finite() || !p.gain.im.is_finite() {
                return Err(Error::invalid("path doppler and gain must be finite"));
            }
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::invalid("snr_db is NaN"));
            }
        }
        Ok(())
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToaEstimate {
    /// Seconds since frame start.
    pub toa: f64,
    /// Power of the selected peak over the mean profile power, dB.
    pub peak_metric: f64,
    pub scheme: Scheme,
}

/// `c · toa`.
pub fn toa_to_distance(est: &ToaEstimate) -> f64 {
    SPEED_OF_LIGHT * est.toa
}
