use num_complex::Complex64;
use rand::Rng;

use super::channel::PreparedSignal;
use super::estimate::estimate_with;
use super::pilot::{make_pilot, Frame};
use super::{PathSet, ToaEstimate, WaveformConfig};
use crate::Result;

/// Pilot, its padded spectrum, and the receiver reference for one
/// numerology, built once and reused across Monte-Carlo trials.
#[derive(Debug, Clone)]
pub struct WaveformEngine {
    cfg: WaveformConfig,
    pilot: Frame,
    prepared: PreparedSignal,
}

impl WaveformEngine {
    pub fn new(cfg: WaveformConfig) -> Result<Self> {
        let pilot = make_pilot(&cfg)?;
        let prepared = PreparedSignal::new(&pilot.samples, 2 * cfg.symbol_len());
        Ok(Self { cfg, pilot, prepared })
    }

    pub fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    pub fn pilot(&self) -> &Frame {
        &self.pilot
    }

    /// Sends the pilot through `paths`.
    pub fn propagate<R: Rng + ?Sized>(&self, paths: &PathSet, rng: &mut R) -> Result<Vec<Complex64>> {
        paths.validate()?;
        let fs = self.cfg.sample_rate();
        let needed = (paths.max_delay() * fs).ceil() as usize;
        if needed <= self.prepared.delay_capacity() {
            Ok(self.prepared.propagate(paths, fs, rng))
        } else {
            Ok(PreparedSignal::new(&self.pilot.samples, needed).propagate(paths, fs, rng))
        }
    }

    pub fn estimate(&self, received: &[Complex64], gate: usize) -> Result<ToaEstimate> {
        estimate_with(&self.cfg, &self.pilot.tf, received, gate)
    }
}
