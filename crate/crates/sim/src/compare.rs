//! Paired OFDM/OTFS ranging-error study.

use std::time::{Duration, Instant};

use pseudolat_core::rng;
use pseudolat_core::waveform::{Scheme, WaveformConfig, WaveformEngine};
use pseudolat_core::Error as CoreError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::WaveformStudyConfig;
use crate::error::Result;
use crate::stats::{self, Histogram};

pub const SCHEMES: [Scheme; 2] = [Scheme::Ofdm, Scheme::Otfs];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub scheme: Scheme,
    pub delta_f_hz: f64,
    pub error_m: f64,
}

/// A trial whose receiver found no first arrival; excluded from the
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub trial: usize,
    pub scheme: Scheme,
    pub delta_f_hz: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeStats {
    pub scheme: Scheme,
    pub delta_f_hz: f64,
    pub n_symbols: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean_m: f64,
    pub median_m: f64,
    pub variance_m2: f64,
    pub p95_m: f64,
    pub histogram: Histogram,
}

/// OTFS relative to OFDM at one spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingComparison {
    pub delta_f_hz: f64,
    pub mean_ratio: f64,
    /// `1 - mean_ratio`.
    pub mean_improvement: f64,
    pub median_ratio: f64,
    pub variance_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformComparison {
    pub name: String,
    pub trials: usize,
    pub base_seed: u64,
    pub stats: Vec<SchemeStats>,
    pub comparisons: Vec<SpacingComparison>,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
    #[serde(skip)]
    pub failures: Vec<FailureRow>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl WaveformComparison {
    pub fn stats_for(&self, scheme: Scheme, delta_f_hz: f64) -> Option<&SchemeStats> {
        self.stats.iter().find(|s| s.scheme == scheme && s.delta_f_hz == delta_f_hz)
    }
}

struct Arm {
    scheme: Scheme,
    cfg: WaveformConfig,
    engine: WaveformEngine,
}

/// Runs `cfg.trials` trials. Each trial draws one channel geometry and
/// feeds it to every (numerology, scheme) arm, so the arms are paired.
pub fn compare_waveforms(cfg: &WaveformStudyConfig) -> Result<WaveformComparison> {
    cfg.validate()?;
    let start = Instant::now();
    let mut arms = Vec::new();
    for n in &cfg.numerologies {
        for scheme in SCHEMES {
            let wcfg = cfg.numerology(n).with_scheme(scheme);
            arms.push(Arm {
                scheme,
                cfg: wcfg,
                engine: WaveformEngine::new(wcfg)?,
            });
        }
    }
    // Geometry is drawn on the coarsest sample grid, which every other
    // arm's grid refines when spacings are integer multiples.
    let draw_cfg = arms
        .iter()
        .map(|a| a.cfg)
        .min_by(|a, b| a.sample_rate().total_cmp(&b.sample_rate()))
        .expect("at least one arm");

    type Outcome = std::result::Result<f64, String>;
    let outcomes: Vec<Vec<Outcome>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<Outcome>> {
            let geometry = cfg.ensemble.draw(&draw_cfg, &mut rng::derived(cfg.base_seed, trial as u64));
            arms.iter()
                .enumerate()
                .map(|(a, arm)| {
                    let mut noise = rng::derived(rng::mix(cfg.base_seed, a as u64 + 1), trial as u64);
                    match arm.engine.ranging_error(&geometry, &mut noise) {
                        Ok(e) => Ok(Ok(e)),
                        Err(CoreError::DetectionFailure(reason)) => Ok(Err(reason)),
                        Err(e) => Err(e.into()),
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (trial, per_arm) in outcomes.iter().enumerate() {
        for (arm, outcome) in arms.iter().zip(per_arm) {
            let delta_f_hz = arm.cfg.subcarrier_spacing_hz;
            match outcome {
                Ok(error_m) => rows.push(TrialRow {
                    trial,
                    scheme: arm.scheme,
                    delta_f_hz,
                    error_m: *error_m,
                }),
                Err(reason) => failures.push(FailureRow {
                    trial,
                    scheme: arm.scheme,
                    delta_f_hz,
                    reason: reason.clone(),
                }),
            }
        }
    }

    let stats: Vec<SchemeStats> = arms
        .iter()
        .map(|arm| {
            let df = arm.cfg.subcarrier_spacing_hz;
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.scheme == arm.scheme && r.delta_f_hz == df)
                .map(|r| r.error_m)
                .collect();
            let n_failed = failures.iter().filter(|f| f.scheme == arm.scheme && f.delta_f_hz == df).count();
            let (mean_m, median_m, variance_m2, p95_m) = if errs.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            } else {
                (
                    stats::mean(&errs),
                    stats::median(&errs),
                    stats::variance(&errs),
                    stats::percentile(&errs, 0.95),
                )
            };
            SchemeStats {
                scheme: arm.scheme,
                delta_f_hz: df,
                n_symbols: arm.cfg.n_symbols,
                trials: errs.len(),
                failures: n_failed,
                mean_m,
                median_m,
                variance_m2,
                p95_m,
                histogram: Histogram::new(&errs, &cfg.histogram),
            }
        })
        .collect();

    let comparisons = stats
        .chunks_exact(2)
        .map(|pair| {
            let (ofdm, otfs) = (&pair[0], &pair[1]);
            let mean_ratio = otfs.mean_m / ofdm.mean_m;
            SpacingComparison {
                delta_f_hz: ofdm.delta_f_hz,
                mean_ratio,
                mean_improvement: 1.0 - mean_ratio,
                median_ratio: otfs.median_m / ofdm.median_m,
                variance_ratio: otfs.variance_m2 / ofdm.variance_m2,
            }
        })
        .collect();

    Ok(WaveformComparison {
        name: cfg.name.clone(),
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        stats,
        comparisons,
        rows,
        failures,
        runtime: start.elapsed(),
    })
}
