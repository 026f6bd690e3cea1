//! Closed-loop runs: fly a revolution, measure, solve, relocate.

use std::time::{Duration, Instant};

use pseudolat_core::geometry::revolution_period;
use pseudolat_core::localization::pseudo_multilaterate_static;
use pseudolat_core::ranging::{los_blocked, sample_range, samples_per_revolution};
use pseudolat_core::relocation::{predict_target, relocate};
use pseudolat_core::rng::{self, SimRng};
use pseudolat_core::waveform::{Complex64, ExcessPath, TrialGeometry, WaveformEngine};
use pseudolat_core::{
    distance, Error as CoreError, MeasurementMatrix, Position3, RangeMeasurement, TrajectorySpec, WaypointSeries,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MeasurementBackend, ScenarioConfig};
use crate::error::Result;
use crate::stats::{self, Histogram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevolutionResult {
    pub revolution: usize,
    pub center: Position3,
    pub radius: f64,
    /// True target position at the revolution's mid time.
    pub truth: Position3,
    pub estimate: Position3,
    pub error_m: f64,
    pub residual: f64,
    pub converged: bool,
    pub n_alternates: usize,
    /// Readings lost to waveform detection failures.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub revolutions: Vec<RevolutionResult>,
}

impl RunResult {
    pub fn last(&self) -> &RevolutionResult {
        self.revolutions.last().expect("at least one revolution")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub median_m: f64,
    pub mean_m: f64,
    pub rmse_m: f64,
    pub p95_m: f64,
    /// Fraction of runs whose final solve met the gradient tolerance.
    pub convergence_rate: f64,
    /// Median over runs of each revolution's error.
    pub per_revolution_median_m: Vec<f64>,
    pub histogram: Histogram,
}

impl Summary {
    pub fn from_runs(runs: &[RunResult], cfg: &ScenarioConfig) -> Self {
        let finals: Vec<f64> = runs.iter().map(|r| r.last().error_m).collect();
        let converged = runs.iter().filter(|r| r.last().converged).count();
        let n_rev = runs.iter().map(|r| r.revolutions.len()).min().unwrap_or(0);
        let per_revolution_median_m = (0..n_rev)
            .map(|k| stats::median(&runs.iter().map(|r| r.revolutions[k].error_m).collect::<Vec<_>>()))
            .collect();
        Self {
            runs: runs.len(),
            median_m: stats::median(&finals),
            mean_m: stats::mean(&finals),
            rmse_m: stats::rmse(&finals),
            p95_m: stats::percentile(&finals, 0.95),
            convergence_rate: converged as f64 / runs.len() as f64,
            per_revolution_median_m,
            histogram: Histogram::new(&finals, &cfg.histogram),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub runs: Vec<RunResult>,
    pub summary: Summary,
    /// Wall-clock time; not serialized so that outputs stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl MetricsReport {
    pub fn final_errors(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.last().error_m).collect()
    }
}

/// Seed of run `index`.
pub fn run_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

enum Ranger {
    Statistical(pseudolat_core::NoiseModel),
    Waveform(WaveformEngine, crate::config::ScatterSpec),
}

impl Ranger {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(match cfg.measurement {
            MeasurementBackend::Statistical { noise } => Ranger::Statistical(noise),
            MeasurementBackend::Waveform { waveform, scatter } => {
                Ranger::Waveform(WaveformEngine::new(waveform)?, scatter)
            }
        })
    }

    /// One reading; `None` when the receiver finds no first arrival.
    fn measure(
        &self,
        anchor: Position3,
        anchor_velocity: Position3,
        target: Position3,
        blocked: bool,
        rng: &mut SimRng,
    ) -> Result<Option<f64>> {
        let d = distance(anchor, target);
        match self {
            Ranger::Statistical(noise) => Ok(Some(sample_range(d, !blocked, noise, rng)?)),
            Ranger::Waveform(engine, scatter) => {
                let cfg = engine.config();
                let speed = anchor_velocity.norm();
                let mut paths = Vec::new();
                if !blocked {
                    let closing = if d > 0.0 { -anchor_velocity.dot(anchor - target) / d } else { 0.0 };
                    paths.push(ExcessPath {
                        excess_m: 0.0,
                        doppler_hz: cfg.doppler_for_speed(closing),
                        gain: Complex64::new(1.0, 0.0),
                    });
                }
                paths.extend(scatter.ensemble(speed, blocked).scatter(cfg, rng));
                let geometry = TrialGeometry {
                    d_true: d,
                    paths,
                    snr_db: scatter.snr_db,
                    gate_m: (anchor.z - target.z).abs().min(d),
                };
                match engine.range_estimate(&geometry, rng) {
                    Ok(r) => Ok(Some(r)),
                    Err(CoreError::DetectionFailure(_)) => Ok(None),
                    Err(e) => Err(e.into()),
                }
            }
        }
    }
}

/// Everything one run produced.
pub struct RunTrace {
    pub result: RunResult,
    pub matrices: Vec<MeasurementMatrix>,
}

fn circle_parts(spec: &TrajectorySpec) -> (Position3, f64) {
    match *spec {
        TrajectorySpec::Circular { center, radius, .. } => (center, radius),
        TrajectorySpec::Linear { start, .. } => (start, 0.0),
    }
}

fn run_once(cfg: &ScenarioConfig, ranger: &Ranger, index: usize) -> Result<RunTrace> {
    let seed = run_seed(cfg.base_seed, index);
    let mut rng = rng::seeded(seed);
    let mut spec = cfg.trajectory;
    let mut t0 = 0.0;
    let mut est_times = Vec::new();
    let mut est_points = Vec::new();
    let mut revolutions = Vec::with_capacity(cfg.n_revolutions);
    let mut matrices = Vec::with_capacity(cfg.n_revolutions);
    for revolution in 0..cfg.n_revolutions {
        let per_rev = samples_per_revolution(&spec, cfg.dt_s)?;
        let mut meas = Vec::with_capacity(per_rev);
        let mut dropped = 0;
        for k in 0..per_rev {
            let local = k as f64 * cfg.dt_s;
            let t = t0 + local;
            let anchor = spec.position_at(local);
            let target = cfg.target.position_at(t);
            let blocked = los_blocked(anchor, target, &cfg.obstacles)?;
            match ranger.measure(anchor, spec.velocity_at(local), target, blocked, &mut rng)? {
                Some(d_meas) => meas.push(RangeMeasurement {
                    t,
                    anchor,
                    d_meas,
                    los: !blocked,
                }),
                None => dropped += 1,
            }
        }
        let mid = t0 + 0.5 * (per_rev - 1) as f64 * cfg.dt_s;
        let truth = cfg.target.position_at(mid);
        let sol = pseudo_multilaterate_static(&meas, &cfg.solver)?;
        let (center, radius) = circle_parts(&spec);
        revolutions.push(RevolutionResult {
            revolution,
            center,
            radius,
            truth,
            estimate: sol.p_hat,
            error_m: distance(sol.p_hat, truth),
            residual: sol.residual,
            converged: sol.converged,
            n_alternates: sol.alternates.len(),
            dropped,
        });
        if dropped == 0 {
            matrices.push(MeasurementMatrix {
                revolution,
                rows: meas.iter().map(|m| [m.anchor.x, m.anchor.y, m.anchor.z, m.d_meas]).collect(),
                los: meas.iter().map(|m| m.los).collect(),
                label: truth,
            });
        }
        est_times.push(mid);
        est_points.push(sol.p_hat);
        let period = revolution_period(&spec)?;
        let span = per_rev as f64 * cfg.dt_s;
        if let Some(policy) = &cfg.relocation {
            // Aim at where the target will be mid-way through the next circle.
            let history = WaypointSeries::new(est_times.clone(), est_points.clone())?;
            let predicted = predict_target(&history, period)?;
            spec = relocate(&spec, spec.position_at(span), predicted, policy)?;
        }
        t0 += span;
    }
    Ok(RunTrace {
        result: RunResult { run: index, seed, revolutions },
        matrices,
    })
}

/// Runs every seed of `cfg` and returns the per-run traces in run order.
pub fn run_traces(cfg: &ScenarioConfig) -> Result<Vec<RunTrace>> {
    cfg.validate()?;
    let ranger = Ranger::new(cfg)?;
    (0..cfg.runs).into_par_iter().map(|i| run_once(cfg, &ranger, i)).collect()
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsReport> {
    let start = Instant::now();
    let runs: Vec<RunResult> = run_traces(cfg)?.into_iter().map(|t| t.result).collect();
    Ok(MetricsReport {
        scenario: cfg.name.clone(),
        summary: Summary::from_runs(&runs, cfg),
        runs,
        runtime: start.elapsed(),
    })
}

/// Measurement matrices of every complete revolution of every run,
/// renumbered consecutively.
pub fn collect_dataset(cfg: &ScenarioConfig) -> Result<Vec<MeasurementMatrix>> {
    let mut out = Vec::new();
    for trace in run_traces(cfg)? {
        for mut m in trace.matrices {
            m.revolution = out.len();
            out.push(m);
        }
    }
    Ok(out)
}
