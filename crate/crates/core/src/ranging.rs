//! Statistical ranging: line-of-sight tests, distance-dependent noise, and
//! per-revolution measurement matrices.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{distance, revolution_period, Position3, TrajectorySpec, WaypointSeries};
use crate::math::{floor, round};
use crate::rng;
use crate::{Error, Result};

/// Axis-aligned box that blocks line of sight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub min: Position3,
    pub max: Position3,
}

impl Obstacle {
    pub fn new(min: Position3, max: Position3) -> Result<Self> {
        let o = Self { min, max };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.min.x < self.max.x
            && self.min.y < self.max.y
            && self.min.z < self.max.z;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("obstacle min corner must be strictly below max corner"))
        }
    }

    /// Closed-box slab test against the segment `a -> b`.
    fn intersects_segment(&self, a: Position3, b: Position3) -> bool {
        let d = b - a;
        let (mut t_enter, mut t_exit) = (0.0_f64, 1.0_f64);
        for ((o, dir), (lo, hi)) in a
            .to_array()
            .into_iter()
            .zip(d.to_array())
            .zip(self.min.to_array().into_iter().zip(self.max.to_array()))
        {
            if dir == 0.0 {
                if o < lo || o > hi {
                    return false;
                }
                continue;
            }
            let (mut t0, mut t1) = ((lo - o) / dir, (hi - o) / dir);
            if t0 > t1 {
                core::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return false;
            }
        }
        true
    }
}

/// Distance-dependent ranging noise.
///
/// The Gaussian part has standard deviation `sigma0 + eta * d`; blocked
/// links add an exponential excess-path bias with mean `nlos_bias_mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma0: f64,
    pub eta: f64,
    pub nlos_bias_mean: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            eta: 0.01,
            nlos_bias_mean: 5.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma0: 0.0,
            eta: 0.0,
            nlos_bias_mean: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let params = [self.sigma0, self.eta, self.nlos_bias_mean];
        if params.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::invalid("noise model parameters must be finite and >= 0"))
        }
    }

    /// Gaussian standard deviation at true distance `d`.
    pub fn sigma(&self, d: f64) -> f64 {
        self.sigma0 + self.eta * d
    }
}

/// One range reading taken at time `t` from `anchor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeMeasurement {
    pub t: f64,
    pub anchor: Position3,
    pub d_meas: f64,
    pub los: bool,
}

/// One revolution of measurements laid out as `S x 4` rows of
/// `[x, y, z, d]`, with the true target position as label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    pub revolution: usize,
    pub rows: Vec<[f64; 4]>,
    pub los: Vec<bool>,
    pub label: Position3,
}

impl MeasurementMatrix {
    pub fn samples(&self) -> usize {
        self.rows.len()
    }
}

/// True iff the segment `anchor -> target` touches any obstacle.
pub fn los_blocked(anchor: Position3, target: Position3, obstacles: &[Obstacle]) -> Result<bool> {
    if anchor == target {
        return Err(Error::invalid("anchor and target coincide"));
    }
    Ok(obstacles.iter().any(|o| o.intersects_segment(anchor, target)))
}

/// Draws one noisy range for a link of true length `d_true`.
///
/// Consumes exactly one normal draw, plus one exponential draw when the
/// link is blocked. Negative results clamp to zero.
pub fn sample_range<R: Rng + ?Sized>(d_true: f64, los: bool, model: &NoiseModel, rng: &mut R) -> Result<f64> {
    if !(d_true >= 0.0) || !d_true.is_finite() {
        return Err(Error::invalid("true distance must be finite and >= 0"));
    }
    let z: f64 = rng.sample(StandardNormal);
    let mut d = d_true + model.sigma(d_true) * z;
    if !los {
        let e: f64 = rng.sample(Exp1);
        d += model.nlos_bias_mean * e;
    }
    Ok(d.max(0.0))
}

/// One measurement per shared time step, with the RNG seeded from
/// `model.seed`.
pub fn collect_measurements(
    anchor_path: &WaypointSeries,
    target_path: &WaypointSeries,
    obstacles: &[Obstacle],
    model: &NoiseModel,
) -> Result<Vec<RangeMeasurement>> {
    let mut rng = rng::seeded(model.seed);
    collect_measurements_with(anchor_path, target_path, obstacles, model, &mut rng)
}

pub fn collect_measurements_with<R: Rng + ?Sized>(
    anchor_path: &WaypointSeries,
    target_path: &WaypointSeries,
    obstacles: &[Obstacle],
    model: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<RangeMeasurement>> {
    model.validate()?;
    if anchor_path.times() != target_path.times() {
        return Err(Error::invalid("anchor and target paths must share the time grid"));
    }
    anchor_path
        .iter()
        .zip(target_path.positions())
        .map(|((t, anchor), &target)| {
            let blocked = los_blocked(anchor, target, obstacles)?;
            let d_meas = sample_range(distance(anchor, target), !blocked, model, rng)?;
            Ok(RangeMeasurement {
                t,
                anchor,
                d_meas,
                los: !blocked,
            })
        })
        .collect()
}

/// Samples per revolution for a uniform grid with step `dt`.
pub fn samples_per_revolution(spec: &TrajectorySpec, dt: f64) -> Result<usize> {
    let period = revolution_period(spec)?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let ratio = period / dt;
    let nearest = round(ratio);
    let s = if (ratio - nearest).abs() < 1e-6 * ratio.max(1.0) {
        nearest
    } else {
        floor(ratio)
    };
    if s < 1.0 {
        return Err(Error::invalid("dt is longer than one revolution"));
    }
    Ok(s as usize)
}

/// Splits time-ordered measurements into complete revolutions of `spec`.
/// A trailing partial revolution is dropped.
pub fn build_measurement_matrix(
    measurements: &[RangeMeasurement],
    spec: &TrajectorySpec,
    label: Position3,
) -> Result<Vec<MeasurementMatrix>> {
    if matches!(spec, TrajectorySpec::Linear { .. }) {
        return Err(Error::unsupported("measurement matrices need a circular trajectory"));
    }
    if measurements.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::invalid("measurements must be strictly time-ordered"));
    }
    if measurements.len() < 2 {
        return Ok(Vec::new());
    }
    let dt = measurements[1].t - measurements[0].t;
    let per_rev = samples_per_revolution(spec, dt)?;
    Ok(measurements
        .chunks_exact(per_rev)
        .enumerate()
        .map(|(revolution, chunk)| MeasurementMatrix {
            revolution,
            rows: chunk
                .iter()
                .map(|m| [m.anchor.x, m.anchor.y, m.anchor.z, m.d_meas])
                .collect(),
            los: chunk.iter().map(|m| m.los).collect(),
            label,
        })
        .collect())
}
