//! Positions, anchor trajectories and the mirror ambiguity of straight paths.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::math::{cos, sin, sqrt};
use crate::{Error, Result};

/// Cartesian position in meters. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const ORIGIN: Position3 = Position3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Same point with the vertical coordinate replaced.
    pub fn with_z(self, z: f64) -> Self {
        Self { z, ..self }
    }

    /// Total order used to break ties deterministically.
    pub fn lexicographic_cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.z.total_cmp(&other.z))
    }
}

impl From<[f64; 3]> for Position3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Position3> for [f64; 3] {
    fn from(p: Position3) -> Self {
        p.to_array()
    }
}

impl Add for Position3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Position3 {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Position3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Position3 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Position3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Position3, b: Position3) -> f64 {
    (a - b).norm()
}

/// Level anchor path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Circle around `center`; `center.z` is the flight altitude.
    Circular {
        center: Position3,
        radius: f64,
        angular_speed: f64,
        #[serde(default)]
        phase0: f64,
    },
    /// Constant-velocity straight line through `start` at `t = 0`.
    Linear { start: Position3, velocity: Position3 },
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TrajectorySpec::Circular {
                center,
                radius,
                angular_speed,
                phase0,
            } => {
                if !center.is_finite() || !phase0.is_finite() {
                    return Err(Error::invalid("circular trajectory has non-finite center or phase"));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid("circular trajectory radius must be > 0"));
                }
                if !(angular_speed > 0.0 && angular_speed.is_finite()) {
                    return Err(Error::invalid("circular trajectory angular speed must be > 0"));
                }
                if center.z < 0.0 {
                    return Err(Error::invalid("trajectory altitude must be >= 0"));
                }
            }
            TrajectorySpec::Linear { start, velocity } => {
                if !start.is_finite() || !velocity.is_finite() {
                    return Err(Error::invalid("linear trajectory has non-finite start or velocity"));
                }
                if !(velocity.norm() > 0.0) {
                    return Err(Error::invalid("linear trajectory velocity must be nonzero"));
                }
                if velocity.z != 0.0 {
                    return Err(Error::invalid("linear trajectory must be level (velocity.z = 0)"));
                }
                if start.z < 0.0 {
                    return Err(Error::invalid("trajectory altitude must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Anchor position at time `t`.
    pub fn position_at(&self, t: f64) -> Position3 {
        match *self {
            TrajectorySpec::Circular {
                center,
                radius,
                angular_speed,
                phase0,
            } => {
                let angle = phase0 + angular_speed * t;
                center + Position3::new(radius * cos(angle), radius * sin(angle), 0.0)
            }
            TrajectorySpec::Linear { start, velocity } => start + velocity * t,
        }
    }

    /// Anchor velocity at time `t`.
    pub fn velocity_at(&self, t: f64) -> Position3 {
        match *self {
            TrajectorySpec::Circular {
                radius,
                angular_speed,
                phase0,
                ..
            } => {
                let angle = phase0 + angular_speed * t;
                let v = radius * angular_speed;
                Position3::new(-v * sin(angle), v * cos(angle), 0.0)
            }
            TrajectorySpec::Linear { velocity, .. } => velocity,
        }
    }

    pub fn altitude(&self) -> f64 {
        match *self {
            TrajectorySpec::Circular { center, .. } => center.z,
            TrajectorySpec::Linear { start, .. } => start.z,
        }
    }
}

/// Time-stamped positions on a path. Times are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSeries {
    t: Vec<f64>,
    p: Vec<Position3>,
}

impl WaypointSeries {
    pub fn new(t: Vec<f64>, p: Vec<Position3>) -> Result<Self> {
        if t.is_empty() || t.len() != p.len() {
            return Err(Error::invalid("waypoint series needs matching, nonempty time and position lists"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("waypoint times must be strictly increasing"));
        }
        if t.iter().any(|v| !v.is_finite()) || p.iter().any(|q| !q.is_finite()) {
            return Err(Error::invalid("waypoint series contains non-finite values"));
        }
        Ok(Self { t, p })
    }

    /// Static target: the same position at every time in `t`.
    pub fn stationary(t: Vec<f64>, position: Position3) -> Result<Self> {
        let p = alloc::vec![position; t.len()];
        Self::new(t, p)
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn positions(&self) -> &[Position3] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Position3)> + '_ {
        self.t.iter().copied().zip(self.p.iter().copied())
    }

    pub fn last(&self) -> (f64, Position3) {
        let i = self.t.len() - 1;
        (self.t[i], self.p[i])
    }
}

/// Samples `spec` at `t_k = t0 + k * dt` for `k = 0..n`.
pub fn sample_trajectory(spec: &TrajectorySpec, t0: f64, dt: f64, n: usize) -> Result<WaypointSeries> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if !t0.is_finite() {
        return Err(Error::invalid("t0 must be finite"));
    }
    spec.validate()?;
    let t: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    let p = t.iter().map(|&tk| spec.position_at(tk)).collect();
    WaypointSeries::new(t, p)
}

/// Duration of one full circle.
pub fn revolution_period(spec: &TrajectorySpec) -> Result<f64> {
    match *spec {
        TrajectorySpec::Circular { angular_speed, .. } => {
            if !(angular_speed > 0.0) {
                return Err(Error::invalid("angular speed must be > 0"));
            }
            Ok(TAU / angular_speed)
        }
        TrajectorySpec::Linear { .. } => Err(Error::unsupported("linear trajectories have no revolution period")),
    }
}

const UNIT_TOLERANCE: f64 = 1e-9;

/// Reflects `target` across the vertical plane that contains the line
/// `line_point + s * line_dir`.
///
/// Every point of the line is equidistant from `target` and the returned
/// phantom, so ranges taken along the line cannot tell them apart.
pub fn mirror_point(line_point: Position3, line_dir: Position3, target: Position3) -> Result<Position3> {
    if (line_dir.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::invalid("line direction must be a unit vector"));
    }
    if line_dir.z.abs() > UNIT_TOLERANCE {
        return Err(Error::invalid("line direction must be horizontal"));
    }
    // In-plane normal of the vertical plane through the line.
    let normal = Position3::new(-line_dir.y, line_dir.x, 0.0);
    let offset = (target - line_point).dot(normal);
    Ok(target - normal * (2.0 * offset))
}
