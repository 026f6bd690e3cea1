//! Moves the circular anchor path toward the target after each revolution.

use serde::{Deserialize, Serialize};

use crate::geometry::{Position3, TrajectorySpec, WaypointSeries};
use crate::math::atan2;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelocationPolicy {
    pub min_radius: f64,
    pub shrink_factor: f64,
    pub max_center_step: f64,
    pub altitude: f64,
}

impl RelocationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_radius > 0.0 && self.min_radius.is_finite()) {
            return Err(Error::invalid("min_radius must be > 0"));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor <= 1.0) {
            return Err(Error::invalid("shrink_factor must be in (0, 1]"));
        }
        if !(self.max_center_step > 0.0 && self.max_center_step.is_finite()) {
            return Err(Error::invalid("max_center_step must be > 0"));
        }
        if !(self.altitude >= 0.0 && self.altitude.is_finite()) {
            return Err(Error::invalid("altitude must be >= 0"));
        }
        Ok(())
    }
}

/// Constant-velocity extrapolation from the last two estimates.
pub fn predict_target(history: &WaypointSeries, horizon: f64) -> Result<Position3> {
    if history.is_empty() {
        return Err(Error::invalid("empty history"));
    }
    let n = history.len();
    let (t1, p1) = history.last();
    if n == 1 {
        return Ok(p1);
    }
    let (t0, p0) = (history.times()[n - 2], history.positions()[n - 2]);
    let velocity = (p1 - p0) * (1.0 / (t1 - t0));
    Ok(p1 + velocity * horizon)
}

/// Next circle: the center steps toward `(predicted.x, predicted.y,
/// policy.altitude)` by at most `max_center_step`, the radius shrinks
/// geometrically down to `min_radius`, and the angular speed is kept.
///
/// `phase0` is chosen so that the new circle, sampled from local time
/// zero, starts at its point nearest to `uav`.
pub fn relocate(
    current: &TrajectorySpec,
    uav: Position3,
    predicted: Position3,
    policy: &RelocationPolicy,
) -> Result<TrajectorySpec> {
    policy.validate()?;
    let TrajectorySpec::Circular {
        center,
        radius,
        angular_speed,
        phase0,
    } = *current
    else {
        return Err(Error::unsupported("relocation needs a circular trajectory"));
    };
    let goal = Position3::new(predicted.x, predicted.y, policy.altitude);
    let offset = goal - center;
    let gap = offset.norm();
    let new_center = if gap <= policy.max_center_step {
        goal
    } else {
        center + offset * (policy.max_center_step / gap)
    };
    let new_radius = (radius * policy.shrink_factor).max(policy.min_radius);
    let rel = uav - new_center;
    let new_phase = if rel.x == 0.0 && rel.y == 0.0 {
        phase0
    } else {
        atan2(rel.y, rel.x)
    };
    Ok(TrajectorySpec::Circular {
        center: new_center,
        radius: new_radius,
        angular_speed,
        phase0: new_phase,
    })
}
