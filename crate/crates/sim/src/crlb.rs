use pseudolat_core::geometry::sample_trajectory;
use pseudolat_core::localization::crlb;
use pseudolat_core::ranging::samples_per_revolution;
use pseudolat_core::Position3;
use serde::{Deserialize, Serialize};

use crate::config::{MeasurementBackend, ScenarioConfig};
use crate::error::{Result, SimError};

/// Position bound for one revolution of the configured trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbReport {
    pub target: Position3,
    pub samples: usize,
    pub covariance: [[f64; 3]; 3],
    pub trace_m2: f64,
    /// `sqrt(trace)`: lower bound on the RMS position error.
    pub rmse_bound_m: f64,
    pub rank: usize,
}

/// Bound for the first revolution, evaluated at the target's position at
/// the revolution's mid time. Needs the statistical noise model.
pub fn scenario_crlb(cfg: &ScenarioConfig) -> Result<CrlbReport> {
    cfg.validate()?;
    let MeasurementBackend::Statistical { noise } = cfg.measurement else {
        return Err(SimError::config("measurement", "crlb needs the statistical noise model"));
    };
    let n = samples_per_revolution(&cfg.trajectory, cfg.dt_s)?;
    let anchors = sample_trajectory(&cfg.trajectory, 0.0, cfg.dt_s, n)?;
    let target = cfg.target.position_at(0.5 * (n - 1) as f64 * cfg.dt_s);
    let bound = crlb(anchors.positions(), target, |d| noise.sigma(d))?;
    Ok(CrlbReport {
        target,
        samples: n,
        covariance: bound.covariance,
        trace_m2: bound.trace(),
        rmse_bound_m: bound.trace().sqrt(),
        rank: bound.rank,
    })
}
