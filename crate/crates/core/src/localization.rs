//! Range-based position solvers and the Cramér-Rao bound.
//!
//! Every solver minimizes the same objective, the sum of squared range
//! residuals `Σ (‖p − a_k‖ − d_k)²`, with a box-constrained
//! Levenberg-Marquardt iteration started from a grid of initial points.
//! Distinct minima whose objective is equivalent to the best one are kept
//! as alternates rather than discarded: a straight anchor path leaves a
//! mirror-image phantom that no amount of data along the line removes.

use alloc::vec::Vec;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{distance, Position3, WaypointSeries};
use crate::math::sqrt;
use crate::ranging::RangeMeasurement;
use crate::{Error, Result};

/// A known anchor position and the measured distance to the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorRange {
    pub anchor: Position3,
    pub d: f64,
}

impl From<&RangeMeasurement> for AnchorRange {
    fn from(m: &RangeMeasurement) -> Self {
        Self {
            anchor: m.anchor,
            d: m.d_meas,
        }
    }
}

/// Axis-aligned search region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: Position3,
    pub max: Position3,
}

impl Bounds {
    pub fn new(min: Position3, max: Position3) -> Self {
        Self { min, max }
    }

    pub fn clamp(&self, p: Position3) -> Position3 {
        Position3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn contains(&self, p: Position3) -> bool {
        self.clamp(p) == p
    }
}

/// Robust reweighting for blocked links: residuals beyond
/// `k * (sigma0 + eta * d)` get linear rather than quadratic weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuberWeighting {
    pub sigma0: f64,
    pub eta: f64,
    #[serde(default = "HuberWeighting::default_k")]
    pub k: f64,
}

impl HuberWeighting {
    fn default_k() -> f64 {
        3.0
    }

    fn weight(&self, residual: f64, d: f64) -> f64 {
        let delta = self.k * (self.sigma0 + self.eta * d);
        let r = residual.abs();
        if delta <= 0.0 || r <= delta {
            1.0
        } else {
            delta / r
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Convergence threshold on the norm of the (projected) gradient of
    /// the objective.
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Start points per horizontal axis.
    pub multistart_grid: usize,
    /// Start points along z; one level sits on `bounds.min.z`.
    pub multistart_z_levels: usize,
    pub damping0: f64,
    pub bounds: Bounds,
    /// Known target altitude; solves in the horizontal plane only.
    pub fixed_z: Option<f64>,
    /// Minima within this relative objective margin of the best are
    /// reported as alternates.
    pub ambiguity_rel: f64,
    /// Absolute objective margin (m²) added to the relative one, so that
    /// noiseless problems with objective ~0 still compare sensibly.
    pub ambiguity_abs: f64,
    /// Minima closer than this (m) are the same minimum.
    pub ambiguity_separation: f64,
    pub huber: Option<HuberWeighting>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-9,
            step_tol: 1e-12,
            multistart_grid: 5,
            multistart_z_levels: 1,
            damping0: 1e-3,
            bounds: Bounds::new(Position3::new(-250.0, -250.0, 0.0), Position3::new(250.0, 250.0, 10.0)),
            fixed_z: None,
            ambiguity_rel: 0.01,
            ambiguity_abs: 1e-9,
            ambiguity_separation: 1.0,
            huber: None,
        }
    }
}

impl SolveOptions {
    pub fn with_bounds(self, bounds: Bounds) -> Self {
        Self { bounds, ..self }
    }

    pub fn planar(self, z: f64) -> Self {
        Self { fixed_z: Some(z), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if !(b.min.is_finite() && b.max.is_finite())
            || b.min.x > b.max.x
            || b.min.y > b.max.y
            || b.min.z > b.max.z
        {
            return Err(Error::invalid("bounds must be finite with min <= max"));
        }
        if !(self.grad_tol > 0.0 && self.step_tol > 0.0) {
            return Err(Error::invalid("tolerances must be > 0"));
        }
        if self.multistart_grid == 0 || self.multistart_z_levels == 0 {
            return Err(Error::invalid("multistart grid must be >= 1 per axis"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        if !(self.damping0 > 0.0) {
            return Err(Error::invalid("damping0 must be > 0"));
        }
        if !(self.ambiguity_rel >= 0.0 && self.ambiguity_abs >= 0.0 && self.ambiguity_separation > 0.0) {
            return Err(Error::invalid("ambiguity thresholds must be nonnegative"));
        }
        Ok(())
    }

    fn start_points(&self) -> Vec<Position3> {
        let b = &self.bounds;
        let g = self.multistart_grid;
        let cell = |lo: f64, hi: f64, i: usize| lo + (i as f64 + 0.5) * (hi - lo) / g as f64;
        let z_levels: Vec<f64> = match self.fixed_z {
            Some(z) => alloc::vec![z],
            None if self.multistart_z_levels == 1 => alloc::vec![b.min.z],
            None => {
                let n = self.multistart_z_levels;
                (0..n)
                    .map(|i| b.min.z + (b.max.z - b.min.z) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        };
        let mut pts = Vec::with_capacity(g * g * z_levels.len());
        for &z in &z_levels {
            for i in 0..g {
                for j in 0..g {
                    pts.push(Position3::new(cell(b.min.x, b.max.x, i), cell(b.min.y, b.max.y, j), z));
                }
            }
        }
        pts
    }

    fn project(&self, p: Position3) -> Position3 {
        let p = self.bounds.clamp(p);
        match self.fixed_z {
            Some(z) => p.with_z(z),
            None => p,
        }
    }
}

/// Solver output. `alternates` holds other minima whose objective is
/// equivalent to `residual`, sorted by objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub p_hat: Position3,
    pub residual: f64,
    pub converged: bool,
    pub alternates: Vec<(Position3, f64)>,
}

/// `Σ_k (‖candidate − anchor_k‖ − d_k)²`.
pub fn residual_sum(candidate: Position3, ranges: &[AnchorRange]) -> Result<f64> {
    if ranges.is_empty() {
        return Err(Error::invalid("no ranges"));
    }
    Ok(objective(candidate, ranges))
}

/// Analytic gradient of [`residual_sum`].
pub fn residual_gradient(candidate: Position3, ranges: &[AnchorRange]) -> Result<Position3> {
    if ranges.is_empty() {
        return Err(Error::invalid("no ranges"));
    }
    Ok(ranges.iter().fold(Position3::ORIGIN, |acc, r| {
        let diff = candidate - r.anchor;
        let rho = diff.norm();
        if rho == 0.0 {
            acc
        } else {
            acc + diff * (2.0 * (rho - r.d) / rho)
        }
    }))
}

fn objective(p: Position3, ranges: &[AnchorRange]) -> f64 {
    ranges
        .iter()
        .map(|r| {
            let e = distance(p, r.anchor) - r.d;
            e * e
        })
        .sum()
}

struct LocalFit {
    p: Position3,
    objective: f64,
    converged: bool,
}

struct Linearization {
    /// Gradient of the (weighted) objective.
    grad: Vector3<f64>,
    /// Gauss-Newton approximation of half the Hessian.
    normal: Matrix3<f64>,
    objective: f64,
}

fn linearize(p: Position3, ranges: &[AnchorRange], huber: Option<&HuberWeighting>) -> Linearization {
    let mut grad = Vector3::zeros();
    let mut normal = Matrix3::zeros();
    let mut obj = 0.0;
    for r in ranges {
        let diff = p - r.anchor;
        let rho = diff.norm();
        let e = rho - r.d;
        let w = huber.map_or(1.0, |h| h.weight(e, r.d));
        obj += w * e * e;
        if rho == 0.0 {
            continue;
        }
        let u = Vector3::new(diff.x, diff.y, diff.z) / rho;
        grad += u * (2.0 * w * e);
        normal += u * u.transpose() * w;
    }
    Linearization {
        grad,
        normal,
        objective: obj,
    }
}

/// Axes that may move: not pinned by `fixed_z` and not pressed against a
/// bound by the gradient.
fn free_axes(p: Position3, grad: &Vector3<f64>, opts: &SolveOptions) -> [bool; 3] {
    let (lo, hi, x) = (opts.bounds.min.to_array(), opts.bounds.max.to_array(), p.to_array());
    let mut free = [true; 3];
    for i in 0..3 {
        // Descent direction is -grad.
        if (x[i] <= lo[i] && grad[i] > 0.0) || (x[i] >= hi[i] && grad[i] < 0.0) {
            free[i] = false;
        }
    }
    if opts.fixed_z.is_some() {
        free[2] = false;
    }
    free
}

fn projected_norm(grad: &Vector3<f64>, free: [bool; 3]) -> f64 {
    sqrt((0..3).filter(|&i| free[i]).map(|i| grad[i] * grad[i]).sum())
}

fn local_solve(ranges: &[AnchorRange], start: Position3, opts: &SolveOptions) -> LocalFit {
    let huber = opts.huber.as_ref();
    let mut p = opts.project(start);
    let mut lin = linearize(p, ranges, huber);
    let mut lambda = opts.damping0;
    let mut converged = false;

    for _ in 0..opts.max_iter {
        let free = free_axes(p, &lin.grad, opts);
        let gnorm = projected_norm(&lin.grad, free);
        if gnorm < opts.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = lin.normal;
            for i in 0..3 {
                a[(i, i)] += lambda * lin.normal[(i, i)].max(1e-12);
            }
            let mut rhs = -lin.grad * 0.5;
            for i in 0..3 {
                if !free[i] {
                    for j in 0..3 {
                        a[(i, j)] = 0.0;
                        a[(j, i)] = 0.0;
                    }
                    a[(i, i)] = 1.0;
                    rhs[i] = 0.0;
                }
            }
            let Some(step) = a.lu().solve(&rhs) else {
                lambda *= 4.0;
                continue;
            };
            let candidate = opts.project(p + Position3::new(step[0], step[1], step[2]));
            let next = linearize(candidate, ranges, huber);
            let next_free = free_axes(candidate, &next.grad, opts);
            // Near the optimum objective changes drown in rounding; accept
            // such steps only if they shrink the gradient.
            let slack = 8.0 * f64::EPSILON * lin.objective;
            let improves = next.objective < lin.objective
                || (next.objective <= lin.objective + slack && projected_norm(&next.grad, next_free) < gnorm);
            if improves {
                accepted = Some((candidate, next));
                lambda = (lambda / 3.0).max(1e-12);
                break;
            }
            lambda *= 4.0;
        }
        let Some((candidate, next)) = accepted else {
            break;
        };
        let moved = distance(candidate, p);
        p = candidate;
        lin = next;
        if moved < opts.step_tol {
            break;
        }
    }
    if !converged {
        let free = free_axes(p, &lin.grad, opts);
        converged = projected_norm(&lin.grad, free) < opts.grad_tol;
    }
    LocalFit {
        p,
        objective: objective(p, ranges),
        converged,
    }
}

fn order(a: &LocalFit, b: &LocalFit) -> core::cmp::Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then_with(|| a.p.lexicographic_cmp(&b.p))
}

/// Runs the local solver from every start point and merges the minima.
fn multistart(ranges: &[AnchorRange], starts: &[Position3], opts: &SolveOptions) -> Solution {
    let mut fits: Vec<LocalFit> = starts.iter().map(|&s| local_solve(ranges, s, opts)).collect();
    fits.sort_by(order);

    let mut minima: Vec<LocalFit> = Vec::new();
    for fit in fits {
        if minima
            .iter()
            .all(|m| distance(m.p, fit.p) > opts.ambiguity_separation)
        {
            minima.push(fit);
        }
    }
    let mut iter = minima.into_iter();
    let best = iter.next().expect("at least one start point");
    let limit = best.objective * (1.0 + opts.ambiguity_rel) + opts.ambiguity_abs;
    let alternates = iter
        .filter(|m| m.objective <= limit)
        .map(|m| (m.p, m.objective))
        .collect();
    Solution {
        p_hat: best.p,
        residual: best.objective,
        converged: best.converged,
        alternates,
    }
}

/// Scatter of anchor positions around their mean, restricted to the
/// horizontal plane when `planar`.
fn anchor_rank(anchors: &[Position3], planar: bool) -> usize {
    let n = anchors.len() as f64;
    let mean = anchors.iter().fold(Position3::ORIGIN, |a, &p| a + p) * (1.0 / n);
    let mut scatter = Matrix3::zeros();
    for &a in anchors {
        let d = a - mean;
        let v = if planar {
            Vector3::new(d.x, d.y, 0.0)
        } else {
            Vector3::new(d.x, d.y, d.z)
        };
        scatter += v * v.transpose();
    }
    let eig = SymmetricEigen::new(scatter).eigenvalues;
    let max = eig.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    eig.iter().filter(|&&l| l > 1e-10 * max).count()
}

/// Classical multilateration from static anchors.
///
/// 3D mode needs four or more non-coplanar anchors; planar mode
/// (`opts.fixed_z`) needs three or more anchors not on one horizontal line.
pub fn multilaterate(ranges: &[AnchorRange], opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    let anchors: Vec<Position3> = ranges.iter().map(|r| r.anchor).collect();
    let planar = opts.fixed_z.is_some();
    let (need_anchors, need_rank) = if planar { (3, 2) } else { (4, 3) };
    if anchors.len() < need_anchors {
        return Err(Error::Geometry(alloc::format!(
            "need at least {need_anchors} anchors, got {}",
            anchors.len()
        )));
    }
    let rank = anchor_rank(&anchors, planar);
    if rank < need_rank {
        return Err(Error::Geometry(alloc::format!(
            "anchor layout spans {rank} dimensions, need {need_rank}"
        )));
    }
    Ok(multistart(ranges, &opts.start_points(), opts))
}

/// Single moving anchor, static target: every reading is treated as a
/// separate virtual anchor.
pub fn pseudo_multilaterate_static(meas: &[RangeMeasurement], opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    if meas.len() < 3 {
        return Err(Error::invalid("need at least 3 measurements"));
    }
    let ranges: Vec<AnchorRange> = meas.iter().map(AnchorRange::from).collect();
    Ok(multistart(&ranges, &opts.start_points(), opts))
}

/// Slow-moving target: static solves over sliding windows of `window`
/// readings advanced by `stride`, each warm-started from the previous
/// window's estimate. Returns one estimate per window, stamped at the
/// window's mid time.
pub fn pseudo_multilaterate_moving(
    meas: &[RangeMeasurement],
    window: usize,
    stride: usize,
    opts: &SolveOptions,
) -> Result<WaypointSeries> {
    opts.validate()?;
    if window < 3 {
        return Err(Error::invalid("window must be >= 3"));
    }
    if stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    if window > meas.len() {
        return Err(Error::invalid("window longer than the measurement list"));
    }
    let mut times = Vec::new();
    let mut track = Vec::new();
    let mut previous: Option<Position3> = None;
    let mut start = 0;
    while start + window <= meas.len() {
        let chunk = &meas[start..start + window];
        let ranges: Vec<AnchorRange> = chunk.iter().map(AnchorRange::from).collect();
        let estimate = match previous {
            None => multistart(&ranges, &opts.start_points(), opts).p_hat,
            Some(p) => local_solve(&ranges, p, opts).p,
        };
        times.push(0.5 * (chunk[0].t + chunk[window - 1].t));
        track.push(estimate);
        previous = Some(estimate);
        start += stride;
    }
    WaypointSeries::new(times, track)
}

/// Cramér-Rao lower bound on the position covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crlb {
    /// Inverse (or pseudo-inverse, when rank deficient) of the Fisher
    /// information, m².
    pub covariance: [[f64; 3]; 3],
    pub fisher: [[f64; 3]; 3],
    pub rank: usize,
}

impl Crlb {
    pub fn full_rank(&self) -> bool {
        self.rank == 3
    }

    pub fn trace(&self) -> f64 {
        self.covariance[0][0] + self.covariance[1][1] + self.covariance[2][2]
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.covariance[0][0], self.covariance[1][1], self.covariance[2][2]]
    }
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    core::array::from_fn(|i| core::array::from_fn(|j| m[(i, j)]))
}

/// Fisher information `J = Σ u_k u_kᵀ / σ_k²` for unit vectors `u_k` from
/// the target to each anchor, and its inverse.
pub fn crlb(anchors: &[Position3], target: Position3, sigma_fn: impl Fn(f64) -> f64) -> Result<Crlb> {
    if anchors.len() < 3 {
        return Err(Error::invalid("need at least 3 anchors"));
    }
    let mut fisher = Matrix3::zeros();
    for &a in anchors {
        let diff = a - target;
        let rho = diff.norm();
        if rho == 0.0 {
            return Err(Error::invalid("anchor coincides with target"));
        }
        let sigma = sigma_fn(rho);
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma must be > 0 at every anchor distance"));
        }
        let u = Vector3::new(diff.x, diff.y, diff.z) / rho;
        fisher += u * u.transpose() / (sigma * sigma);
    }
    let eig = SymmetricEigen::new(fisher);
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let mut inv = Matrix3::zeros();
    let mut rank = 0;
    for i in 0..3 {
        let l = eig.eigenvalues[i];
        if max > 0.0 && l > 1e-10 * max {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            inv += v * v.transpose() / l;
        }
    }
    Ok(Crlb {
        covariance: to_rows(&inv),
        fisher: to_rows(&fisher),
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranges_to(target: Position3, anchors: &[Position3]) -> Vec<AnchorRange> {
        anchors
            .iter()
            .map(|&a| AnchorRange {
                anchor: a,
                d: distance(a, target),
            })
            .collect()
    }

    #[test]
    fn residual_examples() {
        let target = Position3::new(20.0, 30.0, 40.0);
        let anchors = [Position3::ORIGIN, Position3::new(100.0, 0.0, 0.0), Position3::new(0.0, 100.0, 0.0)];
        assert_eq!(residual_sum(target, &ranges_to(target, &anchors)).unwrap(), 0.0);
        let one = [AnchorRange {
            anchor: Position3::ORIGIN,
            d: 5.0,
        }];
        assert_eq!(residual_sum(Position3::new(3.0, 4.0, 0.0), &one).unwrap(), 0.0);
        assert_eq!(residual_sum(Position3::new(6.0, 8.0, 0.0), &one).unwrap(), 25.0);
        assert!(residual_sum(Position3::ORIGIN, &[]).is_err());
    }

    fn tetra() -> [Position3; 4] {
        [
            Position3::ORIGIN,
            Position3::new(100.0, 0.0, 0.0),
            Position3::new(0.0, 100.0, 0.0),
            Position3::new(0.0, 0.0, 100.0),
        ]
    }

    fn cube_opts() -> SolveOptions {
        SolveOptions {
            multistart_z_levels: 3,
            ..SolveOptions::default().with_bounds(Bounds::new(
                Position3::new(-20.0, -20.0, -20.0),
                Position3::new(120.0, 120.0, 120.0),
            ))
        }
    }

    #[test]
    fn four_anchor_exact_fix() {
        let target = Position3::new(20.0, 30.0, 40.0);
        let sol = multilaterate(&ranges_to(target, &tetra()), &cube_opts()).unwrap();
        assert!(distance(sol.p_hat, target) < 1e-6, "{sol:?}");
        assert!(sol.converged);
    }

    #[test]
    fn coplanar_anchors_rejected_in_3d() {
        let target = Position3::new(20.0, 30.0, 40.0);
        let anchors = &tetra()[..3];
        assert!(matches!(
            multilaterate(&ranges_to(target, anchors), &cube_opts()),
            Err(Error::Geometry(_))
        ));
        // Four anchors on one plane are just as degenerate.
        let flat = [anchors[0], anchors[1], anchors[2], Position3::new(100.0, 100.0, 0.0)];
        assert!(matches!(
            multilaterate(&ranges_to(target, &flat), &cube_opts()),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn planar_mode_needs_three_non_collinear() {
        let target = Position3::new(20.0, 30.0, 0.0);
        let opts = cube_opts().planar(0.0);
        let sol = multilaterate(&ranges_to(target, &tetra()[..3]), &opts).unwrap();
        assert!(distance(sol.p_hat, target) < 1e-6);
        let line = [Position3::ORIGIN, Position3::new(50.0, 0.0, 0.0), Position3::new(100.0, 0.0, 0.0)];
        assert!(matches!(multilaterate(&ranges_to(target, &line), &opts), Err(Error::Geometry(_))));
    }

    #[test]
    fn crlb_identity_and_duplication() {
        let target = Position3::ORIGIN;
        let anchors = [
            Position3::new(10.0, 0.0, 0.0),
            Position3::new(0.0, 10.0, 0.0),
            Position3::new(0.0, 0.0, 10.0),
        ];
        let b = crlb(&anchors, target, |_| 1.0).unwrap();
        assert!(b.full_rank());
        assert!((b.trace() - 3.0).abs() < 1e-12);
        let doubled: Vec<Position3> = anchors.iter().chain(anchors.iter()).copied().collect();
        let b2 = crlb(&doubled, target, |_| 1.0).unwrap();
        assert!((b2.trace() - b.trace() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn crlb_collinear_is_rank_deficient() {
        let anchors = [
            Position3::new(10.0, 0.0, 0.0),
            Position3::new(20.0, 0.0, 0.0),
            Position3::new(-5.0, 0.0, 0.0),
        ];
        let b = crlb(&anchors, Position3::ORIGIN, |_| 1.0).unwrap();
        assert_eq!(b.rank, 1);
        assert!(!b.full_rank());
        assert!(crlb(&anchors[..2], Position3::ORIGIN, |_| 1.0).is_err());
        assert!(crlb(&anchors, Position3::ORIGIN, |_| 0.0).is_err());
    }

    #[test]
    fn moving_rejects_bad_window() {
        let m = RangeMeasurement {
            t: 0.0,
            anchor: Position3::ORIGIN,
            d_meas: 1.0,
            los: true,
        };
        let meas = [m; 4];
        let opts = SolveOptions::default();
        assert!(pseudo_multilaterate_moving(&meas, 5, 1, &opts).is_err());
        assert!(pseudo_multilaterate_moving(&meas, 2, 1, &opts).is_err());
        assert!(pseudo_multilaterate_moving(&meas, 3, 0, &opts).is_err());
        assert!(pseudo_multilaterate_static(&meas[..2], &opts).is_err());
    }
}
