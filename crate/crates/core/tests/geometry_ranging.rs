use std::f64::consts::TAU;

use proptest::prelude::*;
use pseudolat_core::geometry::{mirror_point, sample_trajectory};
use pseudolat_core::ranging::{build_measurement_matrix, collect_measurements, los_blocked, sample_range};
use pseudolat_core::{distance, rng, NoiseModel, Obstacle, Position3, TrajectorySpec, WaypointSeries};

fn p(x: f64, y: f64, z: f64) -> Position3 {
    Position3::new(x, y, z)
}

fn circle(r: f64) -> TrajectorySpec {
    TrajectorySpec::Circular {
        center: p(0.0, 0.0, 100.0),
        radius: r,
        angular_speed: TAU / 60.0,
        phase0: 0.0,
    }
}

/// Segment-box test by dense point sampling, independent of the slab test.
fn segment_hits_box(a: Position3, b: Position3, ob: &Obstacle) -> bool {
    let steps = 20_000;
    (0..=steps).any(|i| {
        let q = a + (b - a) * (i as f64 / steps as f64);
        q.x >= ob.min.x && q.x <= ob.max.x && q.y >= ob.min.y && q.y <= ob.max.y && q.z >= ob.min.z && q.z <= ob.max.z
    })
}

fn unit_dirs(n: usize) -> Vec<Position3> {
    // Fibonacci sphere plus the coordinate axes.
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut dirs: Vec<Position3> = (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            p(r * a.cos(), r * a.sin(), z)
        })
        .collect();
    dirs.extend([p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0), p(0.0, 0.0, 1.0)]);
    dirs
}

/// First reflected image of `target` below `ceiling` that keeps every
/// waypoint distance within `tol`; `None` if only the identity does.
///
/// The flight plane of a level path always reflects a ground target to a
/// point above the anchor, hence the ceiling.
fn distance_preserving_reflection(
    waypoints: &[Position3],
    target: Position3,
    ceiling: f64,
    tol: f64,
) -> Option<Position3> {
    for n in unit_dirs(400) {
        for k in -400..=400 {
            if k == 0 {
                continue;
            }
            let s = k as f64 * 0.5;
            let image = target + n * s;
            if image.z >= ceiling {
                continue;
            }
            let worst = waypoints
                .iter()
                .map(|&w| (distance(w, image) - distance(w, target)).abs())
                .fold(0.0, f64::max);
            if worst < tol {
                return Some(image);
            }
        }
    }
    None
}

#[test]
fn brute_force_reflection_finds_linear_mirror_only() {
    let line = TrajectorySpec::Linear {
        start: p(-50.0, 0.0, 100.0),
        velocity: p(10.0, 0.0, 0.0),
    };
    let wp = sample_trajectory(&line, 0.0, 1.0, 11).unwrap();
    let target = p(3.0, 20.0, 0.0);
    let found = distance_preserving_reflection(wp.positions(), target, 100.0, 1e-6).expect("mirror exists");
    let expected = mirror_point(p(0.0, 0.0, 100.0), p(1.0, 0.0, 0.0), target).unwrap();
    assert!(distance(found, expected) < 1e-9, "{found:?}");

    let wp = sample_trajectory(&circle(50.0), 0.0, 1.0, 60).unwrap();
    for target in [p(20.0, -10.0, 0.0), p(-70.0, 40.0, 5.0), p(0.5, 0.0, 0.0)] {
        assert_eq!(distance_preserving_reflection(wp.positions(), target, 100.0, 1e-3), None, "{target:?}");
    }
}

#[test]
fn noise_std_matches_affine_model() {
    let model = NoiseModel {
        sigma0: 1.0,
        eta: 0.01,
        nlos_bias_mean: 0.0,
        seed: 0,
    };
    let mut r = rng::seeded(42);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| sample_range(200.0, true, &model, &mut r).unwrap() - 200.0).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let std = (draws.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((std - 3.0).abs() < 0.05, "{std}");
    assert!((std - 3.0).abs() < 0.02 * 3.0);
}

#[test]
fn nlos_bias_mean_and_positivity() {
    let model = NoiseModel {
        sigma0: 0.0,
        eta: 0.0,
        nlos_bias_mean: 5.0,
        seed: 0,
    };
    let mut r = rng::seeded(7);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| sample_range(150.0, false, &model, &mut r).unwrap()).collect();
    assert!(draws.iter().all(|&d| d >= 150.0));
    let mean = draws.iter().sum::<f64>() / n as f64;
    assert!((mean - 155.0).abs() < 0.1, "{mean}");
}

#[test]
fn measurements_are_deterministic_per_seed() {
    let wp = sample_trajectory(&circle(50.0), 0.0, 1.0, 120).unwrap();
    let target = WaypointSeries::stationary(wp.times().to_vec(), p(20.0, -10.0, 0.0)).unwrap();
    let model = NoiseModel::default().with_seed(9);
    let a = collect_measurements(&wp, &target, &[], &model).unwrap();
    let b = collect_measurements(&wp, &target, &[], &model).unwrap();
    assert_eq!(a, b);
    let c = collect_measurements(&wp, &target, &[], &model.with_seed(10)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn moving_target_noiseless_ranges_are_closed_form() {
    let wp = sample_trajectory(&circle(50.0), 0.0, 1.0, 60).unwrap();
    let track = TrajectorySpec::Linear {
        start: p(10.0, 5.0, 0.0),
        velocity: p(0.5, -0.2, 0.0),
    };
    let tp = sample_trajectory(&track, 0.0, 1.0, 60).unwrap();
    let meas = collect_measurements(&wp, &tp, &[], &NoiseModel::noiseless()).unwrap();
    for (k, m) in meas.iter().enumerate() {
        let t = k as f64;
        let a = p(50.0 * (TAU * t / 60.0).cos(), 50.0 * (TAU * t / 60.0).sin(), 100.0);
        let q = p(10.0 + 0.5 * t, 5.0 - 0.2 * t, 0.0);
        let d = ((a.x - q.x).powi(2) + (a.y - q.y).powi(2) + (a.z - q.z).powi(2)).sqrt();
        assert!((m.d_meas - d).abs() < 1e-9);
    }
}

#[test]
fn obstacle_stripe_matches_oracle_and_is_contiguous() {
    let spec = circle(50.0);
    let wp = sample_trajectory(&spec, 0.0, 1.0, 120).unwrap();
    let target_pos = p(0.0, 0.0, 0.0);
    let target = WaypointSeries::stationary(wp.times().to_vec(), target_pos).unwrap();
    let wall = Obstacle::new(p(15.0, -16.0, 40.0), p(35.0, 16.0, 60.0)).unwrap();
    let model = NoiseModel {
        sigma0: 0.0,
        eta: 0.0,
        nlos_bias_mean: 5.0,
        seed: 3,
    };
    let meas = collect_measurements(&wp, &target, &[wall], &model).unwrap();
    let clean = collect_measurements(&wp, &target, &[], &NoiseModel::noiseless()).unwrap();
    let mats = build_measurement_matrix(&meas, &spec, target_pos).unwrap();
    assert_eq!(mats.len(), 2);
    for mat in &mats {
        assert_eq!(mat.samples(), 60);
        let oracle: Vec<bool> = mat
            .rows
            .iter()
            .map(|r| segment_hits_box(p(r[0], r[1], r[2]), target_pos, &wall))
            .collect();
        let nlos: Vec<bool> = mat.los.iter().map(|l| !l).collect();
        assert_eq!(nlos, oracle);
        let blocked = nlos.iter().filter(|&&b| b).count();
        assert!((8..=16).contains(&blocked), "{blocked}");
        // One contiguous run, allowing wrap-around at the revolution seam.
        let edges = (0..60).filter(|&i| nlos[i] != nlos[(i + 1) % 60]).count();
        assert_eq!(edges, 2);
        for (i, row) in mat.rows.iter().enumerate() {
            let noiseless = clean[mat.revolution * 60 + i].d_meas;
            if nlos[i] {
                assert!(row[3] > noiseless);
            } else {
                assert_eq!(row[3], noiseless);
            }
        }
    }
}

proptest! {
    #[test]
    fn mirror_preserves_all_waypoint_distances(
        sx in -100.0f64..100.0, sy in -100.0f64..100.0, alt in 0.0f64..200.0,
        heading in 0.0f64..TAU, speed in 0.5f64..30.0,
        tx in -200.0f64..200.0, ty in -200.0f64..200.0, tz in 0.0f64..20.0,
    ) {
        let dir = p(heading.cos(), heading.sin(), 0.0);
        let spec = TrajectorySpec::Linear { start: p(sx, sy, alt), velocity: dir * speed };
        let target = p(tx, ty, tz);
        let m = mirror_point(p(sx, sy, alt), dir, target).unwrap();
        let wp = sample_trajectory(&spec, -5.0, 0.7, 30).unwrap();
        for w in wp.positions() {
            prop_assert!((distance(*w, target) - distance(*w, m)).abs() < 1e-9);
        }
    }

    #[test]
    fn circular_sampling_closes_after_one_period(r in 1.0f64..500.0, period in 2.0f64..600.0, phase in -10.0f64..10.0, n in 2usize..200) {
        let spec = TrajectorySpec::Circular { center: p(3.0, -4.0, 80.0), radius: r, angular_speed: TAU / period, phase0: phase };
        let wp = sample_trajectory(&spec, 0.0, period / n as f64, n + 1).unwrap();
        prop_assert!(distance(wp.positions()[0], wp.positions()[n]) < 1e-9 * r.max(1.0));
    }

    #[test]
    fn blocked_iff_oracle(
        ax in -50.0f64..50.0, ay in -50.0f64..50.0, az in 20.0f64..120.0,
        tx in -50.0f64..50.0, ty in -50.0f64..50.0,
        bx in -30.0f64..30.0, by in -30.0f64..30.0, bz in 0.0f64..60.0,
        w in 1.0f64..20.0, h in 1.0f64..20.0,
    ) {
        let anchor = p(ax, ay, az);
        let target = p(tx, ty, 0.0);
        let ob = Obstacle::new(p(bx, by, bz), p(bx + w, by + w, bz + h)).unwrap();
        let slab = los_blocked(anchor, target, &[ob]).unwrap();
        let dense = segment_hits_box(anchor, target, &ob);
        // Dense sampling can only miss grazing contacts.
        if dense {
            prop_assert!(slab);
        } else if slab {
            let grown = Obstacle::new(ob.min - p(0.05, 0.05, 0.05), ob.max + p(0.05, 0.05, 0.05)).unwrap();
            prop_assert!(segment_hits_box(anchor, target, &grown));
        }
    }
}
