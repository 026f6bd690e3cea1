use std::f64::consts::TAU;

use proptest::prelude::*;
use pseudolat_core::relocation::{predict_target, relocate};
use pseudolat_core::{distance, Position3, RelocationPolicy, TrajectorySpec, WaypointSeries};

fn p(x: f64, y: f64, z: f64) -> Position3 {
    Position3::new(x, y, z)
}

fn parts(spec: &TrajectorySpec) -> (Position3, f64, f64) {
    match *spec {
        TrajectorySpec::Circular {
            center,
            radius,
            angular_speed,
            ..
        } => (center, radius, angular_speed),
        TrajectorySpec::Linear { .. } => unreachable!(),
    }
}

#[test]
fn predictor_examples() {
    let h = WaypointSeries::new(vec![0.0, 1.0], vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0)]).unwrap();
    assert_eq!(predict_target(&h, 2.0).unwrap(), p(3.0, 0.0, 0.0));
    let one = WaypointSeries::new(vec![4.0], vec![p(5.0, 5.0, 0.0)]).unwrap();
    assert_eq!(predict_target(&one, 100.0).unwrap(), p(5.0, 5.0, 0.0));
    let still = WaypointSeries::stationary(vec![0.0, 1.0, 2.0], p(2.0, -1.0, 0.0)).unwrap();
    assert_eq!(predict_target(&still, 7.0).unwrap(), p(2.0, -1.0, 0.0));
}

#[test]
fn linear_spec_is_unsupported() {
    let line = TrajectorySpec::Linear {
        start: p(0.0, 0.0, 100.0),
        velocity: p(1.0, 0.0, 0.0),
    };
    let policy = RelocationPolicy {
        min_radius: 10.0,
        shrink_factor: 0.5,
        max_center_step: 10.0,
        altitude: 100.0,
    };
    assert!(matches!(
        relocate(&line, p(0.0, 0.0, 100.0), p(0.0, 0.0, 0.0), &policy),
        Err(pseudolat_core::Error::Unsupported(_))
    ));
}

proptest! {
    #[test]
    fn perfect_estimates_converge_to_target(
        cx in -500.0f64..500.0, cy in -500.0f64..500.0,
        tx in -500.0f64..500.0, ty in -500.0f64..500.0,
        r0 in 20.0f64..300.0, shrink in 0.3f64..1.0, step in 5.0f64..200.0, floor in 1.0f64..20.0,
    ) {
        let alt = 100.0;
        let target = p(tx, ty, 0.0);
        let policy = RelocationPolicy { min_radius: floor, shrink_factor: shrink, max_center_step: step, altitude: alt };
        let mut spec = TrajectorySpec::Circular { center: p(cx, cy, alt), radius: r0, angular_speed: 0.2, phase0: 0.0 };
        let gap = |c: Position3| (c.x - tx).hypot(c.y - ty);
        let d0 = gap(p(cx, cy, alt));
        let budget = (d0 / step).ceil() as usize + 2;
        let mut prev_gap = d0;
        let mut prev_radius = r0;
        for n in 1..=budget {
            let uav = spec.position_at(0.0);
            let next = relocate(&spec, uav, target, &policy).unwrap();
            let (c_old, _, _) = parts(&spec);
            let (c, r, w) = parts(&next);
            prop_assert!(distance(c, c_old) <= step + 1e-9);
            prop_assert!(r >= floor);
            prop_assert!((r - (r0 * shrink.powi(n as i32)).max(floor)).abs() <= 1e-9 * r0);
            prop_assert!(r <= prev_radius);
            prop_assert_eq!(w, 0.2);
            prop_assert!((c.z - alt).abs() < 1e-12);
            let g = gap(c);
            prop_assert!(g <= prev_gap + 1e-9);
            prev_gap = g;
            prev_radius = r;
            spec = next;
        }
        prop_assert!(prev_gap < 1e-3);
    }

    #[test]
    fn new_circle_starts_nearest_to_uav(
        ux in -200.0f64..200.0, uy in -200.0f64..200.0,
        px in -200.0f64..200.0, py in -200.0f64..200.0,
    ) {
        let spec = TrajectorySpec::Circular { center: p(0.0, 0.0, 80.0), radius: 60.0, angular_speed: TAU / 30.0, phase0: 1.0 };
        let policy = RelocationPolicy { min_radius: 10.0, shrink_factor: 0.8, max_center_step: 40.0, altitude: 80.0 };
        let uav = p(ux, uy, 80.0);
        let next = relocate(&spec, uav, p(px, py, 0.0), &policy).unwrap();
        let start = next.position_at(0.0);
        let nearest = (0..3600)
            .map(|i| next.position_at(i as f64 / 3600.0 * 30.0))
            .map(|q| distance(q, uav))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(distance(start, uav) <= nearest + 1e-9);
    }
}
