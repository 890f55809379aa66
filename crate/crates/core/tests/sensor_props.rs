use std::f64::consts::{FRAC_PI_2, PI};
use std::io::BufReader;

use lidarsim::frame_io::{read_csv, read_ply, write_csv, write_ply};
use lidarsim::geometry::primitives::{cuboid, plane};
use lidarsim::pattern::{direction_angles, PatternKind, PatternSpec, PRESET_NAMES};
use lidarsim::sensor::{apply_randomization, simulate_scan, ScanFrame, SensorConfig};
use lidarsim::{RigidTransform, SceneWorld, Vec3};
use proptest::prelude::*;

fn preset_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(PRESET_NAMES)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pattern_rays_are_unit_and_inside_fov(name in preset_name(), t in 0.0..5.0f64) {
        let spec = PatternSpec::preset(name).unwrap();
        let b = spec.generate(t).unwrap();
        let ([az0, az1], [el0, el1]) = spec.fov();
        prop_assert_eq!(b.len(), spec.rays_per_frame);
        prop_assert_eq!(b.timestamps.len(), b.len());
        for d in &b.directions {
            prop_assert!((d.norm() - 1.0).abs() <= 1e-12);
            let (az, el) = direction_angles(d);
            prop_assert!(el >= el0 - 1e-9 && el <= el1 + 1e-9, "{name} el {el}");
            if az1 - az0 < 2.0 * PI - 1e-9 {
                prop_assert!(az >= az0 - 1e-9 && az <= az1 + 1e-9, "{name} az {az}");
            }
        }
        prop_assert!(b.timestamps.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(b.timestamps.iter().all(|s| *s >= 0.0 && *s < spec.frame_period));
    }

    #[test]
    fn pattern_generation_is_deterministic(name in preset_name(), t in 0.0..5.0f64) {
        let spec = PatternSpec::preset(name).unwrap();
        prop_assert_eq!(spec.generate(t).unwrap().directions, spec.generate(t).unwrap().directions);
    }

    #[test]
    fn randomization_is_bounded_and_keyed(seed in any::<u64>(), env in 0u32..64, frame in 0u64..1000) {
        let n = 2000;
        let dirs: Vec<Vec3> = (0..n).map(|i| {
            let a = i as f64 * 0.01;
            Vec3::new(a.cos(), a.sin(), 0.0)
        }).collect();
        let mut f = ScanFrame::from_parts(env, 0.0, dirs, vec![5.0; n], vec![true; n], &RigidTransform::identity());
        f.frame_index = frame;
        let cfg = SensorConfig { rng_seed: seed, ..SensorConfig::default() };
        let a = apply_randomization(&f, &cfg);
        for r in &a.ranges {
            prop_assert!((0.0..=0.3).contains(r) || (4.5..=5.5).contains(r), "{r}");
        }
        prop_assert_eq!(&a, &apply_randomization(&f, &cfg));
        let mut other = f.clone();
        other.frame_index = frame + 1;
        prop_assert_ne!(a.ranges, apply_randomization(&other, &cfg).ranges);
    }

    #[test]
    fn base_points_follow_mount(roll in -PI..PI, yaw in -PI..PI, x in -1.0..1.0f64, z in 0.0..1.0f64) {
        let mut w = SceneWorld::new(1);
        w.register_static_mesh(0, cuboid(Vec3::zeros(), Vec3::repeat(20.0), 0)).unwrap();
        let mut cfg = SensorConfig::ideal(PatternSpec::preset("grid").unwrap(), 50.0);
        cfg.mount = RigidTransform::from_axis_angle(Vec3::new(roll, 0.0, 0.0), Vec3::new(x, 0.0, z))
            .compose(&RigidTransform::from_yaw(yaw, Vec3::zeros()));
        let base = RigidTransform::from_yaw(0.3, Vec3::new(1.0, -2.0, 0.5));
        let f = simulate_scan(&w, 0, &base, &cfg, 0.0).unwrap();
        let sensor = base.compose(&cfg.mount);
        for i in 0..f.len() {
            prop_assert!(f.hit_flags[i]);
            let world_point = sensor.apply_point(&(f.directions[i] * f.ranges[i]));
            // Inside a 20 m box every return lies on one of its faces.
            let on_face = world_point.iter().any(|c| (c.abs() - 10.0).abs() < 1e-9);
            prop_assert!(on_face, "{world_point:?}");
            prop_assert!((base.apply_point(&f.points_base[i]) - world_point).norm() < 1e-9);
        }
    }
}

#[test]
fn rotating_pattern_repeats_every_revolution() {
    for name in ["vlp32-like", "hdl64-like", "ouster64-like"] {
        let spec = PatternSpec::preset(name).unwrap();
        let PatternKind::Rotating { rpm, .. } = spec.kind else { panic!("{name} is rotating") };
        let rev = 60.0 / rpm;
        let first = spec.generate(0.0).unwrap().directions;
        for k in 1..5 {
            assert_eq!(spec.generate(k as f64 * rev).unwrap().directions, first, "{name} rev {k}");
        }
    }
}

#[test]
fn non_repetitive_frames_differ() {
    let spec = PatternSpec::preset("mid360-like").unwrap();
    let a = spec.generate(0.0).unwrap().directions;
    let b = spec.generate(spec.frame_period).unwrap().directions;
    assert_ne!(a, b);
}

#[test]
fn relative_noise_of_a_five_metre_return() {
    let n = 10_000;
    let f = ScanFrame::from_parts(0, 0.0, vec![Vec3::x(); n], vec![5.0; n], vec![true; n], &RigidTransform::identity());
    let cfg = SensorConfig {
        mask_ratio: 0.0,
        noise_ratio: 1.0,
        ..SensorConfig::default()
    };
    let out = apply_randomization(&f, &cfg);
    let (lo, hi) = out.ranges.iter().fold((f64::MAX, f64::MIN), |(l, h), r| (l.min(*r), h.max(*r)));
    assert!(lo >= 4.5 && hi <= 5.5, "{lo} {hi}");
    // Spread over most of the band, not collapsed to a point.
    assert!(lo < 4.55 && hi > 5.45, "{lo} {hi}");
}

#[test]
fn scan_of_ground_from_height() {
    let mut w = SceneWorld::new(1);
    w.register_static_mesh(0, plane(0.0, 100.0, 1, 0)).unwrap();
    let cfg = SensorConfig::ideal(PatternSpec::preset("vlp32-like").unwrap(), 100.0);
    let h = 1.5;
    let f = simulate_scan(&w, 0, &RigidTransform::from_translation(Vec3::new(0.0, 0.0, h)), &cfg, 0.0).unwrap();
    for i in 0..f.len() {
        let (_, el) = direction_angles(&f.directions[i]);
        if el < -0.05 {
            assert!(f.hit_flags[i]);
            let want = h / (-el).sin();
            assert!((f.ranges[i] - want).abs() < 1e-9 * want, "{} vs {want}", f.ranges[i]);
        } else {
            assert!(!f.hit_flags[i] || el < 0.0);
        }
    }
}

fn sample_frame() -> (ScanFrame, RigidTransform) {
    let mut w = SceneWorld::new(1);
    w.register_static_mesh(0, plane(0.0, 10.0, 1, 0)).unwrap();
    let mut cfg = SensorConfig::ideal(PatternSpec::preset("grid").unwrap(), 15.0);
    cfg.mount = RigidTransform::from_axis_angle(Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.1, 0.0, 0.2));
    let mut f = simulate_scan(&w, 0, &RigidTransform::from_translation(Vec3::z()), &cfg, 0.2).unwrap();
    f.env_id = 3;
    (f, cfg.mount)
}

#[test]
fn ply_round_trip_is_exact() {
    let (f, mount) = sample_frame();
    let mut buf = Vec::new();
    write_ply(&f, &mount, &mut buf).unwrap();
    let (g, m) = read_ply(BufReader::new(buf.as_slice())).unwrap();
    assert_eq!(m, mount);
    assert_eq!((g.env_id, g.t, g.frame_index), (f.env_id, f.t, f.frame_index));
    assert_eq!(g.points_base, f.points_base);
    assert_eq!(g.ranges, f.ranges);
    assert_eq!(g.hit_flags, f.hit_flags);
    // Directions are not stored; they come back from the points.
    for (a, b) in g.directions.iter().zip(&f.directions) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let (f, mount) = sample_frame();
    let mut buf = Vec::new();
    write_csv(&f, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("x,y,z,range,hit"));
    let g = read_csv(buf.as_slice(), f.env_id, f.t, &mount).unwrap();
    assert_eq!(g.ranges, f.ranges);
    assert_eq!(g.hit_flags, f.hit_flags);
    for (a, b) in g.points_base.iter().zip(&f.points_base) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn truncated_ply_is_an_error() {
    let (f, mount) = sample_frame();
    let mut buf = Vec::new();
    write_ply(&f, &mount, &mut buf).unwrap();
    buf.truncate(buf.len() - 7);
    assert!(read_ply(BufReader::new(buf.as_slice())).is_err());
}

#[test]
fn straight_down_elevation_is_minus_half_pi() {
    let (_, el) = direction_angles(&Vec3::new(0.0, 0.0, -1.0));
    assert_eq!(el, -FRAC_PI_2);
}
