//! Feature checklist, each entry backed by a small runtime probe.

use serde::Serialize;

use crate::batch::batch_scan;
use crate::geometry::primitives::{cuboid, icosphere, plane};
use crate::geometry::Vec3;
use crate::pattern::{coverage_fraction, direction_angles, PatternKind, PatternSpec};
use crate::scene::SceneWorld;
use crate::sensor::{simulate_scan, SensorConfig};
use crate::transform::RigidTransform;

#[derive(Debug, Clone, Serialize)]
pub struct Capability {
    pub feature: &'static str,
    pub probe: &'static str,
    pub passed: bool,
}

fn ideal(name: &str, rays: usize) -> SensorConfig {
    let p = PatternSpec::preset(name).expect("built-in preset").with_rays_per_frame(rays).expect("valid count");
    SensorConfig::ideal(p, 30.0)
}

fn rotating() -> bool {
    let spec = PatternSpec::preset("vlp32-like").expect("built-in preset");
    let PatternKind::Rotating { channel_elevations, .. } = &spec.kind else {
        return false;
    };
    let Ok(b) = spec.generate(0.0) else { return false };
    b.directions.iter().zip(channel_elevations.iter().cycle()).all(|(d, el)| (direction_angles(d).1 - el).abs() < 1e-9)
}

fn solid_state() -> bool {
    let spec = PatternSpec::preset("avia-like").expect("built-in preset");
    let ([az_lo, az_hi], _) = spec.fov();
    spec.generate(0.0).is_ok_and(|b| {
        b.directions.iter().all(|d| {
            let az = direction_angles(d).0;
            az >= az_lo - 1e-9 && az <= az_hi + 1e-9
        })
    }) && az_hi - az_lo < std::f64::consts::PI
}

fn non_repetitive() -> bool {
    let spec = PatternSpec::preset("mid360-like").expect("built-in preset");
    match (coverage_fraction(&spec, 1, 1.0), coverage_fraction(&spec, 10, 1.0)) {
        (Ok(one), Ok(ten)) => ten > one,
        _ => false,
    }
}

fn static_irregular() -> bool {
    let mut w = SceneWorld::new(1);
    if w.register_static_mesh(0, icosphere(Vec3::new(3.0, 0.0, 0.0), 1.0, 3, 0)).is_err() {
        return false;
    }
    let f = simulate_scan(&w, 0, &RigidTransform::identity(), &ideal("grid", 2048), 0.0);
    f.is_ok_and(|f| f.hit_count() > 0 && f.ranges.iter().zip(&f.hit_flags).all(|(r, h)| !h || (*r >= 2.0 - 1e-3)))
}

fn dynamic_irregular() -> bool {
    let mut w = SceneWorld::new(1);
    let Ok(id) = w.register_dynamic_entity(0, icosphere(Vec3::zeros(), 0.5, 2, 0)) else {
        return false;
    };
    let sensor = ideal("grid", 2048);
    let mut hits = Vec::new();
    for x in [2.0, 4.0] {
        if w.update_dynamic(&[(id, RigidTransform::from_translation(Vec3::new(x, 0.0, 0.0)))], x).is_err() {
            return false;
        }
        match simulate_scan(&w, 0, &RigidTransform::identity(), &sensor, x) {
            Ok(f) => hits.push(f.ranges.iter().zip(&f.hit_flags).filter(|(_, h)| **h).map(|(r, _)| *r).fold(f64::MAX, f64::min)),
            Err(_) => return false,
        }
    }
    (hits[0] - 1.5).abs() < 0.05 && (hits[1] - 3.5).abs() < 0.05
}

fn self_occlusion() -> bool {
    let mut w = SceneWorld::new(1);
    if w.register_static_mesh(0, plane(0.0, 20.0, 1, 0)).is_err() {
        return false;
    }
    let Ok(torso) = w.register_dynamic_entity(0, cuboid(Vec3::new(-0.3, 0.0, 0.0), Vec3::new(0.6, 0.3, 0.2), 0)) else {
        return false;
    };
    let base = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 0.4));
    if w.update_dynamic(&[(torso, base)], 0.0).is_err() {
        return false;
    }
    let mut sensor = ideal("mid360-like", 4000);
    sensor.mount = RigidTransform::from_translation(Vec3::new(0.1, 0.0, 0.15));
    simulate_scan(&w, 0, &base, &sensor, 0.0).is_ok_and(|f| {
        f.points_base.iter().zip(&f.hit_flags).any(|(p, h)| *h && p.z > -0.2 && p.x < 0.0)
    })
}

fn cross_platform() -> bool {
    let mut w = SceneWorld::new(1);
    if w.register_static_mesh(0, plane(0.0, 10.0, 1, 0)).is_err() {
        return false;
    }
    let pose = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    batch_scan(&w, &[0], &pose, &[1, 7], &ideal("grid", 512), 0.0, false).is_ok_and(|b| b.hits.data.contains(&1))
}

fn massively_parallel() -> bool {
    let n = 256;
    let mut w = SceneWorld::new(n);
    let mut moves = Vec::new();
    for env in 0..n {
        match w.register_dynamic_entity(env, cuboid(Vec3::zeros(), Vec3::repeat(0.5), 0)) {
            Ok(id) => moves.push((id, RigidTransform::from_translation(Vec3::new(2.0, 0.0, 0.0)))),
            Err(_) => return false,
        }
    }
    let before = w.stats();
    if w.update_dynamic(&moves, 0.0).is_err() || w.update_dynamic(&moves, 0.1).is_err() {
        return false;
    }
    let after = w.stats();
    after.refits + after.rebuilds - before.refits - before.rebuilds == 2
}

/// Runs every probe.
pub fn capabilities() -> Vec<Capability> {
    let probes: [(&str, &str, fn() -> bool); 8] = [
        ("Rotating LiDAR", "vlp32-like rays sit on the channel elevations", rotating),
        ("Solid-state LiDAR", "avia-like rays stay inside a forward field of view", solid_state),
        ("Hybrid solid-state LiDAR (non-repetitive scan)", "mid360-like 10-frame coverage exceeds 1-frame coverage", non_repetitive),
        ("Static irregular objects", "scan of a static icosphere returns its surface", static_irregular),
        ("Dynamic irregular objects", "moving icosphere is seen at each new position", dynamic_irregular),
        ("Self-occlusion", "robot torso entity returns short hits behind the sensor", self_occlusion),
        ("Cross-platform support", "engine-agnostic flat-array scan from pose buffers", cross_platform),
        ("Massively parallel execution", "256 environments, one BVH maintenance per update", massively_parallel),
    ];
    probes
        .into_iter()
        .map(|(feature, probe, f)| Capability {
            feature,
            probe,
            passed: f(),
        })
        .collect()
}
