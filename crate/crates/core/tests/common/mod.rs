//! Random recordings for property tests.
#![allow(dead_code)]

use proptest::prelude::*;
use scarfkit::model::{AoiInstance, BoundingVolume, ConfidencePoint, GazeSample, Recording, TimeSpan, Vec3};

pub const LABELS: [&str; 3] = ["bottle", "cup", "bust"];

pub fn vec3(range: std::ops::Range<f64>) -> impl Strategy<Value = Vec3> {
    (range.clone(), range.clone(), range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

pub fn unit() -> impl Strategy<Value = Vec3> {
    vec3(-1.0..1.0).prop_filter_map("near-zero direction", |v| (v.norm() > 1e-3).then(|| v.normalized().unwrap()))
}

/// Direction in a cone around +z, where the random AOIs live.
fn forward() -> impl Strategy<Value = Vec3> {
    (-0.4..0.4f64, -0.4..0.4f64).prop_map(|(x, y)| Vec3::new(x, y, 1.0).normalized().unwrap())
}

pub fn volume() -> impl Strategy<Value = BoundingVolume> {
    let center = (-0.3..0.3f64, -0.3..0.3f64, 0.3..1.5f64).prop_map(|(x, y, z)| Vec3::new(x, y, z));
    prop_oneof![
        (center.clone(), vec3(0.02..0.2)).prop_map(|(c, h)| BoundingVolume::aabb_centered(c, h)),
        (center, 0.02..0.2f64).prop_map(|(c, r)| BoundingVolume::sphere(c, r)),
    ]
}

fn sample(t: i64) -> impl Strategy<Value = GazeSample> {
    (vec3(-0.05..0.05), forward(), 0..10u8).prop_map(move |(o, d, v)| {
        if v == 0 {
            GazeSample::invalid(t)
        } else {
            GazeSample::new(t, o, d)
        }
    })
}

fn aoi(index: usize, duration: i64) -> impl Strategy<Value = AoiInstance> {
    (
        0..LABELS.len(),
        volume(),
        0..=duration,
        0..=duration,
        prop::collection::vec(0.0..=1.0f64, 1..4),
        any::<bool>(),
    )
        .prop_map(move |(l, shape, a, b, confs, is_virtual)| {
            let (start, end) = (a.min(b), a.max(b) + 1);
            let step = ((end - start) / confs.len() as i64).max(1);
            let series: Vec<ConfidencePoint> = confs
                .iter()
                .enumerate()
                .map(|(i, &c)| ConfidencePoint {
                    timestamp_ms: start + i as i64 * step,
                    confidence: c,
                })
                .collect();
            AoiInstance {
                instance_id: format!("a{index}"),
                label: LABELS[l].to_string(),
                shape,
                confidence: confs.iter().sum::<f64>() / confs.len() as f64,
                is_virtual,
                active_span: TimeSpan::new(start, end),
                confidence_series: series,
            }
        })
}

/// A recording of 1–40 samples and 0–5 AOIs clustered ahead of the viewer.
pub fn recording() -> impl Strategy<Value = Recording> {
    (0..30i64, prop::collection::vec(5..25i64, 1..40), 0..6usize)
        .prop_flat_map(|(t0, gaps, n_aois)| {
            let times: Vec<i64> = gaps
                .iter()
                .scan(t0, |t, g| {
                    let now = *t;
                    *t += g;
                    Some(now)
                })
                .collect();
            let duration = *times.last().unwrap() + 20;
            let samples: Vec<_> = times.into_iter().map(sample).collect();
            let aois: Vec<_> = (0..n_aois).map(|i| aoi(i, duration)).collect();
            (samples, aois)
        })
        .prop_map(|(samples, aois)| Recording {
            samples,
            aois,
            window_ms: 50,
            meta: Default::default(),
        })
}
