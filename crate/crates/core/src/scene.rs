//! Seeded synthetic recordings of four desk-scale AR scenes.
//!
//! The viewer sits at the origin looking along +z with y up; objects stand
//! on a table below eye level. Layouts are qualitative: depth-staggered
//! placements with scripted gaze orders, so tests assert structure rather
//! than exact dwell times.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use std::collections::BTreeMap;

use crate::ingest::{synchronize, Detection, DEFAULT_WINDOW_MS};
use crate::model::{BoundingVolume, GazeSample, Recording, Vec3};

/// Default angular jitter, 0.5 degrees.
pub const DEFAULT_NOISE_DEG: f64 = 0.5;

pub const TRUE_POSITIVE_CONFIDENCE: (f64, f64) = (0.75, 0.95);
pub const FALSE_POSITIVE_CONFIDENCE: (f64, f64) = (0.25, 0.45);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SceneId {
    /// Two bottles at different depths sharing one label.
    #[serde(rename = "BB")]
    Bb,
    /// Physical bottle between a virtual plant and a virtual bust.
    #[serde(rename = "VP_B_VB")]
    VpBVb,
    /// Virtual plant and bust with a false-positive book in front of the bust.
    #[serde(rename = "VP_VB")]
    VpVb,
    /// Cup beside the virtual plant at equal depth, bust behind.
    #[serde(rename = "VP_C_VB")]
    VpCVb,
}

impl SceneId {
    pub const ALL: [SceneId; 4] = [SceneId::Bb, SceneId::VpBVb, SceneId::VpVb, SceneId::VpCVb];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneId::Bb => "BB",
            SceneId::VpBVb => "VP_B_VB",
            SceneId::VpVb => "VP_VB",
            SceneId::VpCVb => "VP_C_VB",
        }
    }
}

impl fmt::Display for SceneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SceneId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SceneId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scene {s:?} (expected BB, VP_B_VB, VP_VB or VP_C_VB)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedAoi {
    pub instance_id: String,
    pub label: String,
    pub shape: BoundingVolume,
    pub is_virtual: bool,
    /// Detection confidences are drawn uniformly from this range.
    pub confidence_range: (f64, f64),
    /// Detection window in ms; `None` means the whole recording.
    pub active_ms: Option<(i64, i64)>,
    /// The detector reports an object that is not in the scene.
    pub false_positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    /// Point of regard; `None` is a span without gaze data.
    pub target: Option<Vec3>,
    pub dwell_ms: i64,
    /// Instance ids the participant means to look at.
    pub intended: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneScript {
    pub scene_id: SceneId,
    pub eye: Vec3,
    pub aois: Vec<ScriptedAoi>,
    pub waypoints: Vec<Waypoint>,
    pub sample_rate_hz: f64,
    pub detection_rate_hz: f64,
    /// Standard deviation of the angular jitter per axis, radians.
    pub noise_sigma_rad: f64,
    pub seed: u64,
    pub window_ms: i64,
}

impl SceneScript {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise_deg(mut self, sigma_deg: f64) -> Self {
        self.noise_sigma_rad = sigma_deg.to_radians();
        self
    }

    pub fn total_ms(&self) -> i64 {
        self.waypoints.iter().map(|w| w.dwell_ms).sum()
    }

    pub fn aoi(&self, instance_id: &str) -> Option<&ScriptedAoi> {
        self.aois.iter().find(|a| a.instance_id == instance_id)
    }

    /// Labels of scripted false-positive detections.
    pub fn false_positive_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .aois
            .iter()
            .filter(|a| a.false_positive)
            .map(|a| a.label.clone())
            .collect();
        labels.dedup();
        labels
    }
}

/// Intended targets per generated sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub scene: SceneId,
    pub seed: u64,
    pub samples: Vec<GroundTruthSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthSample {
    pub timestamp_ms: i64,
    pub waypoint: usize,
    pub intended: Vec<String>,
}

impl GroundTruth {
    /// Milliseconds during which `instance_id` is the single intended target,
    /// using the same sample intervals as the scarf builder.
    pub fn dwell_ms(&self, recording: &Recording, instance_id: &str) -> i64 {
        self.samples
            .iter()
            .enumerate()
            .filter(|(i, s)| recording.samples[*i].valid && s.intended.len() == 1 && s.intended[0] == instance_id)
            .map(|(i, _)| {
                let (a, b) = recording.sample_interval(i);
                b - a
            })
            .sum()
    }

    /// Per-instance single-target dwell times.
    pub fn dwell_table(&self, recording: &Recording) -> BTreeMap<String, i64> {
        let mut ids: Vec<&str> = self
            .samples
            .iter()
            .filter(|s| s.intended.len() == 1)
            .map(|s| s.intended[0].as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter()
            .map(|id| (id.to_string(), self.dwell_ms(recording, id)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub recording: Recording,
    pub detections: Vec<Detection>,
    pub ground_truth: GroundTruth,
}

fn perpendicular_basis(d: Vec3) -> (Vec3, Vec3) {
    let helper = if d.y.abs() < 0.9 { Vec3::new(0.0, 1.0, 0.0) } else { Vec3::new(1.0, 0.0, 0.0) };
    let u = d.cross(helper).normalized().expect("non-parallel helper");
    let v = d.cross(u);
    (u, v)
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Generates gaze samples and 20 Hz detections, then synchronizes them the
/// same way logged files are.
pub fn generate(script: &SceneScript) -> Generated {
    assert!(script.sample_rate_hz > 0.0, "sample rate must be positive");
    assert!(script.noise_sigma_rad >= 0.0, "noise must be non-negative");

    let total = script.total_ms();
    let mut gaze_rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut det_rng = ChaCha8Rng::seed_from_u64(script.seed ^ 0x9e37_79b9_7f4a_7c15);
    let jitter = (script.noise_sigma_rad > 0.0)
        .then(|| Normal::new(0.0, script.noise_sigma_rad).expect("finite sigma"));

    let mut samples = Vec::new();
    let mut truth = Vec::new();
    let mut k: u64 = 0;
    loop {
        let t = (k as f64 * 1000.0 / script.sample_rate_hz).floor() as i64;
        if t >= total {
            break;
        }
        k += 1;
        if samples.last().is_some_and(|s: &GazeSample| s.timestamp_ms >= t) {
            continue;
        }
        let mut elapsed = 0;
        let (index, waypoint) = script
            .waypoints
            .iter()
            .enumerate()
            .find(|(_, w)| {
                elapsed += w.dwell_ms;
                t < elapsed
            })
            .expect("t is inside the script");
        let sample = match waypoint.target.and_then(|p| (p - script.eye).normalized()) {
            Some(ideal) => {
                let direction = match &jitter {
                    Some(normal) => {
                        let (u, v) = perpendicular_basis(ideal);
                        let a: f64 = normal.sample(&mut gaze_rng);
                        let b: f64 = normal.sample(&mut gaze_rng);
                        (ideal + u * a.tan() + v * b.tan()).normalized().expect("perturbed direction")
                    }
                    None => ideal,
                };
                GazeSample::new(t, script.eye, direction)
            }
            None => GazeSample::invalid(t),
        };
        samples.push(sample);
        truth.push(GroundTruthSample {
            timestamp_ms: t,
            waypoint: index,
            intended: waypoint.intended.clone(),
        });
    }

    let last_t = samples.last().map_or(0, |s| s.timestamp_ms);
    let period = (1000.0 / script.detection_rate_hz).round().max(1.0) as i64;
    let mut detections = Vec::new();
    let mut t = 0;
    while t <= last_t {
        for aoi in &script.aois {
            let active = aoi.active_ms.is_none_or(|(a, b)| a <= t && t <= b);
            if !active {
                continue;
            }
            let (lo, hi) = aoi.confidence_range;
            let confidence = if hi > lo { round3(det_rng.gen_range(lo..=hi)) } else { lo };
            detections.push(Detection {
                timestamp_ms: t,
                instance_id: aoi.instance_id.clone(),
                label: aoi.label.clone(),
                confidence,
                is_virtual: aoi.is_virtual,
                shape: aoi.shape,
            });
        }
        t += period;
    }

    let mut recording = synchronize(samples, &detections, script.window_ms);
    recording.meta.insert("scene".into(), script.scene_id.to_string());
    recording.meta.insert("seed".into(), script.seed.to_string());
    recording
        .meta
        .insert("noise_sigma_deg".into(), format!("{}", script.noise_sigma_rad.to_degrees()));
    recording
        .meta
        .insert("sample_rate_hz".into(), format!("{}", script.sample_rate_hz));

    Generated {
        recording,
        detections,
        ground_truth: GroundTruth {
            scene: script.scene_id,
            seed: script.seed,
            samples: truth,
        },
    }
}

fn scripted(
    id: &str,
    label: &str,
    shape: BoundingVolume,
    is_virtual: bool,
    confidence_range: (f64, f64),
) -> ScriptedAoi {
    ScriptedAoi {
        instance_id: id.into(),
        label: label.into(),
        shape,
        is_virtual,
        confidence_range,
        active_ms: None,
        false_positive: confidence_range == FP,
    }
}

fn look(target: Vec3, dwell_ms: i64, intended: &[&str]) -> Waypoint {
    Waypoint {
        target: Some(target),
        dwell_ms,
        intended: intended.iter().map(|s| s.to_string()).collect(),
    }
}

fn blink(dwell_ms: i64) -> Waypoint {
    Waypoint {
        target: None,
        dwell_ms,
        intended: Vec::new(),
    }
}

fn boxed(center: Vec3, half: Vec3) -> BoundingVolume {
    BoundingVolume::aabb_centered(center, half)
}

const TP: (f64, f64) = TRUE_POSITIVE_CONFIDENCE;
const FP: (f64, f64) = FALSE_POSITIVE_CONFIDENCE;

/// Overlap of the two bottle silhouettes, seen from the eye.
pub const BB_OVERLAP_TARGET: Vec3 = Vec3::new(0.0063, -0.273, 0.7);

fn script(scene_id: SceneId, aois: Vec<ScriptedAoi>, waypoints: Vec<Waypoint>) -> SceneScript {
    SceneScript {
        scene_id,
        eye: Vec3::ZERO,
        aois,
        waypoints,
        sample_rate_hz: 60.0,
        detection_rate_hz: 20.0,
        noise_sigma_rad: DEFAULT_NOISE_DEG.to_radians(),
        seed: 7,
        window_ms: DEFAULT_WINDOW_MS,
    }
}

/// Canonical script for one scene (seed 7, 0.5 degree jitter, 60 Hz gaze).
pub fn builtin_script(scene: SceneId) -> SceneScript {
    match scene {
        SceneId::Bb => {
            let front = Vec3::new(-0.04, -0.30, 0.60);
            let back = Vec3::new(0.05, -0.28, 0.85);
            let half = Vec3::new(0.05, 0.12, 0.05);
            script(
                scene,
                vec![
                    scripted("bottle-front", "bottle", boxed(front, half), false, TP),
                    scripted("bottle-back", "bottle", boxed(back, half), false, TP),
                ],
                vec![
                    look(BB_OVERLAP_TARGET, 1500, &["bottle-front", "bottle-back"]),
                    look(front, 1500, &["bottle-front"]),
                    blink(200),
                    look(back, 1500, &["bottle-back"]),
                ],
            )
        }
        SceneId::VpBVb => {
            let plant = Vec3::new(-0.22, -0.22, 0.55);
            let bottle = Vec3::new(-0.08, -0.28, 0.80);
            let bust = Vec3::new(0.0, -0.24, 1.10);
            script(
                scene,
                vec![
                    scripted("plant", "plant", BoundingVolume::sphere(plant, 0.07), true, TP),
                    scripted("bottle", "bottle", boxed(bottle, Vec3::new(0.04, 0.12, 0.04)), false, TP),
                    scripted("bust", "bust", boxed(bust, Vec3::new(0.12, 0.15, 0.10)), true, TP),
                ],
                vec![
                    look(plant, 1200, &["plant"]),
                    look(bottle, 1200, &["bottle"]),
                    look(bust, 1200, &["bust"]),
                    blink(200),
                    look(bottle, 1200, &["bottle"]),
                    look(plant, 1200, &["plant"]),
                ],
            )
        }
        SceneId::VpVb => {
            let plant = Vec3::new(-0.20, -0.22, 0.55);
            let bust = Vec3::new(0.05, -0.24, 1.10);
            script(
                scene,
                vec![
                    scripted("plant", "plant", BoundingVolume::sphere(plant, 0.07), true, TP),
                    scripted("bust", "bust", boxed(bust, Vec3::new(0.12, 0.15, 0.10)), true, TP),
                    scripted(
                        "book",
                        "Book",
                        BoundingVolume::aabb(Vec3::new(-0.10, -0.40, 0.88), Vec3::new(0.20, -0.05, 0.92)),
                        false,
                        FP,
                    ),
                ],
                vec![
                    look(plant, 1200, &["plant"]),
                    look(bust, 1500, &["bust"]),
                    blink(200),
                    look(plant, 1200, &["plant"]),
                    look(bust, 1500, &["bust"]),
                ],
            )
        }
        SceneId::VpCVb => {
            let plant = Vec3::new(0.15, -0.22, 0.60);
            let cup = Vec3::new(-0.05, -0.30, 0.60);
            let bust = Vec3::new(0.02, -0.20, 1.15);
            script(
                scene,
                vec![
                    scripted("plant", "plant", BoundingVolume::sphere(plant, 0.07), true, TP),
                    scripted("cup", "cup", boxed(cup, Vec3::new(0.04, 0.05, 0.04)), false, TP),
                    scripted("bust", "bust", boxed(bust, Vec3::new(0.12, 0.15, 0.10)), true, TP),
                ],
                vec![
                    look(plant, 1200, &["plant"]),
                    look(cup, 1200, &["cup"]),
                    look(bust, 1200, &["bust"]),
                    blink(200),
                    look(cup, 1200, &["cup"]),
                    look(plant, 1200, &["plant"]),
                ],
            )
        }
    }
}

/// The four canonical scripts.
pub fn builtin_scripts() -> Vec<SceneScript> {
    SceneId::ALL.into_iter().map(builtin_script).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{map_depth, map_standard};
    use crate::model::{validate_recording, AoiInstance};

    #[test]
    fn four_scripts_with_expected_layouts() {
        let scripts = builtin_scripts();
        assert_eq!(scripts.len(), 4);
        let bb = &scripts[0];
        assert_eq!(bb.aois.len(), 2);
        assert!(bb.aois.iter().all(|a| a.label == "bottle"));

        let vpcvb = builtin_script(SceneId::VpCVb);
        let z = |id: &str| crate::model::aoi_center(&vpcvb.aoi(id).unwrap().shape).z;
        assert_eq!(z("plant"), z("cup"));
        assert!(z("bust") > z("cup"));

        let vpbvb = builtin_script(SceneId::VpBVb);
        let bottle = vpbvb.aoi("bottle").unwrap();
        assert!(!bottle.is_virtual);
        let zb = |id: &str| crate::model::aoi_center(&vpbvb.aoi(id).unwrap().shape).z;
        assert!(zb("plant") < zb("bottle") && zb("bottle") < zb("bust"));
        assert!(vpbvb.aoi("plant").unwrap().is_virtual && vpbvb.aoi("bust").unwrap().is_virtual);
    }

    #[test]
    fn scene_ids_parse() {
        for id in SceneId::ALL {
            assert_eq!(id.as_str().parse::<SceneId>(), Ok(id));
        }
        assert!("XX".parse::<SceneId>().is_err());
    }

    #[test]
    fn generation_is_reproducible() {
        let s = builtin_script(SceneId::VpVb).with_seed(11);
        assert_eq!(generate(&s), generate(&s));
        assert_ne!(generate(&s).recording, generate(&s.clone().with_seed(12)).recording);
    }

    #[test]
    fn generated_recordings_validate_cleanly() {
        for s in builtin_scripts() {
            let g = generate(&s);
            assert_eq!(validate_recording(&g.recording), vec![], "{}", s.scene_id);
            assert_eq!(g.recording.samples.len(), g.ground_truth.samples.len());
        }
    }

    #[test]
    fn overlap_gaze_crosses_both_bottles() {
        let g = generate(&builtin_script(SceneId::Bb).with_noise_deg(0.0));
        let aois: Vec<&AoiInstance> = g.recording.aois.iter().collect();
        for (s, truth) in g.recording.samples.iter().zip(&g.ground_truth.samples) {
            if truth.waypoint == 0 {
                let ids: Vec<_> = map_depth(s, &aois).into_iter().map(|h| h.instance_id).collect();
                assert_eq!(ids, vec!["bottle-front", "bottle-back"]);
            }
        }
    }

    #[test]
    fn noiseless_center_gaze_recovers_targets() {
        for s in builtin_scripts() {
            let fp = s.false_positive_labels();
            let mut g = generate(&s.with_noise_deg(0.0));
            // a false-positive occluder hides its target by construction
            g.recording = g.recording.without_labels(&fp);
            for (i, (sample, truth)) in g.recording.samples.iter().zip(&g.ground_truth.samples).enumerate() {
                if !sample.valid || truth.intended.len() != 1 {
                    continue;
                }
                let active: Vec<&AoiInstance> = g.recording.active_aois(sample.timestamp_ms).collect();
                assert_eq!(
                    map_standard(sample, &active).as_deref(),
                    Some(truth.intended[0].as_str()),
                    "{} sample {i}",
                    g.ground_truth.scene
                );
            }
        }
    }

    #[test]
    fn book_is_a_low_confidence_detection() {
        let g = generate(&builtin_script(SceneId::VpVb));
        let book: Vec<_> = g.detections.iter().filter(|d| d.label == "Book").collect();
        assert!(!book.is_empty());
        assert!(book.iter().all(|d| (0.25..=0.45).contains(&d.confidence)));
        let mean = g.recording.aoi("book").unwrap().confidence;
        assert!(mean < 0.5);
    }
}
