//! Shared domain vocabulary: vectors, bounding volumes, gaze samples, AOI
//! instances and recordings.
//!
//! Units are fixed throughout the crate: time in integer milliseconds since
//! recording start, space in meters.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Tolerance on `|direction| = 1` for a valid gaze sample.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// A point or direction in 3D space, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Returns `None` for the zero vector or non-finite input.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn midpoint(self, other: Vec3) -> Vec3 {
        Vec3::new(
            0.5 * (self.x + other.x),
            0.5 * (self.y + other.y),
            0.5 * (self.z + other.z),
        )
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Spatial extent of an AOI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BoundingVolume {
    /// Axis-aligned box. Zero thickness along an axis is allowed.
    Aabb { min: Vec3, max: Vec3 },
    Sphere { center: Vec3, radius: f64 },
}

impl BoundingVolume {
    pub fn aabb(min: Vec3, max: Vec3) -> Self {
        BoundingVolume::Aabb { min, max }
    }

    /// Box from a center point and per-axis half extents.
    pub fn aabb_centered(center: Vec3, half: Vec3) -> Self {
        BoundingVolume::Aabb {
            min: center - half,
            max: center + half,
        }
    }

    pub fn sphere(center: Vec3, radius: f64) -> Self {
        BoundingVolume::Sphere { center, radius }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            BoundingVolume::Aabb { min, max } => {
                min.is_finite() && max.is_finite() && min.x <= max.x && min.y <= max.y && min.z <= max.z
            }
            BoundingVolume::Sphere { center, radius } => {
                center.is_finite() && radius.is_finite() && radius > 0.0
            }
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec3) -> bool {
        match *self {
            BoundingVolume::Aabb { min, max } => {
                (0..3).all(|a| min.component(a) <= p.component(a) && p.component(a) <= max.component(a))
            }
            BoundingVolume::Sphere { center, radius } => (p - center).norm() <= radius,
        }
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        match *self {
            BoundingVolume::Aabb { min, max } => BoundingVolume::Aabb {
                min: min + offset,
                max: max + offset,
            },
            BoundingVolume::Sphere { center, radius } => BoundingVolume::Sphere {
                center: center + offset,
                radius,
            },
        }
    }
}

/// Reference point of an AOI used for proximity: the box midpoint or the
/// sphere center.
pub fn aoi_center(volume: &BoundingVolume) -> Vec3 {
    match *volume {
        BoundingVolume::Aabb { min, max } => min.midpoint(max),
        BoundingVolume::Sphere { center, .. } => center,
    }
}

/// One timestamped gaze ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub timestamp_ms: i64,
    pub origin: Vec3,
    pub direction: Vec3,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(timestamp_ms: i64, origin: Vec3, direction: Vec3) -> Self {
        Self {
            timestamp_ms,
            origin,
            direction,
            valid: true,
        }
    }

    /// A sample without gaze data; rendered as white space.
    pub fn invalid(timestamp_ms: i64) -> Self {
        Self {
            timestamp_ms,
            origin: Vec3::ZERO,
            direction: Vec3::ZERO,
            valid: false,
        }
    }
}

/// Closed time interval in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl TimeSpan {
    pub fn new(start_ms: i64, end_ms: i64) -> Self {
        Self { start_ms, end_ms }
    }

    /// True when `t` lies within the span widened by `slack_ms` on each side.
    pub fn contains_with_slack(&self, t: i64, slack_ms: i64) -> bool {
        self.start_ms - slack_ms <= t && t <= self.end_ms + slack_ms
    }
}

/// A single classifier confidence observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidencePoint {
    pub timestamp_ms: i64,
    pub confidence: f64,
}

/// A labeled bounding volume valid over a time span.
///
/// Identity is `instance_id`; labels may repeat (two bottles share "bottle").
#[derive(Debug, Clone, PartialEq)]
pub struct AoiInstance {
    pub instance_id: String,
    pub label: String,
    pub shape: BoundingVolume,
    /// Summary confidence; the per-detection values live in `confidence_series`.
    pub confidence: f64,
    pub is_virtual: bool,
    pub active_span: TimeSpan,
    pub confidence_series: Vec<ConfidencePoint>,
}

impl AoiInstance {
    pub fn center(&self) -> Vec3 {
        aoi_center(&self.shape)
    }
}

/// Gaze samples plus the AOIs detected during the recording.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recording {
    pub samples: Vec<GazeSample>,
    pub aois: Vec<AoiInstance>,
    /// A sample at time `t` sees an AOI whose span contains `t` within
    /// this many milliseconds.
    pub window_ms: i64,
    pub meta: BTreeMap<String, String>,
}

impl Recording {
    /// AOIs active at `t`, in recording order.
    pub fn active_aois(&self, t: i64) -> impl Iterator<Item = &AoiInstance> {
        let w = self.window_ms;
        self.aois
            .iter()
            .filter(move |a| a.active_span.contains_with_slack(t, w))
    }

    /// Distinct labels in first-appearance order.
    pub fn labels(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.aois
            .iter()
            .filter(|a| seen.insert(a.label.as_str()))
            .map(|a| a.label.clone())
            .collect()
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.aois.iter().any(|a| a.label == label)
    }

    pub fn aoi(&self, instance_id: &str) -> Option<&AoiInstance> {
        self.aois.iter().find(|a| a.instance_id == instance_id)
    }

    /// Median positive inter-sample interval, or 1 ms for fewer than two samples.
    pub fn sample_period_ms(&self) -> i64 {
        let mut gaps: Vec<i64> = self
            .samples
            .windows(2)
            .map(|w| w[1].timestamp_ms - w[0].timestamp_ms)
            .filter(|&g| g > 0)
            .collect();
        if gaps.is_empty() {
            return 1;
        }
        gaps.sort_unstable();
        gaps[gaps.len() / 2]
    }

    /// Time covered by sample `index`: it holds until the next sample, and
    /// the last sample holds for one sample period.
    pub fn sample_interval(&self, index: usize) -> (i64, i64) {
        let start = self.samples[index].timestamp_ms;
        let end = match self.samples.get(index + 1) {
            Some(next) => next.timestamp_ms,
            None => start + self.sample_period_ms(),
        };
        (start, end)
    }

    /// End of the timeline `[0, T]`.
    pub fn duration_ms(&self) -> i64 {
        match self.samples.len() {
            0 => 0,
            n => self.sample_interval(n - 1).1.max(0),
        }
    }

    /// Copy of this recording without any AOI carrying one of `labels`.
    pub fn without_labels(&self, labels: &[String]) -> Recording {
        let mut out = self.clone();
        out.aois.retain(|a| !labels.iter().any(|l| l == &a.label));
        out
    }
}

/// A structural problem found by [`validate_recording`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum ValidationIssue {
    NonMonotoneTimestamp { index: usize, timestamp_ms: i64 },
    NonUnitDirection { index: usize, norm: f64 },
    NonFiniteOrigin { index: usize },
    EmptySpan { instance_id: String, start_ms: i64, end_ms: i64 },
    ConfidenceOutOfRange { instance_id: String, confidence: f64 },
    DuplicateInstanceId { instance_id: String },
    InvalidVolume { instance_id: String },
    SpanOutsideRecording { instance_id: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::NonMonotoneTimestamp { index, timestamp_ms } => {
                write!(f, "sample {index}: timestamp {timestamp_ms} ms is not after its predecessor")
            }
            ValidationIssue::NonUnitDirection { index, norm } => {
                write!(f, "sample {index}: direction has length {norm}")
            }
            ValidationIssue::NonFiniteOrigin { index } => {
                write!(f, "sample {index}: origin is not finite")
            }
            ValidationIssue::EmptySpan { instance_id, start_ms, end_ms } => {
                write!(f, "AOI {instance_id}: span [{start_ms}, {end_ms}] is empty")
            }
            ValidationIssue::ConfidenceOutOfRange { instance_id, confidence } => {
                write!(f, "AOI {instance_id}: confidence {confidence} outside [0, 1]")
            }
            ValidationIssue::DuplicateInstanceId { instance_id } => {
                write!(f, "AOI {instance_id}: duplicate instance id")
            }
            ValidationIssue::InvalidVolume { instance_id } => {
                write!(f, "AOI {instance_id}: invalid bounding volume")
            }
            ValidationIssue::SpanOutsideRecording { instance_id } => {
                write!(f, "AOI {instance_id}: active span does not overlap the gaze samples")
            }
        }
    }
}

fn confidence_in_range(c: f64) -> bool {
    (0.0..=1.0).contains(&c)
}

/// Checks the recording invariants. An empty list means well-formed.
pub fn validate_recording(recording: &Recording) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();

    for (index, s) in recording.samples.iter().enumerate() {
        if index > 0 && s.timestamp_ms <= recording.samples[index - 1].timestamp_ms {
            issues.push(ValidationIssue::NonMonotoneTimestamp {
                index,
                timestamp_ms: s.timestamp_ms,
            });
        }
        if s.valid {
            let norm = s.direction.norm();
            let off = (norm - 1.0).abs();
            if off.is_nan() || off > UNIT_TOLERANCE {
                issues.push(ValidationIssue::NonUnitDirection { index, norm });
            }
            if !s.origin.is_finite() {
                issues.push(ValidationIssue::NonFiniteOrigin { index });
            }
        }
    }

    let sample_range = match (recording.samples.first(), recording.samples.last()) {
        (Some(a), Some(b)) => Some((a.timestamp_ms, b.timestamp_ms)),
        _ => None,
    };

    let mut ids = HashSet::new();
    for aoi in &recording.aois {
        let id = &aoi.instance_id;
        if !ids.insert(id.as_str()) {
            issues.push(ValidationIssue::DuplicateInstanceId { instance_id: id.clone() });
        }
        if aoi.active_span.start_ms > aoi.active_span.end_ms {
            issues.push(ValidationIssue::EmptySpan {
                instance_id: id.clone(),
                start_ms: aoi.active_span.start_ms,
                end_ms: aoi.active_span.end_ms,
            });
        }
        let out_of_range = std::iter::once(aoi.confidence)
            .chain(aoi.confidence_series.iter().map(|p| p.confidence))
            .find(|c| !confidence_in_range(*c));
        if let Some(confidence) = out_of_range {
            issues.push(ValidationIssue::ConfidenceOutOfRange {
                instance_id: id.clone(),
                confidence,
            });
        }
        if !aoi.shape.is_valid() {
            issues.push(ValidationIssue::InvalidVolume { instance_id: id.clone() });
        }
        if let Some((first, last)) = sample_range {
            let w = recording.window_ms;
            if aoi.active_span.end_ms + w < first || aoi.active_span.start_ms - w > last {
                issues.push(ValidationIssue::SpanOutsideRecording { instance_id: id.clone() });
            }
        }
    }

    issues
}
