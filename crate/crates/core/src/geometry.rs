//! Ray/volume kernel: closest point on a gaze ray, slab and quadratic
//! intersection tests, and center proximity.
//!
//! A gaze ray is a half-line. Every parametric result is clamped to `t >= 0`,
//! so nothing behind the eye can be hit. Comparisons use plain floating point
//! semantics with no epsilon inflation.

use crate::model::{aoi_center, AoiInstance, BoundingVolume, GazeSample, Vec3, UNIT_TOLERANCE};

/// Half-line `origin + t * direction`, `t >= 0`, with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`; returns `None` for a zero or non-finite vector.
    pub fn new(origin: Vec3, direction: Vec3) -> Option<Self> {
        let direction = direction.normalized()?;
        origin.is_finite().then_some(Self { origin, direction })
    }

    /// Ray of a valid sample whose direction is already unit length.
    pub fn from_sample(sample: &GazeSample) -> Option<Self> {
        if !sample.valid || !sample.origin.is_finite() {
            return None;
        }
        let norm = sample.direction.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return None;
        }
        Some(Self {
            origin: sample.origin,
            direction: sample.direction,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            origin: self.origin + offset,
            direction: self.direction,
        }
    }
}

/// Result of projecting a point onto a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub t: f64,
    pub distance: f64,
}

/// Interval of ray parameters where the ray is inside a volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub t_entry: f64,
    pub t_exit: f64,
}

/// Ray/AOI intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    pub instance_id: String,
    pub label: String,
    pub t_entry: f64,
    pub t_exit: f64,
}

/// Distance between an AOI center and the nearest point of the ray.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityRecord {
    pub instance_id: String,
    pub label: String,
    pub distance: f64,
    pub closest_point_on_ray: Vec3,
    pub t_closest: f64,
}

pub fn closest_point_on_ray(ray: &Ray, p: Vec3) -> ClosestPoint {
    let t = (p - ray.origin).dot(ray.direction).max(0.0);
    let point = ray.at(t);
    ClosestPoint {
        point,
        t,
        distance: (p - point).norm(),
    }
}

/// Slab test against an axis-aligned box.
///
/// An axis whose direction component is exactly zero rejects unless the
/// origin lies within that slab. Degenerate (flat) boxes are zero-thickness
/// slabs.
pub fn intersect_box(ray: &Ray, min: Vec3, max: Vec3) -> Option<Span> {
    let mut t_lo = 0.0_f64;
    let mut t_hi = f64::INFINITY;
    for axis in 0..3 {
        let o = ray.origin.component(axis);
        let d = ray.direction.component(axis);
        let (lo, hi) = (min.component(axis), max.component(axis));
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (mut t0, mut t1) = ((lo - o) * inv, (hi - o) * inv);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_lo = t_lo.max(t0);
        t_hi = t_hi.min(t1);
        if t_lo > t_hi {
            return None;
        }
    }
    Some(Span {
        t_entry: t_lo,
        t_exit: t_hi,
    })
}

/// Quadratic ray/sphere test. Tangency yields `t_entry == t_exit`.
pub fn intersect_sphere(ray: &Ray, center: Vec3, radius: f64) -> Option<Span> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.direction);
    let c = oc.dot(oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let (t0, t1) = (-b - root, -b + root);
    if t1 < 0.0 {
        return None;
    }
    Some(Span {
        t_entry: t0.max(0.0),
        t_exit: t1,
    })
}

pub fn intersect(ray: &Ray, volume: &BoundingVolume) -> Option<Span> {
    match *volume {
        BoundingVolume::Aabb { min, max } => intersect_box(ray, min, max),
        BoundingVolume::Sphere { center, radius } => intersect_sphere(ray, center, radius),
    }
}

pub fn hit(ray: &Ray, aoi: &AoiInstance) -> Option<HitRecord> {
    intersect(ray, &aoi.shape).map(|s| HitRecord {
        instance_id: aoi.instance_id.clone(),
        label: aoi.label.clone(),
        t_entry: s.t_entry,
        t_exit: s.t_exit,
    })
}

pub fn proximity(ray: &Ray, aoi: &AoiInstance) -> ProximityRecord {
    let cp = closest_point_on_ray(ray, aoi_center(&aoi.shape));
    ProximityRecord {
        instance_id: aoi.instance_id.clone(),
        label: aoi.label.clone(),
        distance: cp.distance,
        closest_point_on_ray: cp.point,
        t_closest: cp.t,
    }
}
