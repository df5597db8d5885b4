//! Duration-weighted aggregation of classifier confidence.
//!
//! Each detection owns the part of the timeline closer to it than to its
//! neighbours, clipped to `±window_ms`. A window's mean weighs every
//! detection by the overlap of its cell with the window.

use thiserror::Error;

use crate::model::{ConfidencePoint, Recording};

/// Mean and maximum confidence of one label over a time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfidence {
    pub mean: f64,
    pub max: f64,
    /// Total cell overlap in milliseconds backing `mean`.
    pub weight_ms: f64,
}

impl LabelConfidence {
    /// Below 0.5 reads as a likely misclassification.
    pub fn is_low(&self) -> bool {
        self.mean < 0.5
    }

    /// Duration-weighted combination of two aggregates.
    pub fn combine(self, other: LabelConfidence, self_ms: f64, other_ms: f64) -> LabelConfidence {
        let total = self_ms + other_ms;
        let mean = if total > 0.0 {
            (self.mean * self_ms + other.mean * other_ms) / total
        } else {
            0.5 * (self.mean + other.mean)
        };
        LabelConfidence {
            mean,
            max: self.max.max(other.max),
            weight_ms: self.weight_ms + other.weight_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfidenceError {
    #[error("label {0:?} does not occur in the recording")]
    UnknownLabel(String),
    #[error("no detections of {label:?} in [{from_ms}, {to_ms}] ms")]
    NoDetections { label: String, from_ms: i64, to_ms: i64 },
}

/// Time cell `[lo, hi]` owned by each point of a time-sorted series.
fn cells(points: &[ConfidencePoint], window_ms: i64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let w = window_ms as f64;
    (0..points.len()).map(move |k| {
        let t = points[k].timestamp_ms as f64;
        let mut lo = t - w;
        let mut hi = t + w;
        if k > 0 {
            lo = lo.max(0.5 * (points[k - 1].timestamp_ms as f64 + t));
        }
        if let Some(next) = points.get(k + 1) {
            hi = hi.min(0.5 * (t + next.timestamp_ms as f64));
        }
        (lo, hi.max(lo))
    })
}

/// Accumulates weighted confidence over several instance series.
#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    weighted_sum: f64,
    weight: f64,
    max: f64,
    any: bool,
    // fallback for zero-width cells
    point_sum: f64,
    point_count: usize,
}

impl Accumulator {
    fn add_series(&mut self, points: &[ConfidencePoint], window_ms: i64, from: f64, to: f64) {
        for (p, (lo, hi)) in points.iter().zip(cells(points, window_ms)) {
            let overlap = hi.min(to) - lo.max(from);
            let t = p.timestamp_ms as f64;
            let inside = from <= t && t <= to;
            if overlap > 0.0 || inside {
                if overlap > 0.0 {
                    self.weighted_sum += p.confidence * overlap;
                    self.weight += overlap;
                }
                if inside {
                    self.point_sum += p.confidence;
                    self.point_count += 1;
                }
                self.max = if self.any { self.max.max(p.confidence) } else { p.confidence };
                self.any = true;
            }
        }
    }

    fn finish(self) -> Option<LabelConfidence> {
        if !self.any {
            return None;
        }
        let mean = if self.weight > 0.0 {
            self.weighted_sum / self.weight
        } else {
            self.point_sum / self.point_count as f64
        };
        Some(LabelConfidence {
            mean,
            max: self.max,
            weight_ms: self.weight,
        })
    }
}

/// Weighted confidence of one series over `[from_ms, to_ms]`.
pub fn series_confidence(
    points: &[ConfidencePoint],
    window_ms: i64,
    from_ms: f64,
    to_ms: f64,
) -> Option<LabelConfidence> {
    let mut acc = Accumulator::default();
    acc.add_series(points, window_ms, from_ms, to_ms);
    acc.finish()
}

/// Weighted confidence over several series (instances sharing a label).
pub fn combined_confidence<'a>(
    series: impl IntoIterator<Item = &'a [ConfidencePoint]>,
    window_ms: i64,
    from_ms: f64,
    to_ms: f64,
) -> Option<LabelConfidence> {
    let mut acc = Accumulator::default();
    for s in series {
        acc.add_series(s, window_ms, from_ms, to_ms);
    }
    acc.finish()
}

/// Per-label confidence series over a window, as shown in the linked bar chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSeries {
    pub label: String,
    /// Detections whose cell overlaps the window, time-sorted.
    pub points: Vec<ConfidencePoint>,
    pub summary: LabelConfidence,
}

pub fn confidence_series(
    recording: &Recording,
    label: &str,
    from_ms: i64,
    to_ms: i64,
) -> Result<ConfidenceSeries, ConfidenceError> {
    if !recording.has_label(label) {
        return Err(ConfidenceError::UnknownLabel(label.to_string()));
    }
    let instances: Vec<&[ConfidencePoint]> = recording
        .aois
        .iter()
        .filter(|a| a.label == label)
        .map(|a| a.confidence_series.as_slice())
        .collect();
    let (from, to) = (from_ms as f64, to_ms as f64);
    let summary = combined_confidence(instances.iter().copied(), recording.window_ms, from, to)
        .ok_or_else(|| ConfidenceError::NoDetections {
            label: label.to_string(),
            from_ms,
            to_ms,
        })?;
    let mut points: Vec<ConfidencePoint> = instances
        .iter()
        .flat_map(|s| {
            s.iter()
                .zip(cells(s, recording.window_ms))
                .filter(move |(p, (lo, hi))| {
                    let t = p.timestamp_ms as f64;
                    hi.min(to) - lo.max(from) > 0.0 || (from <= t && t <= to)
                })
                .map(|(p, _)| *p)
        })
        .collect();
    points.sort_by(|a, b| {
        a.timestamp_ms
            .cmp(&b.timestamp_ms)
            .then(a.confidence.total_cmp(&b.confidence))
    });
    Ok(ConfidenceSeries {
        label: label.to_string(),
        points,
        summary,
    })
}
