//! Gaze CSV and detection JSONL readers/writers, and the synchronization of
//! per-frame detections into AOI instances.
//!
//! Gaze CSV: header `timestamp_ms,valid,ox,oy,oz,dx,dy,dz`, LF line endings,
//! `.` as decimal point. Detections: one JSON object per line with
//! `timestamp_ms`, `instance_id`, `label`, `confidence`, `virtual` and a
//! `shape` of type `aabb` (`min`, `max`) or `sphere` (`center`, `radius`).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidence::series_confidence;
use crate::model::{
    AoiInstance, BoundingVolume, ConfidencePoint, GazeSample, Recording, TimeSpan, Vec3,
};

pub const GAZE_HEADER: &str = "timestamp_ms,valid,ox,oy,oz,dx,dy,dz";

/// Default detection bridging window: one detection frame at ~20 Hz.
pub const DEFAULT_WINDOW_MS: i64 = 50;

/// Directions this close to unit length are normalized on ingestion.
pub const NORMALIZE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("MissingHeader: gaze CSV must start with the header `{GAZE_HEADER}`")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Gaze,
    Detections,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum IngestIssueKind {
    RowParse { reason: String },
    NonUnitDirection { norm: f64 },
    NonMonotoneTimestamp { timestamp_ms: i64 },
    LineParse { reason: String },
    ConfidenceOutOfRange { confidence: f64 },
    UnsupportedShape { shape_type: String },
    InvalidShape,
}

/// A recoverable problem in one row of an input stream. `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestIssue {
    pub stream: Stream,
    pub line: usize,
    #[serde(flatten)]
    pub kind: IngestIssueKind,
}

impl fmt::Display for IngestIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stream = match self.stream {
            Stream::Gaze => "gaze",
            Stream::Detections => "detections",
        };
        write!(f, "{stream}:{}: ", self.line)?;
        match &self.kind {
            IngestIssueKind::RowParse { reason } => write!(f, "RowParse: {reason}"),
            IngestIssueKind::NonUnitDirection { norm } => {
                write!(f, "NonUnitDirection: direction length {norm}, sample marked invalid")
            }
            IngestIssueKind::NonMonotoneTimestamp { timestamp_ms } => {
                write!(f, "NonMonotoneTimestamp: {timestamp_ms} ms, row skipped")
            }
            IngestIssueKind::LineParse { reason } => write!(f, "LineParse: {reason}"),
            IngestIssueKind::ConfidenceOutOfRange { confidence } => {
                write!(f, "ConfidenceOutOfRange: {confidence}, detection skipped")
            }
            IngestIssueKind::UnsupportedShape { shape_type } => {
                write!(f, "UnsupportedShape: {shape_type:?}, detection skipped")
            }
            IngestIssueKind::InvalidShape => write!(f, "InvalidShape: detection skipped"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GazeParse {
    pub samples: Vec<GazeSample>,
    pub issues: Vec<IngestIssue>,
}

fn row_issue(line: usize, reason: impl Into<String>) -> IngestIssue {
    IngestIssue {
        stream: Stream::Gaze,
        line,
        kind: IngestIssueKind::RowParse { reason: reason.into() },
    }
}

pub fn parse_gaze_csv<R: Read>(input: R) -> Result<GazeParse, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(input);
    let mut records = reader.records();

    match records.next() {
        Some(Ok(header)) if header.iter().eq(GAZE_HEADER.split(',')) => {}
        Some(Err(e)) => match e.into_kind() {
            csv::ErrorKind::Io(io) => return Err(io.into()),
            _ => return Err(IngestError::MissingHeader),
        },
        _ => return Err(IngestError::MissingHeader),
    }

    let mut out = GazeParse::default();
    for record in records {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    return Err(io.into());
                }
                out.issues.push(row_issue(line, "unreadable row"));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 8 {
            out.issues
                .push(row_issue(line, format!("expected 8 columns, found {}", record.len())));
            continue;
        }
        let Ok(timestamp_ms) = record[0].parse::<i64>() else {
            out.issues.push(row_issue(line, format!("bad timestamp {:?}", &record[0])));
            continue;
        };
        let valid = match &record[1] {
            "1" => true,
            "0" => false,
            other => {
                out.issues.push(row_issue(line, format!("bad valid flag {other:?}")));
                continue;
            }
        };
        let mut values = [0.0; 6];
        let mut bad = None;
        for (slot, field) in values.iter_mut().zip(record.iter().skip(2)) {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => *slot = v,
                _ => {
                    bad = Some(field.to_string());
                    break;
                }
            }
        }
        if let Some(field) = bad {
            out.issues.push(row_issue(line, format!("bad number {field:?}")));
            continue;
        }
        if let Some(prev) = out.samples.last() {
            if timestamp_ms <= prev.timestamp_ms {
                out.issues.push(IngestIssue {
                    stream: Stream::Gaze,
                    line,
                    kind: IngestIssueKind::NonMonotoneTimestamp { timestamp_ms },
                });
                continue;
            }
        }
        if !valid {
            out.samples.push(GazeSample::invalid(timestamp_ms));
            continue;
        }
        let origin = Vec3::new(values[0], values[1], values[2]);
        let direction = Vec3::new(values[3], values[4], values[5]);
        let norm = direction.norm();
        let deviation = (norm - 1.0).abs();
        if deviation <= 1e-12 {
            out.samples.push(GazeSample::new(timestamp_ms, origin, direction));
        } else if deviation <= NORMALIZE_TOLERANCE {
            out.samples
                .push(GazeSample::new(timestamp_ms, origin, direction * (1.0 / norm)));
        } else {
            out.issues.push(IngestIssue {
                stream: Stream::Gaze,
                line,
                kind: IngestIssueKind::NonUnitDirection { norm },
            });
            out.samples.push(GazeSample::invalid(timestamp_ms));
        }
    }
    Ok(out)
}

pub fn write_gaze_csv(samples: &[GazeSample]) -> String {
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(GAZE_HEADER);
    out.push('\n');
    for s in samples {
        if s.valid {
            let (o, d) = (s.origin, s.direction);
            let _ = writeln!(
                out,
                "{},1,{},{},{},{},{},{}",
                s.timestamp_ms, o.x, o.y, o.z, d.x, d.y, d.z
            );
        } else {
            let _ = writeln!(out, "{},0,0,0,0,0,0,0", s.timestamp_ms);
        }
    }
    out
}

/// One per-frame AOI detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub timestamp_ms: i64,
    pub instance_id: String,
    pub label: String,
    pub confidence: f64,
    #[serde(rename = "virtual")]
    pub is_virtual: bool,
    pub shape: BoundingVolume,
}

#[derive(Debug, Deserialize)]
struct DetectionLine {
    timestamp_ms: i64,
    instance_id: String,
    label: String,
    confidence: f64,
    #[serde(rename = "virtual")]
    is_virtual: bool,
    shape: serde_json::Value,
}

#[derive(Debug, Clone, Default)]
pub struct DetectionParse {
    pub detections: Vec<Detection>,
    pub issues: Vec<IngestIssue>,
}

fn parse_detection_line(text: &str) -> Result<Detection, IngestIssueKind> {
    let row: DetectionLine = serde_json::from_str(text)
        .map_err(|e| IngestIssueKind::LineParse { reason: e.to_string() })?;
    if !(0.0..=1.0).contains(&row.confidence) {
        return Err(IngestIssueKind::ConfidenceOutOfRange { confidence: row.confidence });
    }
    let shape_type = row
        .shape
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or_else(|| IngestIssueKind::LineParse { reason: "shape without a type".into() })?;
    if shape_type != "aabb" && shape_type != "sphere" {
        return Err(IngestIssueKind::UnsupportedShape { shape_type: shape_type.to_string() });
    }
    let shape: BoundingVolume = serde_json::from_value(row.shape)
        .map_err(|e| IngestIssueKind::LineParse { reason: e.to_string() })?;
    if !shape.is_valid() {
        return Err(IngestIssueKind::InvalidShape);
    }
    Ok(Detection {
        timestamp_ms: row.timestamp_ms,
        instance_id: row.instance_id,
        label: row.label,
        confidence: row.confidence,
        is_virtual: row.is_virtual,
        shape,
    })
}

pub fn parse_detections<R: Read>(mut input: R) -> Result<DetectionParse, IngestError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut out = DetectionParse::default();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_detection_line(line) {
            Ok(d) => out.detections.push(d),
            Err(kind) => out.issues.push(IngestIssue {
                stream: Stream::Detections,
                line: index + 1,
                kind,
            }),
        }
    }
    Ok(out)
}

/// Serializes detections as JSONL, one object per line.
pub fn write_detections(detections: &[Detection]) -> String {
    let mut out = String::new();
    for d in detections {
        out.push_str(&serde_json::to_string(d).expect("detections serialize"));
        out.push('\n');
    }
    out
}

/// Per-frame detections implied by a recording's AOI instances, sorted by
/// time then instance id.
pub fn recording_detections(recording: &Recording) -> Vec<Detection> {
    let mut out: Vec<Detection> = recording
        .aois
        .iter()
        .flat_map(|a| {
            let points: Vec<ConfidencePoint> = if a.confidence_series.is_empty() {
                vec![ConfidencePoint {
                    timestamp_ms: a.active_span.start_ms,
                    confidence: a.confidence,
                }]
            } else {
                a.confidence_series.clone()
            };
            points.into_iter().map(move |p| Detection {
                timestamp_ms: p.timestamp_ms,
                instance_id: a.instance_id.clone(),
                label: a.label.clone(),
                confidence: p.confidence,
                is_virtual: a.is_virtual,
                shape: a.shape,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.timestamp_ms
            .cmp(&b.timestamp_ms)
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });
    out
}

fn detection_order(a: &Detection, b: &Detection) -> std::cmp::Ordering {
    let shape_key = |d: &Detection| -> [f64; 6] {
        match d.shape {
            BoundingVolume::Aabb { min, max } => [0.0, min.x, min.y, min.z, max.x, max.y],
            BoundingVolume::Sphere { center, radius } => [1.0, center.x, center.y, center.z, radius, 0.0],
        }
    };
    a.instance_id
        .cmp(&b.instance_id)
        .then(a.timestamp_ms.cmp(&b.timestamp_ms))
        .then(a.confidence.total_cmp(&b.confidence))
        .then(a.label.cmp(&b.label))
        .then_with(|| {
            shape_key(a)
                .iter()
                .zip(shape_key(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// Stitches per-frame detections into AOI instances and joins them with
/// the gaze samples.
///
/// Each detection stands for `±window_ms`; consecutive detections of one
/// instance id merge while their windows touch (gap `<= 2 * window_ms`).
/// A longer gap starts a new instance whose id gets a `#n` suffix. Label,
/// virtual flag and volume come from the first detection of each instance.
pub fn synchronize(samples: Vec<GazeSample>, detections: &[Detection], window_ms: i64) -> Recording {
    let window_ms = window_ms.max(0);
    let mut sorted: Vec<&Detection> = detections.iter().collect();
    sorted.sort_by(|a, b| detection_order(a, b));

    let mut used: HashSet<String> = detections.iter().map(|d| d.instance_id.clone()).collect();
    let mut aois = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let id = &sorted[i].instance_id;
        let mut j = i;
        while j < sorted.len() && &sorted[j].instance_id == id {
            j += 1;
        }
        let group = &sorted[i..j];
        let mut piece_start = 0;
        let mut piece_no = 1;
        for k in 1..=group.len() {
            let split = k == group.len()
                || group[k].timestamp_ms - group[k - 1].timestamp_ms > 2 * window_ms;
            if !split {
                continue;
            }
            let piece = &group[piece_start..k];
            let instance_id = if piece_no == 1 {
                id.clone()
            } else {
                let mut n = piece_no;
                loop {
                    let candidate = format!("{id}#{n}");
                    if used.insert(candidate.clone()) {
                        break candidate;
                    }
                    n += 1;
                }
            };
            aois.push(make_instance(instance_id, piece, window_ms));
            piece_no += 1;
            piece_start = k;
        }
        i = j;
    }
    aois.sort_by(|a: &AoiInstance, b| {
        a.active_span
            .start_ms
            .cmp(&b.active_span.start_ms)
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });

    let mut meta = BTreeMap::new();
    meta.insert("time_unit".to_string(), "ms".to_string());
    meta.insert("space_unit".to_string(), "m".to_string());
    meta.insert("window_ms".to_string(), window_ms.to_string());
    Recording {
        samples,
        aois,
        window_ms,
        meta,
    }
}

fn make_instance(instance_id: String, piece: &[&Detection], window_ms: i64) -> AoiInstance {
    let first = piece[0];
    let series: Vec<ConfidencePoint> = piece
        .iter()
        .map(|d| ConfidencePoint {
            timestamp_ms: d.timestamp_ms,
            confidence: d.confidence,
        })
        .collect();
    let confidence = series_confidence(&series, window_ms, f64::NEG_INFINITY, f64::INFINITY)
        .map_or(first.confidence, |c| c.mean);
    AoiInstance {
        instance_id,
        label: first.label.clone(),
        shape: first.shape,
        confidence,
        is_virtual: first.is_virtual,
        active_span: TimeSpan::new(first.timestamp_ms, piece[piece.len() - 1].timestamp_ms),
        confidence_series: series,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaze(body: &str) -> GazeParse {
        parse_gaze_csv(format!("{GAZE_HEADER}\n{body}").as_bytes()).unwrap()
    }

    fn det(t: i64, id: &str, conf: f64) -> Detection {
        Detection {
            timestamp_ms: t,
            instance_id: id.into(),
            label: "bottle".into(),
            confidence: conf,
            is_virtual: false,
            shape: BoundingVolume::aabb(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)),
        }
    }

    #[test]
    fn valid_row_along_z() {
        let p = gaze("0,1,0,0,0,0,0,1\n");
        assert!(p.issues.is_empty());
        assert_eq!(p.samples, vec![GazeSample::new(0, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0))]);
    }

    #[test]
    fn invalid_row_keeps_timestamp() {
        let p = gaze("0,0,0,0,0,0,0,0\n");
        assert!(p.issues.is_empty());
        assert_eq!(p.samples, vec![GazeSample::invalid(0)]);
    }

    #[test]
    fn short_row_is_skipped() {
        let p = gaze("0,1,0,0,0,0,0\n10,1,0,0,0,0,0,1\n");
        assert_eq!(p.samples.len(), 1);
        assert_eq!(p.issues.len(), 1);
        assert_eq!(p.issues[0].line, 2);
        assert!(matches!(p.issues[0].kind, IngestIssueKind::RowParse { .. }));
    }

    #[test]
    fn missing_header_is_fatal() {
        assert!(matches!(
            parse_gaze_csv("0,1,0,0,0,0,0,1\n".as_bytes()),
            Err(IngestError::MissingHeader)
        ));
        assert!(matches!(parse_gaze_csv("".as_bytes()), Err(IngestError::MissingHeader)));
    }

    #[test]
    fn near_unit_direction_is_normalized() {
        let p = gaze("0,1,0,0,0,0,0,1.0005\n5,1,0,0,0,0,0,2\n");
        assert_eq!(p.samples[0].direction, Vec3::new(0.0, 0.0, 1.0));
        assert!(!p.samples[1].valid);
        assert!(matches!(p.issues[0].kind, IngestIssueKind::NonUnitDirection { .. }));
    }

    #[test]
    fn non_monotone_and_bad_numbers() {
        let p = gaze("10,1,0,0,0,0,0,1\n10,1,0,0,0,0,0,1\n20,1,x,0,0,0,0,1\n30,2,0,0,0,0,0,1\n");
        assert_eq!(p.samples.len(), 1);
        assert_eq!(p.issues.len(), 3);
    }

    #[test]
    fn gaze_round_trip_is_byte_identical() {
        let text = format!("{GAZE_HEADER}\n0,1,0.1,-0.2,0,0,0.6,0.8\n16,0,0,0,0,0,0,0\n33,1,0,1.5,0,1,0,0\n");
        let p = parse_gaze_csv(text.as_bytes()).unwrap();
        assert_eq!(write_gaze_csv(&p.samples), text);
    }

    #[test]
    fn detection_lines() {
        let text = r#"{"timestamp_ms":0,"instance_id":"cup-1","label":"cup","confidence":0.9,"virtual":false,"shape":{"type":"aabb","min":[0,0,0],"max":[1,1,1]}}
{"timestamp_ms":0,"instance_id":"cup-2","label":"cup","confidence":1.2,"virtual":false,"shape":{"type":"aabb","min":[0,0,0],"max":[1,1,1]}}
{"timestamp_ms":0,"instance_id":"m","label":"m","confidence":0.5,"virtual":true,"shape":{"type":"mesh"}}
{"timestamp_ms":5,"instance_id":"s","label":"plant","confidence":0.5,"virtual":true,"extra":1,"shape":{"type":"sphere","center":[0,0,1],"radius":0.2}}
not json
{"timestamp_ms":5,"instance_id":"s","label":"plant","confidence":0.5,"virtual":true,"shape":{"type":"sphere","center":[0,0,1],"radius":-1}}
"#;
        let p = parse_detections(text.as_bytes()).unwrap();
        assert_eq!(p.detections.len(), 2);
        assert_eq!(p.detections[0].confidence, 0.9);
        assert_eq!(p.detections[1].shape, BoundingVolume::sphere(Vec3::new(0.0, 0.0, 1.0), 0.2));
        let kinds: Vec<_> = p.issues.iter().map(|i| (i.line, i.kind.clone())).collect();
        assert_eq!(kinds[0], (2, IngestIssueKind::ConfidenceOutOfRange { confidence: 1.2 }));
        assert_eq!(kinds[1], (3, IngestIssueKind::UnsupportedShape { shape_type: "mesh".into() }));
        assert!(matches!(kinds[2], (5, IngestIssueKind::LineParse { .. })));
        assert_eq!(kinds[3], (6, IngestIssueKind::InvalidShape));
    }

    #[test]
    fn detections_within_window_merge() {
        let r = synchronize(vec![], &[det(0, "bottle-1", 0.9), det(100, "bottle-1", 0.8)], 50);
        assert_eq!(r.aois.len(), 1);
        assert_eq!(r.aois[0].active_span, TimeSpan::new(0, 100));
        assert_eq!(r.aois[0].confidence_series.len(), 2);
        assert!((r.aois[0].confidence - 0.85).abs() < 1e-12);
    }

    #[test]
    fn long_gap_splits_with_unique_ids() {
        let r = synchronize(vec![], &[det(0, "bottle-1", 0.9), det(500, "bottle-1", 0.9)], 50);
        let ids: Vec<_> = r.aois.iter().map(|a| a.instance_id.as_str()).collect();
        assert_eq!(ids, vec!["bottle-1", "bottle-1#2"]);
        assert_eq!(r.aois[1].active_span, TimeSpan::new(500, 500));
    }

    #[test]
    fn suffix_skips_taken_ids() {
        let d = [det(0, "a", 0.9), det(500, "a", 0.9), det(0, "a#2", 0.5)];
        let r = synchronize(vec![], &d, 50);
        let mut ids: Vec<_> = r.aois.iter().map(|a| a.instance_id.clone()).collect();
        ids.sort();
        assert_eq!(ids, vec!["a", "a#2", "a#3"]);
    }

    #[test]
    fn no_detections_no_aois() {
        let r = synchronize(vec![GazeSample::invalid(0)], &[], 50);
        assert!(r.aois.is_empty());
        assert_eq!(r.samples.len(), 1);
    }

    #[test]
    fn synchronize_ignores_order_within_timestamp() {
        let a = [det(0, "x", 0.9), det(0, "y", 0.7), det(50, "y", 0.6), det(50, "x", 0.8)];
        let b = [det(0, "y", 0.7), det(0, "x", 0.9), det(50, "x", 0.8), det(50, "y", 0.6)];
        assert_eq!(synchronize(vec![], &a, 50), synchronize(vec![], &b, 50));
    }
}
