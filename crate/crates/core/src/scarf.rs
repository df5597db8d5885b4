//! Scarf plot data model: one segment per sample interval, each holding
//! stacked sub-segments (nearest the viewer at the bottom, rank 0).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::{combined_confidence, LabelConfidence};
use crate::mapping::{map_recording, MappingConfig, SampleMapping};
use crate::model::Recording;
use crate::palette::{assign_palette, Palette};

/// Heights within this tolerance count as the same composition.
pub const MERGE_HEIGHT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    Depth,
    Nn,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Standard, Variant::Depth, Variant::Nn];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Depth => "depth",
            Variant::Nn => "nn",
        }
    }

    /// Track caption.
    pub fn title(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Depth => "depth",
            Variant::Nn => "NN",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(Variant::Standard),
            "depth" => Ok(Variant::Depth),
            "nn" => Ok(Variant::Nn),
            other => Err(format!("unknown variant {other:?} (expected standard, depth or nn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSegment {
    pub instance_id: String,
    pub label: String,
    /// Fraction of the track height, in (0, 1].
    pub height: f64,
    /// 0 is nearest the viewer and drawn at the bottom.
    pub depth_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_ms: i64,
    pub end_ms: i64,
    /// Sorted by depth rank; empty means white space.
    pub subsegments: Vec<SubSegment>,
    /// Confidence of each label in the segment over its time span.
    pub confidence: BTreeMap<String, SegmentConfidence>,
}

/// Duration-weighted mean and maximum confidence of one label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfidence {
    pub mean: f64,
    pub max: f64,
}

impl Segment {
    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }

    pub fn is_white(&self) -> bool {
        self.subsegments.is_empty()
    }

    fn white(start_ms: i64, end_ms: i64) -> Self {
        Segment {
            start_ms,
            end_ms,
            subsegments: Vec::new(),
            confidence: BTreeMap::new(),
        }
    }

    fn same_composition(&self, other: &Segment) -> bool {
        self.subsegments.len() == other.subsegments.len()
            && self.subsegments.iter().zip(&other.subsegments).all(|(a, b)| {
                a.instance_id == b.instance_id
                    && a.depth_rank == b.depth_rank
                    && (a.height - b.height).abs() <= MERGE_HEIGHT_TOLERANCE
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScarfModel {
    pub variant: Variant,
    pub duration_ms: i64,
    /// Time-ordered and tiling `[0, duration_ms]` exactly.
    pub segments: Vec<Segment>,
    pub palette: Palette,
}

impl ScarfModel {
    /// Total milliseconds during which `label` occupies any sub-segment.
    pub fn label_duration_ms(&self, label: &str) -> i64 {
        self.segments
            .iter()
            .filter(|s| s.subsegments.iter().any(|ss| ss.label == label))
            .map(Segment::duration_ms)
            .sum()
    }

    pub fn white_ms(&self) -> i64 {
        self.segments.iter().filter(|s| s.is_white()).map(Segment::duration_ms).sum()
    }

    /// Labels in at least one non-white segment, in palette order.
    pub fn visible_labels(&self) -> Vec<String> {
        self.palette
            .labels()
            .filter(|l| {
                self.segments
                    .iter()
                    .any(|s| s.subsegments.iter().any(|ss| ss.label == *l))
            })
            .map(str::to_string)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BuildConfig {
    pub mapping: MappingConfig,
    pub merge_runs: bool,
}

/// Palette in the recording's label first-appearance order.
pub fn recording_palette(recording: &Recording) -> Palette {
    assign_palette(&recording.labels())
}

/// Maps the recording and builds one variant.
pub fn build(recording: &Recording, variant: Variant, config: &BuildConfig) -> ScarfModel {
    let mappings = map_recording(recording, &config.mapping);
    let model = build_from_mappings(recording, &mappings, variant, recording_palette(recording));
    if config.merge_runs {
        merge_runs(&model)
    } else {
        model
    }
}

/// Builds several variants from one mapping pass.
pub fn build_all(
    recording: &Recording,
    variants: &[Variant],
    config: &BuildConfig,
    palette: &Palette,
) -> (Vec<SampleMapping>, Vec<ScarfModel>) {
    let mappings = map_recording(recording, &config.mapping);
    let models = variants
        .iter()
        .map(|&v| {
            let m = build_from_mappings(recording, &mappings, v, palette.clone());
            if config.merge_runs {
                merge_runs(&m)
            } else {
                m
            }
        })
        .collect();
    (mappings, models)
}

fn compose(mapping: &SampleMapping, variant: Variant) -> Vec<SubSegment> {
    match variant {
        Variant::Standard => mapping
            .standard()
            .map(|h| SubSegment {
                instance_id: h.instance_id.clone(),
                label: h.label.clone(),
                height: 1.0,
                depth_rank: 0,
            })
            .into_iter()
            .collect(),
        Variant::Depth => {
            let k = mapping.hits.len() as f64;
            mapping
                .hits
                .iter()
                .enumerate()
                .map(|(rank, h)| SubSegment {
                    instance_id: h.instance_id.clone(),
                    label: h.label.clone(),
                    height: 1.0 / k,
                    depth_rank: rank,
                })
                .collect()
        }
        Variant::Nn => mapping
            .nn
            .entries
            .iter()
            .filter(|e| e.probability > 0.0)
            .enumerate()
            .map(|(rank, e)| SubSegment {
                instance_id: e.instance_id.clone(),
                label: e.label.clone(),
                height: e.probability,
                depth_rank: rank,
            })
            .collect(),
    }
}

fn segment_confidence(recording: &Recording, subsegments: &[SubSegment], start: i64, end: i64) -> BTreeMap<String, SegmentConfidence> {
    let mut by_label: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for ss in subsegments {
        by_label.entry(ss.label.as_str()).or_default().push(ss.instance_id.as_str());
    }
    by_label
        .into_iter()
        .filter_map(|(label, ids)| {
            let series = ids
                .iter()
                .filter_map(|id| recording.aoi(id))
                .map(|a| a.confidence_series.as_slice());
            combined_confidence(series, recording.window_ms, start as f64, end as f64)
                .map(|c: LabelConfidence| (label.to_string(), SegmentConfidence { mean: c.mean, max: c.max }))
        })
        .collect()
}

/// Builds one variant from precomputed per-sample mappings.
///
/// The timeline starts at 0; time before the first sample is white. Each
/// sample holds until the next one and the last holds for one sample period.
pub fn build_from_mappings(
    recording: &Recording,
    mappings: &[SampleMapping],
    variant: Variant,
    palette: Palette,
) -> ScarfModel {
    let mut segments = Vec::with_capacity(mappings.len() + 1);
    if let Some(first) = recording.samples.first() {
        if first.timestamp_ms > 0 {
            segments.push(Segment::white(0, first.timestamp_ms));
        }
    }
    for mapping in mappings {
        let (start, end) = recording.sample_interval(mapping.sample_index);
        let start = start.max(segments.last().map_or(0, |s: &Segment| s.end_ms));
        if end <= start {
            continue;
        }
        let subsegments = compose(mapping, variant);
        let confidence = segment_confidence(recording, &subsegments, start, end);
        segments.push(Segment {
            start_ms: start,
            end_ms: end,
            subsegments,
            confidence,
        });
    }
    let duration_ms = segments.last().map_or(0, |s| s.end_ms);
    ScarfModel {
        variant,
        duration_ms,
        segments,
        palette,
    }
}

/// Merges adjacent segments of identical composition (same instances and
/// ranks, heights within [`MERGE_HEIGHT_TOLERANCE`] of the run's first
/// segment). Confidences merge as duration-weighted means.
pub fn merge_runs(model: &ScarfModel) -> ScarfModel {
    let mut out: Vec<Segment> = Vec::with_capacity(model.segments.len());
    for seg in &model.segments {
        if let Some(last) = out.last_mut() {
            if last.end_ms == seg.start_ms && last.same_composition(seg) {
                let (a, b) = (last.duration_ms() as f64, seg.duration_ms() as f64);
                for (label, c) in &seg.confidence {
                    match last.confidence.get_mut(label) {
                        Some(prev) => {
                            let lc = |x: &SegmentConfidence| LabelConfidence { mean: x.mean, max: x.max, weight_ms: 0.0 };
                            let m = lc(prev).combine(lc(c), a, b);
                            *prev = SegmentConfidence { mean: m.mean, max: m.max };
                        }
                        None => {
                            last.confidence.insert(label.clone(), *c);
                        }
                    }
                }
                last.end_ms = seg.end_ms;
                continue;
            }
        }
        out.push(seg.clone());
    }
    ScarfModel {
        segments: out,
        ..model.clone()
    }
}

/// A label to exclude that the recording does not contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "label {:?} does not occur in the recording", self.0)
    }
}

/// Removes every AOI with an excluded label. Mappings must be recomputed
/// from the result so NN probabilities renormalize over the remaining AOIs.
pub fn filter_labels(recording: &Recording, excluded: &[String]) -> (Recording, Vec<UnknownLabel>) {
    let warnings = excluded
        .iter()
        .filter(|l| !recording.has_label(l))
        .map(|l| UnknownLabel(l.clone()))
        .collect();
    (recording.without_labels(excluded), warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HitRecord;
    use crate::mapping::{Candidate, NnGroup, group_from_candidates, ZeroDistanceMode};
    use crate::model::{AoiInstance, BoundingVolume, ConfidencePoint, GazeSample, TimeSpan, Vec3};

    fn recording_with(samples: usize, aois: Vec<AoiInstance>) -> Recording {
        Recording {
            samples: (0..samples)
                .map(|i| GazeSample::new(10 * i as i64, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)))
                .collect(),
            aois,
            window_ms: 50,
            meta: Default::default(),
        }
    }

    fn aoi(id: &str, label: &str, z: f64, conf: f64) -> AoiInstance {
        AoiInstance {
            instance_id: id.into(),
            label: label.into(),
            shape: BoundingVolume::aabb_centered(Vec3::new(0.0, 0.0, z), Vec3::new(0.1, 0.1, 0.1)),
            confidence: conf,
            is_virtual: false,
            active_span: TimeSpan::new(0, 100),
            confidence_series: vec![
                ConfidencePoint { timestamp_ms: 0, confidence: conf },
                ConfidencePoint { timestamp_ms: 50, confidence: conf },
                ConfidencePoint { timestamp_ms: 100, confidence: conf },
            ],
        }
    }

    fn hit(id: &str, label: &str, t: f64) -> HitRecord {
        HitRecord { instance_id: id.into(), label: label.into(), t_entry: t, t_exit: t + 0.1 }
    }

    fn mapping(index: usize, hits: Vec<HitRecord>, nn: NnGroup) -> SampleMapping {
        SampleMapping { sample_index: index, hits, nn, candidates: vec![] }
    }

    fn segment(start: i64, end: i64, parts: &[(&str, f64)]) -> Segment {
        Segment {
            start_ms: start,
            end_ms: end,
            subsegments: parts
                .iter()
                .enumerate()
                .map(|(r, (id, h))| SubSegment {
                    instance_id: id.to_string(),
                    label: id.to_string(),
                    height: *h,
                    depth_rank: r,
                })
                .collect(),
            confidence: BTreeMap::new(),
        }
    }

    fn model(segments: Vec<Segment>) -> ScarfModel {
        ScarfModel {
            variant: Variant::Nn,
            duration_ms: segments.last().map_or(0, |s| s.end_ms),
            segments,
            palette: Palette::default(),
        }
    }

    #[test]
    fn standard_single_hit() {
        let rec = recording_with(1, vec![aoi("cup", "cup", 1.0, 0.9)]);
        let m = build(&rec, Variant::Standard, &BuildConfig::default());
        assert_eq!(m.segments.len(), 1);
        let s = &m.segments[0];
        assert_eq!(s.subsegments.len(), 1);
        assert_eq!(s.subsegments[0].label, "cup");
        assert_eq!(s.subsegments[0].height, 1.0);
        assert!((s.confidence["cup"].mean - 0.9).abs() < 1e-12);
    }

    #[test]
    fn depth_stacks_nearest_at_bottom() {
        let rec = recording_with(1, vec![aoi("bottle", "bottle", 2.0, 0.9), aoi("cup", "cup", 1.0, 0.9)]);
        let m = build(&rec, Variant::Depth, &BuildConfig::default());
        let subs = &m.segments[0].subsegments;
        assert_eq!(subs.len(), 2);
        assert_eq!((subs[0].label.as_str(), subs[0].depth_rank, subs[0].height), ("cup", 0, 0.5));
        assert_eq!((subs[1].label.as_str(), subs[1].depth_rank, subs[1].height), ("bottle", 1, 0.5));
    }

    #[test]
    fn nn_heights_are_probabilities() {
        let cands = vec![
            Candidate { instance_id: "cup".into(), label: "cup".into(), distance: 0.1, t_closest: 1.0, hit: false },
            Candidate { instance_id: "bottle".into(), label: "bottle".into(), distance: 0.3, t_closest: 1.2, hit: false },
        ];
        let nn = group_from_candidates(&cands, 0.5, ZeroDistanceMode::Limit);
        let rec = recording_with(1, vec![]);
        let m = build_from_mappings(&rec, &[mapping(0, vec![], nn)], Variant::Nn, Palette::default());
        let subs = &m.segments[0].subsegments;
        assert_eq!(subs[0].label, "cup");
        assert_eq!(subs[0].depth_rank, 0);
        assert!((subs[0].height - 0.75).abs() < 1e-12);
        assert!((subs[1].height - 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_mapping_is_white_and_leading_gap_is_white() {
        let mut rec = recording_with(2, vec![]);
        rec.samples[0].timestamp_ms = 5;
        rec.samples[1].timestamp_ms = 15;
        let maps = vec![mapping(0, vec![], NnGroup::default()), mapping(1, vec![hit("a", "a", 1.0)], NnGroup::default())];
        let m = build_from_mappings(&rec, &maps, Variant::Depth, Palette::default());
        let spans: Vec<_> = m.segments.iter().map(|s| (s.start_ms, s.end_ms, s.is_white())).collect();
        assert_eq!(spans, vec![(0, 5, true), (5, 15, true), (15, 25, false)]);
        assert_eq!(m.duration_ms, 25);
    }

    #[test]
    fn merge_adjacent_identical() {
        let m = model(vec![segment(0, 10, &[("A", 1.0)]), segment(10, 20, &[("A", 1.0)]), segment(20, 30, &[("B", 1.0)])]);
        let merged = merge_runs(&m);
        let spans: Vec<_> = merged.segments.iter().map(|s| (s.start_ms, s.end_ms)).collect();
        assert_eq!(spans, vec![(0, 20), (20, 30)]);
    }

    #[test]
    fn different_heights_do_not_merge() {
        let m = model(vec![segment(0, 10, &[("A", 0.75), ("B", 0.25)]), segment(10, 20, &[("A", 0.6), ("B", 0.4)])]);
        assert_eq!(merge_runs(&m).segments.len(), 2);
    }

    #[test]
    fn white_run_collapses() {
        let m = model(vec![segment(0, 10, &[]), segment(10, 20, &[]), segment(20, 35, &[])]);
        let merged = merge_runs(&m);
        assert_eq!(merged.segments.len(), 1);
        assert_eq!(merged.segments[0].duration_ms(), 35);
    }

    #[test]
    fn merge_compares_against_run_anchor() {
        let m = model(vec![
            segment(0, 10, &[("A", 0.5), ("B", 0.5)]),
            segment(10, 20, &[("A", 0.5000008), ("B", 0.4999992)]),
            segment(20, 30, &[("A", 0.5000016), ("B", 0.4999984)]),
        ]);
        let once = merge_runs(&m);
        assert_eq!(once.segments.len(), 2);
        assert_eq!(merge_runs(&once), once);
    }

    #[test]
    fn merged_confidence_is_duration_weighted() {
        let mut a = segment(0, 30, &[("A", 1.0)]);
        a.confidence.insert("A".into(), SegmentConfidence { mean: 0.9, max: 0.9 });
        let mut b = segment(30, 40, &[("A", 1.0)]);
        b.confidence.insert("A".into(), SegmentConfidence { mean: 0.5, max: 0.6 });
        let merged = merge_runs(&model(vec![a, b]));
        let c = merged.segments[0].confidence["A"];
        assert!((c.mean - 0.8).abs() < 1e-12);
        assert_eq!(c.max, 0.9);
    }

    #[test]
    fn filter_warns_on_unknown_and_can_empty_everything() {
        let rec = recording_with(3, vec![aoi("cup", "cup", 1.0, 0.9)]);
        let (same, warnings) = filter_labels(&rec, &["Book".to_string()]);
        assert_eq!(same, rec);
        assert_eq!(warnings, vec![UnknownLabel("Book".into())]);
        let (none, warnings) = filter_labels(&rec, &["cup".to_string()]);
        assert!(warnings.is_empty());
        let m = build(&none, Variant::Standard, &BuildConfig { merge_runs: true, ..Default::default() });
        assert!(m.segments.iter().all(Segment::is_white));
        assert_eq!(m.segments.len(), 1);
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("NN".parse::<Variant>(), Ok(Variant::Nn));
        assert!("scarf".parse::<Variant>().is_err());
    }
}
