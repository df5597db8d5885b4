//! Versioned JSON analysis export.
//!
//! The export is self-contained: besides the built models it carries, per
//! sample, the hit list and every AOI within four times the build threshold,
//! so NN groups can be recomputed for other thresholds, modes or label
//! exclusions without the original logs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::confidence::{combined_confidence, LabelConfidence};
use crate::geometry::HitRecord;
use crate::mapping::{group_from_candidates, Candidate, SampleMapping, ZeroDistanceMode, RAW_HORIZON_FACTOR};
use crate::model::{AoiInstance, BoundingVolume, ConfidencePoint, GazeSample, Recording, TimeSpan, Vec3};
use crate::palette::Palette;
use crate::scarf::{build_from_mappings, merge_runs, ScarfModel, Variant};

pub const EXPORT_VERSION: &str = "scarfkit-export/1";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unsupported export version {found:?}, expected {EXPORT_VERSION:?}")]
    VersionMismatch { found: String },
    #[error("malformed export: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportConfig {
    pub threshold_m: f64,
    pub nn_mode: ZeroDistanceMode,
    pub window_ms: i64,
    /// Candidates are exported out to this center distance.
    pub raw_horizon_m: f64,
    pub merge_runs: bool,
    pub excluded_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportAoi {
    pub instance_id: String,
    pub label: String,
    #[serde(rename = "virtual")]
    pub is_virtual: bool,
    pub confidence: f64,
    pub span: TimeSpan,
    pub shape: BoundingVolume,
    pub series: Vec<ConfidencePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportHit {
    pub instance_id: String,
    pub label: String,
    pub t_entry: f64,
    pub t_exit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSample {
    pub index: usize,
    pub timestamp_ms: i64,
    pub start_ms: i64,
    pub end_ms: i64,
    pub valid: bool,
    pub hits: Vec<ExportHit>,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub label: String,
    pub mean: f64,
    pub max: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisExport {
    pub version: String,
    pub meta: BTreeMap<String, String>,
    pub config: ExportConfig,
    pub duration_ms: i64,
    pub aois: Vec<ExportAoi>,
    pub samples: Vec<ExportSample>,
    pub models: Vec<ScarfModel>,
    pub palette: Palette,
    /// Whole-recording confidence per label.
    pub confidence: Vec<LabelSummary>,
}

impl AnalysisExport {
    pub fn assemble(
        recording: &Recording,
        mappings: &[SampleMapping],
        models: &[ScarfModel],
        palette: &Palette,
        config: ExportConfig,
    ) -> Self {
        let aois = recording
            .aois
            .iter()
            .map(|a| ExportAoi {
                instance_id: a.instance_id.clone(),
                label: a.label.clone(),
                is_virtual: a.is_virtual,
                confidence: a.confidence,
                span: a.active_span,
                shape: a.shape,
                series: a.confidence_series.clone(),
            })
            .collect();
        let samples = mappings
            .iter()
            .map(|m| {
                let s = &recording.samples[m.sample_index];
                let (start_ms, end_ms) = recording.sample_interval(m.sample_index);
                ExportSample {
                    index: m.sample_index,
                    timestamp_ms: s.timestamp_ms,
                    start_ms,
                    end_ms,
                    valid: s.valid,
                    hits: m
                        .hits
                        .iter()
                        .map(|h| ExportHit {
                            instance_id: h.instance_id.clone(),
                            label: h.label.clone(),
                            t_entry: h.t_entry,
                            t_exit: h.t_exit,
                        })
                        .collect(),
                    candidates: m.candidates.clone(),
                }
            })
            .collect();
        let confidence = recording
            .labels()
            .into_iter()
            .filter_map(|label| {
                let series = recording
                    .aois
                    .iter()
                    .filter(|a| a.label == label)
                    .map(|a| a.confidence_series.as_slice());
                combined_confidence(series, recording.window_ms, f64::NEG_INFINITY, f64::INFINITY).map(|c| {
                    LabelSummary {
                        label,
                        mean: c.mean,
                        max: c.max,
                        low_confidence: c.is_low(),
                    }
                })
            })
            .collect();
        AnalysisExport {
            version: EXPORT_VERSION.to_string(),
            meta: recording.meta.clone(),
            config,
            duration_ms: recording.duration_ms(),
            aois,
            samples,
            models: models.to_vec(),
            palette: palette.clone(),
            confidence,
        }
    }

    pub fn model(&self, variant: Variant) -> Option<&ScarfModel> {
        self.models.iter().find(|m| m.variant == variant)
    }

    /// Timestamps, validity and AOIs of the original recording; gaze rays
    /// are not exported.
    pub fn skeleton_recording(&self) -> Recording {
        Recording {
            samples: self
                .samples
                .iter()
                .map(|s| GazeSample {
                    timestamp_ms: s.timestamp_ms,
                    origin: Vec3::ZERO,
                    direction: Vec3::ZERO,
                    valid: s.valid,
                })
                .collect(),
            aois: self
                .aois
                .iter()
                .map(|a| AoiInstance {
                    instance_id: a.instance_id.clone(),
                    label: a.label.clone(),
                    shape: a.shape,
                    confidence: a.confidence,
                    is_virtual: a.is_virtual,
                    active_span: a.span,
                    confidence_series: a.series.clone(),
                })
                .collect(),
            window_ms: self.config.window_ms,
            meta: self.meta.clone(),
        }
    }

    /// Rebuilds a model from the exported per-sample records.
    ///
    /// `threshold` is clamped to the exported horizon; AOIs with an excluded
    /// label are dropped before weighting.
    pub fn rebuild(&self, variant: Variant, threshold: f64, mode: ZeroDistanceMode, excluded: &[String]) -> ScarfModel {
        let threshold = threshold.min(self.config.raw_horizon_m);
        let keep = |label: &str| !excluded.iter().any(|e| e == label);
        let mappings: Vec<SampleMapping> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let candidates: Vec<Candidate> =
                    s.candidates.iter().filter(|c| keep(&c.label)).cloned().collect();
                SampleMapping {
                    sample_index: i,
                    hits: s
                        .hits
                        .iter()
                        .filter(|h| keep(&h.label))
                        .map(|h| HitRecord {
                            instance_id: h.instance_id.clone(),
                            label: h.label.clone(),
                            t_entry: h.t_entry,
                            t_exit: h.t_exit,
                        })
                        .collect(),
                    nn: group_from_candidates(&candidates, threshold, mode),
                    candidates,
                }
            })
            .collect();
        let mut skeleton = self.skeleton_recording();
        skeleton.aois.retain(|a| keep(&a.label));
        let model = build_from_mappings(&skeleton, &mappings, variant, self.palette.clone());
        if self.config.merge_runs {
            merge_runs(&model)
        } else {
            model
        }
    }

    /// Labels drawn in any exported model during `[from_ms, to_ms]`, with
    /// their confidence over the selection, in palette order.
    pub fn selection_confidence(&self, from_ms: i64, to_ms: i64) -> Vec<(String, LabelConfidence)> {
        self.palette
            .labels()
            .filter(|label| {
                self.models.iter().any(|m| {
                    m.segments.iter().any(|s| {
                        s.start_ms < to_ms
                            && s.end_ms > from_ms
                            && s.subsegments.iter().any(|ss| ss.label == *label)
                    })
                })
            })
            .filter_map(|label| {
                let series = self
                    .aois
                    .iter()
                    .filter(|a| a.label == label)
                    .map(|a| a.series.as_slice());
                combined_confidence(series, self.config.window_ms, from_ms as f64, to_ms as f64)
                    .map(|c| (label.to_string(), c))
            })
            .collect()
    }
}

/// Default raw horizon for a build threshold.
pub fn raw_horizon(threshold_m: f64) -> f64 {
    RAW_HORIZON_FACTOR * threshold_m
}

fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
            if let Some(r) = serde_json::Number::from_f64(rounded) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Serializes an export: floats at 9 significant digits, keys sorted, one
/// trailing newline. Identical inputs give identical bytes.
pub fn write_export(export: &AnalysisExport) -> String {
    let mut value = serde_json::to_value(export).expect("export serializes");
    round_numbers(&mut value);
    let mut text = serde_json::to_string(&value).expect("value serializes");
    text.push('\n');
    text
}

pub fn read_export(text: &str) -> Result<AnalysisExport, ExportError> {
    let value: Value = serde_json::from_str(text)?;
    let found = value.get("version").and_then(Value::as_str).unwrap_or("");
    if found != EXPORT_VERSION {
        return Err(ExportError::VersionMismatch {
            found: found.to_string(),
        });
    }
    Ok(serde_json::from_value(value)?)
}
