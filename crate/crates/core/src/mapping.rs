//! Per-sample gaze-to-AOI assignment: first hit, all hits in depth order,
//! and the nearest-neighbour group weighted by inverse center distance.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{hit, proximity, HitRecord, ProximityRecord, Ray};
use crate::model::{AoiInstance, GazeSample, Recording};

/// Default NN threshold in meters.
pub const DEFAULT_THRESHOLD_M: f64 = 0.25;

/// Raw proximity records are kept out to this multiple of the threshold so
/// that the group can be recomputed for smaller or larger thresholds.
pub const RAW_HORIZON_FACTOR: f64 = 4.0;

/// How a zero center distance is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroDistanceMode {
    /// Inverse-distance limit: zero-distance entries share all probability.
    #[default]
    Limit,
    /// Zero-distance entries get weight 0, as the formula is printed.
    PaperLiteral,
}

impl FromStr for ZeroDistanceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "limit" => Ok(Self::Limit),
            "paper-literal" => Ok(Self::PaperLiteral),
            other => Err(format!("unknown nn mode {other:?} (expected limit or paper-literal)")),
        }
    }
}

impl ZeroDistanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Limit => "limit",
            Self::PaperLiteral => "paper-literal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("no distances to weight")]
    EmptyInput,
    #[error("distance {0} is negative or not finite")]
    InvalidDistance(f64),
}

/// Inverse-distance probabilities `p_i = w_i / sum(w)`, `w_i = 1 / d_i`.
///
/// Weights are evaluated as `d_min / d_i`, which leaves `p` unchanged and
/// avoids overflow for tiny distances. In paper-literal mode a group whose
/// every distance is zero has no positive weight and yields all zeros.
pub fn nn_weights(distances: &[f64], mode: ZeroDistanceMode) -> Result<Vec<f64>, MappingError> {
    if distances.is_empty() {
        return Err(MappingError::EmptyInput);
    }
    if let Some(&bad) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(MappingError::InvalidDistance(bad));
    }
    let zeros = distances.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 && mode == ZeroDistanceMode::Limit {
        let share = 1.0 / zeros as f64;
        return Ok(distances
            .iter()
            .map(|&d| if d == 0.0 { share } else { 0.0 })
            .collect());
    }
    let Some(d_min) = distances.iter().copied().filter(|&d| d > 0.0).reduce(f64::min) else {
        return Ok(vec![0.0; distances.len()]);
    };
    let weights: Vec<f64> = distances
        .iter()
        .map(|&d| if d == 0.0 { 0.0 } else { d_min / d })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Rounds to 9 significant digits, the precision of the JSON export.
///
/// Mapping outputs are stored at this precision so an export is
/// self-reproducing: recomputing a group from exported distances gives the
/// exported probabilities.
pub fn canonical(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Deterministic tie-breaking: ascending `t`, then label, then instance id.
pub fn order_by_t_label_id(
    t_a: f64,
    label_a: &str,
    id_a: &str,
    t_b: f64,
    label_b: &str,
    id_b: &str,
) -> Ordering {
    t_a.total_cmp(&t_b)
        .then_with(|| label_a.cmp(label_b))
        .then_with(|| id_a.cmp(id_b))
}

/// One member of a nearest-neighbour group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnEntry {
    pub instance_id: String,
    pub label: String,
    pub distance: f64,
    pub t_closest: f64,
    /// Member because the ray intersects the AOI, not because of proximity.
    pub hit: bool,
    pub weight: f64,
    pub probability: f64,
}

/// AOIs within the threshold of a gaze ray, plus directly hit AOIs, sorted
/// by `t_closest` (nearest the viewer first).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NnGroup {
    pub threshold: f64,
    pub entries: Vec<NnEntry>,
}

impl NnGroup {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Proximity candidate with hit membership, before thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub instance_id: String,
    pub label: String,
    pub distance: f64,
    pub t_closest: f64,
    pub hit: bool,
}

/// NN group from candidates: members are those with `distance < threshold`
/// or a direct hit.
pub fn group_from_candidates<'a>(
    candidates: impl IntoIterator<Item = &'a Candidate>,
    threshold: f64,
    mode: ZeroDistanceMode,
) -> NnGroup {
    let mut members: Vec<&Candidate> = candidates
        .into_iter()
        .filter(|c| c.hit || c.distance < threshold)
        .collect();
    members.sort_by(|a, b| {
        order_by_t_label_id(a.t_closest, &a.label, &a.instance_id, b.t_closest, &b.label, &b.instance_id)
    });
    if members.is_empty() {
        return NnGroup {
            threshold,
            entries: Vec::new(),
        };
    }
    let distances: Vec<f64> = members.iter().map(|c| c.distance).collect();
    let probabilities = nn_weights(&distances, mode).expect("distances are finite and non-negative");
    let entries = members
        .into_iter()
        .zip(probabilities)
        .map(|(c, p)| NnEntry {
            instance_id: c.instance_id.clone(),
            label: c.label.clone(),
            distance: c.distance,
            t_closest: c.t_closest,
            hit: c.hit,
            weight: if c.distance == 0.0 { 0.0 } else { 1.0 / c.distance },
            probability: p,
        })
        .collect();
    NnGroup { threshold, entries }
}

/// Engine settings shared by every sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingConfig {
    pub threshold_m: f64,
    pub mode: ZeroDistanceMode,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            threshold_m: DEFAULT_THRESHOLD_M,
            mode: ZeroDistanceMode::Limit,
        }
    }
}

/// Everything the plot variants need to know about one sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleMapping {
    pub sample_index: usize,
    /// Intersected AOIs, ascending `t_entry`.
    pub hits: Vec<HitRecord>,
    pub nn: NnGroup,
    /// Candidates within the raw horizon or hit, sorted like the NN group.
    pub candidates: Vec<Candidate>,
}

impl SampleMapping {
    pub fn standard(&self) -> Option<&HitRecord> {
        self.hits.first()
    }
}

fn sorted_hits(ray: &Ray, aois: &[&AoiInstance]) -> Vec<HitRecord> {
    let mut hits: Vec<HitRecord> = aois
        .iter()
        .filter_map(|a| hit(ray, a))
        .map(|h| HitRecord {
            t_entry: canonical(h.t_entry),
            t_exit: canonical(h.t_exit),
            ..h
        })
        .collect();
    hits.sort_by(|a, b| {
        order_by_t_label_id(a.t_entry, &a.label, &a.instance_id, b.t_entry, &b.label, &b.instance_id)
    });
    hits
}

/// All intersected AOIs, nearest entry first. Empty for invalid samples.
pub fn map_depth(sample: &GazeSample, aois: &[&AoiInstance]) -> Vec<HitRecord> {
    match Ray::from_sample(sample) {
        Some(ray) => sorted_hits(&ray, aois),
        None => Vec::new(),
    }
}

/// Instance hit first by the gaze ray, if any.
pub fn map_standard(sample: &GazeSample, aois: &[&AoiInstance]) -> Option<String> {
    map_depth(sample, aois).into_iter().next().map(|h| h.instance_id)
}

fn candidates(ray: &Ray, aois: &[&AoiInstance], hits: &[HitRecord], horizon: f64) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = aois
        .iter()
        .map(|a| proximity(ray, a))
        .map(|p: ProximityRecord| {
            let is_hit = hits.iter().any(|h| h.instance_id == p.instance_id);
            Candidate {
                instance_id: p.instance_id,
                label: p.label,
                distance: canonical(p.distance),
                t_closest: canonical(p.t_closest),
                hit: is_hit,
            }
        })
        .filter(|c| c.hit || c.distance < horizon)
        .collect();
    out.sort_by(|a, b| {
        order_by_t_label_id(a.t_closest, &a.label, &a.instance_id, b.t_closest, &b.label, &b.instance_id)
    });
    out
}

/// Nearest-neighbour group of a sample. Empty for invalid samples.
pub fn map_nn(
    sample: &GazeSample,
    aois: &[&AoiInstance],
    threshold: f64,
    mode: ZeroDistanceMode,
) -> NnGroup {
    let Some(ray) = Ray::from_sample(sample) else {
        return NnGroup {
            threshold,
            entries: Vec::new(),
        };
    };
    let hits = sorted_hits(&ray, aois);
    group_from_candidates(&candidates(&ray, aois, &hits, threshold), threshold, mode)
}

/// Maps one sample under all strategies at once.
pub fn map_sample(
    sample_index: usize,
    sample: &GazeSample,
    aois: &[&AoiInstance],
    config: &MappingConfig,
) -> SampleMapping {
    let Some(ray) = Ray::from_sample(sample) else {
        return SampleMapping {
            sample_index,
            nn: NnGroup {
                threshold: config.threshold_m,
                entries: Vec::new(),
            },
            ..Default::default()
        };
    };
    let hits = sorted_hits(&ray, aois);
    let candidates = candidates(&ray, aois, &hits, RAW_HORIZON_FACTOR * config.threshold_m);
    let nn = group_from_candidates(&candidates, config.threshold_m, config.mode);
    SampleMapping {
        sample_index,
        hits,
        nn,
        candidates,
    }
}

/// Maps every sample of a recording against the AOIs active at its timestamp.
pub fn map_recording(recording: &Recording, config: &MappingConfig) -> Vec<SampleMapping> {
    recording
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let active: Vec<&AoiInstance> = recording.active_aois(s.timestamp_ms).collect();
            map_sample(i, s, &active, config)
        })
        .collect()
}
