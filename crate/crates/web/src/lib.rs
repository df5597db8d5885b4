//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The page generates a built-in scene once and then re-renders it as the
//! user moves the NN threshold, hides labels, or selects a time window.
//! Every binding delegates to a plain Rust method so the logic is testable
//! on native targets.

use scarfkit::export::{raw_horizon, AnalysisExport, ExportConfig};
use scarfkit::mapping::{map_recording, nn_weights};
use scarfkit::palette::Palette;
use scarfkit::render::{render_confidence_panel, render_svg, PanelConfig, RenderConfig};
use scarfkit::scarf::{build_from_mappings, filter_labels, merge_runs, recording_palette};
use scarfkit::scene::{builtin_script, generate, SceneId};
use scarfkit::{MappingConfig, Recording, Variant, ZeroDistanceMode};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct SceneDemo {
    recording: Recording,
    palette: Palette,
    view: Option<AnalysisExport>,
}

/// Comma-separated label list from a text field; blanks are ignored.
fn split_labels(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl SceneDemo {
    pub fn generate(scene: &str, seed: u64, sigma_deg: f64) -> Result<SceneDemo, String> {
        let id: SceneId = scene.parse()?;
        if !(sigma_deg.is_finite() && sigma_deg >= 0.0) {
            return Err(format!("noise must be a non-negative angle, got {sigma_deg}"));
        }
        let recording = generate(&builtin_script(id).with_seed(seed).with_noise_deg(sigma_deg)).recording;
        let palette = recording_palette(&recording);
        Ok(SceneDemo {
            recording,
            palette,
            view: None,
        })
    }

    /// Three-track scarf plot under the given settings.
    pub fn render_plot(&mut self, threshold_m: f64, nn_mode: &str, excluded: &str, merge: bool) -> Result<String, String> {
        if !(threshold_m.is_finite() && threshold_m > 0.0) {
            return Err(format!("threshold must be positive, got {threshold_m}"));
        }
        let mode: ZeroDistanceMode = nn_mode.parse()?;
        let excluded = split_labels(excluded);
        let (filtered, _) = filter_labels(&self.recording, &excluded);
        let mappings = map_recording(&filtered, &MappingConfig { threshold_m, mode });
        let models: Vec<_> = Variant::ALL
            .iter()
            .map(|&v| {
                let m = build_from_mappings(&filtered, &mappings, v, self.palette.clone());
                if merge {
                    merge_runs(&m)
                } else {
                    m
                }
            })
            .collect();
        let svg = render_svg(&models, &RenderConfig::default()).map_err(|e| e.to_string())?.svg;
        self.view = Some(AnalysisExport::assemble(
            &self.recording,
            &[],
            &models,
            &self.palette,
            ExportConfig {
                threshold_m,
                nn_mode: mode,
                window_ms: self.recording.window_ms,
                raw_horizon_m: raw_horizon(threshold_m),
                merge_runs: merge,
                excluded_labels: excluded,
            },
        ));
        Ok(svg.to_string())
    }

    /// Confidence bars for `[from_ms, to_ms]` of the last rendered plot.
    pub fn confidence_panel(&self, from_ms: i64, to_ms: i64) -> Result<String, String> {
        let view = self.view.as_ref().ok_or("render a plot first")?;
        render_confidence_panel(view, from_ms, to_ms, None, &PanelConfig::default()).map_err(|e| e.to_string())
    }

    pub fn labels(&self) -> Vec<String> {
        self.recording.labels()
    }

    pub fn duration(&self) -> i64 {
        self.recording.duration_ms()
    }
}

#[wasm_bindgen]
impl SceneDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(scene: &str, seed: u64, sigma_deg: f64) -> Result<SceneDemo, JsValue> {
        SceneDemo::generate(scene, seed, sigma_deg).map_err(|e| JsValue::from_str(&e))
    }

    pub fn render(&mut self, threshold_m: f64, nn_mode: &str, excluded: &str, merge: bool) -> Result<String, JsValue> {
        self.render_plot(threshold_m, nn_mode, excluded, merge)
            .map_err(|e| JsValue::from_str(&e))
    }

    pub fn confidence(&self, from_ms: i64, to_ms: i64) -> Result<String, JsValue> {
        self.confidence_panel(from_ms, to_ms).map_err(|e| JsValue::from_str(&e))
    }

    /// Labels in first-appearance order, comma separated.
    #[wasm_bindgen(js_name = labelList)]
    pub fn label_list(&self) -> String {
        self.labels().join(",")
    }

    #[wasm_bindgen(js_name = durationMs)]
    pub fn duration_ms(&self) -> i64 {
        self.duration()
    }
}

/// Inverse-distance probabilities for a list of center distances.
pub fn probabilities(distances: &[f64], nn_mode: &str) -> Result<Vec<f64>, String> {
    let mode: ZeroDistanceMode = nn_mode.parse()?;
    nn_weights(distances, mode).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = nnProbabilities)]
pub fn nn_probabilities(distances: Vec<f64>, nn_mode: &str) -> Result<Vec<f64>, JsValue> {
    probabilities(&distances, nn_mode).map_err(|e| JsValue::from_str(&e))
}
