mod args;
mod config;

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;
use scarfkit::export::{raw_horizon, read_export, write_export, AnalysisExport, ExportConfig};
use scarfkit::ingest::{parse_detections, parse_gaze_csv, synchronize, write_detections, write_gaze_csv, IngestIssue, DEFAULT_WINDOW_MS};
use scarfkit::mapping::{map_recording, DEFAULT_THRESHOLD_M};
use scarfkit::model::{validate_recording, Recording, ValidationIssue};
use scarfkit::render::{render_confidence_panel, render_svg, PanelConfig, RenderConfig, RenderWarning};
use scarfkit::scarf::{build_from_mappings, filter_labels, merge_runs, recording_palette};
use scarfkit::scene::{builtin_script, generate, SceneId, DEFAULT_NOISE_DEG};
use scarfkit::{MappingConfig, Variant, ZeroDistanceMode};
use serde::Serialize;

use args::{Cli, Command, ConfidenceArgs, GenerateArgs, InputArgs, NnModeArg, OutputFormat, PlotArgs, ValidateArgs};
use config::FileConfig;

/// Bad flag values or config contents: exit 2 like clap's own usage errors.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Confidence(a) => cmd_confidence(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

struct Loaded {
    recording: Recording,
    ingest_issues: Vec<IngestIssue>,
}

fn load(input: &InputArgs, file: &FileConfig) -> anyhow::Result<Loaded> {
    let window_ms = input.window_ms.or(file.window_ms).unwrap_or(DEFAULT_WINDOW_MS);
    if window_ms < 0 {
        return Err(usage("--window-ms must be non-negative"));
    }
    let gaze = File::open(&input.gaze).with_context(|| format!("opening {}", input.gaze.display()))?;
    let gaze = parse_gaze_csv(gaze).with_context(|| input.gaze.display().to_string())?;
    let det = File::open(&input.detections).with_context(|| format!("opening {}", input.detections.display()))?;
    let det = parse_detections(det).with_context(|| input.detections.display().to_string())?;
    let mut ingest_issues = gaze.issues;
    ingest_issues.extend(det.issues);
    Ok(Loaded {
        recording: synchronize(gaze.samples, &det.detections, window_ms),
        ingest_issues,
    })
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    samples: usize,
    aois: usize,
    warnings: &'a [IngestIssue],
    issues: &'a [ValidationIssue],
}

fn cmd_validate(a: ValidateArgs) -> anyhow::Result<ExitCode> {
    let file = FileConfig::load(a.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    let loaded = load(&a.input, &file)?;
    let issues = validate_recording(&loaded.recording);
    if a.json {
        let report = ValidateReport {
            samples: loaded.recording.samples.len(),
            aois: loaded.recording.aois.len(),
            warnings: &loaded.ingest_issues,
            issues: &issues,
        };
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for w in &loaded.ingest_issues {
            println!("warning: {w}");
        }
        for i in &issues {
            println!("issue: {i}");
        }
        println!(
            "{} samples, {} AOIs, {} warnings, {} issues",
            loaded.recording.samples.len(),
            loaded.recording.aois.len(),
            loaded.ingest_issues.len(),
            issues.len()
        );
    }
    Ok(if issues.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn parse_selection(text: &str) -> anyhow::Result<(i64, i64)> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("selection {text:?} must look like t0:t1")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<i64>()
            .map_err(|_| usage(format!("selection bound {s:?} is not an integer millisecond value")))
    };
    let (t0, t1) = (parse(a)?, parse(b)?);
    if t1 <= t0 {
        return Err(usage(format!("selection {text:?} is empty: t1 must exceed t0")));
    }
    Ok((t0, t1))
}

fn parse_variants(names: &[String]) -> anyhow::Result<Vec<Variant>> {
    let mut out = Vec::new();
    for n in names {
        let v: Variant = n.parse().map_err(usage)?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(usage("--variant needs at least one of standard, depth, nn"));
    }
    Ok(out)
}

/// Output paths for the requested format; `both` writes `<stem>.svg` and `<stem>.json`.
fn output_paths(out: &Path, format: OutputFormat) -> (Option<PathBuf>, Option<PathBuf>) {
    match format {
        OutputFormat::Svg => (Some(out.to_path_buf()), None),
        OutputFormat::Json => (None, Some(out.to_path_buf())),
        OutputFormat::Both => (Some(out.with_extension("svg")), Some(out.with_extension("json"))),
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_plot(a: PlotArgs) -> anyhow::Result<ExitCode> {
    let file = FileConfig::load(a.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;

    let threshold_m = a.threshold.or(file.threshold).unwrap_or(DEFAULT_THRESHOLD_M);
    if !(threshold_m.is_finite() && threshold_m > 0.0) {
        return Err(usage(format!("threshold must be a positive number of meters, got {threshold_m}")));
    }
    let mode = match (a.nn_mode, &file.nn_mode) {
        (Some(NnModeArg::Limit), _) => ZeroDistanceMode::Limit,
        (Some(NnModeArg::PaperLiteral), _) => ZeroDistanceMode::PaperLiteral,
        (None, Some(s)) => s.parse().map_err(usage)?,
        (None, None) => ZeroDistanceMode::default(),
    };
    let variant_names = a
        .variant
        .clone()
        .or_else(|| file.variant.clone())
        .unwrap_or_else(|| Variant::ALL.iter().map(|v| v.as_str().to_string()).collect());
    let variants = parse_variants(&variant_names)?;
    let merge = a.merge_runs || file.merge_runs.unwrap_or(false);
    let excluded = if a.filter_label.is_empty() { file.filter_label.clone() } else { a.filter_label.clone() };
    let format = match (a.format, file.format.as_deref()) {
        (Some(f), _) => f,
        (None, Some("svg")) | (None, None) => OutputFormat::Svg,
        (None, Some("json")) => OutputFormat::Json,
        (None, Some("both")) => OutputFormat::Both,
        (None, Some(other)) => return Err(usage(format!("format {other:?} is not one of svg, json, both"))),
    };
    let selection = a.select.as_deref().map(parse_selection).transpose()?;
    let out = a.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| {
        PathBuf::from(match format {
            OutputFormat::Json => "scarf.json",
            _ => "scarf.svg",
        })
    });

    let loaded = load(&a.input, &file)?;
    for w in &loaded.ingest_issues {
        eprintln!("warning: {w}");
    }
    let recording = loaded.recording;
    let issues = validate_recording(&recording);
    if !issues.is_empty() {
        for i in &issues {
            eprintln!("issue: {i}");
        }
        bail!("{} validation issue(s); run `scarfkit validate` for details", issues.len());
    }

    // Colors stay tied to the full label set so filtering never recolors.
    let palette = recording_palette(&recording);
    let (filtered, unknown) = filter_labels(&recording, &excluded);
    for u in &unknown {
        eprintln!("warning: {u}");
    }

    let mapping = MappingConfig { threshold_m, mode };
    let mappings = map_recording(&filtered, &mapping);
    let models: Vec<_> = variants
        .iter()
        .map(|&v| {
            let m = build_from_mappings(&filtered, &mappings, v, palette.clone());
            if merge {
                merge_runs(&m)
            } else {
                m
            }
        })
        .collect();

    let (svg_path, json_path) = output_paths(&out, format);

    if let Some(path) = &svg_path {
        let rendered = render_svg(&models, &RenderConfig::default())?;
        for w in &rendered.warnings {
            let RenderWarning::EmptyModel { variant } = w;
            eprintln!("warning: {variant} track has no mapped gaze");
        }
        write_file(path, &rendered.svg)?;
        println!("wrote {}", path.display());
    }

    // The export carries unfiltered per-sample records out to the raw
    // horizon so a viewer can change threshold and filters without the rays.
    let needs_export = json_path.is_some() || selection.is_some();
    let export = needs_export.then(|| {
        let horizon = raw_horizon(threshold_m);
        let raw = map_recording(&recording, &MappingConfig { threshold_m: horizon, mode });
        AnalysisExport::assemble(
            &recording,
            &raw,
            &models,
            &palette,
            ExportConfig {
                threshold_m,
                nn_mode: mode,
                window_ms: recording.window_ms,
                raw_horizon_m: horizon,
                merge_runs: merge,
                excluded_labels: excluded.clone(),
            },
        )
    });

    if let (Some(path), Some(export)) = (&json_path, &export) {
        write_file(path, &write_export(export))?;
        println!("wrote {}", path.display());
    }

    if let (Some((t0, t1)), Some(export)) = (selection, &export) {
        let panel = render_confidence_panel(export, t0, t1, None, &PanelConfig::default())?;
        let base = svg_path.as_ref().or(json_path.as_ref()).expect("some output");
        let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("scarf");
        let path = base.with_file_name(format!("{stem}.confidence.svg"));
        write_file(&path, &panel)?;
        println!("wrote {}", path.display());
    }

    let duration = recording.duration_ms().max(1) as f64;
    println!("{} samples, {} AOIs", recording.samples.len(), filtered.aois.len());
    for m in &models {
        println!("{:>8}: {:.1}% white space", m.variant.as_str(), 100.0 * m.white_ms() as f64 / duration);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(a: GenerateArgs) -> anyhow::Result<ExitCode> {
    let file = FileConfig::load(a.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    let seed = a.seed.or(file.seed).unwrap_or(7);
    let sigma_deg = a.sigma_deg.or(file.sigma_deg).unwrap_or(DEFAULT_NOISE_DEG);
    if !(sigma_deg.is_finite() && sigma_deg >= 0.0) {
        return Err(usage(format!("--sigma-deg must be non-negative, got {sigma_deg}")));
    }
    let dir = a.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
    let scene: SceneId = a.scene.into();

    let generated = generate(&builtin_script(scene).with_seed(seed).with_noise_deg(sigma_deg));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let gaze = dir.join("gaze.csv");
    let det = dir.join("detections.jsonl");
    let gt = dir.join("ground_truth.json");
    write_file(&gaze, &write_gaze_csv(&generated.recording.samples))?;
    write_file(&det, &write_detections(&generated.detections))?;
    let mut gt_text = serde_json::to_string_pretty(&generated.ground_truth)?;
    gt_text.push('\n');
    write_file(&gt, &gt_text)?;
    println!(
        "{}: {} samples, {} detections, seed {seed} -> {}",
        scene.as_str(),
        generated.recording.samples.len(),
        generated.detections.len(),
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_confidence(a: ConfidenceArgs) -> anyhow::Result<ExitCode> {
    let (t0, t1) = parse_selection(&a.select)?;
    let text = fs::read_to_string(&a.export).with_context(|| format!("reading {}", a.export.display()))?;
    let export = read_export(&text).with_context(|| a.export.display().to_string())?;
    let svg = render_confidence_panel(&export, t0, t1, a.label.as_deref(), &PanelConfig::default())?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("confidence.svg"));
    write_file(&out, &svg)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}
