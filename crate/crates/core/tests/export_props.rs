mod common;

use proptest::prelude::*;
use scarfkit::export::{raw_horizon, read_export, write_export, AnalysisExport, ExportConfig};
use scarfkit::mapping::{map_recording, MappingConfig, ZeroDistanceMode};
use scarfkit::scarf::{build_from_mappings, filter_labels, merge_runs, recording_palette, ScarfModel, Variant};
use scarfkit::scene::{builtin_script, generate, SceneId};
use scarfkit::Recording;

fn export_for(rec: &Recording, threshold: f64, mode: ZeroDistanceMode, excluded: &[String], merge: bool) -> AnalysisExport {
    let palette = recording_palette(rec);
    let (filtered, _) = filter_labels(rec, excluded);
    let mappings = map_recording(&filtered, &MappingConfig { threshold_m: threshold, mode });
    let models: Vec<ScarfModel> = Variant::ALL
        .iter()
        .map(|&v| {
            let m = build_from_mappings(&filtered, &mappings, v, palette.clone());
            if merge { merge_runs(&m) } else { m }
        })
        .collect();
    let horizon = raw_horizon(threshold);
    let raw = map_recording(rec, &MappingConfig { threshold_m: horizon, mode });
    AnalysisExport::assemble(
        rec,
        &raw,
        &models,
        &palette,
        ExportConfig {
            threshold_m: threshold,
            nn_mode: mode,
            window_ms: rec.window_ms,
            raw_horizon_m: horizon,
            merge_runs: merge,
            excluded_labels: excluded.to_vec(),
        },
    )
}

fn assert_models_close(a: &ScarfModel, b: &ScarfModel, tol: f64) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.segments.len(), b.segments.len());
    for (x, y) in a.segments.iter().zip(&b.segments) {
        prop_assert_eq!((x.start_ms, x.end_ms), (y.start_ms, y.end_ms));
        prop_assert_eq!(x.subsegments.len(), y.subsegments.len());
        for (p, q) in x.subsegments.iter().zip(&y.subsegments) {
            prop_assert_eq!(&p.instance_id, &q.instance_id);
            prop_assert!((p.height - q.height).abs() < tol, "{} vs {}", p.height, q.height);
        }
    }
    Ok(())
}

proptest! {
    #[test]
    fn written_export_rebuilds_its_models(
        rec in common::recording(),
        threshold in 0.05..0.6f64,
        literal in any::<bool>(),
        drop in prop::option::of(0..common::LABELS.len()),
        merge in any::<bool>(),
    ) {
        let mode = if literal { ZeroDistanceMode::PaperLiteral } else { ZeroDistanceMode::Limit };
        let excluded: Vec<String> = drop.map(|i| common::LABELS[i].to_string()).into_iter().collect();
        let export = export_for(&rec, threshold, mode, &excluded, merge);
        let text = write_export(&export);
        let back = read_export(&text).unwrap();
        prop_assert_eq!(write_export(&back), text);
        for (v, m) in Variant::ALL.iter().zip(&export.models) {
            let rebuilt = back.rebuild(*v, threshold, mode, &excluded);
            assert_models_close(&rebuilt, m, 1e-9)?;
        }
    }
}

#[test]
fn scene_exports_rebuild_at_other_thresholds() {
    let rec = generate(&builtin_script(SceneId::VpVb)).recording;
    let base = export_for(&rec, 0.25, ZeroDistanceMode::Limit, &[], false);
    let back = read_export(&write_export(&base)).unwrap();
    for t in [0.05, 0.1, 0.5, 1.0] {
        let direct = export_for(&rec, t, ZeroDistanceMode::Limit, &[], false);
        let rebuilt = back.rebuild(Variant::Nn, t, ZeroDistanceMode::Limit, &[]);
        assert_models_close(direct.model(Variant::Nn).unwrap(), &rebuilt, 1e-9).unwrap();
    }
}

#[test]
fn version_is_checked() {
    let rec = generate(&builtin_script(SceneId::Bb)).recording;
    let text = write_export(&export_for(&rec, 0.25, ZeroDistanceMode::Limit, &[], false));
    let bumped = text.replace("scarfkit-export/1", "scarfkit-export/9");
    assert!(read_export(&bumped).is_err());
}
