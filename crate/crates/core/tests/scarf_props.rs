mod common;

use proptest::prelude::*;
use scarfkit::mapping::{map_recording, MappingConfig, ZeroDistanceMode};
use scarfkit::scarf::{build, build_from_mappings, filter_labels, merge_runs, recording_palette, BuildConfig, ScarfModel, Variant};

fn config(threshold: f64, merge: bool) -> BuildConfig {
    BuildConfig {
        mapping: MappingConfig {
            threshold_m: threshold,
            mode: ZeroDistanceMode::Limit,
        },
        merge_runs: merge,
    }
}

fn assert_tiles(m: &ScarfModel, duration: i64) -> Result<(), TestCaseError> {
    prop_assert_eq!(m.duration_ms, duration);
    let mut t = 0;
    for s in &m.segments {
        prop_assert_eq!(s.start_ms, t);
        prop_assert!(s.end_ms > s.start_ms);
        t = s.end_ms;
    }
    prop_assert_eq!(t, duration);
    prop_assert_eq!(m.segments.iter().map(|s| s.duration_ms()).sum::<i64>(), duration);
    Ok(())
}

proptest! {
    #[test]
    fn segments_tile_and_heights_normalize(rec in common::recording(), threshold in 0.05..0.6f64, merge in any::<bool>()) {
        for v in Variant::ALL {
            let m = build(&rec, v, &config(threshold, merge));
            assert_tiles(&m, rec.duration_ms())?;
            for s in m.segments.iter().filter(|s| !s.is_white()) {
                let total: f64 = s.subsegments.iter().map(|ss| ss.height).sum();
                prop_assert!((total - 1.0).abs() < 1e-9, "{} heights sum to {}", v.as_str(), total);
                prop_assert!(s.subsegments.iter().all(|ss| ss.height > 0.0));
                prop_assert!(s.subsegments.iter().enumerate().all(|(i, ss)| ss.depth_rank == i));
            }
        }
    }

    #[test]
    fn ranks_follow_depth(rec in common::recording(), threshold in 0.05..0.6f64) {
        let config = MappingConfig { threshold_m: threshold, mode: ZeroDistanceMode::Limit };
        let mappings = map_recording(&rec, &config);
        let palette = recording_palette(&rec);
        let depth = build_from_mappings(&rec, &mappings, Variant::Depth, palette.clone());
        let nn = build_from_mappings(&rec, &mappings, Variant::Nn, palette.clone());
        let standard = build_from_mappings(&rec, &mappings, Variant::Standard, palette);
        // without merging, non-initial segments correspond to samples in order
        let offset = depth.segments.len() - mappings.len();
        for (k, m) in mappings.iter().enumerate() {
            let d = &depth.segments[k + offset];
            let ids: Vec<&str> = d.subsegments.iter().map(|s| s.instance_id.as_str()).collect();
            let hits: Vec<&str> = m.hits.iter().map(|h| h.instance_id.as_str()).collect();
            prop_assert_eq!(ids, hits);

            let n = &nn.segments[k + offset];
            let t_of = |id: &str| m.nn.entries.iter().find(|e| e.instance_id == id).unwrap().t_closest;
            prop_assert!(n.subsegments.windows(2).all(|w| t_of(&w[0].instance_id) <= t_of(&w[1].instance_id)));

            let s = &standard.segments[k + offset];
            prop_assert_eq!(
                s.subsegments.first().map(|x| &x.label),
                d.subsegments.first().map(|x| &x.label)
            );
            prop_assert!(s.subsegments.len() <= 1);
        }
    }

    #[test]
    fn merge_runs_is_idempotent_and_preserves_time(rec in common::recording(), threshold in 0.05..0.6f64) {
        for v in Variant::ALL {
            let m = build(&rec, v, &config(threshold, false));
            let once = merge_runs(&m);
            prop_assert_eq!(&merge_runs(&once), &once);
            assert_tiles(&once, m.duration_ms)?;
            for l in rec.labels() {
                prop_assert_eq!(once.label_duration_ms(&l), m.label_duration_ms(&l));
            }
            prop_assert_eq!(once.white_ms(), m.white_ms());
        }
    }

    #[test]
    fn filtering_matches_never_having_the_label(rec in common::recording(), pick in 0..common::LABELS.len(), threshold in 0.05..0.6f64) {
        let label = common::LABELS[pick].to_string();
        let palette = recording_palette(&rec);
        let (filtered, unknown) = filter_labels(&rec, std::slice::from_ref(&label));
        prop_assert_eq!(unknown.is_empty(), rec.has_label(&label));

        let mut never = rec.clone();
        never.aois.retain(|a| a.label != label);
        let config = MappingConfig { threshold_m: threshold, mode: ZeroDistanceMode::Limit };
        let a = map_recording(&filtered, &config);
        let b = map_recording(&never, &config);
        prop_assert_eq!(&a, &b);
        for v in Variant::ALL {
            let ma = build_from_mappings(&filtered, &a, v, palette.clone());
            let mb = build_from_mappings(&never, &b, v, palette.clone());
            prop_assert_eq!(&ma, &mb);
            prop_assert_eq!(ma.label_duration_ms(&label), 0);
        }
    }

    #[test]
    fn palette_is_stable_under_filtering(rec in common::recording(), pick in 0..common::LABELS.len()) {
        let palette = recording_palette(&rec);
        let (filtered, _) = filter_labels(&rec, &[common::LABELS[pick].to_string()]);
        let m = build_from_mappings(&filtered, &map_recording(&filtered, &MappingConfig::default()), Variant::Depth, palette.clone());
        prop_assert_eq!(&m.palette, &palette);
    }
}
