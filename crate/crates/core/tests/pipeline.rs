use terrain_core::benchmark::{benchmark_data, BenchmarkConfig};
use terrain_core::classifier::{train_ecoc, LabeledDataset};
use terrain_core::log::{read_log_file, write_log_file};
use terrain_core::mapping::{build_map, export_map, import_map, MappingConfig};
use terrain_core::sim::{synth_route_run, synth_run, PresetSet, RouteSegment, SynthConfig};
use terrain_core::{FeatureMask, TerrainClass, VehicleParams};

#[test]
fn log_round_trip_preserves_series_and_features() {
    let p = VehicleParams::default();
    let run = synth_run(TerrainClass::Gravel, 12.0, 0.5, 4, &p).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gravel.jsonl");
    write_log_file(&run.series, &path).unwrap();
    let back = read_log_file(&path).unwrap();
    assert_eq!(back, run.series);

    let cfg = MappingConfig::default();
    let a = build_map(&run.series, &p, &cfg).unwrap().map;
    let b = build_map(&back, &p, &cfg).unwrap().map;
    assert!(!a.patches.is_empty());
    let fa: Vec<_> = a.patches.iter().map(|p| p.feature_vector()).collect();
    let fb: Vec<_> = b.patches.iter().map(|p| p.feature_vector()).collect();
    assert_eq!(fa, fb);
}

#[test]
fn map_export_import_round_trip() {
    let p = VehicleParams::default();
    let run = synth_run(TerrainClass::Ploughed, 15.0, 0.5, 9, &p).unwrap();
    let mut map = build_map(&run.series, &p, &MappingConfig::default()).unwrap().map;
    for (patch, labeled) in map.patches.iter_mut().zip(&run.patches) {
        patch.label = labeled.label;
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.json");
    export_map(&map, &path).unwrap();

    let text: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(text["patches"].as_array().unwrap().len(), map.patches.len());

    let back = import_map(&path).unwrap();
    assert_eq!(back.patches.len(), map.patches.len());
    for (a, b) in map.patches.iter().zip(&back.patches) {
        assert_eq!(a.feature_vector(), b.feature_vector());
        assert_eq!(a.label, b.label);
        assert_eq!(a.points, b.points);
    }
}

#[test]
fn three_patch_map_declares_three_records() {
    let p = VehicleParams::default();
    let run = synth_run(TerrainClass::DirtRoad, 12.0, 0.5, 2, &p).unwrap();
    let mut map = build_map(&run.series, &p, &MappingConfig::default()).unwrap().map;
    map.patches.truncate(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("three.json");
    export_map(&map, &path).unwrap();
    let text: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(text["patches"].as_array().unwrap().len(), 3);
    assert_eq!(text["feature_names"].as_array().unwrap().len(), 20);
}

#[test]
fn mixed_route_shows_transition_at_change_time() {
    let p = VehicleParams::default();
    let presets = PresetSet::default();
    let config = SynthConfig::default();
    let route = [
        RouteSegment {
            class: TerrainClass::DirtRoad,
            length: 10.0,
        },
        RouteSegment {
            class: TerrainClass::Gravel,
            length: 10.0,
        },
    ];
    let run = synth_route_run(&route, 38.0, 21, &p, &presets, &config).unwrap();
    let t1 = run.truth.transition_times()[0];
    assert!((t1 - 20.0).abs() < 1e-9);

    let bench = BenchmarkConfig {
        train_per_class: 30,
        test_per_class: [0; 4],
        ..BenchmarkConfig::default()
    };
    let data = benchmark_data(&bench, &p, &presets, &config).unwrap();
    let model = train_ecoc(&LabeledDataset::from_samples(&data.train, FeatureMask::ALL).unwrap(), 1.0, 0).unwrap();

    let mut map = build_map(&run.series, &p, &MappingConfig::default()).unwrap().map;
    for patch in &mut map.patches {
        patch.label = Some(run.truth.class_at_point(patch.centroid));
        patch.predicted = Some(model.predict_features(&patch.feature_vector().unwrap()).unwrap());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.json");
    export_map(&map, &path).unwrap();
    let back = import_map(&path).unwrap();

    // A patch spans about one vehicle length; its traversal straddles the
    // change for at most that long.
    let span = 2.0 * p.length / config.speed;
    let start = |i: usize| back.patches[i].traversal.unwrap().start;
    let labels: Vec<TerrainClass> = back.patches.iter().map(|p| p.label.unwrap()).collect();
    let first_gravel = labels.iter().position(|&c| c == TerrainClass::Gravel).unwrap();
    assert!(labels[..first_gravel].iter().all(|&c| c == TerrainClass::DirtRoad));
    assert!(labels[first_gravel..].iter().all(|&c| c == TerrainClass::Gravel));
    assert!((start(first_gravel) - t1).abs() < span, "{} vs {t1}", start(first_gravel));

    let (mut right, mut total) = (0, 0);
    for (i, patch) in back.patches.iter().enumerate() {
        if (start(i) - t1).abs() > span {
            total += 1;
            right += usize::from(patch.predicted == patch.label);
        }
    }
    assert!(right as f64 >= 0.9 * total as f64, "{right}/{total}");
}

#[test]
fn rigid_translation_leaves_features_unchanged() {
    let p = VehicleParams::default();
    let presets = PresetSet::default();
    let route = [RouteSegment {
        class: TerrainClass::Unploughed,
        length: 0.0,
    }];
    let base = SynthConfig::default();
    let shifted = SynthConfig {
        origin: [250.0, -120.0, 7.5],
        ..base
    };
    let a = synth_route_run(&route, 15.0, 6, &p, &presets, &base).unwrap();
    let b = synth_route_run(&route, 15.0, 6, &p, &presets, &shifted).unwrap();
    assert_eq!(a.patches.len(), b.patches.len());
    assert!(!a.patches.is_empty());
    for (pa, pb) in a.patches.iter().zip(&b.patches) {
        let (fa, fb) = (pa.feature_vector().unwrap().to_array(), pb.feature_vector().unwrap().to_array());
        for (x, y) in fa.iter().zip(fb) {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }
}
