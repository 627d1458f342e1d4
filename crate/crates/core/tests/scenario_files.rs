//! File-level scenario loading: the hand-written balanced interferometer,
//! builtin delegation, diagnostics, and the emit/reload round trip.

use std::path::{Path, PathBuf};

use nullweak_core::runner::{
    emit_scenario, load_scenario, rows_to_csv, run_scenario, Coupling, RunFlags,
};
use nullweak_core::Error;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

#[test]
fn balanced_two_path_interferometer_splits_the_weak_value_evenly() {
    let scn = load_scenario(&data("mzi_two_path.json")).unwrap();
    let flags = RunFlags {
        analytic: true,
        ..RunFlags::default()
    };
    let (rows, errors) = run_scenario(&scn, &flags).unwrap();
    assert!(errors.is_empty());
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let wv = row.weak_value.unwrap();
        assert!((wv[0] - 0.5).abs() <= 1e-12, "{}: {:?}", row.probe, wv);
        assert!(wv[1].abs() <= 1e-12);
    }
}

#[test]
fn builtin_key_overrides_the_rest_of_the_file() {
    let dir = std::env::temp_dir().join("nullweak-test-builtin");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("builtin.json");
    std::fs::write(&path, r#"{ "builtin": "nested-mzi" }"#).unwrap();
    let scn = load_scenario(&path).unwrap();
    assert_eq!(scn.name(), "nested-mzi");
    assert_eq!(scn.probes().len(), 6);
}

#[test]
fn malformed_json_reports_a_parse_error() {
    let dir = std::env::temp_dir().join("nullweak-test-parse");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert!(matches!(load_scenario(&path), Err(Error::Parse { .. })));
}

#[test]
fn emitted_file_reloads_to_byte_identical_csv() {
    let original = load_scenario(&data("mzi_two_path.json")).unwrap();
    let emitted = emit_scenario(&original);
    let dir = std::env::temp_dir().join("nullweak-test-roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("emitted.json");
    std::fs::write(&path, serde_json::to_string_pretty(&emitted).unwrap()).unwrap();
    let reloaded = load_scenario(&path).unwrap();

    for flags in [
        RunFlags {
            analytic: true,
            ..RunFlags::default()
        },
        RunFlags {
            analytic: false,
            coupling: Coupling::Sweep {
                min: 0.01,
                max: 1.0,
                n: 7,
            },
            ..RunFlags::default()
        },
    ] {
        let a = run_scenario(&original, &flags).unwrap().0;
        let b = run_scenario(&reloaded, &flags).unwrap().0;
        assert_eq!(rows_to_csv(&a), rows_to_csv(&b));
    }
}
