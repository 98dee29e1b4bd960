use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homlab::parse_spec;
use proptest::prelude::*;

fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn homlab(args: &[&str], spec: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_homlab"));
    cmd.args(args).arg("--out").arg(out).arg("--no-plots");
    if let Some(s) = spec {
        cmd.arg("--spec").arg(s);
    }
    cmd.output().expect("binary runs")
}

fn write_spec(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("spec.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn shipped_specs_round_trip() {
    for entry in std::fs::read_dir(specs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let spec = parse_spec(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parse_spec(&spec.to_json()).unwrap(), spec, "{}", path.display());
    }
}

#[test]
fn counterexamples_without_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let out = homlab(&["counterexamples"], None, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csvs: Vec<_> = std::fs::read_dir(tmp.path())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "csv").then_some(p)
        })
        .collect();
    assert_eq!(csvs.len(), 4);
    let rows = read_csv(&tmp.path().join("counterexamples_swapped_phases_1d.csv"));
    assert_eq!(rows[0], ["t", "R", "psi", "signed_mean"]);
}

#[test]
fn layered_cell_gives_harmonic_and_arithmetic_means() {
    let tmp = tempfile::tempdir().unwrap();
    let out = homlab(&["cell"], Some(&specs_dir().join("cell_layered.json")), tmp.path());
    assert!(out.status.success());
    let rows = read_csv(&tmp.path().join("layered_cell.csv"));
    let last = rows.last().unwrap();
    let a11: f64 = last[1].parse().unwrap();
    let a22: f64 = last[4].parse().unwrap();
    assert!((a11 - 1.6).abs() < 1e-6 && (a22 - 2.5).abs() < 1e-6);
}

#[test]
fn identical_pair_has_zero_statistic() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        r#"{"kind": "stability", "name": "same",
            "f": {"kind": "periodic_step", "k": 2, "values": [1, 4, 4, 1]},
            "g": {"kind": "periodic_step", "k": 2, "values": [1, 4, 4, 1]},
            "homogenization": {"method": "cell", "resolution": 16}}"#,
    );
    let out = homlab(&["stability"], Some(&spec), tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&tmp.path().join("same_statistic.csv"));
    assert!(rows.len() > 1);
    for row in &rows[1..] {
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn guard_sets_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(specs_dir().join("stability_ball.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    // a tolerance far below the discretization gap forces "limits differ"
    v["tolerance"] = 1e-9.into();
    let spec = write_spec(tmp.path(), &v.to_string());
    let out = homlab(&["stability"], Some(&spec), tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let rows = read_csv(&tmp.path().join("ball_perturbation_summary.csv"));
    assert_eq!(rows[1][6], "ConditionHoldsLimitsDiffer");
    assert_eq!(rows[1][7], "true");
}

#[test]
fn invalid_spec_lists_every_error() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        r#"{"kind": "rve", "name": "bad", "field": 2.0, "centers": [[0, 0]], "resolution_per_unit": 0, "colour": 1}"#,
    );
    let out = homlab(&["rve"], Some(&spec), tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["window_sizes", "resolution_per_unit", "colour"] {
        assert!(err.contains(key), "{key} missing from:\n{err}");
    }
}

#[test]
fn kind_must_match_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = homlab(&["rve"], Some(&specs_dir().join("cell_layered.json")), tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_run_writes_error_log() {
    let tmp = tempfile::tempdir().unwrap();
    // parses, but a 1-periodic cell problem rejects the half-space field
    let spec = write_spec(
        tmp.path(),
        r#"{"kind": "cell", "name": "nonperiodic", "field": {"kind": "half_space_step", "gamma": 2, "c": 0.5}, "dim": 1}"#,
    );
    let out = homlab(&["cell"], Some(&spec), tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(tmp.path().join("nonperiodic_error.log").exists());
}

fn field_json() -> impl Strategy<Value = String> {
    prop_oneof![
        (0.5f64..5.0).prop_map(|v| format!("{v}")),
        (0.5f64..5.0, 0.5f64..5.0).prop_map(|(a, b)| format!(
            r#"{{"kind": "layered1d", "breakpoints": [0.0, 0.5], "values": [{a}, {b}]}}"#
        )),
        (0.5f64..5.0, 0.5f64..5.0).prop_map(|(a, b)| format!(
            r#"{{"kind": "periodic_step", "k": 2, "values": [{a}, {b}, {b}, {a}]}}"#
        )),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spec_round_trip(
        f in field_json(),
        g in field_json(),
        res in 4usize..512,
        seed in any::<u64>(),
        tol in proptest::option::of(1e-9f64..1.0),
        r0 in 1.0f64..10.0,
    ) {
        let tol = tol.map_or("null".to_string(), |t| t.to_string());
        let stability = format!(
            r#"{{"kind": "stability", "name": "s", "seed": {seed}, "f": {f}, "g": {g},
                "r_list": [{r0}, {}, {}], "tolerance": {tol},
                "homogenization": {{"method": "cell", "resolution": {res}}}}}"#,
            2.0 * r0, 4.0 * r0
        );
        let cell = format!(r#"{{"kind": "cell", "name": "c", "field": {f}, "resolution": {res}}}"#);
        for text in [stability, cell] {
            let spec = parse_spec(&text).unwrap();
            let again = parse_spec(&spec.to_json()).unwrap();
            prop_assert_eq!(&again, &spec);
            prop_assert_eq!(again.to_json(), spec.to_json());
        }
    }
}
