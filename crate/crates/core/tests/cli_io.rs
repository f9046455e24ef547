use std::fs;
use std::path::Path;
use std::process::Command as Process;

use proptest::prelude::*;

use tunnelsim::cli::{
    execute, parse_invocation, read_density_csv, sha256_file, write_density_csv,
    write_run_manifest, Command, Manifest, CONFIG_FILE, DENSITY_FILE, MANIFEST_FILE, SUMMARY_FILE,
    SUMMARY_HEADER,
};
use tunnelsim::Grid;

const SMALL: &[&str] = &[
    "--grid-size",
    "1600",
    "--x0",
    "300",
    "--barrier-start",
    "400",
];

fn argv<'a>(sub: &'a str, extra: &[&'a str], out: &'a Path) -> Vec<&'a str> {
    let mut v = vec!["tunnelsim", sub];
    v.extend_from_slice(SMALL);
    v.extend_from_slice(extra);
    v.extend_from_slice(&["--output-dir", out.to_str().unwrap()]);
    v
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn snapshot_writes_labeled_columns_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let inv = parse_invocation(argv(
        "snapshot",
        &["--d-list", "5,10,15,20", "--k0", "0.5"],
        dir.path(),
    ))
    .unwrap();
    let out = execute(&inv).unwrap();

    let densities = fs::read_to_string(dir.path().join(DENSITY_FILE)).unwrap();
    assert_eq!(
        densities.lines().next().unwrap(),
        "site,free,d5,d10,d15,d20"
    );
    assert_eq!(densities.lines().count(), 1601);

    // manifest names every other file, with matching hashes
    let manifest = read_manifest(dir.path());
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != MANIFEST_FILE)
        .collect();
    on_disk.sort();
    assert_eq!(manifest.files.keys().cloned().collect::<Vec<_>>(), on_disk);
    for (name, hash) in &manifest.files {
        assert_eq!(hash, &sha256_file(&dir.path().join(name)).unwrap());
    }
    assert_eq!(manifest, out.manifest);
    assert_eq!(manifest.command, Command::Snapshot);
}

#[test]
fn density_csv_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(50).unwrap();
    let columns = vec![
        (
            "free".to_string(),
            (0..50)
                .map(|j| (j as f64 * 0.37).sin().powi(2) / 7.0)
                .collect(),
        ),
        (
            "d5".to_string(),
            (0..50)
                .map(|j| 1e-300 * j as f64 + 1.0 / 3.0)
                .collect::<Vec<f64>>(),
        ),
    ];
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    write_density_csv(&first, &grid, &columns).unwrap();
    let parsed = read_density_csv(&first).unwrap();
    assert_eq!(parsed, columns);
    write_density_csv(&second, &grid, &parsed).unwrap();
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn opaque_barrier_row_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let inv = parse_invocation(argv(
        "single-run",
        &["--d-list", "40", "--h-list", "8", "--sigma", "8"],
        dir.path(),
    ))
    .unwrap();
    execute(&inv).unwrap();
    let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    assert!(lines[1].ends_with(",no_transmission"), "{}", lines[1]);
}

#[test]
fn width_scan_rows_are_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let inv = parse_invocation(argv(
        "width-scan",
        &["--d-list", "6,0,3", "--sigma-list", "12,8"],
        dir.path(),
    ))
    .unwrap();
    execute(&inv).unwrap();
    let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let keys: Vec<(f64, usize)> = summary
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(
        keys,
        vec![
            (8.0, 0),
            (8.0, 3),
            (8.0, 6),
            (12.0, 0),
            (12.0, 3),
            (12.0, 6)
        ]
    );
    // no density snapshots for a scan over different packet widths
    assert!(!dir.path().join(DENSITY_FILE).exists());
}

#[test]
fn default_single_run_manifest_records_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let inv = parse_invocation(["tunnelsim", "single-run"]).unwrap();
    let path = dir.path().join(MANIFEST_FILE);
    write_run_manifest(&path, inv.command, &inv.config, 0, &[]).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["config"]["dt"], 0.05);
    assert_eq!(json["config"]["k0"], 0.5);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let inv = parse_invocation(argv(
        "height-sweep",
        &["--h-list", "0,1.5", "--d-list", "8", "--k0", "0.4"],
        first.path(),
    ))
    .unwrap();
    execute(&inv).unwrap();

    let echoed = first.path().join(CONFIG_FILE);
    let again = parse_invocation([
        "tunnelsim",
        "height-sweep",
        "--config",
        echoed.to_str().unwrap(),
        "--output-dir",
        second.path().to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(again.config, inv.config);
    execute(&again).unwrap();
    for name in [CONFIG_FILE, SUMMARY_FILE, DENSITY_FILE] {
        assert_eq!(
            fs::read(first.path().join(name)).unwrap(),
            fs::read(second.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let (mut a, mut b) = (read_manifest(first.path()), read_manifest(second.path()));
    a.created_unix = 0;
    b.created_unix = 0;
    assert_eq!(a, b);
}

#[test]
fn csv_numbers_are_plain_ascii() {
    let dir = tempfile::tempdir().unwrap();
    let inv = parse_invocation(argv(
        "single-run",
        &["--d-list", "4", "--h-list", "1.5", "--steps", "3000"],
        dir.path(),
    ))
    .unwrap();
    execute(&inv).unwrap();
    for name in [SUMMARY_FILE, DENSITY_FILE] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        assert!(
            text.chars()
                .all(|c| c.is_ascii_alphanumeric() || ",.-+_;\n".contains(c)),
            "{name}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parse_echo_parse_is_idempotent(
        sigma in 5.0f64..20.0,
        k0 in 0.3f64..1.0,
        stride in 1usize..500,
        d_list in prop::collection::vec(0usize..40, 1..6),
        h in 0.0f64..5.0,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let d = d_list.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        let (s, k, st, hs) = (sigma.to_string(), k0.to_string(), stride.to_string(), h.to_string());
        let first = parse_invocation([
            "tunnelsim", "snapshot", "--sigma", &s, "--k0", &k, "--stride", &st, "--d-list", &d, "--h-list", &hs,
        ]).unwrap();
        let echo = dir.path().join(CONFIG_FILE);
        fs::write(&echo, serde_json::to_string_pretty(&first.config).unwrap()).unwrap();
        let second = parse_invocation(["tunnelsim", "snapshot", "--config", echo.to_str().unwrap()]).unwrap();
        prop_assert_eq!(&first.config, &second.config);
    }
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_tunnelsim"))
}

#[test]
fn binary_without_arguments_prints_usage() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn binary_names_the_bad_field() {
    let out = bin()
        .args(["single-run", "--sigma", "-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma"));

    let out = bin()
        .args(["single-run", "--barrier-start", "99999"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("barrier"));

    let out = bin().args(["single-run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn binary_runs_and_honours_output_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["single-run", "--d-list", "6", "--h-list", "1.5"])
        .args(SMALL)
        .env("TUNNELSIM_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn binary_rejects_steps_that_reach_the_right_wall() {
    let out = bin()
        .args(["single-run", "--k0", "1.2", "--steps", "200000"])
        .args(SMALL)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("steps"));
}

#[test]
fn binary_reports_contamination_as_runtime_error() {
    // the free packet stays clear, but the reflected one reaches the left wall
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "single-run",
            "--d-list",
            "20",
            "--h-list",
            "20",
            "--steps",
            "20000",
        ])
        .args(SMALL)
        .args(["--output-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("contamination"));
}
