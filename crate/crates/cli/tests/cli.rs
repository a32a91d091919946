//! End-to-end tests of the command-line interface: exit codes, CSV and
//! manifest formats, config round-trips, and determinism across thread
//! counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpptest::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gpptest"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("failed to spawn gpptest")
}

fn assert_exit(output: &Output, code: i32, context: &str) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "{context}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const SMALL_DELTA: &str = r#"
n = 500
replications = 200
seed = 99
alpha = 0.05
xi = 0.0

[generator]
variant = "constant"

[w]
family = "delta"
delta = 1.0

[threshold]
c = -0.05
"#;

#[test]
fn are_curve_emits_golden_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("are.csv");
    let output = run(&[
        "are-curve",
        "--delta-min",
        "0",
        "--delta-max",
        "1",
        "--steps",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "are-curve");
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "delta,psi,are");
    assert_eq!(lines.len(), 4);
    let parse = |line: &str| -> Vec<f64> { line.split(',').map(|f| f.parse().unwrap()).collect() };
    let row0 = parse(lines[1]);
    assert_eq!(row0[0], 0.0);
    assert_eq!(row0[2], 0.0);
    let row1 = parse(lines[2]);
    assert_eq!(row1[0], 0.5);
    assert!((row1[2] - 0.105218540060374).abs() < 1e-8, "{}", row1[2]);
    let row2 = parse(lines[3]);
    assert_eq!(row2[0], 1.0);
    assert!((row2[2] - 0.238732414637843).abs() < 1e-8, "{}", row2[2]);
    assert!(!text.contains('\r'));
}

#[test]
fn are_curve_rejects_degenerate_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("are.csv");
    let output = run(&[
        "are-curve",
        "--delta-min",
        "0.5",
        "--delta-max",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 2, "equal endpoints");
    let output = run(&["are-curve", "--steps", "1", "--out", out.to_str().unwrap()]);
    assert_exit(&output, 2, "single step");
}

#[test]
fn power_writes_csv_and_manifest_with_matching_digest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", SMALL_DELTA);
    let out = dir.path().join("power.csv");
    let output = run(&[
        "power",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "123",
    ]);
    assert_exit(&output, 0, "power");

    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "xi,test,estimate,ci_low,ci_high,prediction,R_effective"
    );
    assert_eq!(lines.len(), 3, "{text}");
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
        assert!(fields[1] == "optimal:upper" || fields[1] == "omnibus:upper");
        let estimate: f64 = fields[2].parse().unwrap();
        let (lo, hi): (f64, f64) = (fields[3].parse().unwrap(), fields[4].parse().unwrap());
        assert!(lo <= estimate && estimate <= hi);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.05);
        assert_eq!(fields[6].parse::<usize>().unwrap(), 200);
    }

    // Manifest: digest matches the file, config round-trips with the
    // seed override applied.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("power.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["tool"], "gpptest");
    assert_eq!(manifest["seed"], 123);
    let digest = manifest["outputs"][0]["sha256"].as_str().unwrap();
    let recomputed = {
        use sha2::{Digest, Sha256};
        let mut s = String::new();
        for b in Sha256::digest(text.as_bytes()) {
            s.push_str(&format!("{b:02x}"));
        }
        s
    };
    assert_eq!(digest, recomputed);
    let cfg_text = manifest["config_toml"].as_str().unwrap();
    let cfg = ExperimentConfig::from_toml_str(cfg_text).unwrap();
    assert_eq!(cfg.seed, 123);
    assert_eq!(cfg.replications, 200);
    assert_eq!(
        ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(),
        cfg
    );
    assert_eq!(manifest["summary"]["all_within_tolerance"], true);
}

#[test]
fn size_forces_the_null_even_for_alternative_configs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.toml",
        &SMALL_DELTA.replace("xi = 0.0", "xi = 2.0"),
    );
    let out = dir.path().join("size.csv");
    let output = run(&[
        "size",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "size");
    let text = fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.05);
    }
}

#[test]
fn power_csv_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.toml",
        &SMALL_DELTA.replace("xi = 0.0", "xis = [0.0, 1.0]"),
    );
    let out1 = dir.path().join("t1.csv");
    let out4 = dir.path().join("t4.csv");
    assert_exit(
        &run(&[
            "power",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out1.to_str().unwrap(),
            "--threads",
            "1",
        ]),
        0,
        "threads 1",
    );
    assert_exit(
        &run(&[
            "power",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out4.to_str().unwrap(),
            "--threads",
            "4",
        ]),
        0,
        "threads 4",
    );
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out4).unwrap());
}

#[test]
fn power_retains_partial_rows_and_exits_nonzero_on_cell_errors() {
    let dir = tempfile::tempdir().unwrap();
    // xi = 500 puts theta far outside the validity range at this scale.
    let config = write_config(
        dir.path(),
        "cfg.toml",
        &SMALL_DELTA.replace("xi = 0.0", "xis = [0.0, 500.0]"),
    );
    let out = dir.path().join("partial.csv");
    let output = run(&[
        "power",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 1, "partial failure");
    let text = fs::read_to_string(&out).unwrap();
    // Rows for xi = 0 survive; the failing cells are absent from the CSV
    // and recorded in the manifest instead.
    assert_eq!(text.lines().count(), 3, "{text}");
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("partial.manifest.json")).unwrap(),
    )
    .unwrap();
    let errors = manifest["summary"]["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 2);
    assert_eq!(manifest["summary"]["all_within_tolerance"], false);
}

#[test]
fn lan_check_prints_json_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", SMALL_DELTA);
    let output = run(&["lan-check", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 0, "lan-check (xi = 0 is trivially exact)");
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).expect("stdout is JSON");
    assert_eq!(report["passed"], true);
    assert_eq!(report["report"]["mean"]["estimate"], 0.0);
    assert_eq!(report["report"]["variance"]["estimate"], 0.0);
}

#[test]
fn simulate_is_reproducible_and_internally_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.toml",
        &SMALL_DELTA
            .replace("n = 500", "n = 100")
            .replace("replications = 200", "replications = 20"),
    );
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        assert_exit(
            &run(&[
                "simulate",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]),
            0,
            "simulate",
        );
    }
    let a = fs::read(&out1).unwrap();
    assert_eq!(a, fs::read(&out2).unwrap(), "same seed, same bytes");

    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "replication,tau,y_index,y_value");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.manifest.json")).unwrap())
            .unwrap();
    let total = manifest["summary"]["total_exceedances"].as_u64().unwrap() as usize;
    assert_eq!(lines.len() - 1, total, "one row per exceedance");
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let y: f64 = fields[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&y));
        assert!(fields[0].parse::<usize>().unwrap() >= 1);
        assert!(fields[2].parse::<usize>().unwrap() <= fields[1].parse::<usize>().unwrap());
    }
}

#[test]
fn simulate_with_no_observations_emits_a_bare_header() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.toml",
        &SMALL_DELTA.replace("n = 500", "n = 0"),
    );
    let out = dir.path().join("empty.csv");
    assert_exit(
        &run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]),
        0,
        "simulate with n = 0",
    );
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "replication,tau,y_index,y_value\n"
    );
}

#[test]
fn exit_codes_cover_config_science_and_io_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");

    // Missing config file: I/O.
    let output = run(&[
        "power",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 3, "missing config");

    // Unparseable config: configuration error.
    let broken = write_config(dir.path(), "broken.toml", "n = 5\n");
    let output = run(&[
        "power",
        "--config",
        broken.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 2, "broken config");

    // Inadmissible schedule: configuration error.
    let inadmissible = write_config(
        dir.path(),
        "inadmissible.toml",
        &SMALL_DELTA.replace("c = -0.05", "gamma = 0.9"),
    );
    let output = run(&[
        "power",
        "--config",
        inadmissible.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 2, "inadmissible schedule");

    // Scientific violation: a generator whose infimum vanishes.
    let degenerate = write_config(
        dir.path(),
        "degenerate.toml",
        &SMALL_DELTA.replace(
            "variant = \"constant\"",
            "variant = \"sine-phase\"\namplitude = 1.0",
        ),
    );
    let output = run(&[
        "validate-generator",
        "--config",
        degenerate.to_str().unwrap(),
    ]);
    assert_exit(&output, 1, "degenerate generator");

    // Unwritable output path: I/O.
    let config = write_config(dir.path(), "ok.toml", SMALL_DELTA);
    let output = run(&[
        "power",
        "--config",
        config.to_str().unwrap(),
        "--out",
        "/nonexistent-dir/out.csv",
    ]);
    assert_exit(&output, 3, "unwritable output");
}

#[test]
fn validate_generator_writes_a_json_report_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.toml", SMALL_DELTA);
    let out = dir.path().join("report.json");
    let output = run(&[
        "validate-generator",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "validate constant generator");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["report"]["inf_mean"], 1.0);
    assert!(dir.path().join("report.manifest.json").exists());
    assert!(String::from_utf8_lossy(&output.stdout).contains("PASS"));
}

#[test]
fn shipped_example_configs_parse_and_round_trip() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        seen += 1;
        let text = fs::read_to_string(&path).unwrap();
        let cfg = ExperimentConfig::from_toml_str(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let round = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, round, "{}", path.display());
    }
    assert!(
        seen >= 7,
        "expected the shipped example configs, found {seen}"
    );
}
