use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bb84-atmo"));
    cmd.env_remove("BB84_ATMO_PROFILES");
    cmd
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn machine_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key}"))
        .to_string()
}

#[test]
fn machine_output_is_byte_identical() {
    let path = scenario("bromine.toml");
    let args = ["run", "--scenario", path.to_str().unwrap(), "--windows", "200000", "--format", "machine"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(machine_value(&text, "loss_db"), "20");
    assert_eq!(machine_value(&text, "secure"), "true");
    assert_eq!(machine_value(&text, "total_windows"), "1600000");
}

#[test]
fn human_and_machine_carry_the_same_numbers() {
    let path = scenario("vacuum.toml");
    let base = ["run", "--scenario", path.to_str().unwrap(), "--windows", "100000", "--seed", "11"];
    let human = stdout(&run(&[&base[..], &["--format", "human"]].concat()));
    let machine = stdout(&run(&[&base[..], &["--format", "machine"]].concat()));
    for line in machine.lines() {
        let (key, value) = line.split_once('=').unwrap();
        if key.starts_with("counts.") || value.parse::<f64>().is_ok() {
            assert!(human.contains(value), "{key}={value} missing from human report");
        }
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.txt");
    let out = run(&[
        "run", "--preset", "vacuum", "--windows", "1000", "--format", "machine",
        "--out", target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    assert_eq!(machine_value(&text, "scenario"), "vacuum");
}

#[test]
fn zero_windows_is_a_validation_error() {
    let out = run(&["run", "--preset", "vacuum", "--windows", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_windows"));
}

#[test]
fn malformed_scenario_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    let text = std::fs::read_to_string(scenario("vacuum.toml"))
        .unwrap()
        .replace("seed = 1", "seed = \"one\"");
    std::fs::write(&path, text).unwrap();
    let out = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.toml") && err.contains("line"), "{err}");
}

#[test]
fn unknown_preset_and_flags_exit_with_validation_code() {
    assert_eq!(run(&["run", "--preset", "mars"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--preset", "vacuum", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["run"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn table_lists_eight_rows() {
    let out = run(&["table"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].contains("17.58") && rows[0].contains("17.6"));
    assert!(rows[5].contains("54.95") && rows[5].contains("52.7") && rows[5].contains("FLAGGED"));
    assert_eq!(text.matches("FLAGGED").count(), 2);
}

#[test]
fn presets_lists_every_scenario() {
    let out = run(&["presets"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["vacuum", "bromine", "summer-rural-13km", "horizontal-144km", "satellite-downlink"] {
        assert!(text.contains(name), "{name}");
    }
    assert!(text.lines().count() > 12);
}

#[test]
fn sweep_emits_csv() {
    let out = run(&[
        "sweep", "--preset", "bromine", "--param", "transmittance", "--from", "1", "--to", "0.001",
        "--steps", "7", "--log", "--windows", "10000", "--sampler", "aggregated",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "transmittance,analytic_qber,simulated_qber,simulated_stderr,loss_db,secure"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[6][0], "0.001");
    assert_eq!(rows[4][0], "0.01");
    assert_eq!(rows[4][4], "20");
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let out = run(&["sweep", "--preset", "vacuum", "--param", "colour", "--from", "0", "--to", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["sweep", "--preset", "vacuum", "--param", "length_km", "--from", "0", "--to", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn user_profile_table_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("profiles.csv");
    std::fs::write(&table, "# custom\nsummer, rural, 50, 0.005\n").unwrap();
    let path = dir.path().join("custom.toml");
    let text = std::fs::read_to_string(scenario("winter-urban-13km.toml"))
        .unwrap()
        .replace("season = \"winter\"", "season = \"summer\"")
        .replace("aerosol = \"urban\"", "aerosol = \"rural\"")
        .replace("visibility_km = 13", "visibility_km = 50")
        .replace("length_km = 52.7", "length_km = 200");
    std::fs::write(&path, text).unwrap();

    let args = ["run", "--scenario", path.to_str().unwrap(), "--windows", "1000", "--format", "machine"];
    assert_eq!(run(&args).status.code(), Some(1));

    let out = bin().args(args).env("BB84_ATMO_PROFILES", &table).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t: f64 = machine_value(&stdout(&out), "transmittance").parse().unwrap();
    assert!((t - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn all_sample_scenarios_run() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["run", "--scenario", path.to_str().unwrap(), "--windows", "20000"]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}
