use std::path::{Path, PathBuf};
use std::process::Command;

use projwalk_cli::{load_measure, save_measure, ExperimentConfig};
use projwalk_core::{EmpiricalMeasure, Error, Streams};

fn ensembles() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ensembles").canonicalize().unwrap()
}

fn parse(body: &str) -> Result<ExperimentConfig, projwalk_cli::ConfigError> {
    ExperimentConfig::from_str(body, &ensembles(), None, None)
}

#[test]
fn config_errors_name_the_key() {
    let cases = [
        ("experiment = \"lyapunov\"\nensemble = \"two_matrix.toml\"\n[params]\nn = 10\nreplicas = 5\nspeed = 1\n", "speed"),
        ("experiment = \"lyapunov\"\nensemble = \"two_matrix.toml\"\n[params]\nn = 10\n", "replicas"),
        ("experiment = \"lyapunov\"\nensemble = \"two_matrix.toml\"\n[params]\nn = 0\nreplicas = 5\n", "params.n"),
        ("experiment = \"spectrum\"\nensemble = \"two_matrix.toml\"\n[params]\ns = [0.5]\n[params.grid]\nm = 1\n", "params.grid.m"),
        ("experiment = \"walk\"\nensemble = \"two_matrix.toml\"\n", "experiment"),
    ];
    for (body, key) in cases {
        let e = parse(body).expect_err(body);
        assert!(e.key.contains(key), "expected key containing {key}, got {e}");
        assert!(e.to_string().contains(key));
    }
}

#[test]
fn missing_ensemble_is_reported_against_its_key() {
    let e = parse("experiment = \"lyapunov\"\nensemble = \"nope.toml\"\n[params]\nn = 10\nreplicas = 5\n").unwrap_err();
    assert_eq!(e.key, "ensemble");
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn projwalk(args: &[&str], config: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_projwalk")).args(args).arg("--config").arg(config).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ens = ensembles().join("two_matrix.toml");
    let good = write_config(
        dir.path(),
        &format!("experiment = \"lyapunov\"\nensemble = \"{}\"\n[params]\nn = 10\nreplicas = 5\n", ens.display()),
    );
    let out = projwalk(&["validate"], &good);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));

    let bad = write_config(
        dir.path(),
        &format!("experiment = \"lyapunov\"\nensemble = \"{}\"\n[params]\nn = 10\nreplicas = 0\n", ens.display()),
    );
    let out = projwalk(&["validate"], &bad);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.replicas"));
}

#[test]
fn rerun_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "experiment = \"lyapunov\"\nensemble = \"{}\"\nseed = 3\n[params]\nn = 200\nreplicas = 32\n",
            ensembles().join("irreducible.toml").display()
        ),
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_projwalk"))
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        ["lyapunov.csv", "lyapunov.json"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

fn sample_measure() -> EmpiricalMeasure {
    let mut rng = Streams::new(17).stream(0);
    EmpiricalMeasure::uniform_circle(200, &mut rng).unwrap().resample(150, &mut rng).unwrap()
}

#[test]
fn measure_file_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let m = sample_measure();
    save_measure(&path, &m).unwrap();
    let back = load_measure(&path).unwrap();
    assert_eq!(back.weights(), m.weights());
    for (a, b) in back.points().iter().zip(m.points()) {
        assert_eq!(a.rep(), b.rep());
    }
}

fn format_line(text: &str) -> usize {
    match EmpiricalMeasure::from_text(text) {
        Err(Error::Format { line, .. }) => line,
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn damaged_measure_files_report_a_line() {
    let text = sample_measure().to_text();
    let lines: Vec<&str> = text.lines().collect();
    let truncated = lines[..lines.len() - 5].join("\n");
    assert_eq!(format_line(&truncated), lines.len() - 4);

    let mut skewed: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    let mut fields: Vec<String> = skewed[3].split_whitespace().map(String::from).collect();
    fields[0] = format!("{:.16e}", fields[0].parse::<f64>().unwrap() + 0.01);
    skewed[3] = fields.join(" ");
    assert!(format_line(&skewed.join("\n")) > 3);

    let mut garbled = lines.iter().map(|l| l.to_string()).collect::<Vec<_>>();
    garbled[10] = "0.1 abc 0.3".into();
    assert_eq!(format_line(&garbled.join("\n")), 11);
}
