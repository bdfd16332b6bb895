use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};

use rifs_quant_cli::run_with_output;

#[derive(Clone, Default)]
struct Captured(Arc<Mutex<Vec<u8>>>);

impl Write for Captured {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl Captured {
    fn text(&self) -> String {
        String::from_utf8(self.0.lock().unwrap().clone()).unwrap()
    }
}

fn fixture(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    p.to_string_lossy().into_owned()
}

fn invoke(out: &Path, args: &[&str]) -> (i32, String) {
    let sink = Captured::default();
    let mut argv = vec!["rifs-quant", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    let code = run_with_output(argv, Box::new(sink.clone()));
    (code, sink.text())
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn bounds_for_middle_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = invoke(dir.path(), &["bounds", &fixture("c2.json")]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("k_r=0.630930 l_r=0.630930"), "{text}");
    let csv = fs::read_to_string(dir.path().join("profiles.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "bounds");
}

#[test]
fn cycle_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = invoke(dir.path(), &["bounds", &fixture("cycle.json")]);
    assert_eq!(code, 3);
    assert!(text.contains("k_r=0.000000 l_r=0.000000"), "{text}");
    assert!(text.contains("degenerate"));
}

#[test]
fn every_fixture_validates() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["c2.json", "r2.json", "cycle.json", "planar.json"] {
        let (code, text) = invoke(dir.path(), &["validate", &fixture(name)]);
        assert_eq!(code, 0, "{name}: {text}");
        assert!(text.starts_with("valid:"));
    }
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("r2.json")).unwrap();
    let broken = text.replacen("0.5", "0.4", 1);
    assert_ne!(broken, text);
    let bad_rows = write_config(dir.path(), "rows.json", &broken);
    let (code, _) = invoke(dir.path(), &["validate", &bad_rows]);
    assert_eq!(code, 2);

    let garbage = write_config(dir.path(), "garbage.json", "{\n  \"states\": ");
    let (code, _) = invoke(dir.path(), &["bounds", &garbage]);
    assert_eq!(code, 2);
}

#[test]
fn oracle_limit_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = invoke(
        dir.path(),
        &["oracle-quantize", &fixture("c2.json"), "--samples", "40", "--n", "3"],
    );
    assert_eq!(code, 4);
}

#[test]
fn oracle_on_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write_config(
        dir.path(),
        "pts.csv",
        "x1\n0\n0.3333333333333333\n0.6666666666666666\n1\n",
    );
    let (code, text) = invoke(dir.path(), &["oracle-quantize", "--points", &pts, "--n", "2"]);
    assert_eq!(code, 0, "{text}");
    let book = fs::read_to_string(dir.path().join("codebook.csv")).unwrap();
    let mut xs: Vec<f64> = book.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    xs.sort_by(f64::total_cmp);
    assert!(
        (xs[0] - 1.0 / 6.0).abs() < 1e-12 && (xs[1] - 5.0 / 6.0).abs() < 1e-12,
        "{xs:?}"
    );
}

#[test]
fn antichain_weights() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = invoke(
        dir.path(),
        &["antichain", &fixture("cycle.json"), "--eps", "0.1", "--weight", "nu"],
    );
    assert_eq!(code, 1);
    for weight in ["nu", "scaled", "contraction"] {
        let (code, _) = invoke(
            dir.path(),
            &["antichain", &fixture("r2.json"), "--eps", "0.1", "--weight", weight],
        );
        assert_eq!(code, 0, "{weight}");
        let csv = fs::read_to_string(dir.path().join("antichain.csv")).unwrap();
        assert!(csv.lines().count() > 2);
    }
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "quantize",
        &fixture("planar.json"),
        "--samples",
        "3000",
        "--seed",
        "17",
        "--n",
        "6",
        "--restarts",
        "5",
    ];
    let args: Vec<&str> = args.iter().map(|s| s.as_ref()).collect();
    assert_eq!(invoke(a.path(), &args).0, 0);
    assert_eq!(invoke(b.path(), &args).0, 0);
    for name in ["codebook.csv", "runs.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn sample_then_quantize_points() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = invoke(
        dir.path(),
        &["sample", &fixture("c2.json"), "--samples", "500", "--seed", "2"],
    );
    assert_eq!(code, 0);
    let pts = dir.path().join("points.csv");
    let (code, text) = invoke(dir.path(), &["quantize", "--points", pts.to_str().unwrap(), "--n", "2"]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(
        fs::read_to_string(dir.path().join("codebook.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}

#[test]
fn small_dimension_sweep_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = invoke(
        dir.path(),
        &[
            "estimate-dim",
            &fixture("c2.json"),
            "--samples",
            "20000",
            "--n-grid",
            "2:64:geom",
            "--restarts",
            "4",
        ],
    );
    assert_eq!(code, 0, "{text}");
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().ends_with("consistent"), "{summary}");
    assert_eq!(
        fs::read_to_string(dir.path().join("report.csv"))
            .unwrap()
            .lines()
            .count(),
        7
    );
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rifs-quant");
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(bin)
        .args(["--out", dir.path().to_str().unwrap(), "bounds", &fixture("cycle.json")])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));
    let status = Command::new(bin).arg("--no-such-flag").output().unwrap();
    assert_eq!(status.status.code(), Some(1));
    let status = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(0));
}
