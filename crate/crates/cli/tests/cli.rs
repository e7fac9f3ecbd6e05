use std::fs;
use std::process::Command;

fn tunnel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tunnel"))
}

const SMALL: &str = "\
potential.well_length = 6
potential.barrier_width = 1
potential.barrier_height = 0.5
mesh.h = 0.5
solver.k = 12
";

#[test]
fn oracle_subcommand_writes_energies() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tunnel()
        .args(["oracle", "--dim", "1", "--isolated", "--n-grid", "2000", "--levels", "2", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("oracle.csv")).unwrap();
    let e1: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((e1 - std::f64::consts::PI.powi(2) / 2500.0).abs() < 1e-6);
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, format!("{SMALL}interaction.kind = \"soft_coulomb\"\n")).unwrap();
    let out = tunnel()
        .arg("spectrum")
        .arg("--config")
        .arg(&cfg)
        .args(["--u", "-0.25", "--k", "6", "--set", "interaction.softening=2"])
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echoed = fs::read_to_string(tmp.path().join("o/config.toml")).unwrap();
    assert!(echoed.contains("spectrum.u = -0.25"));
    assert!(echoed.contains("solver.k = 6"));
    assert!(echoed.contains("interaction.softening = 2.0"));
    assert!(echoed.contains("interaction.kind = \"soft_coulomb\""));
    let rows = fs::read_to_string(tmp.path().join("o/spectrum.csv")).unwrap().lines().count();
    assert_eq!(rows, 7);

    // rerunning from the echoed config reproduces the output
    let again = tunnel()
        .arg("spectrum")
        .arg("--config")
        .arg(tmp.path().join("o/config.toml"))
        .arg("--out")
        .arg(tmp.path().join("p"))
        .output()
        .unwrap();
    assert!(again.status.success());
    assert_eq!(
        fs::read(tmp.path().join("o/spectrum.csv")).unwrap(),
        fs::read(tmp.path().join("p/spectrum.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectrum", "--kind", "yukawa"],
        vec!["spectrum", "--h", "-1"],
        vec!["spectrum", "--set", "mesh.bogus=1"],
        vec!["spectrum", "--solver", "arpack"],
        vec!["spectrum", "--h", "80"],
    ] {
        let out = tunnel().args(&args).arg("--out").arg(tmp.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let missing = tunnel().args(["spectrum", "--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn quench_and_scan_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = tunnel()
        .arg("quench")
        .arg("--config")
        .arg(&cfg)
        .args(["--k", "40", "--u", "0.3", "--horizon", "100", "--n-times", "11"])
        .arg("--out")
        .arg(tmp.path().join("q"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["timeseries.csv", "frequencies.csv", "summary.txt", "summary.json", "config.toml"] {
        assert!(tmp.path().join("q").join(f).exists(), "{f}");
    }

    let out = tunnel()
        .arg("scan")
        .arg("--config")
        .arg(&cfg)
        .args(["--n-u", "4", "--u-min", "-0.2", "--u-max", "0.4", "--no-refine"])
        .arg("--out")
        .arg(tmp.path().join("s"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(tmp.path().join("s/scan.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 4 * 12);
}
