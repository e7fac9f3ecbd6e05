//! End-to-end runs of the subcommand drivers on a small double well.

use std::fs;
use std::path::Path;

use twobody_tunnel::config::RunConfig;
use twobody_tunnel::domain::InteractionKind;
use twobody_tunnel::output::{cmd_oracle, cmd_quench, cmd_scan, cmd_spectrum};

fn small(dir: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.potential.well_length = 6.0;
    c.potential.barrier_width = 1.0;
    c.potential.barrier_height = 0.5;
    c.mesh.h = 0.5;
    c.solver.k = 24;
    c.scan.n_u = 7;
    c.scan.u_min = -0.5;
    c.scan.u_max = 1.0;
    c.scan.refine_du = 1e-3;
    c.quench.horizon = 200.0;
    c.quench.n_times = 101;
    c.output.dir = dir.to_path_buf();
    c
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn spectrum_csv_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.interaction.kind = InteractionKind::Contact;
    cmd_spectrum(&cfg).unwrap();
    let r = rows(&tmp.path().join("spectrum.csv"));
    assert_eq!(r[0].join(","), "n,E,slope,w_I,w_II,w_III,class,residual");
    assert_eq!(r.len(), cfg.solver.k + 1);
    for row in &r[1..] {
        assert_eq!(row.len(), 8);
        let w: f64 = row[3..6].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((w - 1.0).abs() < 1e-9);
        assert!(["T11", "T20", "mixed"].contains(&row[6].as_str()));
    }
    // energies ascending
    let e: Vec<f64> = r[1..].iter().map(|row| row[1].parse().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[0] <= w[1]));

    let first = fs::read(tmp.path().join("spectrum.csv")).unwrap();
    let echoed = RunConfig::load(&tmp.path().join("config.toml")).unwrap();
    assert_eq!(echoed, cfg);
    cmd_spectrum(&echoed).unwrap();
    assert_eq!(fs::read(tmp.path().join("spectrum.csv")).unwrap(), first);
}

#[test]
fn quench_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.interaction.kind = InteractionKind::SoftCoulomb;
    cfg.quench.u = 0.2;
    cfg.solver.k = 80;
    let (summary, _) = cmd_quench(&cfg).unwrap();

    let ts = rows(&tmp.path().join("timeseries.csv"));
    assert_eq!(ts[0].join(","), "t,P0,P1,P2,N_L");
    assert_eq!(ts.len(), cfg.quench.n_times + 1);
    let n0: f64 = ts[1][4].parse().unwrap();
    // g lies in region I, so projecting out a deficit d leaves
    // N_L(0) = 1 - 2d + <r|N_L|r>, between 1 - 2d and 1 - d
    let deficit = 1.0 - summary.captured_norm;
    assert!(n0 <= 1.0 - deficit + 1e-9 && n0 >= 1.0 - 2.0 * deficit - 1e-9, "N_L(0) = {n0}, deficit {deficit}");

    let fr = rows(&tmp.path().join("frequencies.csv"));
    assert_eq!(fr[0].join(","), "omega,A,m,n,dominant_flag");
    let mut total = 0.0;
    let mut flagged = 0;
    for row in &fr[1..] {
        let a: f64 = row[1].parse().unwrap();
        total += a;
        match row[4].as_str() {
            "1" => assert!(a >= cfg.quench.dominant_threshold),
            "-1" => assert!(a <= -cfg.quench.dominant_threshold),
            "0" => assert!(a.abs() < cfg.quench.dominant_threshold),
            other => panic!("bad flag {other}"),
        }
        if row[4] != "0" {
            flagged += 1;
        }
        let (m, n): (usize, usize) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!(m < n);
    }
    assert_eq!(flagged, summary.dominant_count);
    assert!((total - summary.amplitude_sum).abs() < 1e-12);

    let txt = fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(txt.contains("captured_norm: "));
    assert!(txt.contains("tunneling_period: "));
    assert!(txt.contains("dominant_count: "));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["dominant_count"].as_u64().unwrap() as usize, summary.dominant_count);
}

#[test]
fn scan_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.interaction.kind = InteractionKind::HardCoulomb;
    let (result, _) = cmd_scan(&cfg).unwrap();
    let scan = rows(&tmp.path().join("scan.csv"));
    assert_eq!(scan[0].join(","), "U,n,E,branch_id,slope,class,weight");
    let refined: usize = result.refinement.iter().map(|p| p.levels.len()).sum();
    assert_eq!(scan.len() - 1, cfg.scan.n_u * cfg.solver.k + refined);
    // grid rows come first, in U order
    let us: Vec<f64> = scan[1..=cfg.scan.n_u * cfg.solver.k].iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(us.windows(2).all(|w| w[0] <= w[1]));
    // within one U every level sits on a distinct branch
    for p in &result.points {
        let mut b: Vec<usize> = p.levels.iter().map(|l| l.branch).collect();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), p.levels.len());
    }

    let cr = rows(&tmp.path().join("crossings.csv"));
    assert_eq!(cr[0].join(","), "U_center,gap,participants,types");
    assert_eq!(cr.len() - 1, result.resolved_crossings().count());
    for row in &cr[1..] {
        assert_eq!(row[2].split(';').count(), row[3].split(';').count());
    }
    let dom = rows(&tmp.path().join("dominant_vs_U.csv"));
    assert_eq!(dom[0].join(","), "U,omega,A,component_id");
    for row in &dom[1..] {
        let (a, b) = row[3].split_once('-').unwrap();
        assert!(a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok());
    }
    assert!(tmp.path().join("initial_state.csv").exists());
}

#[test]
fn oracle_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.oracle.dim = 1;
    cfg.oracle.isolated = true;
    cfg.oracle.n_grid = 500;
    cfg.oracle.k = 3;
    let (e, _) = cmd_oracle(&cfg).unwrap();
    let exact = std::f64::consts::PI.powi(2) / 36.0;
    assert!((e[0] - exact).abs() < 1e-3 * exact);
    let r = rows(&tmp.path().join("oracle.csv"));
    assert_eq!(r[0].join(","), "n,E");
    assert_eq!(r.len(), 4);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = small(&blocker.join("sub"));
    let err = cmd_spectrum(&cfg).unwrap_err();
    assert!(matches!(err, twobody_tunnel::Error::Io(_)), "{err}");
    assert_eq!(err.exit_code(), 1);
}
