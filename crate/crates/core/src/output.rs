//! Subcommand drivers: run a configuration and serialize the results.
//!
//! All numbers are written with Rust's shortest round-trip formatting, so a
//! rerun from the echoed `config.toml` reproduces every file byte for byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::domain::Region;
use crate::eigensolve::{Eigensolver, SolverRegistry};
use crate::error::{Error, Result};
use crate::frequency::{dominant, frequency_components, nl_matrix, tunneling_period};
use crate::oracle::{fd_oracle_1d, fd_oracle_with_limit, DEFAULT_MEMORY_LIMIT};
use crate::quench::{decompose, evolve_probabilities, region_projections, time_grid, QuenchSetup};
use crate::scan::{classify_state, hellmann_feynman_slope, scan_levels, u_grid, ScanPoint, ScanResult};

const SPECTRUM_HEADER: &str = "n,E,slope,w_I,w_II,w_III,class,residual";
const TIMESERIES_HEADER: &str = "t,P0,P1,P2,N_L";
const FREQUENCIES_HEADER: &str = "omega,A,m,n,dominant_flag";
const SCAN_HEADER: &str = "U,n,E,branch_id,slope,class,weight";
const CROSSINGS_HEADER: &str = "U_center,gap,participants,types";
const DOMINANT_HEADER: &str = "U,omega,A,component_id";
const INITIAL_HEADER: &str = "U,E_initial,captured_norm";
const ORACLE_HEADER: &str = "n,E";

fn create(dir: &Path, name: &str, header: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "{header}")?;
    Ok((path, w))
}

/// Creates the output directory and echoes the effective configuration.
fn prepare(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_dotted())?;
    Ok(dir)
}

fn solver(cfg: &RunConfig) -> Result<Box<dyn Eigensolver>> {
    SolverRegistry::builtin().create(&cfg.solver.method)
}

fn setup(cfg: &RunConfig, u: f64) -> Result<QuenchSetup> {
    QuenchSetup::new(&cfg.potential, &cfg.interaction_spec(u), cfg.mesh.h, cfg.mesh.scheme)
}

/// Eigenpairs at `spectrum.u`: writes `spectrum.csv`.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = prepare(cfg)?;
    let u = cfg.spectrum.u;
    let setup = setup(cfg, u)?;
    let pairs = setup.eigenpairs(u, cfg.solver.k, solver(cfg)?.as_ref(), cfg.solver.tol)?;
    let bundle = &setup.full;
    let regions = Region::ALL.map(|r| bundle.region(r));
    let (path, mut w) = create(&dir, "spectrum.csv", SPECTRUM_HEADER)?;
    for (n, p) in pairs.iter().enumerate() {
        let (class, wr) = classify_state(p, regions, cfg.scan.class_threshold);
        let slope = hellmann_feynman_slope(p, &bundle.v_int);
        writeln!(w, "{n},{},{slope},{},{},{},{class},{}", p.energy, wr[0], wr[1], wr[2], p.residual_norm)?;
    }
    w.flush()?;
    Ok(vec![dir.join("config.toml"), path])
}

#[derive(Debug, Clone, Serialize)]
pub struct QuenchSummary {
    pub kind: String,
    pub u: f64,
    pub captured_norm: f64,
    pub initial_energy: f64,
    pub nl_offset: f64,
    pub amplitude_sum: f64,
    /// `2 pi / omega` of the largest dominant component; absent without one.
    pub tunneling_period: Option<f64>,
    pub dominant_count: usize,
    pub warning: Option<String>,
}

/// Quench at `quench.u`: writes `timeseries.csv`, `frequencies.csv`,
/// `summary.txt` and `summary.json`.
pub fn cmd_quench(cfg: &RunConfig) -> Result<(QuenchSummary, Vec<PathBuf>)> {
    let dir = prepare(cfg)?;
    let u = cfg.quench.u;
    let setup = setup(cfg, u)?;
    let solver = solver(cfg)?;
    let g = setup.initial_state(u, solver.as_ref(), cfg.solver.tol)?;
    let pairs = setup.eigenpairs(u, cfg.solver.k, solver.as_ref(), cfg.solver.tol)?;
    let d = decompose(&g, &pairs, &setup.full.mass, cfg.solver.norm_floor)?;
    let q = region_projections(&setup.full, &pairs);
    let series = evolve_probabilities(&d, &q, &time_grid(cfg.quench.horizon, cfg.quench.n_times))?;
    let expansion = frequency_components(&d, &nl_matrix(&q[0], &q[1]), 0.0)?;
    let thr = cfg.quench.dominant_threshold;
    let dom = dominant(&expansion.components, thr);
    let period = match tunneling_period(&dom) {
        Ok(t) => Some(t),
        Err(Error::NoDominantComponent) => None,
        Err(e) => return Err(e),
    };

    let (ts_path, mut w) = create(&dir, "timeseries.csv", TIMESERIES_HEADER)?;
    for i in 0..series.times.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            series.times[i], series.p0[i], series.p1[i], series.p2[i], series.n_left[i]
        )?;
    }
    w.flush()?;

    let (fr_path, mut w) = create(&dir, "frequencies.csv", FREQUENCIES_HEADER)?;
    for c in &expansion.components {
        let flag = if c.amplitude >= thr {
            1
        } else if c.is_negative() && -c.amplitude >= thr {
            -1
        } else {
            0
        };
        writeln!(w, "{},{},{},{},{flag}", c.omega, c.amplitude, c.m, c.n)?;
    }
    w.flush()?;

    let summary = QuenchSummary {
        kind: cfg.interaction.kind.name().to_string(),
        u,
        captured_norm: d.captured_norm,
        initial_energy: g.energy,
        nl_offset: expansion.offset,
        amplitude_sum: expansion.components.iter().map(|c| c.amplitude).sum(),
        tunneling_period: period,
        dominant_count: dom.len(),
        warning: d.warning.clone(),
    };
    let txt = dir.join("summary.txt");
    let mut t = String::new();
    t.push_str(&format!("kind: {}\nU: {u}\n", summary.kind));
    t.push_str(&format!("captured_norm: {}\n", summary.captured_norm));
    t.push_str(&format!("initial_energy: {}\n", summary.initial_energy));
    t.push_str(&format!("nl_offset: {}\n", summary.nl_offset));
    t.push_str(&format!("amplitude_sum: {}\n", summary.amplitude_sum));
    match period {
        Some(p) => t.push_str(&format!("tunneling_period: {p}\n")),
        None => t.push_str("tunneling_period: undefined (no dominant component)\n"),
    }
    t.push_str(&format!("dominant_count: {}\n", summary.dominant_count));
    if let Some(warn) = &summary.warning {
        t.push_str(&format!("warning: {warn}\n"));
    }
    fs::write(&txt, t)?;
    let json = dir.join("summary.json");
    fs::write(&json, serde_json::to_string_pretty(&summary).map_err(|e| Error::Invariant(e.to_string()))? + "\n")?;
    Ok((summary, vec![dir.join("config.toml"), ts_path, fr_path, txt, json]))
}

fn write_scan_rows(w: &mut impl Write, p: &ScanPoint) -> Result<()> {
    for l in &p.levels {
        writeln!(w, "{},{},{},{},{},{},{}", p.u, l.n, l.energy, l.branch, l.slope, l.class, l.weight)?;
    }
    Ok(())
}

fn write_dominant_rows(w: &mut impl Write, p: &ScanPoint) -> Result<()> {
    for c in &p.dominant {
        let id = format!("{}-{}", p.branch_of(c.m), p.branch_of(c.n));
        writeln!(w, "{},{},{},{id}", p.u, c.omega, c.amplitude)?;
    }
    Ok(())
}

/// Interaction sweep: writes `scan.csv`, `crossings.csv`, `dominant_vs_U.csv`
/// and `initial_state.csv`. Grid rows are flushed as each point is tracked,
/// so an interrupted run leaves a valid prefix; refinement rows follow the
/// grid rows.
pub fn cmd_scan(cfg: &RunConfig) -> Result<(ScanResult, Vec<PathBuf>)> {
    let dir = prepare(cfg)?;
    let setup = setup(cfg, 0.0)?;
    let solver = solver(cfg)?;
    let grid = u_grid(cfg.scan.u_min, cfg.scan.u_max, cfg.scan.n_u);
    let (scan_path, mut scan_w) = create(&dir, "scan.csv", SCAN_HEADER)?;
    let (dom_path, mut dom_w) = create(&dir, "dominant_vs_U.csv", DOMINANT_HEADER)?;
    let (init_path, mut init_w) = create(&dir, "initial_state.csv", INITIAL_HEADER)?;
    let result = scan_levels(&setup, &grid, &cfg.scan_settings(), solver.as_ref(), |p| {
        write_scan_rows(&mut scan_w, p)?;
        write_dominant_rows(&mut dom_w, p)?;
        writeln!(init_w, "{},{},{}", p.u, p.initial_energy, p.captured_norm)?;
        scan_w.flush()?;
        dom_w.flush()?;
        init_w.flush()?;
        Ok(())
    })?;
    for p in &result.refinement {
        write_scan_rows(&mut scan_w, p)?;
        write_dominant_rows(&mut dom_w, p)?;
        writeln!(init_w, "{},{},{}", p.u, p.initial_energy, p.captured_norm)?;
    }
    scan_w.flush()?;
    dom_w.flush()?;
    init_w.flush()?;

    let (cr_path, mut w) = create(&dir, "crossings.csv", CROSSINGS_HEADER)?;
    for c in result.resolved_crossings() {
        let parts: Vec<String> = c.participants.iter().map(usize::to_string).collect();
        let types: Vec<&str> = c.types.iter().map(|t| t.name()).collect();
        writeln!(w, "{},{},{},{}", c.u_center, c.gap, parts.join(";"), types.join(";"))?;
    }
    w.flush()?;
    Ok((
        result,
        vec![dir.join("config.toml"), scan_path, cr_path, dom_path, init_path],
    ))
}

/// Finite-difference reference energies: writes `oracle.csv`.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<(Vec<f64>, Vec<PathBuf>)> {
    let dir = prepare(cfg)?;
    let o = &cfg.oracle;
    let energies = if o.dim == 1 {
        fd_oracle_1d(&cfg.potential, o.isolated, o.n_grid, o.k)?
    } else {
        fd_oracle_with_limit(
            &cfg.potential,
            &cfg.interaction_spec(o.u),
            o.u,
            o.n_grid,
            o.k,
            o.isolated,
            DEFAULT_MEMORY_LIMIT,
        )?
    };
    let (path, mut w) = create(&dir, "oracle.csv", ORACLE_HEADER)?;
    for (n, e) in energies.iter().enumerate() {
        writeln!(w, "{n},{e}")?;
    }
    w.flush()?;
    Ok((energies, vec![dir.join("config.toml"), path]))
}
