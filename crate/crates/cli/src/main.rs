//! `tunnel`: command-line front end.
//!
//! Settings come from defaults, then `--config <file>`, then `--set key=value`,
//! then the dedicated flags, later sources winning.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twobody_tunnel::config::RunConfig;
use twobody_tunnel::output::{cmd_oracle, cmd_quench, cmd_scan, cmd_spectrum};
use twobody_tunnel::Result;

#[derive(Debug, Parser)]
#[command(name = "tunnel", version, about = "Two interacting bosons tunneling through a double-well barrier")]
struct Cli {
    /// Run configuration with dotted keys, e.g. `mesh.h = 1`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// contact, soft_coulomb or hard_coulomb.
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    softening: Option<f64>,
    #[arg(long, global = true)]
    well_length: Option<f64>,
    #[arg(long, global = true)]
    barrier_width: Option<f64>,
    #[arg(long, global = true)]
    barrier_height: Option<f64>,
    /// Mesh spacing.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// consistent or lumped.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Eigensolver name (lanczos, dense).
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Number of eigenpairs.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    norm_floor: Option<f64>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest eigenpairs at one interaction strength.
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        u: Option<f64>,
    },
    /// Quench from the isolated left-well ground state.
    Quench {
        #[arg(long, allow_hyphen_values = true)]
        u: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        n_times: Option<usize>,
        #[arg(long)]
        dominant_threshold: Option<f64>,
    },
    /// Sweep the interaction strength and locate avoided crossings.
    Scan {
        #[arg(long, allow_hyphen_values = true)]
        u_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        u_max: Option<f64>,
        #[arg(long)]
        n_u: Option<usize>,
        /// Skip golden-section refinement of crossing centers.
        #[arg(long)]
        no_refine: bool,
    },
    /// Finite-difference reference energies.
    Oracle {
        #[arg(long, allow_hyphen_values = true)]
        u: Option<f64>,
        #[arg(long)]
        n_grid: Option<usize>,
        /// Number of energies to report.
        #[arg(long)]
        levels: Option<usize>,
        /// 1 (single particle) or 2 (pair).
        #[arg(long)]
        dim: Option<usize>,
        /// Left well only, with hard walls.
        #[arg(long)]
        isolated: bool,
    },
}

fn overrides(cli: &Cli) -> Vec<(&'static str, String)> {
    let c = &cli.common;
    let mut v: Vec<(&'static str, String)> = Vec::new();
    let mut push = |key: &'static str, value: Option<String>| {
        if let Some(value) = value {
            v.push((key, value));
        }
    };
    let quoted = |s: &String| format!("{s:?}");
    push("interaction.kind", c.kind.as_ref().map(quoted));
    push("interaction.softening", c.softening.map(|x| x.to_string()));
    push("potential.well_length", c.well_length.map(|x| x.to_string()));
    push("potential.barrier_width", c.barrier_width.map(|x| x.to_string()));
    push("potential.barrier_height", c.barrier_height.map(|x| x.to_string()));
    push("mesh.h", c.h.map(|x| x.to_string()));
    push("mesh.scheme", c.scheme.as_ref().map(quoted));
    push("solver.method", c.solver.as_ref().map(quoted));
    push("solver.k", c.k.map(|x| x.to_string()));
    push("solver.tol", c.tol.map(|x| x.to_string()));
    push("solver.norm_floor", c.norm_floor.map(|x| x.to_string()));
    push("output.dir", c.out.as_ref().map(|p| format!("{:?}", p.display().to_string())));
    match &cli.command {
        Command::Spectrum { u } => push("spectrum.u", u.map(|x| x.to_string())),
        Command::Quench {
            u,
            horizon,
            n_times,
            dominant_threshold,
        } => {
            push("quench.u", u.map(|x| x.to_string()));
            push("quench.horizon", horizon.map(|x| x.to_string()));
            push("quench.n_times", n_times.map(|x| x.to_string()));
            push("quench.dominant_threshold", dominant_threshold.map(|x| x.to_string()));
        }
        Command::Scan {
            u_min,
            u_max,
            n_u,
            no_refine,
        } => {
            push("scan.u_min", u_min.map(|x| x.to_string()));
            push("scan.u_max", u_max.map(|x| x.to_string()));
            push("scan.n_u", n_u.map(|x| x.to_string()));
            push("scan.refine", no_refine.then(|| "false".to_string()));
        }
        Command::Oracle {
            u,
            n_grid,
            levels,
            dim,
            isolated,
        } => {
            push("oracle.u", u.map(|x| x.to_string()));
            push("oracle.n_grid", n_grid.map(|x| x.to_string()));
            push("oracle.k", levels.map(|x| x.to_string()));
            push("oracle.dim", dim.map(|x| x.to_string()));
            push("oracle.isolated", isolated.then(|| "true".to_string()));
        }
    }
    v
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for item in &cli.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| twobody_tunnel::Error::Config(format!("expected KEY=VALUE, got '{item}'")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    for (key, value) in overrides(cli) {
        cfg.set(key, &value)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = effective_config(cli)?;
    let files = match cli.command {
        Command::Spectrum { .. } => cmd_spectrum(&cfg)?,
        Command::Quench { .. } => {
            let (summary, files) = cmd_quench(&cfg)?;
            if let Some(w) = &summary.warning {
                eprintln!("warning: {w}");
            }
            println!(
                "captured_norm {}  dominant {}  period {}",
                summary.captured_norm,
                summary.dominant_count,
                summary.tunneling_period.map_or("undefined".to_string(), |t| t.to_string())
            );
            files
        }
        Command::Scan { .. } => {
            let (result, files) = cmd_scan(&cfg)?;
            for c in result.resolved_crossings() {
                println!("crossing at U = {} with {} participants", c.u_center, c.participants.len());
            }
            let unresolved = result.crossings.iter().filter(|c| !c.resolved).count();
            if unresolved > 0 {
                eprintln!("warning: {unresolved} crossing candidate(s) on the grid edge were not resolved");
            }
            files
        }
        Command::Oracle { .. } => cmd_oracle(&cfg)?.1,
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
