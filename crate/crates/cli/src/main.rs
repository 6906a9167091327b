//! Command-line interface: simulate runs, sweep phase diagrams, tabulate
//! characteristic roots, trace stability switching curves, and dump modal
//! amplitudes.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ringdelay_cli::config::RunConfig;
use ringdelay_cli::{commands, CliError};

#[derive(Parser)]
#[command(
    name = "ringdelay",
    about = "Delayed consensus dynamics on signed directed rings",
    version
)]
struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (also settable via RINGDELAY_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Forward delay tau1.
    #[arg(long, global = true)]
    tau1: Option<f64>,

    /// Backward delay tau2.
    #[arg(long, global = true)]
    tau2: Option<f64>,

    /// Seed of the shared initial history.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the sweep (0 or absent: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one run and write trajectory, V(t) CSV, and SVG plot.
    Simulate {
        /// Simulation end time (default: classifier horizon).
        #[arg(long)]
        t_end: Option<f64>,
        /// Step size (default: min(0.01, tau_min/8)).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Sweep the (tau1, tau2) grid into a labeled phase diagram.
    Sweep {
        /// Cell classification method.
        #[arg(long, value_parser = parse_method)]
        method: Option<ringdelay::sweep::SweepMethod>,
        /// Grid nodes per axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Tabulate the rightmost characteristic roots per mode.
    Roots {
        /// Mode indices (repeatable); all modes when absent.
        #[arg(short, long)]
        k: Vec<usize>,
        /// Rightmost roots per mode.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Trace the stability switching curves inside the sweep window.
    Boundary {
        /// Frequency samples over (0, 2 sqrt(Kp Kn)].
        #[arg(long)]
        omega_samples: Option<usize>,
    },
    /// Dump modal amplitudes of a trajectory (from CSV or a fresh run).
    Modes {
        /// Trajectory CSV to transform; integrates fresh when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<ringdelay::sweep::SweepMethod, String> {
    match s {
        "simulate" => Ok(ringdelay::sweep::SweepMethod::Simulate),
        "spectral" => Ok(ringdelay::sweep::SweepMethod::Spectral),
        "both" => Ok(ringdelay::sweep::SweepMethod::Both),
        other => Err(format!("unknown method {other:?} (simulate|spectral|both)")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(t1) = cli.tau1 {
        cfg.params.tau1 = t1;
    }
    if let Some(t2) = cli.tau2 {
        cfg.params.tau2 = t2;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cfg.resolve_out(cli.out.as_deref());

    match &cli.command {
        Command::Simulate { t_end, dt } => {
            if t_end.is_some() {
                cfg.t_end = *t_end;
            }
            if dt.is_some() {
                cfg.dt = *dt;
            }
            commands::cmd_simulate(&cfg, &out)
        }
        Command::Sweep { method, resolution } => {
            if let Some(m) = method {
                cfg.sweep.method = *m;
            }
            if let Some(r) = resolution {
                cfg.sweep.resolution = *r;
            }
            commands::cmd_sweep(&cfg, &out, cli.workers)
        }
        Command::Roots { k, count } => {
            if let Some(c) = count {
                cfg.roots.count = *c;
            }
            commands::cmd_roots(&cfg, &out, k)
        }
        Command::Boundary { omega_samples } => {
            if let Some(s) = omega_samples {
                cfg.boundary.omega_samples = *s;
            }
            commands::cmd_boundary(&cfg, &out)
        }
        Command::Modes { input } => commands::cmd_modes(&cfg, &out, input.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version output is a success, anything else is usage
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ringdelay: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
