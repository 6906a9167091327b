//! Subcommand implementations. Each command validates its inputs, creates
//! the output directory before any computation, and finishes by writing a
//! metadata file that pins everything needed to reproduce the run.

use std::path::{Path, PathBuf};

use serde::Serialize;

use ringdelay::charroots::rightmost_roots;
use ringdelay::classifier::{classify, error_series, Regime};
use ringdelay::crossing::trace_all_modes;
use ringdelay::integrator::{default_dt, integrate_full, History};
use ringdelay::modal::to_modes;
use ringdelay::sweep::phase_sweep;
use ringdelay::sweep::seeded_initial_state;

use crate::config::RunConfig;
use crate::outputs;
use crate::CliError;

fn prepare_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("create output dir {}: {e}", out.display())))
}

#[derive(Serialize)]
struct Metadata<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    extra: T,
}

fn write_metadata<T: Serialize>(
    out: &Path,
    command: &str,
    config: &RunConfig,
    extra: T,
) -> Result<(), CliError> {
    let meta = Metadata { command, config, extra };
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| CliError::Io(format!("serialize metadata: {e}")))?;
    outputs::write_text(&out.join("metadata.json"), &(text + "\n"))
}

/// `simulate`: integrate one run, write the trajectory, V(t) as CSV and a
/// log-scale SVG plot, and the classification in the metadata.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.ring_params()?;
    let mut classifier = cfg.classifier()?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&params));
    let t_end = cfg.t_end.unwrap_or(classifier.horizon);
    // classification thresholds are relative to the run actually performed
    classifier.horizon = t_end;
    prepare_out_dir(out)?;

    let x0 = seeded_initial_state(params.n, cfg.seed);
    let history = History::Constant(x0);
    let traj = integrate_full(&params, &history, t_end, dt)?;
    let series = error_series(&traj);
    let regime = classify(&series, &classifier)?;

    outputs::write_trajectory_csv(&out.join("trajectory.csv"), &traj)?;
    outputs::write_error_csv(&out.join("error.csv"), &series.times, &series.values)?;
    outputs::write_error_svg(&out.join("error.svg"), &series.times, &series.values)?;

    #[derive(Serialize)]
    struct Extra {
        dt: f64,
        t_end: f64,
        classification: Regime,
        truncated_at: Option<f64>,
    }
    write_metadata(
        out,
        "simulate",
        cfg,
        Extra { dt, t_end, classification: regime, truncated_at: traj.truncated_at() },
    )?;
    println!(
        "simulate: {} (tau1={}, tau2={}) -> {}",
        regime.as_str(),
        params.tau1,
        params.tau2,
        out.display()
    );
    Ok(())
}

/// `sweep`: phase diagram over the delay grid with label CSV, PPM heatmap,
/// and boundary CSV.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, workers: Option<usize>) -> Result<(), CliError> {
    let sweep_cfg = cfg.sweep_config()?;
    prepare_out_dir(out)?;

    let diagram = match workers {
        Some(w) if w > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
            pool.install(|| phase_sweep(&sweep_cfg))?
        }
        _ => phase_sweep(&sweep_cfg)?,
    };

    outputs::write_labels_csv(&out.join("labels.csv"), &diagram)?;
    outputs::write_phase_ppm(&out.join("phase.ppm"), &diagram)?;
    outputs::write_boundary_csv(&out.join("boundary.csv"), &diagram.boundary)?;

    let mut counts = std::collections::BTreeMap::new();
    for l in diagram.labels() {
        *counts.entry(l.as_str()).or_insert(0usize) += 1;
    }
    #[derive(Serialize)]
    struct Extra {
        label_counts: std::collections::BTreeMap<&'static str, usize>,
        boundary_polylines: usize,
    }
    write_metadata(
        out,
        "sweep",
        cfg,
        Extra { label_counts: counts.clone(), boundary_polylines: diagram.boundary.len() },
    )?;
    println!("sweep: {counts:?} -> {}", out.display());
    Ok(())
}

/// `roots`: rightmost characteristic roots for the requested modes, one
/// table sorted by real part. Per-mode failures are reported; only a total
/// failure is fatal.
pub fn cmd_roots(cfg: &RunConfig, out: &Path, modes: &[usize]) -> Result<(), CliError> {
    let params = cfg.ring_params()?;
    let opts = cfg.scan_options(&params)?;
    prepare_out_dir(out)?;

    let modes: Vec<usize> = if modes.is_empty() {
        (0..params.n).collect()
    } else {
        if let Some(bad) = modes.iter().find(|&&k| k >= params.n) {
            return Err(CliError::Usage(format!("mode index {bad} out of range (n={})", params.n)));
        }
        modes.to_vec()
    };

    let mut rows = Vec::new();
    let mut failures: Vec<(usize, String)> = Vec::new();
    for &k in &modes {
        match rightmost_roots(k, &params, &opts, cfg.roots.count) {
            Ok(roots) => {
                rows.extend(roots.into_iter().map(|r| outputs::RootRow {
                    k,
                    lam: r.lam,
                    residual: r.residual,
                }));
            }
            Err(e) => {
                eprintln!("roots: mode {k} failed: {e}");
                failures.push((k, e.to_string()));
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Numerical(format!(
            "all {} requested modes failed",
            modes.len()
        )));
    }
    rows.sort_by(|a, b| b.lam.re.partial_cmp(&a.lam.re).unwrap());
    outputs::write_roots_csv(&out.join("roots.csv"), &rows)?;

    #[derive(Serialize)]
    struct Extra {
        modes: Vec<usize>,
        failed_modes: Vec<(usize, String)>,
        roots_written: usize,
    }
    write_metadata(
        out,
        "roots",
        cfg,
        Extra { modes, failed_modes: failures, roots_written: rows.len() },
    )?;
    println!("roots: {} rows -> {}", rows.len(), out.display());
    Ok(())
}

/// `boundary`: stability switching curves of all transverse modes inside
/// the sweep window.
pub fn cmd_boundary(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.ring_params()?;
    let window = cfg.delay_window()?;
    prepare_out_dir(out)?;

    let curves = trace_all_modes(&params, window, cfg.boundary.omega_samples)?;
    outputs::write_crossing_csv(&out.join("crossing.csv"), &curves)?;

    let n_points: usize = curves.iter().map(|c| c.points.len()).sum();
    #[derive(Serialize)]
    struct Extra {
        curves: usize,
        points: usize,
    }
    write_metadata(out, "boundary", cfg, Extra { curves: curves.len(), points: n_points })?;
    println!("boundary: {} curves, {n_points} points -> {}", curves.len(), out.display());
    Ok(())
}

/// `modes`: modal amplitudes of a trajectory, either read from a previously
/// written trajectory CSV or integrated fresh with the current config.
pub fn cmd_modes(cfg: &RunConfig, out: &Path, input: Option<&PathBuf>) -> Result<(), CliError> {
    let params = cfg.ring_params()?;
    prepare_out_dir(out)?;

    let rows: Vec<(f64, Vec<f64>)> = match input {
        Some(path) => outputs::read_trajectory_csv(path)?,
        None => {
            let classifier = cfg.classifier()?;
            let dt = cfg.dt.unwrap_or_else(|| default_dt(&params));
            let t_end = cfg.t_end.unwrap_or(classifier.horizon);
            let x0 = seeded_initial_state(params.n, cfg.seed);
            let traj = integrate_full(&params, &History::Constant(x0), t_end, dt)?;
            traj.iter_timed().map(|(t, x)| (t, x.clone())).collect()
        }
    };
    let times: Vec<f64> = rows.iter().map(|(t, _)| *t).collect();
    let spectra: Vec<Vec<num_complex::Complex64>> = rows
        .iter()
        .map(|(_, x)| to_modes(x).amplitudes().to_vec())
        .collect();
    outputs::write_modes_csv(&out.join("modes.csv"), &times, &spectra)?;

    #[derive(Serialize)]
    struct Extra {
        input: Option<PathBuf>,
        samples: usize,
    }
    write_metadata(out, "modes", cfg, Extra { input: input.cloned(), samples: times.len() })?;
    println!("modes: {} samples -> {}", times.len(), out.display());
    Ok(())
}
