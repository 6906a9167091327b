//! File outputs: CSV tables, P6 PPM heatmaps, and SVG line plots, plus the
//! readers that recover CSV values exactly.
//!
//! CSV is comma separated with a header row, LF line endings, and floats at
//! 17 significant digits, which round-trip f64 losslessly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use ringdelay::classifier::Regime;
use ringdelay::crossing::CrossingCurve;
use ringdelay::integrator::Trajectory;
use ringdelay::sweep::{CellLabel, PhaseDiagram, Polyline};

use crate::CliError;

/// 17 significant digits: exact round trip for every finite f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::Io(format!("create {}: {e}", path.display())))?;
    f.write_all(contents)
        .map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    write_file(path, contents.as_bytes())
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    field.parse().map_err(|e| {
        CliError::Io(format!("{}:{line}: bad float {field:?}: {e}", path.display()))
    })
}

// ---------------------------------------------------------------------------
// trajectory and error-series CSV

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory<Vec<f64>>) -> Result<(), CliError> {
    let n = traj.samples()[0].len();
    let mut s = String::from("t");
    for i in 1..=n {
        write!(s, ",x_{i}").unwrap();
    }
    s.push('\n');
    for (t, x) in traj.iter_timed() {
        s.push_str(&fmt_f64(t));
        for v in x {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    write_text(path, &s)
}

/// Rows of (t, state) read back from a trajectory CSV.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<(f64, Vec<f64>)>, CliError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(CliError::Io(format!("{}: empty file", path.display())));
    };
    let n_cols = header.split(',').count();
    if n_cols < 2 || !header.starts_with("t,") {
        return Err(CliError::Io(format!("{}: not a trajectory CSV", path.display())));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t = parse_f64(fields.next().unwrap(), path, idx + 1)?;
        let state: Result<Vec<f64>, _> = fields.map(|f| parse_f64(f, path, idx + 1)).collect();
        let state = state?;
        if state.len() != n_cols - 1 {
            return Err(CliError::Io(format!(
                "{}:{}: expected {} state columns, got {}",
                path.display(),
                idx + 1,
                n_cols - 1,
                state.len()
            )));
        }
        rows.push((t, state));
    }
    Ok(rows)
}

pub fn write_error_csv(path: &Path, times: &[f64], values: &[f64]) -> Result<(), CliError> {
    let mut s = String::from("t,V\n");
    for (t, v) in times.iter().zip(values) {
        s.push_str(&fmt_f64(*t));
        s.push(',');
        s.push_str(&fmt_f64(*v));
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn read_error_csv(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let rows = read_trajectory_csv(path)?;
    rows.into_iter()
        .map(|(t, mut vs)| {
            if vs.len() != 1 {
                Err(CliError::Io(format!("{}: not a two-column CSV", path.display())))
            } else {
                Ok((t, vs.pop().unwrap()))
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// modal amplitudes CSV

pub fn write_modes_csv(path: &Path, times: &[f64], spectra: &[Vec<Complex64>]) -> Result<(), CliError> {
    let n = spectra[0].len();
    let mut s = String::from("t");
    for k in 0..n {
        write!(s, ",re_z{k},im_z{k}").unwrap();
    }
    s.push('\n');
    for (t, z) in times.iter().zip(spectra) {
        s.push_str(&fmt_f64(*t));
        for zk in z {
            s.push(',');
            s.push_str(&fmt_f64(zk.re));
            s.push(',');
            s.push_str(&fmt_f64(zk.im));
        }
        s.push('\n');
    }
    write_text(path, &s)
}

// ---------------------------------------------------------------------------
// root table CSV

pub struct RootRow {
    pub k: usize,
    pub lam: Complex64,
    pub residual: f64,
}

pub fn write_roots_csv(path: &Path, rows: &[RootRow]) -> Result<(), CliError> {
    let mut s = String::from("k,re_lambda,im_lambda,residual\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{}",
            r.k,
            fmt_f64(r.lam.re),
            fmt_f64(r.lam.im),
            fmt_f64(r.residual)
        )
        .unwrap();
    }
    write_text(path, &s)
}

pub fn read_roots_csv(path: &Path) -> Result<Vec<RootRow>, CliError> {
    let text = read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(CliError::Io(format!("{}:{}: bad row", path.display(), idx + 1)));
        }
        rows.push(RootRow {
            k: f[0]
                .parse()
                .map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), idx + 1)))?,
            lam: Complex64::new(
                parse_f64(f[1], path, idx + 1)?,
                parse_f64(f[2], path, idx + 1)?,
            ),
            residual: parse_f64(f[3], path, idx + 1)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// crossing-curve CSV

pub fn write_crossing_csv(path: &Path, curves: &[CrossingCurve]) -> Result<(), CliError> {
    let mut s = String::from("k,omega,tau1,tau2,m1,m2,sign,residual\n");
    for c in curves {
        for p in &c.points {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                p.k,
                fmt_f64(p.omega),
                fmt_f64(p.tau1),
                fmt_f64(p.tau2),
                p.branch.0,
                p.branch.1,
                p.sign_choice,
                fmt_f64(p.residual)
            )
            .unwrap();
        }
    }
    write_text(path, &s)
}

pub struct CrossingRow {
    pub k: usize,
    pub omega: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub branch: (i64, i64),
    pub sign: i8,
    pub residual: f64,
}

pub fn read_crossing_csv(path: &Path) -> Result<Vec<CrossingRow>, CliError> {
    let text = read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(CliError::Io(format!("{}:{}: bad row", path.display(), idx + 1)));
        }
        let int = |s: &str| -> Result<i64, CliError> {
            s.parse()
                .map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), idx + 1)))
        };
        rows.push(CrossingRow {
            k: int(f[0])? as usize,
            omega: parse_f64(f[1], path, idx + 1)?,
            tau1: parse_f64(f[2], path, idx + 1)?,
            tau2: parse_f64(f[3], path, idx + 1)?,
            branch: (int(f[4])?, int(f[5])?),
            sign: int(f[6])? as i8,
            residual: parse_f64(f[7], path, idx + 1)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// sweep label grid CSV

pub fn write_labels_csv(path: &Path, diagram: &PhaseDiagram) -> Result<(), CliError> {
    let res = diagram.resolution();
    let mut s = String::from("tau1,tau2,label,abscissa\n");
    for i2 in 0..res {
        for i1 in 0..res {
            let abscissa = diagram
                .abscissas
                .as_ref()
                .map(|a| {
                    let v = a[i2 * res + i1];
                    if v.is_nan() {
                        String::new()
                    } else {
                        fmt_f64(v)
                    }
                })
                .unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(diagram.config.tau1_at(i1)),
                fmt_f64(diagram.config.tau2_at(i2)),
                diagram.label(i1, i2).as_str(),
                abscissa
            )
            .unwrap();
        }
    }
    write_text(path, &s)
}

pub struct LabelRow {
    pub tau1: f64,
    pub tau2: f64,
    pub label: CellLabel,
    pub abscissa: Option<f64>,
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRow>, CliError> {
    let text = read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(CliError::Io(format!("{}:{}: bad row", path.display(), idx + 1)));
        }
        rows.push(LabelRow {
            tau1: parse_f64(f[0], path, idx + 1)?,
            tau2: parse_f64(f[1], path, idx + 1)?,
            label: f[2]
                .parse()
                .map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), idx + 1)))?,
            abscissa: if f[3].is_empty() {
                None
            } else {
                Some(parse_f64(f[3], path, idx + 1)?)
            },
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// boundary polyline CSV

pub fn write_boundary_csv(path: &Path, polylines: &[Polyline]) -> Result<(), CliError> {
    let mut s = String::from("polyline,tau1,tau2\n");
    for (id, line) in polylines.iter().enumerate() {
        for (t1, t2) in line {
            writeln!(s, "{id},{},{}", fmt_f64(*t1), fmt_f64(*t2)).unwrap();
        }
    }
    write_text(path, &s)
}

pub fn read_boundary_csv(path: &Path) -> Result<Vec<Polyline>, CliError> {
    let text = read_to_string(path)?;
    let mut polylines: Vec<Polyline> = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(CliError::Io(format!("{}:{}: bad row", path.display(), idx + 1)));
        }
        let id: usize = f[0]
            .parse()
            .map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        if id == polylines.len() {
            polylines.push(Vec::new());
        }
        polylines[id].push((parse_f64(f[1], path, idx + 1)?, parse_f64(f[2], path, idx + 1)?));
    }
    Ok(polylines)
}

// ---------------------------------------------------------------------------
// PPM heatmap

/// Fixed regime palette.
pub fn label_color(label: CellLabel) -> [u8; 3] {
    match label {
        CellLabel::Regime(Regime::Consensus) => [0, 0, 255],
        CellLabel::Regime(Regime::Bounded) => [255, 215, 0],
        CellLabel::Regime(Regime::Unstable) => [200, 0, 0],
        CellLabel::Failed => [128, 128, 128],
    }
}

/// P6 heatmap of the label grid, one pixel per cell, tau1 rightward and
/// tau2 upward, with the boundary polylines overlaid in white.
pub fn write_phase_ppm(path: &Path, diagram: &PhaseDiagram) -> Result<(), CliError> {
    let res = diagram.resolution();
    let mut pixels = vec![0u8; 3 * res * res];
    for i2 in 0..res {
        for i1 in 0..res {
            let row = res - 1 - i2;
            let color = label_color(diagram.label(i1, i2));
            pixels[3 * (row * res + i1)..3 * (row * res + i1) + 3].copy_from_slice(&color);
        }
    }
    let cfg = &diagram.config;
    let h1 = (cfg.tau1_range.1 - cfg.tau1_range.0) / (res - 1) as f64;
    let h2 = (cfg.tau2_range.1 - cfg.tau2_range.0) / (res - 1) as f64;
    let mut paint = |t1: f64, t2: f64| {
        let i1 = ((t1 - cfg.tau1_range.0) / h1).round() as i64;
        let i2 = ((t2 - cfg.tau2_range.0) / h2).round() as i64;
        if (0..res as i64).contains(&i1) && (0..res as i64).contains(&i2) {
            let row = res - 1 - i2 as usize;
            let off = 3 * (row * res + i1 as usize);
            pixels[off..off + 3].copy_from_slice(&[255, 255, 255]);
        }
    };
    for line in &diagram.boundary {
        for pair in line.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            paint(a.0, a.1);
            paint(0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
            paint(b.0, b.1);
        }
        if line.len() == 1 {
            paint(line[0].0, line[0].1);
        }
    }
    let mut bytes = format!("P6\n{res} {res}\n255\n").into_bytes();
    bytes.extend_from_slice(&pixels);
    write_file(path, &bytes)
}

// ---------------------------------------------------------------------------
// SVG line plot

/// Values at or below zero are clamped to this floor before taking logs.
pub const LOG_FLOOR: f64 = 1e-16;

/// Hand-rolled SVG line plot of V(t) with a logarithmic vertical axis.
pub fn write_error_svg(path: &Path, times: &[f64], values: &[f64]) -> Result<(), CliError> {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;

    let t_max = times.last().copied().unwrap_or(1.0).max(1e-12);
    let logs: Vec<f64> = values.iter().map(|&v| v.max(LOG_FLOOR).log10()).collect();
    let mut lo = logs.iter().cloned().fold(f64::INFINITY, f64::min).floor();
    let mut hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
    if !lo.is_finite() || !hi.is_finite() {
        lo = -16.0;
        hi = 0.0;
    }
    if hi - lo < 1.0 {
        hi = lo + 1.0;
    }

    let x = |t: f64| ML + (W - ML - MR) * t / t_max;
    let y = |lv: f64| MT + (H - MT - MB) * (hi - lv) / (hi - lo);

    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )
    .unwrap();
    writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    // axes
    writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    )
    .unwrap();
    writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    )
    .unwrap();
    // y ticks at whole decades
    let decades = (hi - lo) as i64;
    let step = (decades as f64 / 8.0).ceil().max(1.0) as i64;
    let mut d = lo as i64;
    while d as f64 <= hi {
        let yy = y(d as f64);
        writeln!(
            s,
            "<line x1=\"{}\" y1=\"{yy:.2}\" x2=\"{ML}\" y2=\"{yy:.2}\" stroke=\"black\"/>",
            ML - 5.0
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>",
            ML - 8.0,
            yy + 4.0
        )
        .unwrap();
        d += step;
    }
    // x ticks
    for i in 0..=5 {
        let t = t_max * i as f64 / 5.0;
        let xx = x(t);
        writeln!(
            s,
            "<line x1=\"{xx:.2}\" y1=\"{}\" x2=\"{xx:.2}\" y2=\"{}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 5.0
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{xx:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{t:.1}</text>",
            H - MB + 20.0
        )
        .unwrap();
    }
    writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">t</text>",
        ML + (W - ML - MR) / 2.0,
        H - 10.0
    )
    .unwrap();
    writeln!(
        s,
        "<text x=\"18\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">V(t)</text>",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    )
    .unwrap();
    // the curve
    let mut pts = String::new();
    for (t, lv) in times.iter().zip(&logs) {
        write!(pts, "{:.2},{:.2} ", x(*t), y(*lv)).unwrap();
    }
    writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>",
        pts.trim_end()
    )
    .unwrap();
    writeln!(s, "</svg>").unwrap();
    write_text(path, &s)
}
