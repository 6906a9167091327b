//! Grid sweep over the (tau1, tau2) plane: classify every cell into
//! Consensus / Bounded / Unstable and extract transition boundaries.
//!
//! Cells are classified independently from one shared seeded initial
//! history (per-cell randomization would confound the boundary), either by
//! simulating and classifying V(t) or by the sign of the spectral abscissa
//! with a dead band. Cell evaluations are pure, so the sweep parallelizes
//! over a worker pool and the output is identical for any scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charroots::{spectral_abscissa, RootScanOptions};
use crate::classifier::{classify, error_series, ClassifierConfig, Regime};
use crate::error::{Error, Result};
use crate::integrator::{default_dt, integrate_full, History};
use crate::model::RingParams;

/// How a sweep cell is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMethod {
    /// Integrate the full system and classify V(t).
    Simulate,
    /// Sign of the spectral abscissa with a dead band of the rate threshold.
    Spectral,
    /// Both; simulated labels are primary, spectral labels kept alongside.
    Both,
}

/// Sweep configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub tau1_range: (f64, f64),
    pub tau2_range: (f64, f64),
    /// Grid nodes per axis (>= 2), endpoints included.
    pub resolution: usize,
    /// Couplings and network size; the delay fields are ignored.
    pub base: RingParams,
    /// Seed of the shared initial history.
    pub seed: u64,
    pub classifier: ClassifierConfig,
    pub method: SweepMethod,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            tau1_range: (0.0, 3.0),
            tau2_range: (0.0, 3.0),
            resolution: 61,
            base: RingParams::default_couplings(),
            seed: 1,
            classifier: ClassifierConfig::default(),
            method: SweepMethod::Simulate,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.classifier.validate()?;
        if self.resolution < 2 {
            return Err(Error::Config(format!(
                "resolution must be >= 2, got {}",
                self.resolution
            )));
        }
        for (name, (lo, hi)) in [("tau1_range", self.tau1_range), ("tau2_range", self.tau2_range)] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!("invalid {name}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn tau1_at(&self, i: usize) -> f64 {
        grid_value(self.tau1_range, self.resolution, i)
    }

    pub fn tau2_at(&self, j: usize) -> f64 {
        grid_value(self.tau2_range, self.resolution, j)
    }

    /// Grid spacing along tau1 (the default window is square).
    pub fn cell_size(&self) -> f64 {
        (self.tau1_range.1 - self.tau1_range.0) / (self.resolution - 1) as f64
    }
}

fn grid_value(range: (f64, f64), resolution: usize, i: usize) -> f64 {
    range.0 + (range.1 - range.0) * i as f64 / (resolution - 1) as f64
}

/// Per-cell outcome: a regime, or a recorded numerical failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    Regime(Regime),
    Failed,
}

impl CellLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellLabel::Regime(r) => r.as_str(),
            CellLabel::Failed => "failed",
        }
    }

    pub fn regime(&self) -> Option<Regime> {
        match self {
            CellLabel::Regime(r) => Some(*r),
            CellLabel::Failed => None,
        }
    }
}

impl std::str::FromStr for CellLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "failed" {
            Ok(CellLabel::Failed)
        } else {
            Ok(CellLabel::Regime(s.parse()?))
        }
    }
}

/// A polyline in (tau1, tau2) coordinates.
pub type Polyline = Vec<(f64, f64)>;

/// Labeled grid with optional abscissa data and extracted boundaries.
#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub config: SweepConfig,
    /// Row-major: index = i2 * resolution + i1.
    labels: Vec<CellLabel>,
    /// Spectral abscissa per cell (NaN on failure); present for the
    /// spectral and both methods.
    pub abscissas: Option<Vec<f64>>,
    /// Spectral labels alongside simulated ones (method = both).
    pub spectral_labels: Option<Vec<CellLabel>>,
    /// Boundary of the Consensus region (against Bounded and Unstable).
    pub boundary: Vec<Polyline>,
}

impl PhaseDiagram {
    pub fn label(&self, i1: usize, i2: usize) -> CellLabel {
        self.labels[i2 * self.config.resolution + i1]
    }

    pub fn labels(&self) -> &[CellLabel] {
        &self.labels
    }

    pub fn resolution(&self) -> usize {
        self.config.resolution
    }
}

/// Shared initial state: n uniform draws in [-1, 1] from a seeded ChaCha8
/// stream, reproducible across platforms.
pub fn seeded_initial_state(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn simulate_cell(params: &RingParams, x0: &[f64], cfg: &ClassifierConfig) -> CellLabel {
    let dt = default_dt(params);
    let hist = History::Constant(x0.to_vec());
    match integrate_full(params, &hist, cfg.horizon, dt) {
        Ok(traj) => match classify(&error_series(&traj), cfg) {
            Ok(regime) => CellLabel::Regime(regime),
            Err(_) => CellLabel::Failed,
        },
        Err(_) => CellLabel::Failed,
    }
}

/// Maps the abscissa sign to a regime with the rate dead band: the fitted
/// V(t) rate is twice the abscissa, so the comparison is 2 alpha vs rho.
pub fn spectral_label(alpha: f64, cfg: &ClassifierConfig) -> Regime {
    let rate = 2.0 * alpha;
    if rate >= cfg.rate_threshold {
        Regime::Unstable
    } else if rate <= -cfg.rate_threshold {
        Regime::Consensus
    } else {
        Regime::Bounded
    }
}

fn spectral_cell(params: &RingParams, cfg: &ClassifierConfig) -> (CellLabel, f64) {
    let opts = RootScanOptions::for_params(params);
    match spectral_abscissa(params, &opts) {
        Ok((alpha, _)) => (CellLabel::Regime(spectral_label(alpha, cfg)), alpha),
        Err(_) => (CellLabel::Failed, f64::NAN),
    }
}

/// Runs the sweep. Deterministic given the config (including the seed):
/// cells are independent work items gathered by index, so worker count and
/// scheduling cannot change the output.
pub fn phase_sweep(cfg: &SweepConfig) -> Result<PhaseDiagram> {
    cfg.validate()?;
    let res = cfg.resolution;
    let x0 = seeded_initial_state(cfg.base.n, cfg.seed);

    struct Cell {
        label: CellLabel,
        abscissa: f64,
        spectral: Option<CellLabel>,
    }

    let cells: Vec<Cell> = (0..res * res)
        .into_par_iter()
        .map(|idx| {
            let (i1, i2) = (idx % res, idx / res);
            let params = cfg.base.with_delays(cfg.tau1_at(i1), cfg.tau2_at(i2));
            match cfg.method {
                SweepMethod::Simulate => Cell {
                    label: simulate_cell(&params, &x0, &cfg.classifier),
                    abscissa: f64::NAN,
                    spectral: None,
                },
                SweepMethod::Spectral => {
                    let (label, alpha) = spectral_cell(&params, &cfg.classifier);
                    Cell { label, abscissa: alpha, spectral: None }
                }
                SweepMethod::Both => {
                    let label = simulate_cell(&params, &x0, &cfg.classifier);
                    let (slabel, alpha) = spectral_cell(&params, &cfg.classifier);
                    Cell { label, abscissa: alpha, spectral: Some(slabel) }
                }
            }
        })
        .collect();

    let labels: Vec<CellLabel> = cells.iter().map(|c| c.label).collect();
    let abscissas = match cfg.method {
        SweepMethod::Simulate => None,
        _ => Some(cells.iter().map(|c| c.abscissa).collect()),
    };
    let spectral_labels = match cfg.method {
        SweepMethod::Both => Some(cells.iter().map(|c| c.spectral.unwrap()).collect()),
        _ => None,
    };

    let mut diagram = PhaseDiagram {
        config: *cfg,
        labels,
        abscissas,
        spectral_labels,
        boundary: Vec::new(),
    };
    let mut boundary =
        detect_boundary(&diagram, CellLabel::Regime(Regime::Consensus), CellLabel::Regime(Regime::Bounded));
    boundary.extend(detect_boundary(
        &diagram,
        CellLabel::Regime(Regime::Consensus),
        CellLabel::Regime(Regime::Unstable),
    ));
    diagram.boundary = boundary;
    Ok(diagram)
}

// Marching-squares segment endpoints live on grid edges; midpoints have
// half-integer index coordinates, stored doubled so they key exactly.
type EdgeKey = (i64, i64);

fn edge_midpoint(a: (usize, usize), b: (usize, usize)) -> EdgeKey {
    ((a.0 + b.0) as i64, (a.1 + b.1) as i64)
}

/// Extracts the boundary between `from`-labeled and `to`-labeled nodes as
/// polylines, marching-squares style with midpoint placement. Segments are
/// emitted only where both crossed edges separate `from` from exactly `to`.
pub fn detect_boundary(diagram: &PhaseDiagram, from: CellLabel, to: CellLabel) -> Vec<Polyline> {
    let res = diagram.config.resolution;
    let is_from = |i1: usize, i2: usize| diagram.label(i1, i2) == from;
    let is_to = |i1: usize, i2: usize| diagram.label(i1, i2) == to;

    // A crossed edge qualifies iff one node is `from` and the other is `to`.
    let qualifies = |a: (usize, usize), b: (usize, usize)| {
        (is_from(a.0, a.1) && is_to(b.0, b.1)) || (is_to(a.0, a.1) && is_from(b.0, b.1))
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i2 in 0..res - 1 {
        for i1 in 0..res - 1 {
            let c0 = (i1, i2);
            let c1 = (i1 + 1, i2);
            let c2 = (i1 + 1, i2 + 1);
            let c3 = (i1, i2 + 1);
            let bits = (is_from(c0.0, c0.1) as u8)
                | (is_from(c1.0, c1.1) as u8) << 1
                | (is_from(c2.0, c2.1) as u8) << 2
                | (is_from(c3.0, c3.1) as u8) << 3;
            // edges: bottom c0-c1, right c1-c2, top c3-c2, left c0-c3
            let bottom = (c0, c1);
            let right = (c1, c2);
            let top = (c3, c2);
            let left = (c0, c3);
            // crossed edges taken two at a time form the block's segments;
            // saddle cases use a fixed pairing for determinism
            let edge_list: &[((usize, usize), (usize, usize))] = match bits {
                0b0000 | 0b1111 => &[],
                0b0001 | 0b1110 => &[bottom, left],
                0b0010 | 0b1101 => &[bottom, right],
                0b0100 | 0b1011 => &[right, top],
                0b1000 | 0b0111 => &[top, left],
                0b0011 | 0b1100 => &[left, right],
                0b0110 | 0b1001 => &[bottom, top],
                0b0101 => &[bottom, left, right, top],
                0b1010 => &[bottom, right, top, left],
                _ => unreachable!(),
            };
            for pair in edge_list.chunks_exact(2) {
                let (ea, eb) = (pair[0], pair[1]);
                if qualifies(ea.0, ea.1) && qualifies(eb.0, eb.1) {
                    segments.push((edge_midpoint(ea.0, ea.1), edge_midpoint(eb.0, eb.1)));
                }
            }
        }
    }
    chain_segments(segments, &diagram.config)
}

/// Joins segments sharing endpoints into ordered polylines (open chains
/// first, then closed loops) and converts to tau coordinates.
fn chain_segments(segments: Vec<(EdgeKey, EdgeKey)>, cfg: &SweepConfig) -> Vec<Polyline> {
    use std::collections::BTreeMap;
    let mut adj: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(i);
        adj.entry(*b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let to_tau = |key: EdgeKey| {
        (
            cfg.tau1_range.0 + (cfg.tau1_range.1 - cfg.tau1_range.0) * key.0 as f64
                / (2 * (cfg.resolution - 1)) as f64,
            cfg.tau2_range.0 + (cfg.tau2_range.1 - cfg.tau2_range.0) * key.1 as f64
                / (2 * (cfg.resolution - 1)) as f64,
        )
    };

    let walk = |start: EdgeKey, used: &mut Vec<bool>| -> Vec<EdgeKey> {
        let mut path = vec![start];
        let mut current = start;
        loop {
            let Some(next_seg) = adj[&current].iter().copied().find(|&s| !used[s]) else {
                break;
            };
            used[next_seg] = true;
            let (a, b) = segments[next_seg];
            current = if a == current { b } else { a };
            path.push(current);
        }
        path
    };

    // open chains start at odd-degree endpoints
    let endpoints: Vec<EdgeKey> = adj
        .iter()
        .filter(|(_, segs)| segs.len() % 2 == 1)
        .map(|(k, _)| *k)
        .collect();
    for start in endpoints {
        if adj[&start].iter().any(|&s| !used[s]) {
            let path = walk(start, &mut used);
            if path.len() > 1 {
                polylines.push(path.into_iter().map(to_tau).collect());
            }
        }
    }
    // remaining closed loops
    let keys: Vec<EdgeKey> = adj.keys().copied().collect();
    for start in keys {
        if adj[&start].iter().any(|&s| !used[s]) {
            let path = walk(start, &mut used);
            if path.len() > 1 {
                polylines.push(path.into_iter().map(to_tau).collect());
            }
        }
    }
    polylines
}
