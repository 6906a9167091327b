//! JSON run configuration. Every field is optional and defaults to the
//! desk-scale values; CLI flags override config fields after loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ringdelay::charroots::RootScanOptions;
use ringdelay::classifier::ClassifierConfig;
use ringdelay::crossing::DelayWindow;
use ringdelay::model::RingParams;
use ringdelay::sweep::{SweepConfig, SweepMethod};

use crate::CliError;

/// Environment variable overriding the output directory (flags win over it).
pub const OUT_ENV_VAR: &str = "RINGDELAY_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub n: usize,
    pub k_p: f64,
    pub k_n: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { n: 20, k_p: 1.0, k_n: 0.5, tau1: 0.0, tau2: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub tau1_range: (f64, f64),
    pub tau2_range: (f64, f64),
    pub resolution: usize,
    pub method: SweepMethod,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            tau1_range: (0.0, 3.0),
            tau2_range: (0.0, 3.0),
            resolution: 61,
            method: SweepMethod::Simulate,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootsSection {
    pub discretization_order: usize,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
    /// How many rightmost roots per mode the roots command reports.
    pub count: usize,
}

impl Default for RootsSection {
    fn default() -> Self {
        Self { discretization_order: 24, newton_max_iter: 50, newton_tol: 1e-12, count: 6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub omega_samples: usize,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self { omega_samples: 512 }
    }
}

/// The complete run configuration (resolved form is echoed into metadata).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSection,
    pub seed: u64,
    /// Step size; absent means min(0.01, tau_min/8).
    pub dt: Option<f64>,
    /// Simulation end time; absent means the classifier horizon.
    pub t_end: Option<f64>,
    pub classifier: ClassifierConfig,
    pub sweep: SweepSection,
    pub roots: RootsSection,
    pub boundary: BoundarySection,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsSection::default(),
            seed: 1,
            dt: None,
            t_end: None,
            classifier: ClassifierConfig::default(),
            sweep: SweepSection::default(),
            roots: RootsSection::default(),
            boundary: BoundarySection::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Output directory: flag > RINGDELAY_OUT > config > "out".
    pub fn resolve_out(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Ok(env) = std::env::var(OUT_ENV_VAR) {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn ring_params(&self) -> Result<RingParams, CliError> {
        let p = &self.params;
        RingParams::new(p.n, p.k_p, p.k_n, p.tau1, p.tau2).map_err(CliError::from)
    }

    pub fn scan_options(&self, params: &RingParams) -> Result<RootScanOptions, CliError> {
        let opts = RootScanOptions {
            discretization_order: self.roots.discretization_order,
            newton_max_iter: self.roots.newton_max_iter,
            newton_tol: self.roots.newton_tol,
            ..RootScanOptions::for_params(params)
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let base = self.ring_params()?;
        let cfg = SweepConfig {
            tau1_range: self.sweep.tau1_range,
            tau2_range: self.sweep.tau2_range,
            resolution: self.sweep.resolution,
            base,
            seed: self.seed,
            classifier: self.classifier,
            method: self.sweep.method,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn delay_window(&self) -> Result<DelayWindow, CliError> {
        DelayWindow::new(self.sweep.tau1_range, self.sweep.tau2_range).map_err(CliError::from)
    }

    pub fn classifier(&self) -> Result<ClassifierConfig, CliError> {
        self.classifier.validate()?;
        Ok(self.classifier)
    }
}
