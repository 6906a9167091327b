//! Consensus error V(t), asymptotic rate fitting, and regime classification.
//!
//! V(t) is the mean squared deviation of the agent states from their
//! instantaneous average. A run is Unstable when it overflows or V grows
//! past the blow-up threshold, Consensus when V collapses below tolerance
//! or decays at a clear exponential rate, and Bounded otherwise. Bounded is
//! a residual class defined by the thresholds: in a linear system exactly
//! marginal roots live on measure-zero curves, so a finite bounded band
//! necessarily reflects near-marginal dynamics at a finite horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Long-term regime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Consensus,
    Bounded,
    Unstable,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Consensus => "consensus",
            Regime::Bounded => "bounded",
            Regime::Unstable => "unstable",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consensus" => Ok(Regime::Consensus),
            "bounded" => Ok(Regime::Bounded),
            "unstable" => Ok(Regime::Unstable),
            other => Err(Error::Config(format!("unknown regime label {other:?}"))),
        }
    }
}

/// Classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Simulation horizon T (time units).
    pub horizon: f64,
    /// Consensus when final V <= consensus_tol * V(0).
    pub consensus_tol: f64,
    /// Unstable when max V > blowup_factor * V(0).
    pub blowup_factor: f64,
    /// Rate is fitted over the trailing fraction of the horizon.
    pub rate_window_fraction: f64,
    /// |rate| below this is non-convergent at the observation scale (1/time).
    pub rate_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            consensus_tol: 1e-8,
            blowup_factor: 1e6,
            rate_window_fraction: 0.4,
            rate_threshold: 0.02,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.consensus_tol > 0.0 && self.consensus_tol < 1.0) {
            return Err(Error::Config("consensus_tol must be in (0, 1)".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::Config("blowup_factor must be > 1".into()));
        }
        if !(self.rate_window_fraction > 0.0 && self.rate_window_fraction < 1.0) {
            return Err(Error::Config("rate_window_fraction must be in (0, 1)".into()));
        }
        if !(self.rate_threshold > 0.0) {
            return Err(Error::Config("rate_threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// Time series of the consensus error of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Overflow halted the run before the horizon.
    pub truncated: bool,
}

/// Consensus error of a single state: (1/n) sum_i (x_i - mean)^2.
///
/// Computed on the shifted values x_i - x_0 (V is shift invariant), which
/// keeps a uniform state at exactly zero instead of mean-rounding residue.
pub fn consensus_error(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let x0 = x[0];
    let mean = x.iter().map(|xi| xi - x0).sum::<f64>() / n;
    x.iter().map(|xi| (xi - x0 - mean) * (xi - x0 - mean)).sum::<f64>() / n
}

/// V(t) at every stored sample of a full-system trajectory.
pub fn error_series(traj: &Trajectory<Vec<f64>>) -> ErrorSeries {
    let mut times = Vec::with_capacity(traj.len());
    let mut values = Vec::with_capacity(traj.len());
    for (t, x) in traj.iter_timed() {
        times.push(t);
        values.push(consensus_error(x));
    }
    ErrorSeries { times, values, truncated: traj.is_truncated() }
}

/// Result of a log-linear rate fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFit {
    /// Least-squares slope of ln V(t) over the window, units 1/time.
    Rate(f64),
    /// V reached exact zero inside the window: perfect consensus, no rate.
    ExactZero,
}

/// Least-squares slope of ln V(t) over `window = (t_lo, t_hi)`.
///
/// Needs at least 10 in-window samples with V > 0; a sample with V exactly
/// zero short-circuits to [`RateFit::ExactZero`].
pub fn fit_rate(series: &ErrorSeries, window: (f64, f64)) -> Result<RateFit> {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if v == 0.0 {
            return Ok(RateFit::ExactZero);
        }
        if v > 0.0 {
            ts.push(t);
            ys.push(v.ln());
        }
    }
    if ts.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} positive samples in window [{}, {}], need >= 10",
            ts.len(),
            window.0,
            window.1
        )));
    }
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in ts.iter().zip(&ys) {
        num += (t - t_mean) * (y - y_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    if den == 0.0 {
        return Err(Error::InsufficientData("degenerate time window".into()));
    }
    Ok(RateFit::Rate(num / den))
}

/// The trailing rate window implied by the config: the last
/// `rate_window_fraction` of the horizon.
pub fn rate_window(cfg: &ClassifierConfig) -> (f64, f64) {
    (cfg.horizon * (1.0 - cfg.rate_window_fraction), cfg.horizon)
}

/// Classifies a run. Precedence: Unstable first (truncation, blow-up, or a
/// clearly positive rate), then Consensus (collapse below tolerance or a
/// clearly negative rate), then Bounded. A run starting at V(0) = 0 is
/// Consensus by convention.
pub fn classify(series: &ErrorSeries, cfg: &ClassifierConfig) -> Result<Regime> {
    cfg.validate()?;
    if series.values.is_empty() {
        return Err(Error::InsufficientData("empty error series".into()));
    }
    let v0 = series.values[0];
    if v0 == 0.0 && !series.truncated {
        return Ok(Regime::Consensus);
    }
    if series.truncated {
        return Ok(Regime::Unstable);
    }
    let v_max = series.values.iter().cloned().fold(0.0f64, f64::max);
    let v_final = *series.values.last().expect("nonempty");

    // Rate conditions are skipped when the fit is unavailable; the value
    // thresholds still decide.
    let rate = match fit_rate(series, rate_window(cfg)) {
        Ok(RateFit::Rate(r)) => Some(r),
        Ok(RateFit::ExactZero) => None,
        Err(_) => None,
    };

    if v_max > cfg.blowup_factor * v0 || rate.is_some_and(|r| r >= cfg.rate_threshold) {
        return Ok(Regime::Unstable);
    }
    if v_final <= cfg.consensus_tol * v0 || rate.is_some_and(|r| r <= -cfg.rate_threshold) {
        return Ok(Regime::Consensus);
    }
    Ok(Regime::Bounded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate_full, History};
    use crate::modal::to_modes;
    use crate::model::RingParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
    }

    #[test]
    fn consensus_error_trivial_cases() {
        assert_eq!(consensus_error(&[3.0; 20]), 0.0);
        assert_eq!(consensus_error(&[1.0, -1.0]), 1.0);
    }

    #[test]
    fn consensus_error_equals_transverse_energy() {
        let x = random_state(20, 7);
        let z = to_modes(&x);
        assert!((consensus_error(&x) - z.transverse_energy()).abs() < 1e-12);
    }

    #[test]
    fn error_series_matches_pointwise_recomputation() {
        let p = RingParams::default_couplings().with_delays(0.3, 0.3);
        let x0 = random_state(20, 2);
        let traj = integrate_full(&p, &History::Constant(x0), 5.0, 0.05).unwrap();
        let series = error_series(&traj);
        assert!(!series.truncated);
        for (i, (t, x)) in traj.iter_timed().enumerate() {
            assert_eq!(series.times[i], t);
            let n = x.len() as f64;
            let mean: f64 = x.iter().sum::<f64>() / n;
            let v: f64 = x.iter().map(|xi| (xi - mean).powi(2)).sum::<f64>() / n;
            assert!((series.values[i] - v).abs() <= 1e-15 * v.max(1.0));
        }
    }

    #[test]
    fn error_series_of_equilibrium_is_zero() {
        let p = RingParams::default_couplings().with_delays(0.3, 0.3);
        let traj = integrate_full(&p, &History::Constant(vec![0.4; 20]), 2.0, 0.05).unwrap();
        let series = error_series(&traj);
        assert!(series.values.iter().all(|&v| v == 0.0));
    }

    fn synthetic(times: Vec<f64>, f: impl Fn(f64) -> f64) -> ErrorSeries {
        let values = times.iter().map(|&t| f(t)).collect();
        ErrorSeries { times, values, truncated: false }
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
        let s = synthetic(times, |t| (-2.0 * t).exp());
        match fit_rate(&s, (0.0, 100.0)).unwrap() {
            RateFit::Rate(r) => assert!((r + 2.0).abs() < 1e-9, "rate {r}"),
            RateFit::ExactZero => panic!("unexpected zero"),
        }
    }

    #[test]
    fn fit_of_oscillation_is_near_zero() {
        let times: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.01).collect();
        let s = synthetic(times, |t| 1.0 + 0.1 * t.sin());
        // closed-form least squares on the same data as cross-check
        let ts: Vec<f64> = s.times.clone();
        let ys: Vec<f64> = s.values.iter().map(|v| v.ln()).collect();
        let n = ts.len() as f64;
        let tm = ts.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let num: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
        let den: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
        let oracle = num / den;
        match fit_rate(&s, (0.0, 40.0)).unwrap() {
            RateFit::Rate(r) => {
                assert!(r.abs() < 0.01, "rate {r}");
                assert!((r - oracle).abs() < 1e-12);
            }
            RateFit::ExactZero => panic!("unexpected zero"),
        }
    }

    #[test]
    fn fit_detects_exact_zero_and_insufficient_data() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let mut s = synthetic(times.clone(), |t| (-t).exp());
        s.values[50] = 0.0;
        assert_eq!(fit_rate(&s, (0.0, 100.0)).unwrap(), RateFit::ExactZero);

        let s = synthetic(times, |t| (-t).exp());
        assert!(matches!(fit_rate(&s, (95.5, 96.0)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn classify_equilibrium_and_truncated() {
        let cfg = ClassifierConfig::default();
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
        let zero = synthetic(times.clone(), |_| 0.0);
        assert_eq!(classify(&zero, &cfg).unwrap(), Regime::Consensus);

        let trunc = ErrorSeries {
            times: times[..100].to_vec(),
            values: times[..100].iter().map(|&t| (0.5 * t).exp()).collect(),
            truncated: true,
        };
        assert_eq!(classify(&trunc, &cfg).unwrap(), Regime::Unstable);
    }

    #[test]
    fn classify_thresholds() {
        let cfg = ClassifierConfig::default();
        let times: Vec<f64> = (0..=10_000).map(|i| i as f64 * 0.01).collect();
        let decay = synthetic(times.clone(), |t| (-0.5 * t).exp());
        assert_eq!(classify(&decay, &cfg).unwrap(), Regime::Consensus);

        let grow = synthetic(times.clone(), |t| (0.2 * t).exp());
        assert_eq!(classify(&grow, &cfg).unwrap(), Regime::Unstable);

        let flat = synthetic(times, |t| 1.0 + 0.1 * (0.7 * t).sin());
        assert_eq!(classify(&flat, &cfg).unwrap(), Regime::Bounded);
    }

    #[test]
    fn classify_small_delay_default_run_is_consensus() {
        let p = RingParams::default_couplings().with_delays(0.05, 0.05);
        let x0 = random_state(20, 42);
        let dt = crate::integrator::default_dt(&p);
        let traj = integrate_full(&p, &History::Constant(x0), 100.0, dt).unwrap();
        let series = error_series(&traj);
        let cfg = ClassifierConfig::default();
        assert_eq!(classify(&series, &cfg).unwrap(), Regime::Consensus);
    }

    #[test]
    fn enlarging_consensus_tol_is_monotone() {
        // A run classified Consensus cannot leave the class when the
        // tolerance grows (holding the series fixed).
        let times: Vec<f64> = (0..=10_000).map(|i| i as f64 * 0.01).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let rate = rng.gen_range(-0.3..0.05);
            let s = synthetic(times.clone(), |t| (rate * t).exp());
            let mut cfg = ClassifierConfig::default();
            let lo = classify(&s, &cfg).unwrap();
            cfg.consensus_tol = 1e-3;
            let hi = classify(&s, &cfg).unwrap();
            if lo == Regime::Consensus {
                assert_eq!(hi, Regime::Consensus, "rate {rate}");
            }
        }
    }
}
